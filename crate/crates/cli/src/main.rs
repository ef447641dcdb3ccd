use clap::{Parser, Subcommand};
use residue_forge::parse::{parse, render_error};
use residue_forge::run::{run, RunOptions, EXIT_INTERNAL, EXIT_USAGE};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "residue-forge", version, about = "Run residue-current sessions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a session file.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stop at the first failing or erroring command.
        #[arg(long)]
        fail_fast: bool,
        /// Also write the JSON report here (`-` for stdout instead of the text report).
        #[arg(long)]
        json: Option<PathBuf>,
        /// Default tolerance for numeric checks.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Default test-form degree bound.
        #[arg(long, default_value_t = 3)]
        bound: u32,
    },
    /// Parse a session and print it in canonical form.
    Fmt { file: PathBuf },
}

fn threads() {
    if let Some(n) = std::env::var("RESIDUE_FORGE_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn read(file: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(file).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", file.display());
        ExitCode::from(EXIT_USAGE as u8)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    threads();
    match cli.cmd {
        Cmd::Fmt { file } => {
            let src = match read(&file) {
                Ok(s) => s,
                Err(c) => return c,
            };
            match parse(&src) {
                Ok(s) => {
                    print!("{s}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprint!("{}", render_error(&src, &file.display().to_string(), &e));
                    ExitCode::from(EXIT_USAGE as u8)
                }
            }
        }
        Cmd::Run { file, seed, fail_fast, json, tol, bound } => {
            if !(tol > 0.0 && tol.is_finite()) {
                eprintln!("error: --tol must be positive");
                return ExitCode::from(EXIT_USAGE as u8);
            }
            let src = match read(&file) {
                Ok(s) => s,
                Err(c) => return c,
            };
            let session = match parse(&src) {
                Ok(s) => s,
                Err(e) => {
                    eprint!("{}", render_error(&src, &file.display().to_string(), &e));
                    return ExitCode::from(EXIT_USAGE as u8);
                }
            };
            let report = run(&session, &RunOptions { seed, fail_fast, tol, bound });
            match json.as_deref() {
                Some(p) if p.as_os_str() == "-" => print!("{}", report.to_json()),
                Some(p) => {
                    print!("{}", report.to_text());
                    if let Err(e) = std::fs::write(p, report.to_json()) {
                        eprintln!("error: cannot write {}: {e}", p.display());
                        return ExitCode::from(EXIT_INTERNAL as u8);
                    }
                }
                None => print!("{}", report.to_text()),
            }
            ExitCode::from(report.exit_code as u8)
        }
    }
}
