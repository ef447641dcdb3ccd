use proptest::prelude::*;
use residue_forge::ast::{Command, CurrentDef, StmtKind};
use residue_forge::parse::{parse, render_error};
use residue_forge::run::{run, Outcome, RunOptions, SessionReport};
use residue_core::Error;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

fn session_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("sessions").join(format!("{name}.rf"))
}

fn source(name: &str) -> String {
    std::fs::read_to_string(session_path(name)).unwrap()
}

fn run_named(name: &str) -> SessionReport {
    run(&parse(&source(name)).unwrap(), &RunOptions::default())
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_residue-forge"))
}

#[test]
fn exchintrinsic_ast_shape() {
    let s = parse(&source("exchintrinsic")).unwrap();
    assert_eq!(s.count(|k| matches!(k, StmtKind::Space { .. })), 1);
    assert_eq!(s.count(|k| matches!(k, StmtKind::WeakFn { .. })), 2);
    assert_eq!(s.count(|k| matches!(k, StmtKind::Current { def: CurrentDef::Ch { .. }, .. })), 1);
    assert_eq!(s.count(|k| matches!(k, StmtKind::Command(Command::Pair { .. }))), 1);
    assert_eq!(s.stmts.len(), 5);
    assert_eq!((s.stmts[1].span.line, s.stmts[1].span.col), (5, 1));
}

#[test]
fn empty_and_comment_only_files() {
    assert!(parse("").unwrap().stmts.is_empty());
    assert!(parse("  # nothing here\n\n").unwrap().stmts.is_empty());
    let r = run(&parse("").unwrap(), &RunOptions::default());
    assert_eq!(r.exit_code, 0);
}

fn parse_error(src: &str) -> (usize, usize, String) {
    match parse(src) {
        Err(Error::Parse { line, col, msg }) => (line, col, msg),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn unclosed_paren_points_at_the_open_paren() {
    let src = "weakfn f on S = pull (s^2";
    let (line, col, msg) = parse_error(src);
    assert_eq!((line, col), (1, 22));
    assert!(msg.contains("unclosed `(`"), "{msg}");
    let shown = render_error(src, "x.rf", &parse(src).unwrap_err());
    let caret = shown.lines().last().unwrap();
    assert_eq!(caret.find('^').unwrap() - caret.find('|').unwrap() - 1, col);
}

#[test]
fn static_errors() {
    let space = "space S { chart (s, t) map (s^2, s^3, t) }\n";
    let cases = [
        (format!("{space}weakfn f on T = pull (s)"), "unknown identifier `T`"),
        (format!("{space}weakfn f on S = pull (s)\nweakfn f on S = pull (t)"), "already defined"),
        (format!("{space}weakfn f on S = pull (u)"), "unknown variable `u`"),
        (format!("{space}weakfn f on S = pull (s, t)"), "one per chart"),
        (format!("{space}weakfn f on S = pull (s)\ncurrent T = ch [f] res 2"), "exceeds the tuple length"),
        (format!("{space}weakfn f on S = pull (s)\ncheck vanish f"), "is not a current"),
        (format!("{space}weakfn f on S = pull (s)\nstrong f bound 2 bound 3"), "given twice"),
        ("space S { chart k=1 map (t1) chart k=1 map (t1, t1) }".to_string(), "charts map into"),
        (format!("{space}pl [g]"), "unknown identifier `g`"),
    ];
    for (src, want) in cases {
        let (_, _, msg) = parse_error(&src);
        assert!(msg.contains(want), "{src:?}: {msg}");
    }
}

#[test]
fn golden_sessions_round_trip() {
    for name in ["exchintrinsic", "exchintrinsic_full", "exmultcholo_n2", "transformation_basic", "bmch_tight"] {
        let s = parse(&source(name)).unwrap();
        let printed = s.to_string();
        let again = parse(&printed).unwrap();
        assert_eq!(again, s, "{name}");
        assert_eq!(again.to_string(), printed, "{name}");
    }
}

#[test]
fn exmultcholo_session() {
    let r = run_named("exmultcholo_n2");
    let outcomes: Vec<Outcome> = r.commands.iter().map(|c| c.outcome).collect();
    assert_eq!(outcomes, [Outcome::Pass, Outcome::Ok, Outcome::Pass, Outcome::Ok]);
    // S pairs to zero with every ambient form up to degree 6.
    assert_eq!(r.commands[0].result["status"], "pass");
    assert_eq!(r.commands[1].result["verdict"], "no_up_to_bound");
    assert_eq!(r.commands[3].result["value"], "2*tau^2");
    assert_eq!(r.exit_code, 0);
}

#[test]
fn exchintrinsic_session() {
    let r = run_named("exchintrinsic_full");
    assert_eq!(r.exit_code, 0, "{}", r.to_text());
    let zs = &r.commands[0].result;
    assert_eq!(zs["dimension"], 0);
    assert_eq!(r.commands[1].result["verdict"], "complete_intersection");
    let poles: Vec<String> = r.commands[2].result["components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["ideal"].to_string())
        .collect();
    for want in [r#"["s"]"#, r#"["t"]"#, r#"["s + 1"]"#] {
        assert!(poles.iter().any(|p| p == want), "{poles:?}");
    }
    assert_eq!(r.commands[3].result["value"], "2*tau^2");
    assert_eq!(r.summary.passed, 3);
}

#[test]
fn transformation_session_passes() {
    let r = run_named("transformation_basic");
    assert_eq!(r.summary.passed, 1);
    assert_eq!(r.exit_code, 0);
}

#[test]
fn errors_keep_going_unless_fail_fast() {
    let src = "space C { chart k=2 map (t1, t2) }\n\
               weakfn f on C = pull (t1)\n\
               weakfn g on C = pull (0)\n\
               current T = ch [f, g] res 2\n\
               check leibniz [f] res 1\n\
               pair T with dz1^dz2\n\
               check leibniz [f] res 1\n";
    let s = parse(src).unwrap();
    let r = run(&s, &RunOptions::default());
    // T fails to build because g vanishes identically; the pairing then errors at its own line.
    assert_eq!(r.commands.len(), 4);
    let bad: Vec<_> = r.commands.iter().filter(|c| c.outcome == Outcome::Error).map(|c| c.line).collect();
    assert_eq!(bad, [4, 6]);
    assert_eq!(r.summary.passed, 2);
    assert_eq!(r.exit_code, 1);

    let ff = run(&s, &RunOptions { fail_fast: true, ..RunOptions::default() });
    assert!(ff.stopped_early);
    assert_eq!(ff.commands.len(), 1);
    assert_eq!(ff.commands[0].line, 4);
}

#[test]
fn reports_are_byte_identical() {
    for name in ["exchintrinsic_full", "exmultcholo_n2"] {
        let a = run_named(name);
        let b = run_named(name);
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_text(), b.to_text());
    }
    let path = session_path("exchintrinsic_full");
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|_| bin().args(["run", "--seed", "7", "--json", "-"]).arg(&path).output().unwrap().stdout)
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert!(String::from_utf8_lossy(&outs[0]).contains("\"seed\": 7"));
}

#[test]
fn exit_codes() {
    let code = |args: &[&str], file: Option<PathBuf>| {
        let mut c = bin();
        c.args(args);
        if let Some(f) = file {
            c.arg(f);
        }
        c.output().unwrap().status.code().unwrap()
    };
    assert_eq!(code(&["run"], Some(session_path("transformation_basic"))), 0);
    assert_eq!(code(&["run"], Some(session_path("exmultcholo_n2"))), 0);
    assert_eq!(code(&["run", "--frobnicate"], Some(session_path("exmultcholo_n2"))), 2);
    assert_eq!(code(&["run"], Some(PathBuf::from("/nonexistent/session.rf"))), 2);
    assert_eq!(code(&["run", "--tol", "-1"], Some(session_path("exmultcholo_n2"))), 2);

    let dir = std::env::temp_dir().join(format!("residue-forge-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let broken = dir.join("broken.rf");
    std::fs::write(&broken, "space S { chart k=1 map (t1) }\nweakfn f on S = pull (t1^2\n").unwrap();
    let out = bin().arg("run").arg(&broken).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("broken.rf:2:22"), "{err}");

    let json = dir.join("tight.json");
    let out = bin().arg("run").arg(session_path("bmch_tight")).arg("--json").arg(&json).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["exit_code"], 1);
    let cmd = &report["commands"][0];
    assert_eq!(cmd["outcome"], "fail");
    assert!(cmd["result"]["max_deviation"].as_f64().unwrap() > 1e-30);
    std::fs::remove_dir_all(&dir).unwrap();
}

fn poly() -> impl Strategy<Value = String> {
    let term = (1i64..5, prop::sample::select(vec!["s", "t"]), 0u32..4).prop_map(|(c, v, e)| match e {
        0 => c.to_string(),
        1 => format!("{c}*{v}"),
        _ => format!("{c}*{v}^{e}"),
    });
    prop::collection::vec(term, 1..4).prop_map(|ts| ts.join(" + "))
}

fn form() -> impl Strategy<Value = String> {
    (0u32..3, prop::sample::select(vec!["dz1^dz3", "dz1^dz2", "dz2^dz3", "dz1^dbarz1"]))
        .prop_map(|(e, d)| format!("z1^{e} * z2 * {d}"))
}

fn statement() -> impl Strategy<Value = String> {
    prop_oneof![
        form().prop_map(|f| format!("pair T with {f}")),
        Just("zeroset [f, g]".to_string()),
        Just("ci f".to_string()),
        (0u32..6).prop_map(|b| format!("poleset f bound {b}")),
        (1u32..8, 1u32..3).prop_map(|(b, l)| format!("strong g bound {b} limit {l}")),
        Just("pl [f, g]".to_string()),
        (1usize..3, any::<bool>(), form(), 1u32..20)
            .prop_map(|(q, r, f, t)| format!("bm [f, g] grade {q} part {} with {f} tol {t}e-7", if r { "R" } else { "U" })),
        (0usize..3).prop_map(|r| format!("check leibniz [f, g] res {r}")),
        Just("check commute [f, g] res 2 perm [2, 1] bound 2".to_string()),
        (1usize..3).prop_map(|j| format!("check annihilate [f, g] res 2 factor {j}")),
        poly().prop_map(|p| format!("check transform [f, g] to [f, g] matrix [[1, 0], [{p}, 1]]")),
        Just("check vanish T; check nonvanish T bound 4".to_string()),
        Just("check findep [f, g] regularizers [f, g] and [g, f] limit 3".to_string()),
        Just("check taylor [f, g]; check nabla [f, g]".to_string()),
        form().prop_map(|f| format!("check intrinsic [f, g] with [{f}, dz1^dz2]")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_is_inverse_of_parse(p in poly(), q in poly(), body in prop::collection::vec(statement(), 0..6)) {
        let src = format!(
            "space S {{ chart (s, t) map (s^2, s^3, t) }}\n\
             weakfn f on S = pull ({p})\n\
             weakfn g on S = pull ((1 + s) * t / ({q}))\n\
             weakfn h on S = ambient (z1^2 - 3*z2)\n\
             current T = ch [f, g] res 2 order [2, 1]\n\
             current U = mul h T\n{}",
            body.join("\n")
        );
        let s = parse(&src).unwrap();
        let printed = s.to_string();
        let again = parse(&printed).unwrap();
        prop_assert_eq!(&again, &s);
        prop_assert_eq!(again.to_string(), printed);
    }
}
