//! Session syntax tree and its canonical printer. Spans are carried for diagnostics and
//! ignored by equality, so `parse(print(s)) == s`.

use residue_core::algebra::text::{Expr, Span};
use std::fmt;

#[derive(Clone, Debug)]
pub struct Name {
    pub text: String,
    pub span: Span,
}

impl PartialEq for Name {
    fn eq(&self, o: &Self) -> bool {
        self.text == o.text
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChartVars {
    /// `k=K`: variables `t1..tK`.
    Dim(usize),
    Named(Vec<String>),
}

impl ChartVars {
    pub fn names(&self) -> Vec<String> {
        match self {
            ChartVars::Dim(k) => (1..=*k).map(|i| format!("t{i}")).collect(),
            ChartVars::Named(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartDef {
    pub vars: ChartVars,
    pub map: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeakDef {
    /// One chart function per chart, quotients allowed.
    Pull(Vec<Expr>),
    /// An ambient polynomial in `z1..zn`.
    Ambient(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CurrentDef {
    /// `order` lists 1-based factor indices.
    Ch { fs: Vec<Name>, res: usize, order: Option<Vec<usize>> },
    Mul { g: Name, t: Name },
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Options {
    pub tol: Option<f64>,
    pub bound: Option<u32>,
    pub limit: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BmPart {
    R,
    U,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheckKind {
    Leibniz { fs: Vec<Name>, res: usize },
    Commute { fs: Vec<Name>, res: usize, perm: Vec<usize> },
    Annihilate { fs: Vec<Name>, res: usize, factor: usize },
    Transform { f: Vec<Name>, g: Vec<Name>, matrix: Vec<Vec<Expr>> },
    Vanish { current: Name },
    Nonvanish { current: Name },
    Bmch { fs: Vec<Name> },
    Findep { fs: Vec<Name>, first: Vec<Name>, second: Vec<Name> },
    Taylor { fs: Vec<Name> },
    Nabla { fs: Vec<Name> },
    Intrinsic { fs: Vec<Name>, forms: Vec<Expr> },
}

impl CheckKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            CheckKind::Leibniz { .. } => "leibniz",
            CheckKind::Commute { .. } => "commute",
            CheckKind::Annihilate { .. } => "annihilate",
            CheckKind::Transform { .. } => "transform",
            CheckKind::Vanish { .. } => "vanish",
            CheckKind::Nonvanish { .. } => "nonvanish",
            CheckKind::Bmch { .. } => "bmch",
            CheckKind::Findep { .. } => "findep",
            CheckKind::Taylor { .. } => "taylor",
            CheckKind::Nabla { .. } => "nabla",
            CheckKind::Intrinsic { .. } => "intrinsic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Pair { current: Name, form: Expr },
    ZeroSet { fs: Vec<Name> },
    Ci { fs: Vec<Name> },
    PoleSet { f: Name, opts: Options },
    Strong { f: Name, opts: Options },
    Pl { fs: Vec<Name> },
    Bm { fs: Vec<Name>, grade: usize, part: BmPart, form: Expr, opts: Options },
    Check { kind: CheckKind, opts: Options },
}

impl Command {
    pub fn is_check(&self) -> bool {
        matches!(self, Command::Check { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Space { name: Name, charts: Vec<ChartDef> },
    WeakFn { name: Name, space: Name, def: WeakDef },
    Current { name: Name, def: CurrentDef },
    Command(Command),
}

#[derive(Clone, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl PartialEq for Stmt {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Session {
    pub stmts: Vec<Stmt>,
}

impl Session {
    pub fn count(&self, pred: impl Fn(&StmtKind) -> bool) -> usize {
        self.stmts.iter().filter(|s| pred(&s.kind)).count()
    }
}

fn join<T: fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn list(names: &[Name]) -> String {
    format!("[{}]", join(names, ", "))
}

impl fmt::Display for Options {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = self.tol {
            write!(f, " tol {t:e}")?;
        }
        if let Some(b) = self.bound {
            write!(f, " bound {b}")?;
        }
        if let Some(l) = self.limit {
            write!(f, " limit {l}")?;
        }
        Ok(())
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.keyword())?;
        match self {
            CheckKind::Leibniz { fs, res } => write!(f, " {} res {res}", list(fs)),
            CheckKind::Commute { fs, res, perm } => write!(f, " {} res {res} perm [{}]", list(fs), join(perm, ", ")),
            CheckKind::Annihilate { fs, res, factor } => write!(f, " {} res {res} factor {factor}", list(fs)),
            CheckKind::Transform { f: a, g, matrix } => {
                let rows: Vec<String> = matrix.iter().map(|r| format!("[{}]", join(r, ", "))).collect();
                write!(f, " {} to {} matrix [{}]", list(a), list(g), rows.join(", "))
            }
            CheckKind::Vanish { current } | CheckKind::Nonvanish { current } => write!(f, " {current}"),
            CheckKind::Bmch { fs } | CheckKind::Taylor { fs } | CheckKind::Nabla { fs } => write!(f, " {}", list(fs)),
            CheckKind::Findep { fs, first, second } => write!(f, " {} regularizers {} and {}", list(fs), list(first), list(second)),
            CheckKind::Intrinsic { fs, forms } => write!(f, " {} with [{}]", list(fs), join(forms, ", ")),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Pair { current, form } => write!(f, "pair {current} with {form}"),
            Command::ZeroSet { fs } => write!(f, "zeroset {}", list(fs)),
            Command::Ci { fs } => write!(f, "ci {}", list(fs)),
            Command::PoleSet { f: w, opts } => write!(f, "poleset {w}{opts}"),
            Command::Strong { f: w, opts } => write!(f, "strong {w}{opts}"),
            Command::Pl { fs } => write!(f, "pl {}", list(fs)),
            Command::Bm { fs, grade, part, form, opts } => {
                let p = if *part == BmPart::R { "R" } else { "U" };
                write!(f, "bm {} grade {grade} part {p} with {form}{opts}", list(fs))
            }
            Command::Check { kind, opts } => write!(f, "check {kind}{opts}"),
        }
    }
}

impl fmt::Display for StmtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StmtKind::Space { name, charts } => {
                writeln!(f, "space {name} {{")?;
                for c in charts {
                    let vars = match &c.vars {
                        ChartVars::Dim(k) => format!("k={k}"),
                        ChartVars::Named(v) => format!("({})", v.join(", ")),
                    };
                    writeln!(f, "  chart {vars} map ({})", join(&c.map, ", "))?;
                }
                write!(f, "}}")
            }
            StmtKind::WeakFn { name, space, def } => match def {
                WeakDef::Pull(es) => write!(f, "weakfn {name} on {space} = pull ({})", join(es, ", ")),
                WeakDef::Ambient(e) => write!(f, "weakfn {name} on {space} = ambient ({e})"),
            },
            StmtKind::Current { name, def } => match def {
                CurrentDef::Ch { fs, res, order } => {
                    write!(f, "current {name} = ch {} res {res}", list(fs))?;
                    if let Some(o) = order {
                        write!(f, " order [{}]", join(o, ", "))?;
                    }
                    Ok(())
                }
                CurrentDef::Mul { g, t } => write!(f, "current {name} = mul {g} {t}"),
            },
            StmtKind::Command(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.stmts {
            writeln!(f, "{}", s.kind)?;
        }
        Ok(())
    }
}
