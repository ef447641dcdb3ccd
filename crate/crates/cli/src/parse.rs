//! Session parser and static checks: names are defined before use, never redefined, and
//! every expression is checked against the variables and arities it will be read with.
//!
//! ```text
//! session  := (stmt ";"?)*
//! stmt     := "space" NAME "{" chart+ "}"
//!           | "weakfn" NAME "on" NAME "=" ("pull" "(" sum ("," sum)* ")" | "ambient" "(" sum ")")
//!           | "current" NAME "=" ("ch" names "res" INT ("order" ints)? | "mul" NAME NAME)
//!           | "pair" NAME "with" sum
//!           | ("zeroset" | "ci" | "pl") names
//!           | ("poleset" | "strong") NAME opts
//!           | "bm" names "grade" INT ("part" ("R" | "U"))? "with" sum opts
//!           | "check" check opts
//! chart    := "chart" ("k" "=" INT | "(" NAME ("," NAME)* ")") "map" "(" sum ("," sum)* ")"
//! check    := "leibniz" names "res" INT
//!           | "commute" names "res" INT "perm" ints
//!           | "annihilate" names "res" INT "factor" INT
//!           | "transform" names "to" names "matrix" "[" row ("," row)* "]"
//!           | ("vanish" | "nonvanish") NAME
//!           | ("bmch" | "taylor" | "nabla") names
//!           | "findep" names "regularizers" names "and" names
//!           | "intrinsic" names "with" "[" sum ("," sum)* "]"
//! names    := NAME | "[" NAME ("," NAME)* "]"
//! opts     := ("tol" NUMBER | "bound" INT | "limit" INT)*
//! ```
//!
//! Chart expressions use the chart variables; test forms and ambient functions use `z1..zn`.

use crate::ast::*;
use residue_core::algebra::text::{lex, perr, to_bipoly, to_form, to_ratio, Cursor, Expr, Span, Tok};
use residue_core::{Error, Result};
use std::collections::BTreeMap;

pub fn ambient_vars(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("z{i}")).collect()
}

/// Parse and statically check a session.
pub fn parse(src: &str) -> Result<Session> {
    let mut c = Cursor::new(lex(src)?);
    let mut stmts = Vec::new();
    while !c.at_eof() {
        stmts.push(statement(&mut c)?);
        c.eat_sym(';');
    }
    let session = Session { stmts };
    check(&session)?;
    Ok(session)
}

fn name(c: &mut Cursor) -> Result<Name> {
    let (text, span) = c.expect_ident()?;
    Ok(Name { text, span })
}

fn close(c: &mut Cursor, open: Span, sym: char, opening: char) -> Result<()> {
    if c.eat_sym(sym) {
        return Ok(());
    }
    let found = c.peek().tok.clone();
    Err(perr(open, format!("unclosed `{opening}`: expected `{sym}`, found {found}")))
}

/// `open item ("," item)* close` with at least one item.
fn delimited<T>(c: &mut Cursor, open: char, close_sym: char, mut item: impl FnMut(&mut Cursor) -> Result<T>) -> Result<Vec<T>> {
    let at = c.expect_sym(open)?;
    let mut out = vec![item(c)?];
    while c.eat_sym(',') {
        out.push(item(c)?);
    }
    close(c, at, close_sym, open)?;
    Ok(out)
}

fn names(c: &mut Cursor) -> Result<Vec<Name>> {
    if c.is_sym('[') {
        delimited(c, '[', ']', name)
    } else {
        Ok(vec![name(c)?])
    }
}

fn positive(c: &mut Cursor) -> Result<usize> {
    let (n, span) = c.expect_int()?;
    if n < 1 {
        return Err(perr(span, "expected a positive integer".into()));
    }
    Ok(n as usize)
}

fn ints(c: &mut Cursor) -> Result<Vec<usize>> {
    delimited(c, '[', ']', positive)
}

fn exprs(c: &mut Cursor, open: char, close_sym: char) -> Result<Vec<Expr>> {
    delimited(c, open, close_sym, |c| c.parse_sum())
}

fn options(c: &mut Cursor) -> Result<Options> {
    let mut o = Options::default();
    loop {
        let span = c.peek().span;
        if c.is_ident("tol") {
            c.next();
            let (x, s) = c.expect_number()?;
            if !(x >= 0.0 && x.is_finite()) {
                return Err(perr(s, "tolerance must be a finite nonnegative number".into()));
            }
            set_once(&mut o.tol, x, span, "tol")?;
        } else if c.is_ident("bound") {
            c.next();
            let (b, s) = c.expect_int()?;
            let b = u32::try_from(b).map_err(|_| perr(s, "bound must be a nonnegative integer".into()))?;
            set_once(&mut o.bound, b, span, "bound")?;
        } else if c.is_ident("limit") {
            c.next();
            let l = positive(c)?;
            set_once(&mut o.limit, l, span, "limit")?;
        } else {
            return Ok(o);
        }
    }
}

fn set_once<T>(slot: &mut Option<T>, v: T, span: Span, what: &str) -> Result<()> {
    if slot.is_some() {
        return Err(perr(span, format!("option `{what}` given twice")));
    }
    *slot = Some(v);
    Ok(())
}

fn chart(c: &mut Cursor) -> Result<ChartDef> {
    c.expect_keyword("chart")?;
    let vars = if c.is_ident("k") {
        c.next();
        c.expect_sym('=')?;
        ChartVars::Dim(positive(c)?)
    } else {
        let v = delimited(c, '(', ')', name)?;
        ChartVars::Named(v.into_iter().map(|n| n.text).collect())
    };
    c.expect_keyword("map")?;
    let map = exprs(c, '(', ')')?;
    Ok(ChartDef { vars, map })
}

fn check_kind(c: &mut Cursor) -> Result<CheckKind> {
    let (kw, span) = c.expect_ident()?;
    let res = |c: &mut Cursor| -> Result<usize> {
        c.expect_keyword("res")?;
        let (n, s) = c.expect_int()?;
        usize::try_from(n).map_err(|_| perr(s, "residue count must be nonnegative".into()))
    };
    Ok(match kw.as_str() {
        "leibniz" => {
            let fs = names(c)?;
            CheckKind::Leibniz { fs, res: res(c)? }
        }
        "commute" => {
            let fs = names(c)?;
            let r = res(c)?;
            c.expect_keyword("perm")?;
            CheckKind::Commute { fs, res: r, perm: ints(c)? }
        }
        "annihilate" => {
            let fs = names(c)?;
            let r = res(c)?;
            c.expect_keyword("factor")?;
            CheckKind::Annihilate { fs, res: r, factor: positive(c)? }
        }
        "transform" => {
            let f = names(c)?;
            c.expect_keyword("to")?;
            let g = names(c)?;
            c.expect_keyword("matrix")?;
            let matrix = delimited(c, '[', ']', |c| exprs(c, '[', ']'))?;
            CheckKind::Transform { f, g, matrix }
        }
        "vanish" => CheckKind::Vanish { current: name(c)? },
        "nonvanish" => CheckKind::Nonvanish { current: name(c)? },
        "bmch" => CheckKind::Bmch { fs: names(c)? },
        "taylor" => CheckKind::Taylor { fs: names(c)? },
        "nabla" => CheckKind::Nabla { fs: names(c)? },
        "findep" => {
            let fs = names(c)?;
            c.expect_keyword("regularizers")?;
            let first = names(c)?;
            c.expect_keyword("and")?;
            CheckKind::Findep { fs, first, second: names(c)? }
        }
        "intrinsic" => {
            let fs = names(c)?;
            c.expect_keyword("with")?;
            CheckKind::Intrinsic { fs, forms: exprs(c, '[', ']')? }
        }
        other => return Err(perr(span, format!("unknown check `{other}`"))),
    })
}

fn statement(c: &mut Cursor) -> Result<Stmt> {
    let t = c.peek().clone();
    let span = t.span;
    let kw = match &t.tok {
        Tok::Ident(s) => s.clone(),
        other => return Err(perr(span, format!("expected a statement, found {other}"))),
    };
    c.next();
    let kind = match kw.as_str() {
        "space" => {
            let n = name(c)?;
            let open = c.expect_sym('{')?;
            let mut charts = vec![chart(c)?];
            while c.is_ident("chart") {
                charts.push(chart(c)?);
            }
            close(c, open, '}', '{')?;
            StmtKind::Space { name: n, charts }
        }
        "weakfn" => {
            let n = name(c)?;
            c.expect_keyword("on")?;
            let space = name(c)?;
            c.expect_sym('=')?;
            let def = if c.is_ident("pull") {
                c.next();
                WeakDef::Pull(exprs(c, '(', ')')?)
            } else {
                c.expect_keyword("ambient")?;
                let open = c.expect_sym('(')?;
                let e = c.parse_sum()?;
                close(c, open, ')', '(')?;
                WeakDef::Ambient(e)
            };
            StmtKind::WeakFn { name: n, space, def }
        }
        "current" => {
            let n = name(c)?;
            c.expect_sym('=')?;
            let def = if c.is_ident("mul") {
                c.next();
                let g = name(c)?;
                CurrentDef::Mul { g, t: name(c)? }
            } else {
                c.expect_keyword("ch")?;
                let fs = names(c)?;
                c.expect_keyword("res")?;
                let (r, s) = c.expect_int()?;
                let res = usize::try_from(r).map_err(|_| perr(s, "residue count must be nonnegative".into()))?;
                let order = if c.is_ident("order") {
                    c.next();
                    Some(ints(c)?)
                } else {
                    None
                };
                CurrentDef::Ch { fs, res, order }
            };
            StmtKind::Current { name: n, def }
        }
        "pair" => {
            let current = name(c)?;
            c.expect_keyword("with")?;
            StmtKind::Command(Command::Pair { current, form: c.parse_sum()? })
        }
        "zeroset" => StmtKind::Command(Command::ZeroSet { fs: names(c)? }),
        "ci" => StmtKind::Command(Command::Ci { fs: names(c)? }),
        "pl" => StmtKind::Command(Command::Pl { fs: names(c)? }),
        "poleset" => {
            let f = name(c)?;
            StmtKind::Command(Command::PoleSet { f, opts: options(c)? })
        }
        "strong" => {
            let f = name(c)?;
            StmtKind::Command(Command::Strong { f, opts: options(c)? })
        }
        "bm" => {
            let fs = names(c)?;
            c.expect_keyword("grade")?;
            let grade = positive(c)?;
            let part = if c.is_ident("part") {
                c.next();
                let (p, s) = c.expect_ident()?;
                match p.as_str() {
                    "R" => BmPart::R,
                    "U" => BmPart::U,
                    _ => return Err(perr(s, format!("expected `R` or `U`, found {p}"))),
                }
            } else {
                BmPart::R
            };
            c.expect_keyword("with")?;
            let form = c.parse_sum()?;
            StmtKind::Command(Command::Bm { fs, grade, part, form, opts: options(c)? })
        }
        "check" => {
            let kind = check_kind(c)?;
            StmtKind::Command(Command::Check { kind, opts: options(c)? })
        }
        other => return Err(perr(span, format!("unknown statement `{other}`"))),
    };
    Ok(Stmt { kind, span })
}

/// What a name refers to, with the space it lives on.
#[derive(Clone, Debug)]
enum Sym {
    Space { charts: Vec<Vec<String>>, n: usize },
    Weak { space: String },
    Current { space: String },
}

struct Scope {
    syms: BTreeMap<String, Sym>,
}

impl Scope {
    fn define(&mut self, n: &Name, s: Sym) -> Result<()> {
        if self.syms.contains_key(&n.text) {
            return Err(perr(n.span, format!("`{}` is already defined", n.text)));
        }
        self.syms.insert(n.text.clone(), s);
        Ok(())
    }

    fn get(&self, n: &Name) -> Result<&Sym> {
        self.syms.get(&n.text).ok_or_else(|| perr(n.span, format!("unknown identifier `{}`", n.text)))
    }

    fn space(&self, n: &str) -> (&[Vec<String>], usize) {
        match &self.syms[n] {
            Sym::Space { charts, n } => (charts, *n),
            _ => unreachable!("checked at definition"),
        }
    }

    fn weak(&self, n: &Name) -> Result<String> {
        match self.get(n)? {
            Sym::Weak { space } => Ok(space.clone()),
            _ => Err(perr(n.span, format!("`{}` is not a weak function", n.text))),
        }
    }

    /// A nonempty tuple of weak functions on one space; returns the space name.
    fn tuple(&self, fs: &[Name]) -> Result<String> {
        let sp = self.weak(&fs[0])?;
        for f in &fs[1..] {
            if self.weak(f)? != sp {
                return Err(perr(f.span, format!("`{}` lives on a different space than `{}`", f.text, fs[0].text)));
            }
        }
        Ok(sp)
    }

    fn current(&self, n: &Name) -> Result<String> {
        match self.get(n)? {
            Sym::Current { space } => Ok(space.clone()),
            _ => Err(perr(n.span, format!("`{}` is not a current", n.text))),
        }
    }
}

fn check_res(res: usize, fs: &[Name], span: Span) -> Result<()> {
    if res > fs.len() {
        return Err(perr(span, format!("res {res} exceeds the tuple length {}", fs.len())));
    }
    Ok(())
}

fn check_perm(perm: &[usize], m: usize, span: Span) -> Result<()> {
    let mut p = perm.to_vec();
    p.sort();
    if p != (1..=m).collect::<Vec<_>>() {
        return Err(perr(span, format!("expected a permutation of 1..={m}")));
    }
    Ok(())
}

fn check_chart_exprs(es: &[Expr], charts: &[Vec<String>], span: Span) -> Result<()> {
    if es.len() != charts.len() {
        return Err(perr(span, format!("expected {} chart functions (one per chart), found {}", charts.len(), es.len())));
    }
    for (e, vars) in es.iter().zip(charts) {
        to_ratio(e, vars)?;
    }
    Ok(())
}

fn check(session: &Session) -> Result<()> {
    let mut sc = Scope { syms: BTreeMap::new() };
    for st in &session.stmts {
        match &st.kind {
            StmtKind::Space { name, charts } => {
                let n = charts[0].map.len();
                let mut vars = Vec::new();
                for ch in charts {
                    if ch.map.len() != n {
                        return Err(perr(st.span, format!("charts map into C^{n} and C^{}", ch.map.len())));
                    }
                    let v = ch.vars.names();
                    for e in &ch.map {
                        to_bipoly(e, &v)?;
                    }
                    vars.push(v);
                }
                sc.define(name, Sym::Space { charts: vars, n })?;
            }
            StmtKind::WeakFn { name, space, def } => {
                match sc.get(space)? {
                    Sym::Space { .. } => {}
                    _ => return Err(perr(space.span, format!("`{}` is not a space", space.text))),
                }
                let (charts, n) = sc.space(&space.text);
                match def {
                    WeakDef::Pull(es) => check_chart_exprs(es, charts, st.span)?,
                    WeakDef::Ambient(e) => {
                        to_bipoly(e, &ambient_vars(n))?;
                    }
                }
                sc.define(name, Sym::Weak { space: space.text.clone() })?;
            }
            StmtKind::Current { name, def } => {
                let space = match def {
                    CurrentDef::Ch { fs, res, order } => {
                        let sp = sc.tuple(fs)?;
                        check_res(*res, fs, st.span)?;
                        if let Some(o) = order {
                            check_perm(o, fs.len(), st.span)?;
                        }
                        sp
                    }
                    CurrentDef::Mul { g, t } => {
                        let sp = sc.weak(g)?;
                        if sc.current(t)? != sp {
                            return Err(perr(t.span, format!("`{}` lives on a different space than `{}`", t.text, g.text)));
                        }
                        sp
                    }
                };
                sc.define(name, Sym::Current { space })?;
            }
            StmtKind::Command(cmd) => check_command(&sc, cmd, st.span)?,
        }
    }
    Ok(())
}

fn check_command(sc: &Scope, cmd: &Command, span: Span) -> Result<()> {
    let form_in = |sp: &str, e: &Expr| -> Result<()> {
        let (_, n) = sc.space(sp);
        to_form(e, &ambient_vars(n)).map(|_| ())
    };
    match cmd {
        Command::Pair { current, form } => form_in(&sc.current(current)?, form),
        Command::ZeroSet { fs } | Command::Ci { fs } | Command::Pl { fs } => sc.tuple(fs).map(|_| ()),
        Command::PoleSet { f, .. } | Command::Strong { f, .. } => sc.weak(f).map(|_| ()),
        Command::Bm { fs, grade, form, .. } => {
            let sp = sc.tuple(fs)?;
            if *grade > fs.len() {
                return Err(perr(span, format!("grade {grade} exceeds the tuple length {}", fs.len())));
            }
            form_in(&sp, form)
        }
        Command::Check { kind, .. } => match kind {
            CheckKind::Leibniz { fs, res } => {
                sc.tuple(fs)?;
                check_res(*res, fs, span)
            }
            CheckKind::Commute { fs, res, perm } => {
                sc.tuple(fs)?;
                check_res(*res, fs, span)?;
                check_perm(perm, fs.len(), span)
            }
            CheckKind::Annihilate { fs, res, factor } => {
                sc.tuple(fs)?;
                check_res(*res, fs, span)?;
                if *factor > fs.len() {
                    return Err(perr(span, format!("factor {factor} is outside 1..={}", fs.len())));
                }
                Ok(())
            }
            CheckKind::Transform { f, g, matrix } => {
                let sp = sc.tuple(f)?;
                if sc.tuple(g)? != sp {
                    return Err(perr(g[0].span, "both tuples must live on one space".into()));
                }
                let m = f.len();
                if g.len() != m || matrix.len() != m || matrix.iter().any(|r| r.len() != m) {
                    return Err(perr(span, format!("need two tuples of length {m} and an {m}x{m} matrix")));
                }
                let (charts, _) = sc.space(&sp);
                for e in matrix.iter().flatten() {
                    for vars in charts {
                        to_ratio(e, vars)?;
                    }
                }
                Ok(())
            }
            CheckKind::Vanish { current } | CheckKind::Nonvanish { current } => sc.current(current).map(|_| ()),
            CheckKind::Bmch { fs } | CheckKind::Taylor { fs } | CheckKind::Nabla { fs } => sc.tuple(fs).map(|_| ()),
            CheckKind::Findep { fs, first, second } => {
                let sp = sc.tuple(fs)?;
                for t in [first, second] {
                    if sc.tuple(t)? != sp {
                        return Err(perr(t[0].span, "regularizers must live on the space of the tuple".into()));
                    }
                }
                Ok(())
            }
            CheckKind::Intrinsic { fs, forms } => {
                let sp = sc.tuple(fs)?;
                forms.iter().try_for_each(|e| form_in(&sp, e))
            }
        },
    }
}

/// A compiler-style diagnostic with the offending line and a caret.
pub fn render_error(src: &str, path: &str, err: &Error) -> String {
    match err {
        Error::Parse { line, col, msg } => {
            let text = src.lines().nth(line - 1).unwrap_or("");
            let gutter = line.to_string().len();
            format!(
                "error: {msg}\n{:gutter$}--> {path}:{line}:{col}\n{:gutter$} |\n{line} | {text}\n{:gutter$} | {:>col$}\n",
                "", "", "", "^"
            )
        }
        other => format!("error: {other}\n"),
    }
}
