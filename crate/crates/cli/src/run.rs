//! Statement execution and reports.
//!
//! Commands run in order. A failing command is recorded with its location and execution
//! continues unless `fail_fast` is set. Reports carry no timings or paths, so the same
//! session and seed give byte-identical output.

use crate::ast::*;
use crate::parse::ambient_vars;
use residue_core::algebra::text::{print_poly, to_bipoly, to_form, to_ratio, Expr, Span};
use residue_core::algebra::Form;
use residue_core::bm::checks::{
    bm_vs_ch, f_independence_check, intrinsic_check, scalar_nabla_check, taylor_order_check, NumericReport,
};
use residue_core::bm::continuation::QuadParams;
use residue_core::bm::pairing::{bm_pairing, prepare, BMSpec, Part};
use residue_core::bm::quad::Tolerance;
use residue_core::ch::{
    ch_product, check_annihilation, check_commutation, check_leibniz, compare_report, transformation_check, CHSpec,
    Report, Status,
};
use residue_core::currents::{ambient_test_forms, compare_on_z, pushforward_pair, weak_mul, AmbientTestForm, ChartCurrents, Comparison};
use residue_core::pl::pl_cycle;
use residue_core::space::{
    is_complete_intersection, is_strongly_holomorphic, pole_set, zero_set, NormalizationChart, Pullback,
    SpacePresentation, StrongVerdict, WeakFunction,
};
use residue_core::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;

pub const SCHEMA: u32 = 1;

/// Exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    pub fail_fast: bool,
    /// Default tolerance for numeric checks without `tol`.
    pub tol: f64,
    /// Default test-form degree bound for checks without `bound`.
    pub bound: u32,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 0, fail_fast: false, tol: 1e-6, bound: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// A non-check command that completed.
    Ok,
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommandReport {
    pub line: usize,
    pub col: usize,
    pub statement: String,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub result: Value,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub commands: usize,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub errors: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SessionReport {
    pub schema: u32,
    pub seed: u64,
    pub commands: Vec<CommandReport>,
    pub summary: Summary,
    pub exit_code: i32,
    /// Set when `fail_fast` stopped the run early.
    pub stopped_early: bool,
}

impl SessionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    /// One line per command, then the summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.commands {
            let tag = match c.outcome {
                Outcome::Ok => "ok",
                Outcome::Pass => "PASS",
                Outcome::Fail => "FAIL",
                Outcome::Skipped => "SKIP",
                Outcome::Error => "ERROR",
            };
            out.push_str(&format!("{}:{} [{tag}] {}\n", c.line, c.col, c.statement));
            if let Some(e) = &c.error {
                out.push_str(&format!("    {e}\n"));
            }
            for line in headline(&c.result) {
                out.push_str(&format!("    {line}\n"));
            }
        }
        let s = &self.summary;
        out.push_str(&format!(
            "{} commands, {} checks: {} passed, {} failed, {} skipped, {} errors\n",
            s.commands, s.checks, s.passed, s.failed, s.skipped, s.errors
        ));
        out
    }
}

/// Short human summary of a result object.
fn headline(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(x) = v.get("value").and_then(Value::as_str) {
        out.push(format!("value = {x}"));
    }
    for key in ["verdict", "reason", "max_deviation", "checked", "betas"] {
        if let Some(x) = v.get(key) {
            if !x.is_null() {
                out.push(format!("{key}: {x}"));
            }
        }
    }
    if let Some(cs) = v.get("components").and_then(Value::as_array) {
        for c in cs {
            match (c.get("ideal"), c.get("image")) {
                (Some(ideal), _) => out.push(format!("chart {}: {ideal} (dim {})", c["chart"], c["dimension"])),
                (None, Some(image)) => out.push(format!("{image} (dim {}, beta {})", c["dimension"], c["beta"])),
                _ => {}
            }
        }
    }
    if let Some(w) = v.get("witnesses").and_then(Value::as_array).and_then(|w| w.first()) {
        out.push(format!("witness: {w}"));
    }
    out
}

#[derive(Default)]
struct Env {
    spaces: BTreeMap<String, SpacePresentation>,
    weak: BTreeMap<String, (String, WeakFunction)>,
    currents: BTreeMap<String, (String, ChartCurrents)>,
}

impl Env {
    fn space(&self, name: &str) -> Result<&SpacePresentation> {
        self.spaces.get(name).ok_or_else(|| Error::Precondition(format!("space `{name}` failed to build")))
    }

    fn weak(&self, n: &Name) -> Result<(&SpacePresentation, &WeakFunction)> {
        let (sp, w) = self.weak.get(&n.text).ok_or_else(|| Error::Precondition(format!("`{}` failed to build", n.text)))?;
        Ok((self.space(sp)?, w))
    }

    fn tuple(&self, fs: &[Name]) -> Result<(&SpacePresentation, Vec<WeakFunction>)> {
        let (sp, _) = self.weak(&fs[0])?;
        let ws = fs.iter().map(|f| self.weak(f).map(|(_, w)| w.clone())).collect::<Result<Vec<_>>>()?;
        Ok((sp, ws))
    }

    fn current(&self, n: &Name) -> Result<(&SpacePresentation, &ChartCurrents)> {
        let (sp, t) = self.currents.get(&n.text).ok_or_else(|| Error::Precondition(format!("`{}` failed to build", n.text)))?;
        Ok((self.space(sp)?, t))
    }
}

fn chart_pullbacks(space: &SpacePresentation, es: &[&Expr]) -> Result<Vec<Pullback>> {
    space.charts.iter().zip(es).map(|(c, e)| Ok(Pullback::from_ratio(to_ratio(e, &c.vars)?))).collect()
}

/// The same expression read on every chart.
fn uniform_weak(space: &SpacePresentation, e: &Expr) -> Result<WeakFunction> {
    let es: Vec<&Expr> = vec![e; space.charts.len()];
    WeakFunction::from_pullbacks(space, chart_pullbacks(space, &es)?)
}

fn define(env: &mut Env, st: &StmtKind) -> Result<()> {
    match st {
        StmtKind::Space { name, charts } => {
            let cs = charts
                .iter()
                .map(|c| {
                    let vars = c.vars.names();
                    let map = c.map.iter().map(|e| to_bipoly(e, &vars)).collect::<Result<Vec<_>>>()?;
                    NormalizationChart::new(vars, map)
                })
                .collect::<Result<Vec<_>>>()?;
            env.spaces.insert(name.text.clone(), SpacePresentation::new(cs)?);
        }
        StmtKind::WeakFn { name, space, def } => {
            let sp = env.space(&space.text)?;
            let w = match def {
                WeakDef::Pull(es) => WeakFunction::from_pullbacks(sp, chart_pullbacks(sp, &es.iter().collect::<Vec<_>>())?)?,
                WeakDef::Ambient(e) => WeakFunction::from_ambient(sp, &to_bipoly(e, &ambient_vars(sp.ambient_dim))?)?,
            };
            env.weak.insert(name.text.clone(), (space.text.clone(), w));
        }
        StmtKind::Current { name, def } => {
            let (sp_name, t) = match def {
                CurrentDef::Ch { fs, res, order } => {
                    let (sp, ws) = env.tuple(fs)?;
                    let mut spec = CHSpec::new(ws, *res)?;
                    if let Some(o) = order {
                        spec = spec.with_order(o.iter().map(|i| i - 1).collect())?;
                    }
                    (env.weak[&fs[0].text].0.clone(), ch_product(sp, &spec)?)
                }
                CurrentDef::Mul { g, t } => {
                    let (_, w) = env.weak(g)?;
                    let (_, cur) = env.current(t)?;
                    (env.weak[&g.text].0.clone(), weak_mul(w, cur)?)
                }
            };
            env.currents.insert(name.text.clone(), (sp_name, t));
        }
        StmtKind::Command(_) => unreachable!("commands are executed, not defined"),
    }
    Ok(())
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn status_outcome(s: Status) -> Outcome {
    match s {
        Status::Pass => Outcome::Pass,
        Status::Fail => Outcome::Fail,
        Status::Skipped => Outcome::Skipped,
    }
}

fn exact(r: Report) -> (Outcome, Value) {
    (status_outcome(r.status), to_value(&r))
}

fn numeric(r: NumericReport) -> (Outcome, Value) {
    (status_outcome(r.status), to_value(&r))
}

fn params(tol: f64) -> QuadParams {
    // Quadrature runs two orders tighter than the comparison tolerance, floored at what
    // double precision can reach; a tolerance below the floor then fails instead of erroring.
    let q = (tol * 1e-2).clamp(1e-12, 1e-8);
    QuadParams { tol: Tolerance { rel: q, abs: q.min(1e-10) }, ..QuadParams::default() }
}

fn limited(mut forms: Vec<AmbientTestForm>, limit: Option<usize>) -> Vec<AmbientTestForm> {
    if let Some(l) = limit {
        forms.truncate(l);
    }
    forms
}

/// Bidegrees `(k, k - q)` for every grade `q` of a `p`-tuple on `k`-dimensional charts.
fn grade_bidegrees(space: &SpacePresentation, p: usize) -> Vec<(usize, usize)> {
    let k = space.charts[0].arity();
    (1..=p).filter(|&q| q <= k).map(|q| (k, k - q)).collect()
}

fn execute(env: &Env, cmd: &Command, ro: &RunOptions) -> Result<(Outcome, Value)> {
    let tol_of = |o: &Options| o.tol.unwrap_or(ro.tol);
    let bound_of = |o: &Options| o.bound.unwrap_or(ro.bound);
    match cmd {
        Command::Pair { current, form } => {
            let (sp, t) = env.current(current)?;
            let phi = to_form(form, &ambient_vars(sp.ambient_dim))?;
            let v = pushforward_pair(sp, t, &phi)?;
            Ok((Outcome::Ok, json!({ "value": v.to_string() })))
        }
        Command::ZeroSet { fs } => {
            let (sp, ws) = env.tuple(fs)?;
            let z = zero_set(sp, &ws)?;
            let mut v = to_value(&z);
            v["empty"] = json!(z.is_empty());
            v["dimension"] = json!(z.dimension());
            Ok((Outcome::Ok, v))
        }
        Command::Ci { fs } => {
            let (sp, ws) = env.tuple(fs)?;
            Ok((Outcome::Ok, json!({ "verdict": is_complete_intersection(sp, &ws)? })))
        }
        Command::PoleSet { f, opts } => {
            let (sp, w) = env.weak(f)?;
            Ok((Outcome::Ok, to_value(&pole_set(sp, w, bound_of(opts), ro.seed)?)))
        }
        Command::Strong { f, opts } => {
            let (sp, w) = env.weak(f)?;
            let v = match is_strongly_holomorphic(sp, w, bound_of(opts))? {
                StrongVerdict::Yes(h) => json!({ "verdict": "yes", "witness": print_poly(&h, &ambient_vars(sp.ambient_dim)) }),
                StrongVerdict::NoUpToBound { bound, exact } => json!({ "verdict": "no_up_to_bound", "bound": bound, "exact": exact }),
                StrongVerdict::Unknown(why) => json!({ "verdict": "unknown", "reason": why }),
            };
            Ok((Outcome::Ok, v))
        }
        Command::Pl { fs } => {
            let (sp, ws) = env.tuple(fs)?;
            let c = pl_cycle(sp, &ws, ro.seed)?;
            let mut v = to_value(&c);
            v["betas"] = json!(c.betas());
            Ok((Outcome::Ok, v))
        }
        Command::Bm { fs, grade, part, form, opts } => {
            let (sp, ws) = env.tuple(fs)?;
            let charts = prepare(sp, &BMSpec::new(ws)?)?;
            let phi = to_form(form, &ambient_vars(sp.ambient_dim))?;
            let part = if *part == BmPart::R { Part::R } else { Part::U };
            let vals = bm_pairing(sp, &charts, &phi, *grade, part, params(tol_of(opts)))?;
            Ok((Outcome::Ok, json!({ "values": vals })))
        }
        Command::Check { kind, opts } => check(env, kind, opts, tol_of(opts), bound_of(opts)),
    }
}

fn check(env: &Env, kind: &CheckKind, opts: &Options, tol: f64, bound: u32) -> Result<(Outcome, Value)> {
    match kind {
        CheckKind::Leibniz { fs, res } => {
            let (sp, ws) = env.tuple(fs)?;
            Ok(exact(check_leibniz(sp, &CHSpec::new(ws, *res)?, bound)?))
        }
        CheckKind::Commute { fs, res, perm } => {
            let (sp, ws) = env.tuple(fs)?;
            let perm: Vec<usize> = perm.iter().map(|i| i - 1).collect();
            Ok(exact(check_commutation(sp, &CHSpec::new(ws, *res)?, &perm, bound)?))
        }
        CheckKind::Annihilate { fs, res, factor } => {
            let (sp, ws) = env.tuple(fs)?;
            Ok(exact(check_annihilation(sp, &CHSpec::new(ws, *res)?, factor - 1, bound)?))
        }
        CheckKind::Transform { f, g, matrix } => {
            let (sp, fw) = env.tuple(f)?;
            let (_, gw) = env.tuple(g)?;
            let a = matrix
                .iter()
                .map(|row| row.iter().map(|e| uniform_weak(sp, e)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok(exact(transformation_check(sp, &fw, &gw, &a, bound)?))
        }
        CheckKind::Vanish { current } => {
            let (sp, t) = env.current(current)?;
            Ok(exact(compare_report("vanish", (sp, t), (sp, &ChartCurrents::zero(sp)), bound)?))
        }
        CheckKind::Nonvanish { current } => {
            let (sp, t) = env.current(current)?;
            Ok(match compare_on_z((sp, t), (sp, &ChartCurrents::zero(sp)), bound)? {
                Comparison::Differ { witness, lhs, .. } => (
                    Outcome::Pass,
                    json!({ "check": "nonvanish", "bound": bound, "witnesses": [{ "testform": witness.display(), "value": lhs.to_string() }] }),
                ),
                Comparison::EqualUpToBound { checked, .. } => (
                    Outcome::Fail,
                    json!({ "check": "nonvanish", "bound": bound, "reason": format!("all {checked} pairings vanish") }),
                ),
            })
        }
        CheckKind::Bmch { fs } => {
            let (sp, ws) = env.tuple(fs)?;
            Ok(numeric(bm_vs_ch(sp, &ws, bound, tol, params(tol))?))
        }
        CheckKind::Findep { fs, first, second } => {
            let (sp, ws) = env.tuple(fs)?;
            let (_, a) = env.tuple(first)?;
            let (_, b) = env.tuple(second)?;
            let forms = limited(ambient_test_forms(sp.ambient_dim, bound, &grade_bidegrees(sp, ws.len())), opts.limit);
            Ok(numeric(f_independence_check(sp, &ws, &a, &b, &forms, tol, params(tol))?))
        }
        CheckKind::Taylor { fs } => {
            let (sp, ws) = env.tuple(fs)?;
            let forms = limited(ambient_test_forms(sp.ambient_dim, bound, &grade_bidegrees(sp, ws.len())), opts.limit);
            let p = params(tol);
            let mut r = taylor_order_check(sp, &BMSpec::new(ws)?, &forms, Part::R, p)?;
            if r.passed() && r.max_deviation > tol {
                r.status = Status::Fail;
                r.reason = Some(format!("orders differ by more than tol {tol:e}"));
            }
            Ok(numeric(r))
        }
        CheckKind::Nabla { fs } => {
            let (sp, ws) = env.tuple(fs)?;
            let k = sp.charts[0].arity();
            let forms = limited(ambient_test_forms(sp.ambient_dim, bound, &[(k, k)]), opts.limit);
            Ok(numeric(scalar_nabla_check(sp, &BMSpec::new(ws)?, &forms, tol, params(tol))?))
        }
        CheckKind::Intrinsic { fs, forms } => {
            let (sp, ws) = env.tuple(fs)?;
            let vars = ambient_vars(sp.ambient_dim);
            let phis = forms.iter().map(|e| to_form(e, &vars)).collect::<Result<Vec<Form>>>()?;
            Ok(numeric(intrinsic_check(sp, &ws, &phis, tol, params(tol))?))
        }
    }
}

fn located(span: Span, st: &StmtKind) -> CommandReport {
    CommandReport {
        line: span.line,
        col: span.col,
        statement: st.to_string(),
        outcome: Outcome::Ok,
        error: None,
        result: Value::Null,
    }
}

/// Execute a checked session.
pub fn run(session: &Session, ro: &RunOptions) -> SessionReport {
    let mut env = Env::default();
    let mut commands = Vec::new();
    let mut summary = Summary::default();
    let mut stopped_early = false;
    for st in &session.stmts {
        let mut rep = located(st.span, &st.kind);
        let is_check = matches!(&st.kind, StmtKind::Command(c) if c.is_check());
        let res = match &st.kind {
            StmtKind::Command(cmd) => guarded(|| execute(&env, cmd, ro)),
            other => match guarded(|| define(&mut env, other).map(|_| (Outcome::Ok, Value::Null))) {
                // Definitions only appear in the report when they fail.
                Ok(_) => continue,
                Err(e) => Err(e),
            },
        };
        match res {
            Ok((outcome, value)) => {
                rep.outcome = outcome;
                rep.result = value;
            }
            Err(msg) => {
                rep.outcome = Outcome::Error;
                rep.error = Some(msg);
            }
        }
        summary.commands += 1;
        if is_check {
            summary.checks += 1;
        }
        match rep.outcome {
            Outcome::Pass => summary.passed += 1,
            Outcome::Fail => summary.failed += 1,
            Outcome::Skipped => summary.skipped += 1,
            Outcome::Error => summary.errors += 1,
            Outcome::Ok => {}
        }
        let bad = !matches!(rep.outcome, Outcome::Ok | Outcome::Pass);
        commands.push(rep);
        if bad && ro.fail_fast {
            stopped_early = true;
            break;
        }
    }
    let internal = commands.iter().any(|c| c.error.as_deref().is_some_and(|e| e.starts_with(INTERNAL)));
    let exit_code = if internal {
        EXIT_INTERNAL
    } else if summary.failed + summary.skipped + summary.errors > 0 {
        EXIT_FAIL
    } else {
        EXIT_PASS
    };
    SessionReport { schema: SCHEMA, seed: ro.seed, commands, summary, exit_code, stopped_early }
}

const INTERNAL: &str = "internal error";

/// Run one statement; module errors and panics become messages.
fn guarded<T>(f: impl FnOnce() -> Result<T>) -> std::result::Result<T, String> {
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("{INTERNAL}: {msg}"))
        }
    }
}
