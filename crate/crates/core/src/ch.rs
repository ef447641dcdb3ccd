//! Coleff-Herrera products of weakly holomorphic tuples and checks of their identities.
//!
//! The product `1/f_m ... 1/f_{p+1} dbar(1/f_p) ^ ... ^ dbar(1/f_1)` is built chart by
//! chart from unit x monomial factorizations. Factors are processed in lambda order:
//! each residue factor is wedged on the left, principal values are applied after.

use crate::algebra::{BiPoly, GaussRat};
use crate::currents::{
    compare_on_z, dbar_wedge, pv_mul, weak_mul, ChartCurrents, Comparison, MonomialUnit, ResidueExpr,
};
use crate::error::{Error, Result};
use crate::space::{
    invert_polynomial_map, is_complete_intersection, CiVerdict, Pullback, SpacePresentation, WeakFunction,
};
use serde::Serialize;

pub const CI_GATE: &str = "complete intersection hypothesis fails";

/// Degree cap for polynomial inverses of coordinate changes.
const INVERSE_DEGREE: u32 = 12;

#[derive(Clone, Debug)]
pub struct CHSpec {
    pub fs: Vec<WeakFunction>,
    pub p: usize,
    /// Lambda order as a permutation of `0..m`; `None` is residues `0..p` then principal values.
    pub order: Option<Vec<usize>>,
}

impl CHSpec {
    pub fn new(fs: Vec<WeakFunction>, p: usize) -> Result<Self> {
        if p > fs.len() {
            return Err(Error::Argument(format!("split index {} exceeds tuple length {}", p, fs.len())));
        }
        Ok(CHSpec { fs, p, order: None })
    }

    pub fn with_order(mut self, order: Vec<usize>) -> Result<Self> {
        let mut sorted = order.clone();
        sorted.sort();
        if sorted != (0..self.fs.len()).collect::<Vec<_>>() {
            return Err(Error::Argument("order must be a permutation of the factor indices".into()));
        }
        self.order = Some(order);
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.fs.len()
    }

    pub fn processing_order(&self) -> Vec<usize> {
        self.order.clone().unwrap_or_else(|| (0..self.m()).collect())
    }

    /// Sign relating this order's wedge of residue factors to `dbar(1/f_p) ^ ... ^ dbar(1/f_1)`.
    pub fn residue_sign(&self) -> i32 {
        let r: Vec<usize> = self.processing_order().into_iter().filter(|&i| i < self.p).collect();
        let inversions = (0..r.len()).flat_map(|a| (a + 1..r.len()).map(move |b| (a, b))).filter(|&(a, b)| r[a] > r[b]).count();
        if inversions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn residue_part(&self) -> &[WeakFunction] {
        &self.fs[..self.p]
    }
}

fn factors(spec: &CHSpec, chart: usize) -> Result<Vec<MonomialUnit>> {
    spec.fs
        .iter()
        .enumerate()
        .map(|(i, f)| {
            MonomialUnit::from_pullback(&f.pullbacks[chart])
                .map_err(|e| Error::Factorization(format!("f{} on chart {}: {}", i + 1, chart + 1, e)))
        })
        .collect()
}

/// Product over `steps` in order; `true` means a residue factor.
fn product_on_chart(k: usize, fs: &[MonomialUnit], steps: &[(usize, bool)]) -> Result<ResidueExpr> {
    let mut acc = ResidueExpr::one(k);
    for &(i, residue) in steps {
        acc = if residue { dbar_wedge(&fs[i], &acc)? } else { pv_mul(&fs[i], &acc)? };
    }
    Ok(acc)
}

fn product(space: &SpacePresentation, spec: &CHSpec, steps: &[(usize, bool)]) -> Result<ChartCurrents> {
    let exprs = (0..space.charts.len())
        .map(|c| product_on_chart(space.charts[c].arity(), &factors(spec, c)?, steps))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChartCurrents { exprs, canonical: false })
}

/// The canonical upstairs representative of the CH product.
pub fn ch_product(space: &SpacePresentation, spec: &CHSpec) -> Result<ChartCurrents> {
    let steps: Vec<(usize, bool)> = match &spec.order {
        Some(o) => o.iter().map(|&i| (i, i < spec.p)).collect(),
        None => (0..spec.m()).map(|i| (i, i < spec.p)).collect(),
    };
    let mut cur = product(space, spec, &steps)?;
    cur.canonical = true;
    Ok(cur)
}

/// `1/f_m ... dbar(1/f_j) ... 1/f_{p+1} dbar(1/f_p) ^ ... ^ dbar(1/f_1)` in index lambda order.
pub fn mixed_product(space: &SpacePresentation, spec: &CHSpec, j: usize) -> Result<ChartCurrents> {
    let steps: Vec<(usize, bool)> = (0..spec.m()).map(|i| (i, i < spec.p || i == j)).collect();
    product(space, spec, &steps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub testform: String,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<u32>,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl Report {
    fn new(check: &str, status: Status) -> Self {
        Report { check: check.into(), status, reason: None, bound: None, witnesses: vec![], notes: vec![] }
    }

    fn skipped(check: &str, reason: &str) -> Self {
        Report { reason: Some(reason.into()), ..Report::new(check, Status::Skipped) }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Combine sub-reports: fail if any fails, skipped only if all are skipped.
    fn merge(check: &str, parts: Vec<Report>) -> Report {
        let status = if parts.iter().any(|r| r.status == Status::Fail) {
            Status::Fail
        } else if !parts.is_empty() && parts.iter().all(|r| r.status == Status::Skipped) {
            Status::Skipped
        } else {
            Status::Pass
        };
        let mut out = Report::new(check, status);
        for r in parts {
            if out.reason.is_none() && r.status != Status::Pass {
                out.reason = r.reason.clone();
            }
            out.bound = out.bound.or(r.bound);
            out.witnesses.extend(r.witnesses);
            out.notes.push(format!("{}: {:?}", r.check, r.status).to_lowercase());
            out.notes.extend(r.notes);
        }
        out
    }
}

/// Symbolic comparison on identical charts, else pairing against ambient test forms.
pub fn compare_report(
    check: &str,
    lhs: (&SpacePresentation, &ChartCurrents),
    rhs: (&SpacePresentation, &ChartCurrents),
    bound: u32,
) -> Result<Report> {
    match compare_on_z(lhs, rhs, bound) {
        Ok(Comparison::EqualUpToBound { bound, checked, symbolic }) => {
            let mut r = Report::new(check, Status::Pass);
            r.bound = Some(bound);
            r.notes.push(if symbolic {
                "normal forms agree".into()
            } else {
                format!("{checked} ambient test forms agree")
            });
            Ok(r)
        }
        Ok(Comparison::Differ { witness, lhs, rhs }) => {
            let mut r = Report::new(check, Status::Fail);
            r.bound = Some(bound);
            r.reason = Some("pairings differ".into());
            r.witnesses.push(Witness { testform: witness.display(), lhs: lhs.to_string(), rhs: rhs.to_string() });
            Ok(r)
        }
        Err(Error::NotExactlyEvaluable(msg)) => {
            let mut r = Report::new(check, Status::Fail);
            r.reason = Some(format!("normal forms differ and the difference is not exactly evaluable: {msg}"));
            Ok(r)
        }
        Err(e) => Err(e),
    }
}

/// Leibniz rule and support of the CH product.
pub fn check_leibniz(space: &SpacePresentation, spec: &CHSpec, bound: u32) -> Result<Report> {
    let ch = ch_product(space, spec)?;
    let lhs = ChartCurrents { exprs: ch.exprs.iter().map(ResidueExpr::dbar).collect(), canonical: false };
    let mut rhs = ChartCurrents::zero(space);
    for j in spec.p..spec.m() {
        let t = mixed_product(space, spec, j)?;
        rhs = ChartCurrents { exprs: rhs.exprs.iter().zip(&t.exprs).map(|(a, b)| a.add(b)).collect(), canonical: false };
    }
    let rule = compare_report("leibniz rule", (space, &lhs), (space, &rhs), bound)?;
    let support = check_support(space, spec, &ch)?;
    Ok(Report::merge("leibniz", vec![rule, support]))
}

/// Every term's residue locus lies in the chart zero set of `f_1..f_p`.
fn check_support(space: &SpacePresentation, spec: &CHSpec, ch: &ChartCurrents) -> Result<Report> {
    for (c, e) in ch.exprs.iter().enumerate() {
        for t in &e.terms {
            let r = t.residue_vars();
            for (i, f) in spec.residue_part().iter().enumerate() {
                let restricted = f.pullbacks[c].numerator().kill_vars(&r, true);
                if !restricted.is_zero() {
                    let mut rep = Report::new("support", Status::Fail);
                    rep.reason = Some(format!(
                        "chart {}: term {} has support where f{} does not vanish",
                        c + 1,
                        t.display(&space.charts[c].vars),
                        i + 1
                    ));
                    return Ok(rep);
                }
            }
        }
    }
    let mut rep = Report::new("support", Status::Pass);
    rep.notes.push("residue loci lie in the zero set of the residue factors".into());
    Ok(rep)
}

/// Hypotheses for commuting factors: `(f_1..f_p)` and every `(f_1..f_p, f_i)` complete intersections.
pub fn ci_hypotheses(space: &SpacePresentation, spec: &CHSpec) -> Result<Option<String>> {
    let mut tuples = vec![spec.residue_part().to_vec()];
    for i in spec.p..spec.m() {
        let mut t = spec.residue_part().to_vec();
        t.push(spec.fs[i].clone());
        tuples.push(t);
    }
    for t in &tuples {
        if t.is_empty() {
            continue;
        }
        match is_complete_intersection(space, t)? {
            CiVerdict::CompleteIntersection => {}
            // An empty zero set leaves nothing to compare; treat as failing the gate.
            CiVerdict::NotCompleteIntersection | CiVerdict::EmptyZeroSet => return Ok(Some(CI_GATE.into())),
        }
    }
    Ok(None)
}

/// Compare the product in lambda order `perm` against `sign(perm on residues)` times the standard one.
pub fn check_commutation(space: &SpacePresentation, spec: &CHSpec, perm: &[usize], bound: u32) -> Result<Report> {
    if let Some(reason) = ci_hypotheses(space, spec)? {
        return Ok(Report::skipped("commutation", &reason));
    }
    let base = CHSpec { order: None, ..spec.clone() };
    let permuted = base.clone().with_order(perm.to_vec())?;
    let lhs = ch_product(space, &permuted)?;
    let sign = permuted.residue_sign();
    let rhs = ch_product(space, &base)?;
    let rhs = if sign < 0 { rhs.scale(&GaussRat::from_int(-1)) } else { rhs };
    let mut r = compare_report("commutation", (space, &lhs), (space, &rhs), bound)?;
    r.notes.push(format!("sign {sign}"));
    Ok(r)
}

/// `f_j T = 0` for residue factors, `f_k T` deletes the principal value factor otherwise.
pub fn check_annihilation(space: &SpacePresentation, spec: &CHSpec, j: usize, bound: u32) -> Result<Report> {
    if j >= spec.m() {
        return Err(Error::Argument(format!("factor index {} out of range", j + 1)));
    }
    if let Some(reason) = ci_hypotheses(space, spec)? {
        return Ok(Report::skipped("annihilation", &reason));
    }
    let ch = ch_product(space, spec)?;
    let lhs = weak_mul(&spec.fs[j], &ch)?;
    let rhs = if j < spec.p {
        ChartCurrents::zero(space)
    } else {
        let mut fs = spec.fs.clone();
        fs.remove(j);
        ch_product(space, &CHSpec::new(fs, spec.p)?)?
    };
    compare_report("annihilation", (space, &lhs), (space, &rhs), bound)
}

fn is_factorizable(pb: &Pullback) -> bool {
    MonomialUnit::from_pullback(pb).is_ok()
}

/// Per-chart coordinate changes making every `fs` pullback a monomial times a unit.
///
/// Non-factorizable components replace the matching coordinate; the map must invert polynomially.
pub fn monomializing_changes(space: &SpacePresentation, fs: &[WeakFunction]) -> Result<Vec<Vec<BiPoly>>> {
    let mut out = Vec::new();
    for (c, chart) in space.charts.iter().enumerate() {
        let k = chart.arity();
        let ids: Vec<BiPoly> = (0..k).map(|i| BiPoly::var(k, i)).collect();
        if fs.iter().all(|f| is_factorizable(&f.pullbacks[c])) {
            out.push(ids);
            continue;
        }
        if fs.len() > k {
            return Err(Error::Factorization("more factors than chart coordinates; monomialize first".into()));
        }
        let mut phi = ids.clone();
        for (i, f) in fs.iter().enumerate() {
            if !is_factorizable(&f.pullbacks[c]) {
                phi[i] = f.pullbacks[c]
                    .as_poly()
                    .cloned()
                    .ok_or_else(|| Error::Factorization("rational pullback without factorization".into()))?;
            }
        }
        let psi = invert_polynomial_map(&phi, INVERSE_DEGREE)
            .map_err(|e| Error::Factorization(format!("chart {}: no coordinate change found ({e}); monomialize first", c + 1)))?;
        if !fs.iter().all(|f| is_factorizable(&f.pullbacks[c].compose(&psi))) {
            return Err(Error::Factorization(format!("chart {}: coordinate change does not monomialize; monomialize first", c + 1)));
        }
        out.push(psi);
    }
    Ok(out)
}

/// Fraction `num / den` of chart functions for exact matrix arithmetic.
#[derive(Clone, Debug)]
struct Frac {
    num: BiPoly,
    den: BiPoly,
}

impl Frac {
    fn from_pullback(p: &Pullback) -> Frac {
        let k = p.arity();
        Frac { num: p.numerator().clone(), den: p.den_factors().iter().fold(BiPoly::one(k), |a, d| a.mul(d)) }
    }

    fn add(&self, o: &Frac) -> Frac {
        Frac { num: self.num.mul(&o.den).add(&o.num.mul(&self.den)), den: self.den.mul(&o.den) }
    }

    fn neg(&self) -> Frac {
        Frac { num: self.num.neg(), den: self.den.clone() }
    }

    fn mul(&self, o: &Frac) -> Frac {
        Frac { num: self.num.mul(&o.num), den: self.den.mul(&o.den) }
    }

    fn eq(&self, o: &Frac) -> bool {
        self.num.mul(&o.den) == o.num.mul(&self.den)
    }

    fn into_pullback(self) -> Pullback {
        Pullback::from_ratio(crate::algebra::text::Ratio { num: self.num, den: vec![self.den] })
    }
}

fn frac_det(m: &[Vec<Frac>], k: usize) -> Frac {
    let n = m.len();
    if n == 0 {
        return Frac { num: BiPoly::one(k), den: BiPoly::one(k) };
    }
    let mut acc = Frac { num: BiPoly::zero(k), den: BiPoly::one(k) };
    for j in 0..n {
        let minor: Vec<Vec<Frac>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = m[0][j].mul(&frac_det(&minor, k));
        acc = acc.add(&if j % 2 == 0 { term } else { term.neg() });
    }
    acc
}

/// Transformation law `mu^f = det(A) mu^g` for `g = A f`, both complete intersections with `p = m`.
pub fn transformation_check(
    space: &SpacePresentation,
    f: &[WeakFunction],
    g: &[WeakFunction],
    a: &[Vec<WeakFunction>],
    bound: u32,
) -> Result<Report> {
    let m = f.len();
    if g.len() != m || a.len() != m || a.iter().any(|r| r.len() != m) {
        return Err(Error::Argument(format!("need tuples of length {m} and an {m}x{m} matrix")));
    }
    let mut dets = Vec::new();
    for c in 0..space.charts.len() {
        let k = space.charts[c].arity();
        let af: Vec<Vec<Frac>> = a.iter().map(|r| r.iter().map(|x| Frac::from_pullback(&x.pullbacks[c])).collect()).collect();
        for i in 0..m {
            let mut s = Frac { num: BiPoly::zero(k), den: BiPoly::one(k) };
            for j in 0..m {
                s = s.add(&af[i][j].mul(&Frac::from_pullback(&f[j].pullbacks[c])));
            }
            if !s.eq(&Frac::from_pullback(&g[i].pullbacks[c])) {
                return Err(Error::Argument(format!("g{} != (A f){} on chart {}", i + 1, i + 1, c + 1)));
            }
        }
        dets.push(frac_det(&af, k).into_pullback());
    }
    for (name, t) in [("f", f), ("g", g)] {
        match is_complete_intersection(space, t)? {
            CiVerdict::CompleteIntersection => {}
            _ => {
                let mut r = Report::skipped("transformation", CI_GATE);
                r.notes.push(format!("{name} is not a complete intersection"));
                return Ok(r);
            }
        }
    }
    let psi_f = monomializing_changes(space, f)?;
    let space_f = space.compose(&psi_f)?;
    let f_t: Vec<WeakFunction> = f.iter().map(|x| x.compose(&psi_f)).collect();
    let mu_f = ch_product(&space_f, &CHSpec::new(f_t, m)?)?;

    let psi_g = monomializing_changes(space, g)?;
    let space_g = space.compose(&psi_g)?;
    let g_t: Vec<WeakFunction> = g.iter().map(|x| x.compose(&psi_g)).collect();
    let mu_g = ch_product(&space_g, &CHSpec::new(g_t, m)?)?;
    let det = WeakFunction { pullbacks: dets, ambient: None }.compose(&psi_g);
    let rhs = weak_mul(&det, &mu_g)?;
    compare_report("transformation", (&space_f, &mu_f), (&space_g, &rhs), bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::text::parse_poly;
    use crate::algebra::{Form, FormBasis, Scalar, ScalarSum};
    use crate::currents::evaluate;
    use crate::space::NormalizationChart;

    fn smooth(k: usize) -> SpacePresentation {
        SpacePresentation::single(NormalizationChart::with_default_vars((0..k).map(|i| BiPoly::var(k, i)).collect()).unwrap())
    }

    fn wf(space: &SpacePresentation, s: &str) -> WeakFunction {
        let v = &space.charts[0].vars;
        WeakFunction::from_polys(space, vec![parse_poly(s, v).unwrap()]).unwrap()
    }

    fn tuple(space: &SpacePresentation, fs: &[&str]) -> Vec<WeakFunction> {
        fs.iter().map(|s| wf(space, s)).collect()
    }

    #[test]
    fn smooth_pair_pairing() {
        let sp = smooth(2);
        let ch = ch_product(&sp, &CHSpec::new(tuple(&sp, &["t1", "t2"]), 2).unwrap()).unwrap();
        let test = Form::basis(2, FormBasis::new(vec![0, 1], vec![]), BiPoly::one(2));
        let v = evaluate(&ch.exprs[0], &test).unwrap();
        assert_eq!(v, ScalarSum::from_scalar(&Scalar::tau_pow(2)));
    }

    #[test]
    fn leibniz_mixed() {
        let sp = smooth(2);
        let spec = CHSpec::new(tuple(&sp, &["t1", "t2"]), 1).unwrap();
        assert!(check_leibniz(&sp, &spec, 4).unwrap().passed());
        let closed = CHSpec::new(tuple(&sp, &["t1", "t2"]), 2).unwrap();
        let ch = ch_product(&sp, &closed).unwrap();
        assert!(ch.exprs[0].dbar().is_zero());
    }

    #[test]
    fn commutation_swap_and_gate() {
        let sp = smooth(2);
        let spec = CHSpec::new(tuple(&sp, &["t1", "t2"]), 2).unwrap();
        let r = check_commutation(&sp, &spec, &[1, 0], 4).unwrap();
        assert!(r.passed(), "{r:?}");
        let pv = CHSpec::new(tuple(&sp, &["t1", "t2"]), 1).unwrap();
        assert!(check_commutation(&sp, &pv, &[1, 0], 4).unwrap().passed());
        let bad = CHSpec::new(tuple(&sp, &["t1", "t1"]), 2).unwrap();
        let r = check_commutation(&sp, &bad, &[1, 0], 4).unwrap();
        assert_eq!(r.status, Status::Skipped);
        assert_eq!(r.reason.as_deref(), Some(CI_GATE));
    }

    #[test]
    fn annihilation() {
        let sp = smooth(2);
        let spec = CHSpec::new(tuple(&sp, &["t1", "t2"]), 1).unwrap();
        assert!(check_annihilation(&sp, &spec, 0, 4).unwrap().passed());
        assert!(check_annihilation(&sp, &spec, 1, 4).unwrap().passed());
    }

    #[test]
    fn transformation_unipotent() {
        let sp = smooth(2);
        let f = tuple(&sp, &["t1", "t2"]);
        let g = tuple(&sp, &["t1", "t1^2 + t2"]);
        let a = vec![tuple(&sp, &["1", "0"]), tuple(&sp, &["t1", "1"])];
        let r = transformation_check(&sp, &f, &g, &a, 4).unwrap();
        assert!(r.passed(), "{r:?}");
        let wrong = tuple(&sp, &["t1", "t1^2 + 2*t2"]);
        assert!(transformation_check(&sp, &f, &wrong, &a, 4).is_err());
    }

    #[test]
    fn transformation_gated_when_not_ci() {
        let sp = smooth(2);
        let f = tuple(&sp, &["t1", "t2"]);
        let g = tuple(&sp, &["t1", "t1*t2"]);
        let a = vec![tuple(&sp, &["1", "0"]), tuple(&sp, &["0", "t1"])];
        let r = transformation_check(&sp, &f, &g, &a, 4).unwrap();
        assert_eq!(r.status, Status::Skipped);
    }

    fn chart(vars: &[&str], map: &[&str]) -> SpacePresentation {
        let v: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let m = map.iter().map(|s| parse_poly(s, &v).unwrap()).collect();
        SpacePresentation::single(NormalizationChart::new(v, m).unwrap())
    }

    #[test]
    fn exmultcholo_n2() {
        let sp = chart(&["t1", "t2"], &["t1", "t1^2*t2", "t2^2", "t2^5"]);
        let spec = CHSpec::new(tuple(&sp, &["t1", "t2^3"]), 2).unwrap();
        let s = ch_product(&sp, &spec).unwrap();
        let zero = ChartCurrents::zero(&sp);
        assert!(compare_report("s", (&sp, &s), (&sp, &zero), 6).unwrap().passed());
        let g = wf(&sp, "t2");
        let gs = weak_mul(&g, &s).unwrap();
        match compare_on_z((&sp, &gs), (&sp, &zero), 6).unwrap() {
            Comparison::Differ { lhs, .. } => {
                // magnitude 2 (2 pi i)^2; sign depends on the witness frame
                let v = lhs.as_scalar().unwrap();
                assert_eq!(v.tau_power, 2);
                assert!(v.value == GaussRat::from_int(2) || v.value == GaussRat::from_int(-2), "{v}");
            }
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn exchintrinsic_leibniz_and_annihilation() {
        let sp = chart(&["s", "t"], &["s^2", "s^3", "t"]);
        let spec = CHSpec::new(tuple(&sp, &["s^2", "(1+s)*t"]), 2).unwrap();
        assert!(check_leibniz(&sp, &spec, 4).unwrap().passed());
        assert!(check_annihilation(&sp, &spec, 1, 4).unwrap().passed());
        assert!(check_annihilation(&sp, &spec, 0, 4).unwrap().passed());
    }
}
