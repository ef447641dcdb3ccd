//! `R^f` and `U^f` paired with test forms, chart by chart.
//!
//! On a principalizing toric chart `f = s^m g` with some `g_l(0) != 0`, so
//! `sigma = s^(-m) sigma'` with `sigma' = sum conj(g_l) e_l / v`, `v = sum |g_l|^2`.
//! Then `sigma ^ (dbar sigma)^(q-1) = s^(-qm) Omega_q / v^(2q-1)` with `Omega_q` polynomial.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::continuation::{continue_at_zero, ContinuationIntegral, QuadParams};
use super::cutoff::ChartCutoff;
use super::quad::Estimate;
use super::sform::SForm;
use crate::algebra::form::sort_sign;
use crate::algebra::{BiPoly, Form, FormBasis};
use crate::space::{NormalizationChart, SpacePresentation, WeakFunction};
use crate::toric::{principalize_groups, ToricChart};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct BMSpec {
    pub fs: Vec<WeakFunction>,
    pub p: usize,
    /// Regularizing tuple `F`; `None` means `F = f`.
    pub regularizer: Option<Vec<WeakFunction>>,
}

impl BMSpec {
    pub fn new(fs: Vec<WeakFunction>) -> Result<Self> {
        let p = fs.len();
        if p == 0 || p > 2 {
            return Err(Error::Unsupported(format!("Bochner-Martinelli currents handle 1 or 2 functions, got {p}")));
        }
        Ok(BMSpec { fs, p, regularizer: None })
    }

    pub fn with_regularizer(mut self, f: Vec<WeakFunction>) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::Argument("the regularizing tuple is empty".into()));
        }
        self.regularizer = Some(f);
        Ok(self)
    }
}

/// One toric chart over one base chart, with the frame data of `u`.
#[derive(Clone, Debug)]
pub struct BmChart {
    pub base: usize,
    pub toric: ToricChart,
    pub map: Vec<BiPoly>,
    pub m: Vec<u32>,
    pub mu: Vec<u32>,
    pub v: BiPoly,
    /// `g_l = f_l / s^m`.
    pub g: Vec<BiPoly>,
    /// `Omega_q` for `q = 1..=p`, denominators `v^(2q - 1)`.
    pub omega: Vec<SForm>,
}

fn chart_polys(ws: &[WeakFunction], c: usize) -> Result<Vec<BiPoly>> {
    ws.iter()
        .map(|w| {
            w.pullbacks[c].as_poly().cloned().ok_or_else(|| {
                Error::Unsupported("Bochner-Martinelli evaluation needs polynomial chart pullbacks".into())
            })
        })
        .collect()
}

fn min_monomial(ms: &[Vec<i64>]) -> Result<Vec<u32>> {
    let k = ms[0].len();
    let m: Vec<i64> = (0..k).map(|i| ms.iter().map(|x| x[i]).min().unwrap_or(0)).collect();
    if !ms.iter().any(|x| *x == m) {
        return Err(Error::Resolution("tuple is not principal on a resolved chart".into()));
    }
    m.iter()
        .map(|&e| u32::try_from(e).map_err(|_| Error::Factorization("pole at a chart origin".into())))
        .collect()
}

/// `v = sum |g_l|^2` and `Omega_1..Omega_p`, with `Omega_q / v^(2q - 1) = sigma' ^ (dbar sigma')^(q - 1)`.
pub fn omega_stack(g: &[BiPoly], p: usize) -> (BiPoly, Vec<SForm>) {
    let k = g[0].arity();
    let v = g.iter().fold(BiPoly::zero(k), |acc, gl| acc.add(&gl.mul(&gl.conj())));
    let n1 = g.iter().enumerate().fold(SForm::zero(k), |acc, (l, gl)| acc.add(&SForm::frame(gl.conj(), l)));
    // dbar(N1 / v) = (v dbar N1 - dbar v ^ N1) / v^2
    let d1 = n1.dbar().mul_poly(&v).sub(&SForm::function(v.clone()).dbar().wedge(&n1));
    let mut omega = vec![n1];
    for _ in 1..p {
        let next = omega.last().expect("nonempty").wedge(&d1);
        omega.push(next);
    }
    (v, omega)
}

/// Resolve every base chart and precompute `Omega_q`.
pub fn prepare(space: &SpacePresentation, spec: &BMSpec) -> Result<Vec<BmChart>> {
    let mut out = Vec::new();
    for (c, chart) in space.charts.iter().enumerate() {
        let k = chart.arity();
        let f = chart_polys(&spec.fs, c)?;
        let big_f = match &spec.regularizer {
            Some(r) => chart_polys(r, c)?,
            None => f.clone(),
        };
        if f.iter().all(BiPoly::is_zero) {
            return Err(Error::Precondition(format!("f vanishes identically on chart {}", c + 1)));
        }
        if big_f.iter().any(BiPoly::is_zero) {
            return Err(Error::Precondition(format!(
                "the regularizing tuple contains a whole component on chart {}",
                c + 1
            )));
        }
        let atlas = principalize_groups(&[f.clone(), big_f.clone()], k)?;
        for (tc, fact) in atlas.charts.iter().zip(&atlas.factorizations) {
            let (ff, fbig) = fact.split_at(f.len());
            if ff.iter().chain(fbig).any(|u| !u.den.is_empty()) {
                return Err(Error::Unsupported("rational unit factors in Bochner-Martinelli data".into()));
            }
            let m = min_monomial(&ff.iter().map(|u| u.m.clone()).collect::<Vec<_>>())?;
            let mu = min_monomial(&fbig.iter().map(|u| u.m.clone()).collect::<Vec<_>>())?;
            if let Some(i) = (0..k).find(|&i| m[i] > 0 && mu[i] == 0) {
                return Err(Error::Precondition(format!(
                    "the regularizing tuple does not vanish where f does (chart {}, s{} = 0)",
                    c + 1,
                    i + 1
                )));
            }
            let g: Vec<BiPoly> = ff
                .iter()
                .map(|u| {
                    let shift: Vec<u32> = u.m.iter().zip(&m).map(|(&a, &b)| a as u32 - b).collect();
                    u.num.mul(&BiPoly::holo_monomial(&shift))
                })
                .collect();
            let (v, omega) = omega_stack(&g, spec.p);
            let map = chart.compose(&tc.map())?.map;
            out.push(BmChart { base: c, toric: tc.clone(), map, m, mu, v, g, omega });
        }
    }
    Ok(out)
}

/// Convert a frame-free super form back to an ordinary form.
pub(crate) fn to_form(s: &SForm, k: usize) -> Form {
    let mut f = Form::zero(k);
    for (codes, c) in s.plain_terms() {
        let holo: Vec<usize> = codes.iter().filter(|&&x| x % 2 == 1).map(|&x| x / 2).collect();
        let anti: Vec<usize> = codes.iter().filter(|&&x| x % 2 == 0).map(|&x| x / 2).collect();
        let seq: Vec<usize> = holo.iter().map(|&i| 2 * i + 1).chain(anti.iter().map(|&i| 2 * i)).collect();
        let (_, sign) = sort_sign(&seq).expect("distinct codes");
        let c = if sign < 0 { c.neg() } else { c.clone() };
        f.add_term(FormBasis::new(holo, anti), c);
    }
    f
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartValue {
    pub base_chart: usize,
    pub toric_chart: usize,
    pub value_re: f64,
    pub value_im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmValue {
    pub grade: usize,
    /// 1-based frame indices.
    pub frame: Vec<usize>,
    pub value_re: f64,
    pub value_im: f64,
    pub abs_error_estimate: f64,
    pub cutoff_dependent: bool,
    pub chart_breakdown: Vec<ChartValue>,
}

impl BmValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

/// Which current to pair: `R_q` or `U_q` (the latter continued from `|F|^(2 lambda) u_q`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    R,
    U,
}

/// Integrand data on one chart: numerator super form, pole monomial, power of `v`.
pub(crate) type ChartIntegrand<'a> = dyn Fn(&BmChart) -> (SForm, Vec<u32>, u32) + 'a;

/// Sum the continued chart integrals of `numerator ^ phi / (s^pole v^power)`, frame by frame.
pub(crate) fn assemble(
    space: &SpacePresentation,
    charts: &[BmChart],
    phi: &Form,
    grade: usize,
    dbar_weight: bool,
    data: &ChartIntegrand<'_>,
    params: QuadParams,
) -> Result<Vec<BmValue>> {
    if phi.arity() != space.ambient_dim {
        return Err(Error::Argument("test form lives in the wrong ambient dimension".into()));
    }
    let mut acc: BTreeMap<Vec<usize>, (Estimate, bool, Vec<ChartValue>)> = BTreeMap::new();
    let mut per_base = vec![0usize; space.charts.len()];
    for ch in charts {
        let idx = per_base[ch.base];
        per_base[ch.base] += 1;
        let k = ch.map[0].arity();
        let phic = phi.pullback(&ch.map);
        let (num, pole, power) = data(ch);
        for frame in num.frames() {
            let form = to_form(&num.frame_part(&frame).wedge_form_inside(&phic), k);
            let ci = ContinuationIntegral {
                weight: ch.mu.clone(),
                dbar_weight,
                pole: pole.clone(),
                form,
                den: ch.v.clone(),
                den_power: power,
                cutoff: ChartCutoff { matrix: ch.toric.matrix.clone() },
                params,
            };
            let r = continue_at_zero(&ci)?;
            let e = acc.entry(frame).or_insert((Estimate::default(), false, vec![]));
            e.0 = e.0.add(Estimate::new(r.value, r.error));
            e.1 |= r.cutoff_dependent;
            e.2.push(ChartValue {
                base_chart: ch.base + 1,
                toric_chart: idx + 1,
                value_re: r.value.re,
                value_im: r.value.im,
            });
        }
    }
    Ok(acc
        .into_iter()
        .map(|(frame, (est, cd, bd))| BmValue {
            grade,
            frame: frame.iter().map(|x| x + 1).collect(),
            value_re: est.value.re,
            value_im: est.value.im,
            abs_error_estimate: est.error,
            cutoff_dependent: cd,
            chart_breakdown: bd,
        })
        .collect())
}

/// Pair the grade-`q` part of `R^f` (or `U^f`) with an ambient test form.
pub fn bm_pairing(
    space: &SpacePresentation,
    charts: &[BmChart],
    phi: &Form,
    q: usize,
    part: Part,
    params: QuadParams,
) -> Result<Vec<BmValue>> {
    if let Some(ch) = charts.iter().find(|ch| q == 0 || q > ch.omega.len()) {
        return Err(Error::Argument(format!("grade {q} is outside 1..={}", ch.omega.len())));
    }
    let data = |ch: &BmChart| (ch.omega[q - 1].clone(), ch.m.iter().map(|&x| x * q as u32).collect(), 2 * q as u32 - 1);
    assemble(space, charts, phi, q, part == Part::R, &data, params)
}

/// Value on one frame multi-index (0-based), zero if absent.
pub fn frame_value(values: &[BmValue], frame: &[usize]) -> Complex64 {
    let want: Vec<usize> = frame.iter().map(|x| x + 1).collect();
    values.iter().find(|v| v.frame == want).map(BmValue::value).unwrap_or_default()
}

/// The base chart as a one-chart space, for diagnostics in base coordinates.
pub fn base_space(chart: &NormalizationChart) -> SpacePresentation {
    SpacePresentation::single(chart.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::text::parse_poly;
    use std::f64::consts::PI;

    pub(crate) fn chart(vars: &[&str], map: &[&str]) -> SpacePresentation {
        let v: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let m = map.iter().map(|s| parse_poly(s, &v).unwrap()).collect();
        SpacePresentation::single(NormalizationChart::new(v, m).unwrap())
    }

    pub(crate) fn tuple(sp: &SpacePresentation, fs: &[&str]) -> Vec<WeakFunction> {
        let v = &sp.charts[0].vars;
        fs.iter().map(|s| WeakFunction::from_polys(sp, vec![parse_poly(s, v).unwrap()]).unwrap()).collect()
    }

    fn form(n: usize, coeff: &str, holo: Vec<usize>) -> Form {
        let v: Vec<String> = (1..=n).map(|i| format!("z{i}")).collect();
        Form::basis(n, FormBasis::new(holo, vec![]), parse_poly(coeff, &v).unwrap())
    }

    #[test]
    fn smooth_pair_top_grade() {
        let sp = chart(&["t1", "t2"], &["t1", "t2"]);
        let charts = prepare(&sp, &BMSpec::new(tuple(&sp, &["t1", "t2"])).unwrap()).unwrap();
        let v = bm_pairing(&sp, &charts, &form(2, "1", vec![0, 1]), 2, Part::R, QuadParams::default()).unwrap();
        let tau2 = Complex64::new(0.0, 2.0 * PI).powi(2);
        eprintln!("{v:?}");
        assert!((frame_value(&v, &[0, 1]) - tau2).norm() < 1e-6);
    }
}
