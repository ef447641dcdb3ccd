//! Numeric checks: BM against CH, independence of `F` and of the Taylor order, the scalar
//! consequence of `R = 1 - nabla_f U`, and the intrinsic formula on single-chart spaces.

use num_complex::Complex64;
use serde::Serialize;

use super::continuation::{density, NPoly, QuadParams};
use super::cutoff::{bump, bump_d, ChartCutoff};
use super::pairing::{assemble, bm_pairing, frame_value, omega_stack, prepare, to_form, BMSpec, BmChart, Part};
use super::quad::{disc, disc_try, Estimate, Tolerance};
use crate::algebra::{BiPoly, Form};
use crate::ch::{ch_product, CHSpec, Status, CI_GATE};
use crate::currents::{ambient_test_forms, pair_batch, AmbientTestForm};
use crate::space::{is_complete_intersection, CiVerdict, SpacePresentation, WeakFunction};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericWitness {
    pub testform: String,
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericReport {
    pub check: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<NumericWitness>,
    pub notes: Vec<String>,
}

impl NumericReport {
    fn start(check: &str, tolerance: f64) -> Self {
        NumericReport {
            check: check.into(),
            status: Status::Pass,
            reason: None,
            tolerance,
            max_deviation: 0.0,
            checked: 0,
            worst: None,
            notes: vec![],
        }
    }

    fn skipped(check: &str, tolerance: f64, reason: &str) -> Self {
        NumericReport { status: Status::Skipped, reason: Some(reason.into()), ..NumericReport::start(check, tolerance) }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Record one comparison; `allowed` overrides the report tolerance when given.
    fn record(&mut self, testform: String, lhs: Complex64, rhs: Complex64, allowed: Option<f64>) {
        let dev = (lhs - rhs).norm();
        self.checked += 1;
        if dev > self.max_deviation || self.worst.is_none() {
            self.max_deviation = self.max_deviation.max(dev);
            self.worst = Some(NumericWitness { testform, lhs_re: lhs.re, lhs_im: lhs.im, rhs_re: rhs.re, rhs_im: rhs.im });
        }
        if !(dev <= allowed.unwrap_or(self.tolerance)) {
            self.status = Status::Fail;
        }
    }
}

fn top_frame(p: usize) -> Vec<usize> {
    (0..p).collect()
}

/// Top-grade BM pairings against exact CH values on every ambient monomial test form up to `bound`.
pub fn bm_vs_ch(
    space: &SpacePresentation,
    fs: &[WeakFunction],
    bound: u32,
    tol: f64,
    params: QuadParams,
) -> Result<NumericReport> {
    const CHECK: &str = "bm_vs_ch";
    if is_complete_intersection(space, fs)? != CiVerdict::CompleteIntersection {
        return Ok(NumericReport::skipped(CHECK, tol, CI_GATE));
    }
    let p = fs.len();
    let ch = ch_product(space, &CHSpec::new(fs.to_vec(), p)?)?;
    let forms = ambient_test_forms(space.ambient_dim, bound, &ch.needed_bidegrees());
    let exact = pair_batch(space, &ch, &forms, bound)?;
    let charts = prepare(space, &BMSpec::new(fs.to_vec())?)?;
    let mut rep = NumericReport::start(CHECK, tol);
    for (tf, ex) in forms.iter().zip(&exact) {
        let v = bm_pairing(space, &charts, &tf.to_form(), p, Part::R, params)?;
        rep.record(tf.display(), frame_value(&v, &top_frame(p)), ex.to_c64(), None);
    }
    rep.notes.push(format!("{} test forms up to degree {bound}, {} toric charts", forms.len(), charts.len()));
    Ok(rep)
}

/// `R^f` computed with two regularizing tuples, every grade and frame.
pub fn f_independence_check(
    space: &SpacePresentation,
    fs: &[WeakFunction],
    f1: &[WeakFunction],
    f2: &[WeakFunction],
    forms: &[AmbientTestForm],
    tol: f64,
    params: QuadParams,
) -> Result<NumericReport> {
    let spec1 = BMSpec::new(fs.to_vec())?.with_regularizer(f1.to_vec())?;
    let spec2 = BMSpec::new(fs.to_vec())?.with_regularizer(f2.to_vec())?;
    let (c1, c2) = (prepare(space, &spec1)?, prepare(space, &spec2)?);
    let mut rep = NumericReport::start("f_independence", tol);
    for tf in forms {
        let phi = tf.to_form();
        for q in 1..=fs.len() {
            let a = bm_pairing(space, &c1, &phi, q, Part::R, params)?;
            let b = bm_pairing(space, &c2, &phi, q, Part::R, params)?;
            let mut frames: Vec<Vec<usize>> = a.iter().chain(&b).map(|v| v.frame.iter().map(|x| x - 1).collect()).collect();
            frames.sort();
            frames.dedup();
            for fr in frames {
                rep.record(format!("{} grade {q} frame {fr:?}", tf.display()), frame_value(&a, &fr), frame_value(&b, &fr), None);
            }
        }
    }
    Ok(rep)
}

/// Results at Taylor orders `N` and `N + 2` agree within twice the quadrature tolerance.
pub fn taylor_order_check(
    space: &SpacePresentation,
    spec: &BMSpec,
    forms: &[AmbientTestForm],
    part: Part,
    params: QuadParams,
) -> Result<NumericReport> {
    let charts = prepare(space, spec)?;
    let hi = QuadParams { taylor_extra: params.taylor_extra + 2, ..params };
    let Tolerance { rel, abs } = params.tol;
    let mut rep = NumericReport::start("taylor_order", 2.0 * abs.max(rel));
    for tf in forms {
        let phi = tf.to_form();
        for q in 1..=spec.p {
            let a = bm_pairing(space, &charts, &phi, q, part, params)?;
            let b = bm_pairing(space, &charts, &phi, q, part, hi)?;
            for v in &a {
                let fr: Vec<usize> = v.frame.iter().map(|x| x - 1).collect();
                let w = frame_value(&b, &fr);
                let allowed = 2.0 * abs.max(rel * v.value().norm());
                rep.record(format!("{} grade {q} frame {fr:?}", tf.display()), v.value(), w, Some(allowed));
            }
        }
    }
    Ok(rep)
}

/// `int c chi dA` for a top-degree form on a base chart with the product cutoff, by separation.
fn plain_integral(form: &Form) -> Result<Complex64> {
    let k = form.arity();
    let c = density(form, None);
    let cut = ChartCutoff::identity(k);
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, coef) in c.terms() {
        let (h, a) = (m.holo(), m.anti());
        if h != a {
            continue;
        }
        let mut w = coef.to_c64();
        for (j, &e) in h.iter().enumerate() {
            w *= 2.0 * std::f64::consts::PI * cut.moment(j, 2 * e + 1)?;
        }
        acc += w;
    }
    Ok(acc)
}

/// Grade-zero part of `R = 1 - nabla_f U`: `<delta_f U_1, phi> = <1, phi>` for top-degree `phi`.
pub fn scalar_nabla_check(
    space: &SpacePresentation,
    spec: &BMSpec,
    forms: &[AmbientTestForm],
    tol: f64,
    params: QuadParams,
) -> Result<NumericReport> {
    let charts = prepare(space, spec)?;
    let k = space.charts[0].arity();
    if space.charts.iter().any(|c| c.arity() != k) {
        return Err(Error::Unsupported("charts of different dimensions".into()));
    }
    let mut rep = NumericReport::start("scalar_nabla", tol);
    // f_l sigma_l = g_l conj(g_l) / v: the pole cancels.
    let data = |ch: &BmChart| (ch.omega[0].contract(&ch.g), vec![0; ch.m.len()], 1);
    for tf in forms {
        if tf.holo.len() != k || tf.anti.len() != k {
            return Err(Error::Argument(format!("scalar check needs ({k}, {k}) test forms")));
        }
        let phi = tf.to_form();
        let lhs = assemble(space, &charts, &phi, 0, false, &data, params)?;
        let lhs = frame_value(&lhs, &[]);
        let mut rhs = Complex64::new(0.0, 0.0);
        for chart in &space.charts {
            rhs += plain_integral(&phi.pullback(&chart.map))?;
        }
        rep.record(tf.display(), lhs, rhs, None);
    }
    Ok(rep)
}

/// `<R_p, psi chi> = int u_p ^ psi ^ dbar chi` for holomorphic `psi`: the right side only sees
/// the annulus where `dbar chi != 0`, away from `Z`, and is a plain integral in base coordinates.
pub fn intrinsic_pairing(space: &SpacePresentation, fs: &[WeakFunction], phi: &Form, tol: Tolerance) -> Result<Estimate> {
    if space.charts.len() != 1 {
        return Err(Error::Unsupported("the intrinsic formula is evaluated on single-chart presentations only".into()));
    }
    let chart = &space.charts[0];
    let k = chart.arity();
    if k > 2 {
        return Err(Error::Unsupported(format!("chart dimension {k} exceeds 2")));
    }
    let psi = phi.pullback(&chart.map);
    if psi.terms().any(|(b, c)| !b.anti.is_empty() || !c.is_holomorphic()) {
        return Err(Error::Precondition("the intrinsic comparison needs a holomorphic test form".into()));
    }
    let g = fs
        .iter()
        .map(|w| w.poly(0).cloned())
        .collect::<Result<Vec<BiPoly>>>()?;
    let p = g.len();
    let (v, omega) = omega_stack(&g, p);
    let body = to_form(&omega[p - 1].frame_part(&top_frame(p)).wedge_form_inside(&psi), k);
    let dens: Vec<NPoly> = (0..k)
        .map(|l| Ok(NPoly::new(&density(&body.wedge(&Form::differential(k, l, true))?, None))))
        .collect::<Result<_>>()?;
    let vn = NPoly::new(&v);
    let power = 2 * p as i32 - 1;
    let integrand = |t: &[Complex64]| -> Complex64 {
        let r: Vec<f64> = t.iter().map(|z| z.norm()).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..k {
            let d = bump_d(r[l]);
            if d == 0.0 {
                continue;
            }
            // dbar bump(|t_l|) = bump'(|t_l|) t_l / (2 |t_l|) dbar t_l
            let mut w = t[l] * (d / (2.0 * r[l]));
            for (m, &rm) in r.iter().enumerate() {
                if m != l {
                    w *= bump(rm);
                }
            }
            acc += dens[l].eval(t) * w;
        }
        if acc == Complex64::new(0.0, 0.0) {
            return acc;
        }
        acc / vn.eval(t).powi(power)
    };
    if k == 1 {
        return disc(&|z| integrand(&[z]), &[0.5], tol);
    }
    let inner = Tolerance { rel: tol.rel * 0.1, abs: tol.abs * 0.1 };
    disc_try(&|z1| disc(&|z2| integrand(&[z1, z2]), &[0.5], inner), &[0.5], tol)
}

/// Direct top-grade `R` pairing against the intrinsic formula on holomorphic test forms.
pub fn intrinsic_check(
    space: &SpacePresentation,
    fs: &[WeakFunction],
    forms: &[Form],
    tol: f64,
    params: QuadParams,
) -> Result<NumericReport> {
    let charts = prepare(space, &BMSpec::new(fs.to_vec())?)?;
    let p = fs.len();
    let mut rep = NumericReport::start("intrinsic", tol);
    for (i, phi) in forms.iter().enumerate() {
        let direct = frame_value(&bm_pairing(space, &charts, phi, p, Part::R, params)?, &top_frame(p));
        let intr = intrinsic_pairing(space, fs, phi, params.tol)?;
        rep.record(format!("form {}", i + 1), direct, intr.value, None);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::text::parse_poly;
    use crate::algebra::FormBasis;
    use crate::space::NormalizationChart;
    use std::time::Instant;

    fn chart(vars: &[&str], map: &[&str]) -> SpacePresentation {
        let v: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let m = map.iter().map(|s| parse_poly(s, &v).unwrap()).collect();
        SpacePresentation::single(NormalizationChart::new(v, m).unwrap())
    }

    fn tuple(sp: &SpacePresentation, fs: &[&str]) -> Vec<WeakFunction> {
        let v = &sp.charts[0].vars;
        fs.iter().map(|s| WeakFunction::from_polys(sp, vec![parse_poly(s, v).unwrap()]).unwrap()).collect()
    }

    fn holo_form(n: usize, coeff: &str, holo: Vec<usize>) -> Form {
        let v: Vec<String> = (1..=n).map(|i| format!("z{i}")).collect();
        Form::basis(n, FormBasis::new(holo, vec![]), parse_poly(coeff, &v).unwrap())
    }

    #[test]
    fn bm_matches_ch_smooth() {
        let t = Instant::now();
        let sp = chart(&["t1", "t2"], &["t1", "t2"]);
        let r = bm_vs_ch(&sp, &tuple(&sp, &["t1", "t2"]), 3, 1e-6, QuadParams::default()).unwrap();
        eprintln!("{r:?} {:?}", t.elapsed());
        assert!(r.passed());
    }

    #[test]
    fn intrinsic_smooth() {
        let t = Instant::now();
        let sp = chart(&["t1", "t2"], &["t1", "t2"]);
        let r = intrinsic_check(&sp, &tuple(&sp, &["t1", "t2"]), &[holo_form(2, "1", vec![0, 1])], 1e-6, QuadParams::default()).unwrap();
        eprintln!("{r:?} {:?}", t.elapsed());
        assert!(r.passed());
    }

    #[test]
    fn bm_matches_ch_cusp_pair() {
        let sp = chart(&["t1", "t2"], &["t1", "t2"]);
        let r = bm_vs_ch(&sp, &tuple(&sp, &["t1^2", "t2^3"]), 4, 1e-6, QuadParams::default()).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.checked, 70);
    }

    #[test]
    fn bm_matches_ch_exchintrinsic() {
        let sp = chart(&["s", "t"], &["s^2", "s^3", "t"]);
        let fs = tuple(&sp, &["s^2", "(1+s)*t"]);
        let r = bm_vs_ch(&sp, &fs, 2, 1e-6, QuadParams::default()).unwrap();
        assert!(r.passed(), "{r:?}");
        // the adjudicated constant: dz1 ^ dz3 pulls back to 2s ds ^ dt
        let charts = prepare(&sp, &BMSpec::new(fs).unwrap()).unwrap();
        let v = bm_pairing(&sp, &charts, &holo_form(3, "1", vec![0, 2]), 2, Part::R, QuadParams::default()).unwrap();
        let tau2 = Complex64::new(0.0, 2.0 * std::f64::consts::PI).powi(2);
        assert!((frame_value(&v, &[0, 1]) - 2.0 * tau2).norm() < 1e-6);
    }

    #[test]
    fn not_ci_is_skipped() {
        let sp = chart(&["t1", "t2"], &["t1", "t2"]);
        let r = bm_vs_ch(&sp, &tuple(&sp, &["t1", "t1*t2"]), 2, 1e-6, QuadParams::default()).unwrap();
        assert_eq!(r.status, Status::Skipped);
    }

    fn few_forms(n: usize, bound: u32, bideg: (usize, usize), take: usize) -> Vec<AmbientTestForm> {
        ambient_test_forms(n, bound, &[bideg]).into_iter().take(take).collect()
    }

    #[test]
    fn regularizer_choices_agree() {
        let sp = chart(&["t1", "t2"], &["t1", "t2"]);
        let fs = tuple(&sp, &["t1", "t2"]);
        let forms = few_forms(2, 2, (2, 0), 6);
        let q = QuadParams::default();
        let r = f_independence_check(&sp, &fs, &fs, &tuple(&sp, &["t1*t2"]), &forms, 1e-6, q).unwrap();
        assert!(r.passed(), "{r:?}");
        let scaled = tuple(&sp, &["3*t1", "3*t2"]);
        let r = f_independence_check(&sp, &fs, &fs, &scaled, &forms, 0.0, q).unwrap();
        assert!(r.passed(), "{r:?}");
        let off = tuple(&sp, &["t1*(t2 - 3)", "t2"]);
        let r = f_independence_check(&sp, &fs, &fs, &off, &forms, 1e-6, q).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn regularizer_must_contain_the_zero_set() {
        let sp = chart(&["t1", "t2"], &["t1", "t2"]);
        let spec = BMSpec::new(tuple(&sp, &["t1", "t2"])).unwrap().with_regularizer(tuple(&sp, &["1 + t1"])).unwrap();
        assert!(matches!(prepare(&sp, &spec), Err(Error::Precondition(_))));
    }

    #[test]
    fn taylor_order_is_irrelevant() {
        let sp = chart(&["t1", "t2"], &["t1", "t2"]);
        let spec = BMSpec::new(tuple(&sp, &["t1^2", "t2"])).unwrap();
        let forms = few_forms(2, 2, (2, 0), 6);
        let r = taylor_order_check(&sp, &spec, &forms, Part::R, QuadParams::default()).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn scalar_grade_of_nabla_identity() {
        let sp = chart(&["t1", "t2"], &["t1", "t2"]);
        let spec = BMSpec::new(tuple(&sp, &["t1", "t2"])).unwrap();
        let forms = few_forms(2, 2, (2, 2), 5);
        let r = scalar_nabla_check(&sp, &spec, &forms, 1e-6, QuadParams::default()).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn intrinsic_golden_cases() {
        let q = QuadParams::default();
        let sp = chart(&["t1", "t2"], &["t1", "t2"]);
        let r = intrinsic_check(&sp, &tuple(&sp, &["t1^2", "t2"]), &[holo_form(2, "z1", vec![0, 1])], 1e-6, q).unwrap();
        assert!(r.passed(), "{r:?}");
        let sp = chart(&["s", "t"], &["s^2", "s^3", "t"]);
        let r = intrinsic_check(&sp, &tuple(&sp, &["s^2", "(1+s)*t"]), &[holo_form(3, "1", vec![0, 2])], 1e-6, q).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
