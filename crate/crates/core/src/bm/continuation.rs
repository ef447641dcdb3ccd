//! Continuation to `lambda = 0` of chart integrals by Taylor subtraction.
//!
//! The integrand is `[dbar] |s^w|^(2 lambda) s^(-a) form / den^d` times the pulled-back
//! cutoff, over the unit polydisc of a chart. `den` must not vanish at the origin.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::cutoff::ChartCutoff;
use super::quad::{disc, disc_try, integrate, Estimate, Tolerance};
use super::sform::SForm;
use crate::algebra::{BiPoly, Form, GaussRat, Mono};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadParams {
    /// Taylor order is `pole + taylor_extra` in each subtracted variable.
    pub taylor_extra: u32,
    pub tol: Tolerance,
}

impl Default for QuadParams {
    fn default() -> Self {
        QuadParams { taylor_extra: 4, tol: Tolerance::default() }
    }
}

#[derive(Clone, Debug)]
pub struct ContinuationIntegral {
    pub weight: Vec<u32>,
    pub dbar_weight: bool,
    pub pole: Vec<u32>,
    pub form: Form,
    pub den: BiPoly,
    pub den_power: u32,
    pub cutoff: ChartCutoff,
    pub params: QuadParams,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Continued {
    pub value: Complex64,
    pub error: f64,
    /// Closed-form and reduced-dimension pieces.
    pub taylor_part: Complex64,
    /// Pieces integrated numerically at `lambda = 0` after subtraction.
    pub remainder: Complex64,
    /// The integrand meets the region where the cutoff is not identically one.
    pub cutoff_dependent: bool,
}

impl Continued {
    fn add(&mut self, taylor: Complex64, rem: Estimate) {
        self.taylor_part += taylor;
        self.remainder += rem.value;
        self.value += taylor + rem.value;
        self.error += rem.error;
    }
}

/// Float copy of a bi-polynomial for fast evaluation.
#[derive(Clone, Debug)]
pub(crate) struct NPoly {
    k: usize,
    terms: Vec<(Vec<u32>, Complex64)>,
}

impl NPoly {
    pub(crate) fn new(p: &BiPoly) -> Self {
        NPoly { k: p.arity(), terms: p.terms().map(|(m, c)| (m.0.clone(), c.to_c64())).collect() }
    }

    pub(crate) fn eval(&self, s: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut v = *c;
            for i in 0..self.k {
                if e[i] > 0 {
                    v *= s[i].powu(e[i]);
                }
                if e[self.k + i] > 0 {
                    v *= s[i].conj().powu(e[self.k + i]);
                }
            }
            acc += v;
        }
        acc
    }

    fn zero(k: usize) -> Self {
        NPoly { k, terms: Vec::new() }
    }

    /// `self += c * other`, without merging.
    fn axpy(&mut self, other: &NPoly, c: Complex64) {
        self.terms.extend(other.terms.iter().map(|(e, x)| (e.clone(), x * c)));
    }

    /// Substitute `s_j = z`, merging terms.
    fn fix(&self, j: usize, z: Complex64) -> NPoly {
        let mut out: Vec<(Vec<u32>, Complex64)> = Vec::new();
        for (e, c) in &self.terms {
            let v = *c * z.powu(e[j]) * z.conj().powu(e[self.k + j]);
            let mut e2 = e.clone();
            e2[j] = 0;
            e2[self.k + j] = 0;
            match out.iter_mut().find(|(f, _)| *f == e2) {
                Some((_, acc)) => *acc += v,
                None => out.push((e2, v)),
            }
        }
        NPoly { k: self.k, terms: out }
    }
}

/// `sum_t num_t / dens[idx_t]^pow_t`.
#[derive(Clone, Debug)]
struct RatSum {
    dens: Vec<NPoly>,
    terms: Vec<(NPoly, usize, i32)>,
}

impl RatSum {
    fn eval(&self, s: &[Complex64]) -> Complex64 {
        let dv: Vec<Complex64> = self.dens.iter().map(|d| d.eval(s)).collect();
        self.terms.iter().map(|(n, i, p)| n.eval(s) / dv[*i].powi(*p)).sum()
    }

    fn fix(&self, j: usize, z: Complex64) -> RatSum {
        RatSum {
            dens: self.dens.iter().map(|d| d.fix(j, z)).collect(),
            terms: self.terms.iter().map(|(n, i, p)| (n.fix(j, z), *i, *p)).collect(),
        }
    }

    fn single(den: &BiPoly, parts: &[(BiPoly, u32)]) -> RatSum {
        RatSum {
            dens: vec![NPoly::new(den)],
            terms: parts.iter().map(|(n, p)| (NPoly::new(n), 0, *p as i32)).collect(),
        }
    }
}

fn filter_terms(p: &BiPoly, keep: impl Fn(&Mono) -> bool) -> BiPoly {
    let mut r = BiPoly::zero(p.arity());
    for (m, c) in p.terms() {
        if keep(m) {
            r.add_term(m.clone(), c.clone());
        }
    }
    r
}

/// Drop terms of degree above `n` in `(s_i, conj s_i)`.
fn trunc_var(p: &BiPoly, i: usize, n: u32) -> BiPoly {
    let k = p.arity();
    filter_terms(p, |m| m.0[i] + m.0[k + i] <= n)
}

/// Coefficient of `s_i^al conj(s_i)^be`, as a polynomial in the other variables.
fn coeff_var(p: &BiPoly, i: usize, al: u32, be: u32) -> BiPoly {
    let k = p.arity();
    let mut r = BiPoly::zero(k);
    for (m, c) in p.terms() {
        if m.0[i] == al && m.0[k + i] == be {
            let mut m2 = m.clone();
            m2.0[i] = 0;
            m2.0[k + i] = 0;
            r.add_term(m2, c.clone());
        }
    }
    r
}

/// `(-1)^n binom(d + n - 1, n)`, the coefficient of `x^n` in `(1 + x)^(-d)`.
fn binom_neg(d: u32, n: u32) -> GaussRat {
    let mut c: i64 = 1;
    for j in 0..n as i64 {
        c = c * (d as i64 + j) / (j + 1);
    }
    GaussRat::from_int(if n % 2 == 0 { c } else { -c })
}

/// Taylor expansion of `num / den^d` in `(s_i, conj s_i)` to order `n`, other variables kept.
/// Returns `v0 = den(s_i = 0)` and parts `(N_j, d + j)` meaning `N_j / v0^(d + j)`.
fn partial_taylor(num: &BiPoly, den: &BiPoly, d: u32, i: usize, n: u32) -> (BiPoly, Vec<(BiPoly, u32)>) {
    let v0 = den.kill_vars(&[i], true);
    let w = den.sub(&v0);
    let mut wn = BiPoly::one(num.arity());
    let mut parts = Vec::new();
    for j in 0..=n {
        let t = trunc_var(&num.mul(&wn), i, n).scale(&binom_neg(d, j));
        if !t.is_zero() {
            parts.push((t, d + j));
        }
        wn = trunc_var(&wn.mul(&w), i, n);
        if wn.is_zero() {
            break;
        }
    }
    (v0, parts)
}

/// Joint Taylor polynomial of `num / den^d` to total degree `n`.
fn joint_taylor(num: &BiPoly, den: &BiPoly, d: u32, n: u32) -> Result<BiPoly> {
    let inv = den
        .series_inverse(n)
        .ok_or_else(|| Error::Precondition("denominator vanishes at the chart origin".into()))?;
    let mut acc = num.truncate_total(n);
    for _ in 0..d {
        acc = acc.mul(&inv).truncate_total(n);
    }
    Ok(acc)
}

/// `(2i)^k`: the top form `dbar s_1 ^ ds_1 ^ ...` is `(2i)^k` times Lebesgue measure.
fn orientation_factor(k: usize) -> GaussRat {
    (GaussRat::i() * GaussRat::from_int(2)).pow(k as u32)
}

/// Measure density of `[dbar s_i ^] form` in the canonical orientation.
pub(crate) fn density(form: &Form, left: Option<usize>) -> BiPoly {
    let k = form.arity();
    let mut s = SForm::from_form(form);
    if let Some(i) = left {
        s = s.dbar_var_left(i);
    }
    s.top(&[]).scale(&orientation_factor(k))
}

fn point(k: usize, j: usize, z: Complex64) -> Vec<Complex64> {
    let mut s = vec![Complex64::new(0.0, 0.0); k];
    s[j] = z;
    s
}

/// Principal value of `int_{|z| <= 1} z^(-a) h(z) dA` in slot `j` of a `k`-chart.
/// `taylor` is the Taylor polynomial of `h` at 0 (only slot `j` present); near 0,
/// `h` equals its smooth part times the cutoff profile of slot `j`, which is one there.
fn pv1(
    k: usize,
    j: usize,
    a: u32,
    h: &dyn Fn(Complex64) -> Complex64,
    taylor: &NPoly,
    cutoff: &ChartCutoff,
    tol: Tolerance,
) -> Result<(Complex64, Estimate)> {
    let mut closed = Complex64::new(0.0, 0.0);
    for (e, c) in &taylor.terms {
        let (al, be) = (e[j], e[k + j]);
        if al == a + be {
            closed += c * (2.0 * PI * cutoff.moment(j, 2 * be + 1)?);
        }
    }
    let t = taylor;
    let prof = cutoff.profile(j);
    let g = |z: Complex64| -> Complex64 {
        let r = z.norm();
        (h(z) - t.eval(&point(k, j, z)) * prof(r)) / z.powu(a)
    };
    let rem = disc(&g, &cutoff.breaks(j), tol)?;
    Ok((closed, rem))
}

pub fn continue_at_zero(ci: &ContinuationIntegral) -> Result<Continued> {
    let k = ci.weight.len();
    if k == 0 || k > 2 {
        return Err(Error::Unsupported(format!("continuation handles charts of dimension 1 or 2, got {k}")));
    }
    if ci.pole.len() != k || ci.form.arity() != k || ci.den.arity() != k || ci.cutoff.k() != k {
        return Err(Error::Argument("continuation data must share the chart dimension".into()));
    }
    if ci.den.constant_term().is_zero() {
        return Err(Error::Precondition("denominator vanishes at the chart origin".into()));
    }
    if let Some(i) = (0..k).find(|&i| ci.pole[i] > 0 && ci.weight[i] == 0) {
        return Err(Error::Precondition(format!(
            "the regularizing weight must vanish on the pole divisor s{} = 0",
            i + 1
        )));
    }
    let d = ci.den_power;
    let extra = ci.params.taylor_extra;
    let tol = ci.params.tol;
    let mut out = Continued::default();
    if ci.dbar_weight {
        // lambda |s^w|^(2 lambda) w_i dbar s_i / conj(s_i) leaves pi times the coefficient
        // of s_i^(a_i - 1) conj(s_i)^0 on s_i = 0; every other Taylor term is finite, times lambda.
        for i in 0..k {
            if ci.weight[i] == 0 || ci.pole[i] == 0 {
                continue;
            }
            let p = density(&ci.form, Some(i));
            if p.is_zero() {
                continue;
            }
            let ai = ci.pole[i];
            if k == 1 {
                let c = coeff_var(&joint_taylor(&p, &ci.den, d, ai - 1)?, 0, ai - 1, 0).constant_term();
                out.add(c.to_c64() * PI, Estimate::default());
                continue;
            }
            let j = 1 - i;
            let (v0, parts) = partial_taylor(&p, &ci.den, d, i, ai - 1);
            let parts: Vec<(BiPoly, u32)> = parts.iter().map(|(n, e)| (coeff_var(n, i, ai - 1, 0), *e)).collect();
            let hs = RatSum::single(&v0, &parts);
            let taylor = coeff_var(&joint_taylor(&p, &ci.den, d, ai - 1 + ci.pole[j] + extra)?, i, ai - 1, 0);
            let prof = ci.cutoff.profile(j);
            let h = |z: Complex64| hs.eval(&point(k, j, z)) * prof(z.norm());
            let (closed, rem) = pv1(k, j, ci.pole[j], &h, &NPoly::new(&taylor), &ci.cutoff, tol)?;
            out.cutoff_dependent |= !ci.cutoff.breaks(j).is_empty();
            out.add(closed * PI, rem.scale(Complex64::new(PI, 0.0)));
        }
        return Ok(out);
    }
    let p = density(&ci.form, None);
    if p.is_zero() {
        return Ok(out);
    }
    out.cutoff_dependent = true;
    if k == 1 {
        let a = ci.pole[0];
        let hs = RatSum::single(&ci.den, &[(p.clone(), d)]);
        let prof = ci.cutoff.profile(0);
        let h = |z: Complex64| hs.eval(&[z]) * prof(z.norm());
        let taylor = joint_taylor(&p, &ci.den, d, a + extra)?;
        let (closed, rem) = pv1(1, 0, a, &h, &NPoly::new(&taylor), &ci.cutoff, tol)?;
        out.add(closed, rem);
        return Ok(out);
    }
    pv2(&p, ci, &mut out)?;
    Ok(out)
}

/// Two-variable principal value: `A + B_1 + B_2 - D` with `T_j` the Taylor operator in slot `j`
/// (absent when `a_j = 0`). `A` integrates `(1 - T_1)(1 - T_2) H`, `B_j` integrates `T_j H`
/// (closed form in slot `j`, one-variable principal value in the other), `D` integrates `T_1 T_2 H`.
fn pv2(p: &BiPoly, ci: &ContinuationIntegral, out: &mut Continued) -> Result<()> {
    let k = 2;
    let a = &ci.pole;
    let d = ci.den_power;
    let extra = ci.params.taylor_extra;
    let tol = ci.params.tol;
    let n: Vec<u32> = a.iter().map(|&x| x + extra).collect();
    let active: Vec<bool> = a.iter().map(|&x| x > 0).collect();
    let h = RatSum::single(&ci.den, &[(p.clone(), d)]);
    let mut ts: Vec<Option<(BiPoly, Vec<(BiPoly, u32)>)>> = Vec::new();
    for j in 0..k {
        ts.push(if active[j] { Some(partial_taylor(p, &ci.den, d, j, n[j])) } else { None });
    }
    let tsum: Vec<Option<RatSum>> = ts.iter().map(|t| t.as_ref().map(|(v0, parts)| RatSum::single(v0, parts))).collect();
    let t12 = if active[0] && active[1] {
        let full = joint_taylor(p, &ci.den, d, n[0] + n[1])?;
        Some(filter_terms(&full, |m| m.0[0] + m.0[2] <= n[0] && m.0[1] + m.0[3] <= n[1]))
    } else {
        None
    };
    let t12n = t12.as_ref().map(NPoly::new);

    // A
    let outer = |z1: Complex64| -> Result<Estimate> {
        let hf = h.fix(0, z1);
        let t1f = tsum[0].as_ref().map(|t| t.fix(0, z1));
        let t2f = tsum[1].as_ref().map(|t| t.fix(0, z1));
        let t12f = t12n.as_ref().map(|t| t.fix(0, z1));
        let pole1 = z1.powu(a[0]);
        let r1 = z1.norm();
        let g = |z2: Complex64| -> Complex64 {
            let s = [Complex64::new(0.0, 0.0), z2];
            let mut v = hf.eval(&s);
            if let Some(t) = &t1f {
                v -= t.eval(&s);
            }
            if let Some(t) = &t2f {
                v -= t.eval(&s);
            }
            if let Some(t) = &t12f {
                v += t.eval(&s);
            }
            v * ci.cutoff.at_radii(&[r1, z2.norm()]) / (pole1 * z2.powu(a[1]))
        };
        disc(&g, &ci.cutoff.breaks_given(1, &[r1, 0.0]), tol)
    };
    let area = disc_try(&outer, &ci.cutoff.breaks(0), tol)?;
    out.add(Complex64::new(0.0, 0.0), area);

    // B_j
    for j in 0..k {
        let Some((v0, parts)) = &ts[j] else { continue };
        let o = 1 - j;
        let betas: Vec<u32> = (0..=n[j]).filter(|&be| a[j] + 2 * be <= n[j]).collect();
        let coefs: Vec<RatSum> = betas
            .iter()
            .map(|&be| {
                let ps: Vec<(BiPoly, u32)> = parts.iter().map(|(q, e)| (coeff_var(q, j, a[j] + be, be), *e)).collect();
                RatSum::single(v0, &ps)
            })
            .collect();
        let fail = std::cell::RefCell::new(None);
        let b = |z: Complex64| -> Complex64 {
            let s = point(k, o, z);
            let mut radii = [0.0; 2];
            radii[o] = z.norm();
            let mut acc = Complex64::new(0.0, 0.0);
            for (be, c) in betas.iter().zip(&coefs) {
                match ci.cutoff.moment_given(j, 2 * be + 1, &radii) {
                    Ok(m) => acc += c.eval(&s) * (2.0 * PI * m),
                    Err(e) => {
                        fail.borrow_mut().get_or_insert(e);
                    }
                }
            }
            acc
        };
        let full = joint_taylor(p, &ci.den, d, n[j] + a[o] + extra)?;
        let mut taylor = NPoly::zero(k);
        for &be in &betas {
            let m = ci.cutoff.moment(j, 2 * be + 1)?;
            taylor.axpy(&NPoly::new(&coeff_var(&full, j, a[j] + be, be)), Complex64::new(2.0 * PI * m, 0.0));
        }
        let (closed, rem) = pv1(k, o, a[o], &b, &taylor, &ci.cutoff, tol)?;
        if let Some(e) = fail.into_inner() {
            return Err(e);
        }
        out.add(closed, rem);
    }

    // D
    if let Some(t12) = &t12 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in t12.terms() {
            if m.0[0] == a[0] + m.0[2] && m.0[1] == a[1] + m.0[3] {
                acc += c.to_c64() * (4.0 * PI * PI * radial_moment2(&ci.cutoff, 2 * m.0[2] + 1, 2 * m.0[3] + 1)?);
            }
        }
        out.add(-acc, Estimate::default());
    }
    Ok(())
}

/// `int_0^1 int_0^1 r1^e1 r2^e2 cutoff(r1, r2) dr2 dr1`.
fn radial_moment2(c: &ChartCutoff, e1: u32, e2: u32) -> Result<f64> {
    let tol = Tolerance { rel: 1e-12, abs: 1e-15 };
    let fail = std::cell::RefCell::new(None);
    let f = |r1: f64| -> Complex64 {
        match c.moment_given(1, e2, &[r1, 0.0]) {
            Ok(m) => Complex64::new(r1.powi(e1 as i32) * m, 0.0),
            Err(e) => {
                fail.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let v = integrate(&f, 0.0, 1.0, &c.breaks(0), tol)?;
    if let Some(e) = fail.into_inner() {
        return Err(e);
    }
    Ok(v.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FormBasis;

    fn one_var(dbar_weight: bool, pole: u32, coeff: BiPoly, basis: FormBasis) -> ContinuationIntegral {
        ContinuationIntegral {
            weight: vec![1],
            dbar_weight,
            pole: vec![pole],
            form: Form::basis(1, basis, coeff),
            den: BiPoly::one(1),
            den_power: 0,
            cutoff: ChartCutoff::identity(1),
            params: QuadParams::default(),
        }
    }

    fn tau() -> Complex64 {
        Complex64::new(0.0, 2.0 * PI)
    }

    #[test]
    fn simple_residue() {
        let ci = one_var(true, 1, BiPoly::one(1), FormBasis::new(vec![0], vec![]));
        let v = continue_at_zero(&ci).unwrap();
        assert!((v.value - tau()).norm() < 1e-8);
        assert!(!v.cutoff_dependent);
    }

    #[test]
    fn double_pole_against_t() {
        let ci = one_var(true, 2, BiPoly::var(1, 0), FormBasis::new(vec![0], vec![]));
        let v = continue_at_zero(&ci).unwrap();
        assert!((v.value - tau()).norm() < 1e-8);
    }

    #[test]
    fn principal_value_depends_on_cutoff() {
        // |t|^(2 lambda) / t against t dt ^ dbar t: 2i * (-1) * 2 pi int r bump(r) dr.
        let ci = one_var(false, 1, BiPoly::var(1, 0), FormBasis::new(vec![0], vec![0]));
        let v = continue_at_zero(&ci).unwrap();
        let want = Complex64::new(0.0, -2.0) * 2.0 * PI * (0.5 - 3.0 / 14.0);
        assert!((v.value - want).norm() < 1e-9, "{:?}", v.value);
        assert!(v.cutoff_dependent);
        assert!(v.remainder.norm() < 1e-10);
    }

    #[test]
    fn non_polynomial_remainder_is_integrated() {
        // PV of (1/t) / (1 + |t|^2) against t dt ^ dbar t: the Taylor part alone is not exact.
        let mut ci = one_var(false, 1, BiPoly::var(1, 0), FormBasis::new(vec![0], vec![0]));
        ci.den = BiPoly::one(1).add(&BiPoly::var(1, 0).mul(&BiPoly::conj_var(1, 0)));
        ci.den_power = 1;
        let v = continue_at_zero(&ci).unwrap();
        // Oracle: -2i * 2 pi int_0^1 r bump(r) / (1 + r^2) dr by plain composite Simpson.
        let n = 20000;
        let h = 1.0 / n as f64;
        let f = |r: f64| r * super::super::cutoff::bump(r) / (1.0 + r * r);
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let want = Complex64::new(0.0, -2.0) * 2.0 * PI * s * h / 3.0;
        assert!((v.value - want).norm() < 1e-8, "{:?} vs {:?}", v.value, want);
        assert!(v.remainder.norm() > 1e-3);
    }
}
