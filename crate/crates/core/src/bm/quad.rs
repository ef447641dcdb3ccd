//! Deterministic adaptive quadrature: Gauss-Kronrod 7/15 on intervals, trapezoid on circles.

use std::cell::{Cell, RefCell};

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: 1e-8, abs: 1e-12 }
    }
}

impl Tolerance {
    fn allowed(&self, scale: f64) -> f64 {
        self.abs.max(self.rel * scale)
    }
}

/// Value and absolute error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: Complex64, error: f64) -> Self {
        Estimate { value, error }
    }

    pub fn exact(value: Complex64) -> Self {
        Estimate { value, error: 0.0 }
    }

    pub fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, error: self.error + o.error }
    }

    pub fn scale(self, c: Complex64) -> Estimate {
        Estimate { value: self.value * c, error: self.error * c.norm() }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Kronrod panel: (K15 value, |K15 - G7|).
pub fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

const MAX_DEPTH: u32 = 40;

/// Adaptive bisection over `[a, b]` split at `breaks`; refinement order is depth-first, left to right.
pub fn integrate<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: Tolerance) -> Result<Estimate> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    pts.dedup();
    let coarse: Vec<(Complex64, f64)> = pts.windows(2).map(|w| gk15(f, w[0], w[1])).collect();
    let scale = coarse.iter().map(|(v, _)| v.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    let allowed = tol.allowed(scale);
    let width = b - a;
    let mut acc = Estimate::default();
    for (w, first) in pts.windows(2).zip(coarse) {
        acc = acc.add(refine(f, w[0], w[1], first, allowed / width, 0)?);
    }
    Ok(acc)
}

fn refine<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, cur: (Complex64, f64), density: f64, depth: u32) -> Result<Estimate> {
    let (v, e) = cur;
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::Numeric(format!("integrand is not finite on [{a}, {b}]")));
    }
    if e <= density * (b - a) || e < 1e-15 * v.norm() {
        return Ok(Estimate::new(v, e));
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Numeric(format!(
            "quadrature did not converge on [{a:.3e}, {b:.3e}]: error estimate {e:.3e}, allowed {:.3e}",
            density * (b - a)
        )));
    }
    let m = 0.5 * (a + b);
    let l = gk15(f, a, m);
    let r = gk15(f, m, b);
    Ok(refine(f, a, m, l, density, depth + 1)?.add(refine(f, m, b, r, density, depth + 1)?))
}

/// Integral over `[0, 2 pi)` of a smooth periodic function; doubles the trapezoid grid until stable.
pub fn circle<F: Fn(f64) -> Complex64>(f: &F, tol: Tolerance) -> Result<Estimate> {
    // Returns the rule value and the rounding floor from the absolute sum.
    let rule = |n: usize| -> (Complex64, f64) {
        let h = std::f64::consts::TAU / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for j in 0..n {
            let v = f(h * j as f64);
            acc += v;
            mag += v.norm();
        }
        (acc * h, 64.0 * f64::EPSILON * mag * h)
    };
    let mut n = 16;
    let (mut prev, _) = rule(n);
    while n <= 8192 {
        n *= 2;
        let (cur, floor) = rule(n);
        let err = (cur - prev).norm();
        if err <= tol.allowed(cur.norm()).max(floor) {
            return Ok(Estimate::new(cur, err));
        }
        prev = cur;
    }
    Err(Error::Numeric("angular trapezoid rule did not converge with 16384 nodes".into()))
}

/// `int_{|z| <= 1} g(z) dA` in polar coordinates, radial breakpoints in `breaks`.
pub fn disc<F: Fn(Complex64) -> Complex64>(g: &F, breaks: &[f64], tol: Tolerance) -> Result<Estimate> {
    disc_try(&|z| Ok(Estimate::exact(g(z))), breaks, tol)
}

/// [`disc`] for an integrand that is itself an estimate; inner errors are folded in.
pub fn disc_try<F: Fn(Complex64) -> Result<Estimate>>(g: &F, breaks: &[f64], tol: Tolerance) -> Result<Estimate> {
    let inner = Tolerance { rel: tol.rel * 0.1, abs: tol.abs * 0.1 };
    let err = Cell::new(0.0f64);
    let fail = RefCell::new(None);
    let pointwise = |z: Complex64| -> Complex64 {
        match g(z) {
            Ok(e) => {
                err.set(err.get().max(e.error));
                e.value
            }
            Err(x) => {
                fail.borrow_mut().get_or_insert(x);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let radial = |r: f64| -> Complex64 {
        match circle(&|th: f64| pointwise(Complex64::from_polar(r, th)), inner) {
            Ok(e) => {
                err.set(err.get().max(e.error / std::f64::consts::TAU));
                e.value * r
            }
            Err(x) => {
                fail.borrow_mut().get_or_insert(x);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let est = integrate(&radial, 0.0, 1.0, breaks, tol);
    if let Some(e) = fail.into_inner() {
        return Err(e);
    }
    let est = est?;
    // Pointwise errors are bounded uniformly; the unit disc has area pi.
    Ok(Estimate::new(est.value, est.error + std::f64::consts::PI * err.get()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_disc() {
        let e = integrate(&|x: f64| Complex64::new(x * x, 0.0), 0.0, 1.0, &[], Tolerance::default()).unwrap();
        assert!((e.value.re - 1.0 / 3.0).abs() < 1e-14);
        let d = disc(&|z: Complex64| Complex64::new(z.norm_sqr(), 0.0), &[], Tolerance::default()).unwrap();
        assert!((d.value.re - std::f64::consts::PI / 2.0).abs() < 1e-12);
        let s = disc(&|z: Complex64| z * z, &[], Tolerance::default()).unwrap();
        assert!(s.value.norm() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let e = integrate(&|x: f64| Complex64::new(x.sqrt(), 0.0), 0.0, 1.0, &[], Tolerance::default()).unwrap();
        assert!((e.value.re - 2.0 / 3.0).abs() < 1e-9);
    }
}
