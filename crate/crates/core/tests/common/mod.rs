//! Brute-force lambda oracle for the two weakly holomorphic golden constants.
//!
//! `dbar(|f|^(2 lambda) / f) = lambda |f|^(2 lambda - 2) dbar conj(f)` is integrated at fixed
//! `lambda > 0` with one common `lambda` for both factors, then extrapolated to 0 by Neville.
//! On these charts both factors are monomial times a unit in separate variables, so the
//! integral splits into two one-variable disc integrals. Radii enter through `y = r^a`, which
//! turns `r^(a - 1) dr` into `dy / a`. Nothing here calls the continuation engine.

#![allow(dead_code)]

use num_complex::Complex64;
use residue_core::algebra::text::parse_poly;
use residue_core::algebra::{Form, FormBasis};
use residue_core::space::{NormalizationChart, SpacePresentation, WeakFunction};
use std::f64::consts::PI;

pub fn bump(r: f64) -> f64 {
    if r <= 0.5 {
        return 1.0;
    }
    if r >= 1.0 {
        return 0.0;
    }
    let x = 2.0 * r - 1.0;
    1.0 - x.powi(3) * (10.0 - 15.0 * x + 6.0 * x * x)
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let (mut q0, mut q1) = (1.0, x);
                    for k in 2..=n {
                        let q2 = ((2 * k - 1) as f64 * x * q1 - (k - 1) as f64 * q0) / k as f64;
                        q0 = q1;
                        q1 = q2;
                    }
                    let dq = n as f64 * (x * q1 - q0) / (x * x - 1.0);
                    return (x, 2.0 / ((1.0 - x * x) * dq * dq));
                }
            }
        })
        .collect()
}

/// Angular integral by trapezoid doubling.
pub fn angular(h: &dyn Fn(f64) -> Complex64) -> Complex64 {
    let rule = |n: usize| -> Complex64 {
        let w = 2.0 * PI / n as f64;
        (0..n).map(|j| h(w * j as f64)).sum::<Complex64>() * w
    };
    let mut n = 32;
    let mut prev = rule(n);
    loop {
        n *= 2;
        let cur = rule(n);
        if (cur - prev).norm() < 1e-14 * cur.norm().max(1.0) || n >= 1 << 16 {
            return cur;
        }
        prev = cur;
    }
}

/// `int_0^{2 pi} int_0^1 h(y^(1/a) e^(i theta)) dy dtheta`, panels at dyadic radii.
pub fn disc_y(a: f64, h: &dyn Fn(Complex64) -> Complex64) -> Complex64 {
    let gl = gauss_legendre(12);
    let mut radii: Vec<f64> = (1..=60).map(|j| 0.5f64.powi(j)).collect();
    radii.extend([0.625, 0.75, 0.875, 1.0]);
    radii.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut ys = vec![0.0];
    ys.extend(radii.iter().map(|r| r.powf(a)));
    let mut acc = Complex64::new(0.0, 0.0);
    for w in ys.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (c, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for &(x, wt) in &gl {
            let y: f64 = c + half * x;
            let r = y.powf(1.0 / a);
            acc += angular(&|th| h(Complex64::from_polar(r, th))) * (wt * half);
        }
    }
    acc
}

/// Polynomial extrapolation of samples to `x = 0`.
pub fn neville(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (p[i] * xs[i + m] - p[i + 1] * xs[i]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

pub fn extrapolate(f: impl Fn(f64) -> Complex64) -> Complex64 {
    let lams: Vec<f64> = (0..8).map(|n| 0.05 * 0.5f64.powi(n)).collect();
    let vals: Vec<Complex64> = lams.iter().map(|&l| f(l)).collect();
    neville(&lams, &vals)
}

pub fn chart(vars: &[&str], map: &[&str]) -> SpacePresentation {
    let v: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
    let m = map.iter().map(|s| parse_poly(s, &v).unwrap()).collect();
    SpacePresentation::single(NormalizationChart::new(v, m).unwrap())
}

pub fn wf(sp: &SpacePresentation, s: &str) -> WeakFunction {
    WeakFunction::from_polys(sp, vec![parse_poly(s, &sp.charts[0].vars).unwrap()]).unwrap()
}

pub fn ambient(n: usize, holo: Vec<usize>) -> Form {
    Form::basis(n, FormBasis::new(holo, vec![]), parse_poly("1", &[]).unwrap().reindex(n, &[]))
}

pub const TWO_I: Complex64 = Complex64::new(0.0, 2.0);


pub fn tau2() -> Complex64 {
    Complex64::new(0.0, 2.0 * PI).powi(2)
}

/// `(1/(1+s)) dbar(1/t) ^ dbar(1/s^2)` against `dz1 ^ dz3` on `(s, t) -> (s^2, s^3, t)`.
pub fn exchintrinsic_oracle() -> Complex64 {
    // dbar conj(f2) ^ dbar conj(f1) ^ phi = 4 |s|^2 (1 + conj s) dbar t ^ dbar s ^ ds ^ dt
    // and dbar t ^ dbar s ^ ds ^ dt = dbar s ^ ds ^ dbar t ^ dt = (2i)^2 dA.
    extrapolate(|lam| {
        // |s|^(4 lam - 4) |s|^2 r dr = r^(4 lam - 1) dr; |t|^(2 lam - 2) r dr = r^(2 lam - 1) dr.
        let js = disc_y(4.0 * lam, &|s| {
            let u = Complex64::new(1.0, 0.0) + s;
            u.conj() * u.norm_sqr().powf(lam - 1.0) * bump(s.norm())
        });
        let jt = disc_y(2.0 * lam, &|t| Complex64::new(bump(t.norm()), 0.0));
        TWO_I * TWO_I * (4.0 * lam * lam) * (js / (4.0 * lam)) * (jt / (2.0 * lam))
    })
}

/// `t2 dbar(1/t1) ^ dbar(1/t2^3)` against `dz1 ^ dz3` on `(t1, t2) -> (t1, t1^2 t2, t2^2, t2^5)`.
pub fn exmultcholo_oracle() -> Complex64 {
    // t2 dbar conj(f2) ^ dbar conj(f1) ^ phi = 6 |t2|^4 dbar t2 ^ dbar t1 ^ dt1 ^ dt2
    // and dbar t2 ^ dbar t1 ^ dt1 ^ dt2 = (2i)^2 dA.
    extrapolate(|lam| {
        let j1 = disc_y(2.0 * lam, &|t| Complex64::new(bump(t.norm()), 0.0));
        // |t2|^(6 lam - 6) |t2|^4 r dr = r^(6 lam - 1) dr
        let j2 = disc_y(6.0 * lam, &|t| Complex64::new(bump(t.norm()), 0.0));
        TWO_I * TWO_I * (6.0 * lam * lam) * (j1 / (2.0 * lam)) * (j2 / (6.0 * lam))
    })
}
