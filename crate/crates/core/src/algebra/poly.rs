//! Polynomials in chart variables `t_1..t_k` and their formal conjugates.
//!
//! A monomial is stored as one exponent vector of length `2k`: the first `k`
//! entries are holomorphic exponents, the last `k` anti-holomorphic ones.
//! Terms are ordered graded-lexicographically on that vector.

use super::gauss::GaussRat;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Debug;

/// Coefficient ring for [`Poly`].
pub trait Coeff: Clone + PartialEq + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn conj(&self) -> Self;
    fn from_i64(n: i64) -> Self;
    /// Exact inverse when available.
    fn inv(&self) -> Option<Self>;
}

impl Coeff for GaussRat {
    fn zero() -> Self {
        GaussRat::zero()
    }
    fn one() -> Self {
        GaussRat::one()
    }
    fn is_zero(&self) -> bool {
        GaussRat::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        GaussRat::conj(self)
    }
    fn from_i64(n: i64) -> Self {
        GaussRat::from_int(n)
    }
    fn inv(&self) -> Option<Self> {
        GaussRat::inv(self)
    }
}

impl Coeff for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn inv(&self) -> Option<Self> {
        if Coeff::is_zero(self) {
            None
        } else {
            Some(1.0 / self)
        }
    }
}

/// Exponent vector `[h_1..h_k, a_1..a_k]`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn one(k: usize) -> Self {
        Mono(vec![0; 2 * k])
    }

    pub fn from_parts(h: &[u32], a: &[u32]) -> Self {
        assert_eq!(h.len(), a.len());
        let mut v = h.to_vec();
        v.extend_from_slice(a);
        Mono(v)
    }

    pub fn var(k: usize, i: usize, conj: bool) -> Self {
        let mut m = Mono::one(k);
        m.0[if conj { k + i } else { i }] = 1;
        m
    }

    pub fn arity(&self) -> usize {
        self.0.len() / 2
    }

    pub fn holo(&self) -> &[u32] {
        &self.0[..self.arity()]
    }

    pub fn anti(&self) -> &[u32] {
        &self.0[self.arity()..]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        Mono(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, o: &Mono) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a <= b)
    }

    pub fn div(&self, o: &Mono) -> Option<Mono> {
        if o.divides(self) {
            Some(Mono(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect()))
        } else {
            None
        }
    }

    pub fn is_holomorphic(&self) -> bool {
        self.anti().iter().all(|&e| e == 0)
    }

    pub fn conj(&self) -> Mono {
        let k = self.arity();
        let mut v = self.0[k..].to_vec();
        v.extend_from_slice(&self.0[..k]);
        Mono(v)
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Poly<C: Coeff> {
    k: usize,
    terms: BTreeMap<Mono, C>,
}

/// Exact bi-polynomial over the Gaussian rationals.
pub type BiPoly = Poly<GaussRat>;
/// Floating-point bi-polynomial used inside quadrature.
pub type CPoly = Poly<Complex64>;

impl<C: Coeff> Poly<C> {
    pub fn zero(k: usize) -> Self {
        Poly { k, terms: BTreeMap::new() }
    }

    pub fn constant(k: usize, c: C) -> Self {
        let mut p = Poly::zero(k);
        p.add_term(Mono::one(k), c);
        p
    }

    pub fn one(k: usize) -> Self {
        Poly::constant(k, C::one())
    }

    pub fn var(k: usize, i: usize) -> Self {
        Poly::monomial(k, Mono::var(k, i, false), C::one())
    }

    pub fn conj_var(k: usize, i: usize) -> Self {
        Poly::monomial(k, Mono::var(k, i, true), C::one())
    }

    pub fn monomial(k: usize, m: Mono, c: C) -> Self {
        assert_eq!(m.arity(), k, "monomial arity mismatch");
        let mut p = Poly::zero(k);
        p.add_term(m, c);
        p
    }

    /// Holomorphic monomial `t^e`.
    pub fn holo_monomial(e: &[u32]) -> Self {
        let k = e.len();
        Poly::monomial(k, Mono::from_parts(e, &vec![0; k]), C::one())
    }

    pub fn from_terms(k: usize, terms: impl IntoIterator<Item = (Mono, C)>) -> Self {
        let mut p = Poly::zero(k);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending term order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Mono, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Mono) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn add_term(&mut self, m: Mono, c: C) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(m.arity(), self.k);
        match self.terms.get_mut(&m) {
            Some(v) => {
                let s = v.add(&c);
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn leading(&self) -> Option<(&Mono, &C)> {
        self.terms.iter().next_back()
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&Mono::one(self.k))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Mono::degree).max().unwrap_or(0)
    }

    /// Degree in the holomorphic variables only.
    pub fn holo_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.holo().iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn is_holomorphic(&self) -> bool {
        self.terms.keys().all(Mono::is_holomorphic)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.k, o.k, "arity mismatch");
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(self.k, o.k, "arity mismatch");
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.neg());
        }
        r
    }

    pub fn neg(&self) -> Self {
        Poly {
            k: self.k,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, s: &C) -> Self {
        if s.is_zero() {
            return Poly::zero(self.k);
        }
        Poly {
            k: self.k,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.mul(s))).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.k, o.k, "arity mismatch");
        let mut r = Poly::zero(self.k);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                r.add_term(m1.mul(m2), c1.mul(c2));
            }
        }
        r
    }

    pub fn mul_mono(&self, m: &Mono, c: &C) -> Self {
        let mut r = Poly::zero(self.k);
        for (m1, c1) in &self.terms {
            r.add_term(m1.mul(m), c1.mul(c));
        }
        r
    }

    /// Product truncated to monomials whose exponents stay within `cap` (inclusive, entrywise).
    pub fn mul_truncated(&self, o: &Self, cap: &[u32]) -> Self {
        let mut r = Poly::zero(self.k);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let m = m1.mul(m2);
                if m.0.iter().zip(cap).all(|(e, c)| e <= c) {
                    r.add_term(m, c1.mul(c2));
                }
            }
        }
        r
    }

    pub fn truncate(&self, cap: &[u32]) -> Self {
        Poly {
            k: self.k,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.0.iter().zip(cap).all(|(e, c)| e <= c))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Poly::one(self.k);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Formal conjugation: swaps each `t_i` with `conj(t_i)` and conjugates coefficients.
    pub fn conj(&self) -> Self {
        Poly {
            k: self.k,
            terms: self.terms.iter().map(|(m, c)| (m.conj(), c.conj())).collect(),
        }
    }

    /// Formal partial derivative treating `t` and `conj(t)` as independent.
    pub fn derive(&self, var: usize, conjugate: bool) -> Self {
        let idx = if conjugate { self.k + var } else { var };
        let mut r = Poly::zero(self.k);
        for (m, c) in &self.terms {
            let e = m.0[idx];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[idx] -= 1;
            r.add_term(m2, c.mul(&C::from_i64(e as i64)));
        }
        r
    }

    /// Set every variable in `vars` (and its conjugate) to zero.
    pub fn kill_vars(&self, vars: &[usize], conj_too: bool) -> Self {
        Poly {
            k: self.k,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| {
                    vars.iter().all(|&i| m.0[i] == 0 && (!conj_too || m.0[self.k + i] == 0))
                })
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Drop every term containing a conjugate of one of `vars`.
    pub fn kill_conj(&self, vars: &[usize]) -> Self {
        Poly {
            k: self.k,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| vars.iter().all(|&i| m.0[self.k + i] == 0))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Substitute polynomial maps: `t_i -> maps[i]`, `conj(t_i) -> conj(maps[i])`.
    /// All maps must share the target arity.
    pub fn compose(&self, maps: &[Poly<C>]) -> Poly<C> {
        assert_eq!(maps.len(), self.k, "compose needs one map per variable");
        let k2 = maps.first().map(|p| p.k).unwrap_or(0);
        let conjs: Vec<Poly<C>> = maps.iter().map(Poly::conj).collect();
        let mut cache_h: Vec<Vec<Poly<C>>> = vec![vec![Poly::one(k2)]; self.k];
        let mut cache_a: Vec<Vec<Poly<C>>> = vec![vec![Poly::one(k2)]; self.k];
        let mut r = Poly::zero(k2);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(k2, c.clone());
            for i in 0..self.k {
                let eh = m.0[i] as usize;
                while cache_h[i].len() <= eh {
                    let next = cache_h[i].last().unwrap().mul(&maps[i]);
                    cache_h[i].push(next);
                }
                if eh > 0 {
                    t = t.mul(&cache_h[i][eh]);
                }
                let ea = m.0[self.k + i] as usize;
                while cache_a[i].len() <= ea {
                    let next = cache_a[i].last().unwrap().mul(&conjs[i]);
                    cache_a[i].push(next);
                }
                if ea > 0 {
                    t = t.mul(&cache_a[i][ea]);
                }
            }
            r = r.add(&t);
        }
        r
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        let mut r = Poly::zero(self.k);
        for (m, c) in &self.terms {
            r.add_term(m.clone(), f(c));
        }
        r
    }

    /// Re-embed into a different arity through an index map `old var i -> new var idx[i]`.
    pub fn reindex(&self, new_k: usize, idx: &[usize]) -> Poly<C> {
        let mut r = Poly::zero(new_k);
        for (m, c) in &self.terms {
            let mut v = vec![0u32; 2 * new_k];
            for i in 0..self.k {
                v[idx[i]] += m.0[i];
                v[new_k + idx[i]] += m.0[self.k + i];
            }
            r.add_term(Mono(v), c.clone());
        }
        r
    }

    /// Largest holomorphic monomial dividing every term (exponentwise minimum of holomorphic parts).
    pub fn monomial_content(&self) -> Vec<u32> {
        let mut it = self.terms.keys();
        let first = match it.next() {
            Some(m) => m.holo().to_vec(),
            None => return vec![0; self.k],
        };
        it.fold(first, |acc, m| acc.iter().zip(m.holo()).map(|(a, b)| *a.min(b)).collect())
    }

    /// Divide by the holomorphic monomial `t^e`; panics if it does not divide.
    pub fn div_holo_monomial(&self, e: &[u32]) -> Poly<C> {
        let d = Mono::from_parts(e, &vec![0; self.k]);
        Poly {
            k: self.k,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.div(&d).expect("monomial does not divide"), c.clone()))
                .collect(),
        }
    }

    /// Exact division `self / d` when `d` divides `self`.
    pub fn div_exact(&self, d: &Poly<C>) -> Option<Poly<C>> {
        let (lm, lc) = d.leading()?;
        let lc_inv = lc.inv()?;
        let mut rem = self.clone();
        let mut q = Poly::zero(self.k);
        while let Some((m, c)) = rem.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let qm = m.div(lm)?;
            let qc = c.mul(&lc_inv);
            rem = rem.sub(&d.mul_mono(&qm, &qc));
            q.add_term(qm, qc);
        }
        Some(q)
    }

    /// Drop terms of total degree above `n`.
    pub fn truncate_total(&self, n: u32) -> Self {
        Poly {
            k: self.k,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= n)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Truncated power-series inverse up to total degree `n`; needs an invertible constant term.
    pub fn series_inverse(&self, n: u32) -> Option<Self> {
        let c0 = self.constant_term();
        let inv0 = c0.inv()?;
        // 1/d = inv0 * sum_j (-r)^j with r = d*inv0 - 1, which has no constant term.
        let r = self.scale(&inv0).sub(&Poly::one(self.k));
        let neg_r = r.neg();
        let mut acc = Poly::one(self.k);
        let mut pw = Poly::one(self.k);
        for _ in 0..n {
            pw = pw.mul(&neg_r).truncate_total(n);
            if pw.is_zero() {
                break;
            }
            acc = acc.add(&pw);
        }
        Some(acc.scale(&inv0))
    }

    /// Substitute `t_i -> t_i + p_i` (conjugates shift by the conjugate values).
    pub fn shift(&self, p: &[C]) -> Self {
        let maps: Vec<Poly<C>> = (0..self.k)
            .map(|i| Poly::var(self.k, i).add(&Poly::constant(self.k, p[i].clone())))
            .collect();
        self.compose(&maps)
    }

    /// Normalize so the leading coefficient is one; returns the removed factor.
    pub fn make_monic(&self) -> (Poly<C>, C) {
        match self.leading() {
            None => (self.clone(), C::one()),
            Some((_, lc)) => {
                let lc = lc.clone();
                let inv = lc.inv().expect("leading coefficient must be invertible");
                (self.scale(&inv), lc)
            }
        }
    }
}

impl BiPoly {
    pub fn from_int(k: usize, n: i64) -> Self {
        Poly::constant(k, GaussRat::from_int(n))
    }

    pub fn to_cpoly(&self) -> CPoly {
        self.map_coeffs(GaussRat::to_c64)
    }

    /// Evaluate at exact point values `t` with conjugates substituted by complex conjugates.
    pub fn eval_exact(&self, t: &[GaussRat]) -> GaussRat {
        let tc: Vec<GaussRat> = t.iter().map(GaussRat::conj).collect();
        let mut acc = GaussRat::zero();
        for (m, c) in self.terms() {
            let mut v = c.clone();
            for i in 0..self.k {
                if m.0[i] > 0 {
                    v = &v * &t[i].pow(m.0[i]);
                }
                if m.0[self.k + i] > 0 {
                    v = &v * &tc[i].pow(m.0[self.k + i]);
                }
            }
            acc += &v;
        }
        acc
    }

    /// Substitute exact values for a subset of variables (conjugates get conjugate values).
    pub fn substitute_values(&self, assign: &[(usize, GaussRat)]) -> BiPoly {
        let mut r = Poly::zero(self.k);
        for (m, c) in self.terms() {
            let mut v = c.clone();
            let mut m2 = m.clone();
            for (i, val) in assign {
                let eh = m2.0[*i];
                let ea = m2.0[self.k + *i];
                if eh > 0 {
                    v = &v * &val.pow(eh);
                }
                if ea > 0 {
                    v = &v * &val.conj().pow(ea);
                }
                m2.0[*i] = 0;
                m2.0[self.k + *i] = 0;
            }
            r.add_term(m2, v);
        }
        r
    }
}

impl CPoly {
    /// Evaluate with independent values for the holomorphic and conjugate slots.
    pub fn eval_split(&self, t: &[Complex64], tc: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in self.terms() {
            let mut v = *c;
            for i in 0..self.k {
                let eh = m.0[i];
                if eh > 0 {
                    v *= t[i].powu(eh);
                }
                let ea = m.0[self.k + i];
                if ea > 0 {
                    v *= tc[i].powu(ea);
                }
            }
            acc += v;
        }
        acc
    }

    /// Evaluate at a genuine point (conjugate slots receive complex conjugates).
    pub fn eval(&self, t: &[Complex64]) -> Complex64 {
        let tc: Vec<Complex64> = t.iter().map(|z| z.conj()).collect();
        self.eval_split(t, &tc)
    }

    /// Substitute numeric values for some variables, keeping the arity.
    pub fn substitute_values(&self, assign: &[(usize, Complex64)]) -> CPoly {
        let mut r = Poly::zero(self.k);
        for (m, c) in self.terms() {
            let mut v = *c;
            let mut m2 = m.clone();
            for (i, val) in assign {
                let eh = m2.0[*i];
                let ea = m2.0[self.k + *i];
                if eh > 0 {
                    v *= val.powu(eh);
                }
                if ea > 0 {
                    v *= val.conj().powu(ea);
                }
                m2.0[*i] = 0;
                m2.0[self.k + *i] = 0;
            }
            r.add_term(m2, v);
        }
        r
    }
}

/// Wirtinger derivative of an exact bi-polynomial, with 1-based `var_index`.
pub fn wirtinger_derive(p: &BiPoly, var_index: usize, conjugate: bool) -> Result<BiPoly> {
    if var_index == 0 || var_index > p.arity() {
        return Err(Error::Argument(format!(
            "variable index {} out of range 1..={}",
            var_index,
            p.arity()
        )));
    }
    Ok(p.derive(var_index - 1, conjugate))
}
