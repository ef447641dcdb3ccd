//! Elementary currents on a chart, as germs at the chart origin.
//!
//! A term reads
//!
//! ```text
//! tau^s * (coeff / prod den) * PV(t^-a) * dbar(1/t_i1^b_i1) ^ ... ^ dbar(1/t_ir^b_ir) ^ dt_I ^ dbar t_J ^ e_grade
//! ```
//!
//! with residue factors in ascending variable order, the form after them and
//! frame elements `e` on the far right. Every `den` factor is monic and
//! nonzero at the origin.
//!
//! Pairing convention: `dbar(1/t) . (chi dt) = 2 pi i`, equivalently
//! `int dt ^ dbar t = -2i * area`.

use crate::algebra::form::sort_sign;
use crate::algebra::text::print_poly;
use crate::algebra::{BiPoly, Form, FormBasis, GaussRat, Mono, Scalar, ScalarSum};
use crate::error::{Error, Result};
use crate::space::{Pullback, SpacePresentation, WeakFunction};
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub tau: i32,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub den: Vec<BiPoly>,
    pub coeff: BiPoly,
    pub basis: FormBasis,
    pub grade: Vec<usize>,
}

pub fn cmp_poly(p: &BiPoly, q: &BiPoly) -> Ordering {
    let mut a = p.terms().rev();
    let mut b = q.terms().rev();
    loop {
        match (a.next(), b.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some((m1, c1)), Some((m2, c2))) => {
                let o = m1.cmp(m2).then_with(|| c1.cmp(c2));
                if o != Ordering::Equal {
                    return o;
                }
            }
        }
    }
}

fn cmp_den(x: &[BiPoly], y: &[BiPoly]) -> Ordering {
    x.len().cmp(&y.len()).then_with(|| {
        for (p, q) in x.iter().zip(y) {
            let o = cmp_poly(p, q);
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

impl Term {
    pub fn unit(k: usize) -> Self {
        Term {
            tau: 0,
            a: vec![0; k],
            b: vec![0; k],
            den: vec![],
            coeff: BiPoly::one(k),
            basis: FormBasis::empty(),
            grade: vec![],
        }
    }

    pub fn arity(&self) -> usize {
        self.a.len()
    }

    pub fn residue_vars(&self) -> Vec<usize> {
        (0..self.b.len()).filter(|&i| self.b[i] > 0).collect()
    }

    /// Anti-holomorphic degree of the current: residue factors plus `|J|`.
    pub fn anti_degree(&self) -> usize {
        self.residue_vars().len() + self.basis.anti.len()
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.basis.holo.len(), self.anti_degree())
    }

    fn cmp_key(&self, o: &Term) -> Ordering {
        self.grade
            .cmp(&o.grade)
            .then_with(|| self.basis.cmp(&o.basis))
            .then_with(|| self.b.cmp(&o.b))
            .then_with(|| self.a.cmp(&o.a))
            .then_with(|| self.tau.cmp(&o.tau))
            .then_with(|| cmp_den(&self.den, &o.den))
    }

    fn with_coeff(&self, coeff: BiPoly) -> Term {
        Term { coeff, ..self.clone() }
    }

    /// Multiply by `1/u` for a unit `u = num / prod(den)`; leading coefficients go into `coeff`.
    fn mul_inverse_unit(&mut self, num: &BiPoly, den: &[BiPoly]) {
        for d in den {
            self.coeff = self.coeff.mul(d);
        }
        if num.is_constant() {
            let inv = num.constant_term().inv().expect("unit");
            self.coeff = self.coeff.scale(&inv);
        } else {
            let (monic, lc) = num.make_monic();
            self.coeff = self.coeff.scale(&lc.inv().expect("unit"));
            self.den.push(monic);
        }
    }

    fn mul_unit(&mut self, num: &BiPoly, den: &[BiPoly]) {
        self.coeff = self.coeff.mul(num);
        for d in den {
            if d.is_constant() {
                self.coeff = self.coeff.scale(&d.constant_term().inv().expect("unit"));
            } else {
                let (monic, lc) = d.make_monic();
                self.coeff = self.coeff.scale(&lc.inv().expect("unit"));
                self.den.push(monic);
            }
        }
    }

    pub fn display(&self, vars: &[String]) -> String {
        let mut parts = Vec::new();
        if self.tau != 0 {
            parts.push(format!("tau^{}", self.tau));
        }
        parts.push(format!("({})", print_poly(&self.coeff, vars)));
        for d in &self.den {
            parts.push(format!("1/({})", print_poly(d, vars)));
        }
        for (i, &e) in self.a.iter().enumerate() {
            if e > 0 {
                parts.push(format!("pv(1/{})", pow_str(&vars[i], e)));
            }
        }
        let mut wedge: Vec<String> = self
            .residue_vars()
            .iter()
            .map(|&i| format!("dbar(1/{})", pow_str(&vars[i], self.b[i])))
            .collect();
        wedge.extend(self.basis.holo.iter().map(|&i| format!("d{}", vars[i])));
        wedge.extend(self.basis.anti.iter().map(|&j| format!("dbar{}", vars[j])));
        wedge.extend(self.grade.iter().map(|&g| format!("e{}", g + 1)));
        let mut s = parts.join("*");
        if !wedge.is_empty() {
            s.push_str(" * ");
            s.push_str(&wedge.join("^"));
        }
        s
    }
}

fn pow_str(v: &str, e: u32) -> String {
    if e == 1 {
        v.to_string()
    } else {
        format!("{}^{}", v, e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidueExpr {
    pub k: usize,
    pub terms: Vec<Term>,
}

impl ResidueExpr {
    pub fn zero(k: usize) -> Self {
        ResidueExpr { k, terms: vec![] }
    }

    pub fn one(k: usize) -> Self {
        ResidueExpr { k, terms: vec![Term::unit(k)] }
    }

    pub fn from_terms(k: usize, terms: Vec<Term>) -> Self {
        ResidueExpr { k, terms }.normalize()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &ResidueExpr) -> ResidueExpr {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        ResidueExpr { k: self.k, terms }.normalize()
    }

    pub fn neg(&self) -> ResidueExpr {
        ResidueExpr {
            k: self.k,
            terms: self.terms.iter().map(|t| t.with_coeff(t.coeff.neg())).collect(),
        }
    }

    pub fn sub(&self, o: &ResidueExpr) -> ResidueExpr {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &GaussRat) -> ResidueExpr {
        ResidueExpr {
            k: self.k,
            terms: self.terms.iter().map(|t| t.with_coeff(t.coeff.scale(c))).collect(),
        }
        .normalize()
    }

    /// Multiply every coefficient by a smooth function (a bi-polynomial).
    pub fn mul_poly(&self, p: &BiPoly) -> ResidueExpr {
        ResidueExpr {
            k: self.k,
            terms: self.terms.iter().map(|t| t.with_coeff(t.coeff.mul(p))).collect(),
        }
        .normalize()
    }

    /// Wedge a smooth form on the right of the residue block (before the frame elements).
    pub fn wedge_form(&self, f: &Form) -> Result<ResidueExpr> {
        let mut out = Vec::new();
        for t in &self.terms {
            for (b, c) in f.terms() {
                let here = Form::basis(self.k, t.basis.clone(), BiPoly::one(self.k));
                let w = here.wedge(&Form::basis(self.k, b.clone(), BiPoly::one(self.k)))?;
                for (nb, nc) in w.terms() {
                    // Frame elements sit to the right of the new form: move |b| past |grade|.
                    let s = if (b.degree() * t.grade.len()) % 2 == 0 { 1 } else { -1 };
                    let mut coeff = t.coeff.mul(c).mul(nc);
                    if s < 0 {
                        coeff = coeff.neg();
                    }
                    out.push(Term { basis: nb.clone(), coeff, ..t.clone() });
                }
            }
        }
        Ok(ResidueExpr { k: self.k, terms: out }.normalize())
    }

    /// Append a frame element `e_g` on the right.
    pub fn wedge_frame(&self, g: usize) -> ResidueExpr {
        let mut out = Vec::new();
        for t in &self.terms {
            let mut v = t.grade.clone();
            v.push(g);
            if let Some((sorted, s)) = sort_sign(&v) {
                let coeff = if s < 0 { t.coeff.neg() } else { t.coeff.clone() };
                out.push(Term { grade: sorted, coeff, ..t.clone() });
            }
        }
        ResidueExpr { k: self.k, terms: out }.normalize()
    }

    /// Rewrite to the canonical normal form (rules R1..R6) and merge equal keys.
    pub fn normalize(&self) -> ResidueExpr {
        let mut cur = self.terms.clone();
        loop {
            let next = normalize_pass(self.k, &cur);
            if next == cur {
                return ResidueExpr { k: self.k, terms: next };
            }
            cur = next;
        }
    }

    /// Symbolic `dbar`: PV factors turn into residue factors, smooth coefficients differentiate.
    pub fn dbar(&self) -> ResidueExpr {
        let mut out = Vec::new();
        for t in &self.terms {
            // dbar(PV(t^-a)) by the monomial splitting rule.
            let pv_supp: Vec<usize> = (0..self.k).filter(|&i| t.a[i] > 0).collect();
            for &i in &pv_supp {
                let mut nt = t.clone();
                nt.b[i] = t.a[i];
                nt.a[i] = 0;
                if residue_count_below(t, i) % 2 == 1 {
                    nt.coeff = nt.coeff.neg();
                }
                out.push(nt);
            }
            // dbar(coeff) ^ ..., moved past the residue block.
            let r = t.residue_vars().len();
            for j in 0..self.k {
                let dc = t.coeff.derive(j, true);
                if dc.is_zero() {
                    continue;
                }
                let df = Form::differential(self.k, j, true);
                let rest = Form::basis(self.k, t.basis.clone(), BiPoly::one(self.k));
                let w = df.wedge(&rest).expect("same arity");
                for (nb, nc) in w.terms() {
                    let mut coeff = dc.mul(nc);
                    if r % 2 == 1 {
                        coeff = coeff.neg();
                    }
                    out.push(Term { basis: nb.clone(), coeff, ..t.clone() });
                }
            }
        }
        ResidueExpr { k: self.k, terms: out }.normalize()
    }

    pub fn display(&self, vars: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms.iter().map(|t| t.display(vars)).collect::<Vec<_>>().join(" + ")
    }
}

fn residue_count_below(t: &Term, i: usize) -> usize {
    (0..i).filter(|&j| t.b[j] > 0).count()
}

fn normalize_pass(k: usize, terms: &[Term]) -> Vec<Term> {
    let mut atoms: Vec<Term> = Vec::new();
    for t in terms {
        let mut t = t.clone();
        // Cancel unit denominators that divide the coefficient.
        let mut den = Vec::new();
        for d in std::mem::take(&mut t.den) {
            match t.coeff.div_exact(&d) {
                Some(q) => t.coeff = q,
                None => den.push(d),
            }
        }
        den.sort_by(cmp_poly);
        t.den = den;
        // R3: a conjugate differential in a residue variable.
        if t.basis.anti.iter().any(|&j| t.b[j] > 0) {
            continue;
        }
        for (m, c) in t.coeff.terms() {
            if let Some(atom) = rewrite_atom(&t, m, c) {
                atoms.push(atom);
            }
        }
    }
    // R6: residue support of codimension above the anti-degree.
    atoms.retain(|t| t.residue_vars().len() <= t.anti_degree());
    atoms.sort_by(|x, y| x.cmp_key(y));
    let mut out: Vec<Term> = Vec::new();
    for t in atoms {
        match out.last_mut() {
            Some(last) if last.cmp_key(&t) == Ordering::Equal => last.coeff = last.coeff.add(&t.coeff),
            _ => out.push(t),
        }
    }
    out.retain(|t| !t.coeff.is_zero());
    let _ = k;
    out
}

/// R1, R2, R4 on one monomial of the coefficient.
fn rewrite_atom(t: &Term, m: &Mono, c: &GaussRat) -> Option<Term> {
    let k = t.arity();
    let mut h = m.holo().to_vec();
    let g = m.anti().to_vec();
    let mut a = t.a.clone();
    let mut b = t.b.clone();
    for i in 0..k {
        if b[i] > 0 {
            if g[i] > 0 {
                return None; // R2
            }
            if h[i] >= b[i] {
                return None; // R1, exponent exhausted
            }
            b[i] -= h[i];
            h[i] = 0;
        } else if a[i] > 0 && h[i] > 0 {
            let r = a[i].min(h[i]); // R4
            a[i] -= r;
            h[i] -= r;
        }
    }
    Some(Term {
        a,
        b,
        coeff: BiPoly::monomial(k, Mono::from_parts(&h, &g), c.clone()),
        ..t.clone()
    })
}

/// `f = t^m * num / prod(den)` with `num` and every `den` factor nonzero at the chart origin.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialUnit {
    pub m: Vec<i64>,
    pub num: BiPoly,
    pub den: Vec<BiPoly>,
}

impl MonomialUnit {
    pub fn from_poly(p: &BiPoly) -> Result<Self> {
        Self::from_pullback(&Pullback::Poly(p.clone()))
    }

    pub fn from_pullback(pb: &Pullback) -> Result<Self> {
        let split = |p: &BiPoly| -> Result<(Vec<u32>, BiPoly)> {
            if p.is_zero() {
                return Err(Error::Factorization("function vanishes identically on the chart".into()));
            }
            if !p.is_holomorphic() {
                return Err(Error::Factorization("function is not holomorphic".into()));
            }
            let m = p.monomial_content();
            let q = p.div_holo_monomial(&m);
            if q.constant_term().is_zero() {
                return Err(Error::Factorization(format!(
                    "not a monomial times a unit at the chart origin (cofactor vanishes there); monomialize first"
                )));
            }
            Ok((m, q))
        };
        let (m, num) = split(pb.numerator())?;
        let mut m: Vec<i64> = m.iter().map(|&e| e as i64).collect();
        let mut den = Vec::new();
        for d in pb.den_factors() {
            let (md, q) = split(d)?;
            for (x, y) in m.iter_mut().zip(md) {
                *x -= y as i64;
            }
            den.push(q);
        }
        Ok(MonomialUnit { m, num, den })
    }

    fn positive(&self) -> Result<Vec<u32>> {
        self.m
            .iter()
            .map(|&e| u32::try_from(e).map_err(|_| Error::Factorization("function has a pole at the chart origin".into())))
            .collect()
    }
}

/// `dbar(1/f) ^ T` with `f = u t^m`, by the one-lambda expansion over the variables of `m`.
pub fn dbar_wedge(f: &MonomialUnit, t: &ResidueExpr) -> Result<ResidueExpr> {
    let m = f.positive()?;
    let supp: Vec<usize> = (0..t.k).filter(|&i| m[i] > 0).collect();
    let mut out = Vec::new();
    for term in &t.terms {
        if supp.iter().any(|&i| term.b[i] > 0) {
            continue;
        }
        for &i in &supp {
            let mut nt = term.clone();
            for &j in &supp {
                if j != i {
                    nt.a[j] += m[j];
                }
            }
            nt.b[i] = m[i] + nt.a[i];
            nt.a[i] = 0;
            if residue_count_below(term, i) % 2 == 1 {
                nt.coeff = nt.coeff.neg();
            }
            nt.mul_inverse_unit(&f.num, &f.den);
            out.push(nt);
        }
    }
    Ok(ResidueExpr { k: t.k, terms: out }.normalize())
}

/// `(1/f) T` as a principal value applied after every residue factor of `T`.
pub fn pv_mul(f: &MonomialUnit, t: &ResidueExpr) -> Result<ResidueExpr> {
    let m = f.positive()?;
    let mut out = Vec::new();
    for term in &t.terms {
        if (0..t.k).any(|i| m[i] > 0 && term.b[i] > 0) {
            continue;
        }
        let mut nt = term.clone();
        for i in 0..t.k {
            nt.a[i] += m[i];
        }
        nt.mul_inverse_unit(&f.num, &f.den);
        out.push(nt);
    }
    Ok(ResidueExpr { k: t.k, terms: out }.normalize())
}

/// `1_{h != 0} T`: drop terms carrying a residue in a variable dividing the monomial `h`.
pub fn restrict_complement(t: &ResidueExpr, h: &BiPoly) -> Result<ResidueExpr> {
    if h.is_zero() {
        return Err(Error::Argument("restriction by the zero function".into()));
    }
    if h.len() != 1 || !h.is_holomorphic() {
        return Err(Error::Argument("restriction needs a holomorphic monomial".into()));
    }
    let (m, _) = h.leading().unwrap();
    let hv = m.holo();
    Ok(ResidueExpr {
        k: t.k,
        terms: t
            .terms
            .iter()
            .filter(|term| !(0..t.k).any(|i| hv[i] > 0 && term.b[i] > 0))
            .cloned()
            .collect(),
    })
}

/// Differential code: `dbar t_i -> 2i`, `dt_i -> 2i + 1`; the target order is blocks `dbar t_i ^ dt_i`.
fn orientation_sign(term: &Term, test: &FormBasis, k: usize) -> i32 {
    let mut seq: Vec<usize> = term.residue_vars().iter().map(|&i| 2 * i).collect();
    seq.extend(term.basis.holo.iter().map(|&i| 2 * i + 1));
    seq.extend(term.basis.anti.iter().map(|&j| 2 * j));
    seq.extend(test.holo.iter().map(|&i| 2 * i + 1));
    seq.extend(test.anti.iter().map(|&j| 2 * j));
    if seq.len() != 2 * k {
        return 0;
    }
    match sort_sign(&seq) {
        Some((_, s)) => s,
        None => 0,
    }
}

fn check_point_supported(term: &Term) -> Result<()> {
    let k = term.arity();
    if term.a.iter().any(|&x| x > 0) {
        return Err(Error::NotExactlyEvaluable("term carries a principal value factor".into()));
    }
    if term.residue_vars().len() != k {
        return Err(Error::NotExactlyEvaluable(format!(
            "term is supported on a set of dimension {}",
            k - term.residue_vars().len()
        )));
    }
    Ok(())
}

/// Exact pairing of one term with one test-form term.
fn pair_term(term: &Term, tb: &FormBasis, tc: &BiPoly) -> Result<ScalarSum> {
    check_point_supported(term)?;
    let k = term.arity();
    let eps = orientation_sign(term, tb, k);
    if eps == 0 {
        return Ok(ScalarSum::zero());
    }
    let all: Vec<usize> = (0..k).collect();
    let cap: Vec<u32> = term.b.iter().map(|&b| b - 1).chain(std::iter::repeat(0).take(k)).collect();
    let total: u32 = term.b.iter().map(|&b| b - 1).sum();
    let mut f = term.coeff.kill_conj(&all).mul_truncated(&tc.kill_conj(&all), &cap);
    if f.is_zero() {
        return Ok(ScalarSum::zero());
    }
    for d in &term.den {
        let inv = d
            .series_inverse(total)
            .ok_or_else(|| Error::Argument("denominator vanishes at the support point".into()))?;
        f = f.mul_truncated(&inv, &cap);
    }
    let target = Mono(cap);
    let v = f.coeff(&target);
    let v = if eps < 0 { -v } else { v };
    Ok(ScalarSum::from_scalar(&Scalar::new(v, term.tau + k as i32)))
}

/// Exact pairing with a chart test form; every term must be point-supported.
pub fn evaluate(t: &ResidueExpr, test: &Form) -> Result<ScalarSum> {
    Ok(evaluate_by_grade(t, test)?.values().fold(ScalarSum::zero(), |a, v| a.add(v)))
}

pub fn evaluate_by_grade(t: &ResidueExpr, test: &Form) -> Result<BTreeMap<Vec<usize>, ScalarSum>> {
    if test.arity() != t.k {
        return Err(Error::Argument("test form arity differs from the chart arity".into()));
    }
    let mut out: BTreeMap<Vec<usize>, ScalarSum> = BTreeMap::new();
    for term in &t.terms {
        check_point_supported(term)?;
        for (tb, tc) in test.terms() {
            let v = pair_term(term, tb, tc)?;
            if !v.is_zero() {
                let e = out.entry(term.grade.clone()).or_default();
                *e = e.add(&v);
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// Per-chart currents on a space. `canonical` marks representatives produced by a CH product.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartCurrents {
    pub exprs: Vec<ResidueExpr>,
    pub canonical: bool,
}

impl ChartCurrents {
    pub fn zero(space: &SpacePresentation) -> Self {
        ChartCurrents {
            exprs: space.charts.iter().map(|c| ResidueExpr::zero(c.arity())).collect(),
            canonical: false,
        }
    }

    pub fn map(&self, f: impl Fn(&ResidueExpr) -> Result<ResidueExpr>) -> Result<ChartCurrents> {
        Ok(ChartCurrents { exprs: self.exprs.iter().map(f).collect::<Result<_>>()?, canonical: false })
    }

    pub fn is_zero(&self) -> bool {
        self.exprs.iter().all(ResidueExpr::is_zero)
    }

    pub fn sub(&self, o: &ChartCurrents) -> ChartCurrents {
        ChartCurrents {
            exprs: self.exprs.iter().zip(&o.exprs).map(|(a, b)| a.sub(b)).collect(),
            canonical: false,
        }
    }

    pub fn scale(&self, c: &GaussRat) -> ChartCurrents {
        ChartCurrents { exprs: self.exprs.iter().map(|e| e.scale(c)).collect(), canonical: self.canonical }
    }

    /// Test-form bidegrees (on the chart) that can pair nontrivially with some term.
    pub fn needed_bidegrees(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for e in &self.exprs {
            for t in &e.terms {
                let (p, q) = t.bidegree();
                let need = (e.k.saturating_sub(p), e.k.saturating_sub(q));
                if !v.contains(&need) {
                    v.push(need);
                }
            }
        }
        v.sort();
        v
    }
}

/// Ambient monomial test form `z^alpha conj(z)^beta dz_I ^ dbar z_J` (cutoff implicit).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AmbientTestForm {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub holo: Vec<usize>,
    pub anti: Vec<usize>,
}

impl AmbientTestForm {
    pub fn to_form(&self) -> Form {
        let n = self.alpha.len();
        let c = BiPoly::monomial(n, Mono::from_parts(&self.alpha, &self.beta), GaussRat::one());
        Form::basis(n, FormBasis::new(self.holo.clone(), self.anti.clone()), c)
    }

    pub fn display(&self) -> String {
        let n = self.alpha.len();
        let mut parts = Vec::new();
        for i in 0..n {
            if self.alpha[i] > 0 {
                parts.push(format!("z{}^{}", i + 1, self.alpha[i]));
            }
        }
        for i in 0..n {
            if self.beta[i] > 0 {
                parts.push(format!("conj(z{})^{}", i + 1, self.beta[i]));
            }
        }
        if parts.is_empty() {
            parts.push("1".into());
        }
        let mut d: Vec<String> = self.holo.iter().map(|i| format!("dz{}", i + 1)).collect();
        d.extend(self.anti.iter().map(|j| format!("dbarz{}", j + 1)));
        if d.is_empty() {
            parts.join("*")
        } else {
            format!("{}*{}", parts.join("*"), d.join("^"))
        }
    }
}

/// Pull an ambient form back through every chart and pair with that chart's expression.
pub fn pushforward_pair(space: &SpacePresentation, t: &ChartCurrents, ambient: &Form) -> Result<ScalarSum> {
    if ambient.arity() != space.ambient_dim {
        return Err(Error::Argument("test form lives in the wrong ambient dimension".into()));
    }
    let mut acc = ScalarSum::zero();
    for (chart, e) in space.charts.iter().zip(&t.exprs) {
        if e.is_zero() {
            continue;
        }
        let pb = ambient.pullback(&chart.map);
        acc = acc.add(&evaluate(e, &pb)?);
    }
    Ok(acc)
}

/// Cached pullbacks of ambient coordinate powers and frame differentials for one chart.
struct ChartCache {
    pow_h: Vec<Vec<BiPoly>>,
    pow_a: Vec<Vec<BiPoly>>,
    diffs: BTreeMap<(Vec<usize>, Vec<usize>), Form>,
}

impl ChartCache {
    fn new(map: &[BiPoly], deg: u32, frames: &[(Vec<usize>, Vec<usize>)]) -> Self {
        let k = map.first().map(BiPoly::arity).unwrap_or(0);
        let powers = |base: &BiPoly| {
            let mut v = vec![BiPoly::one(k)];
            for _ in 0..deg {
                let next = v.last().unwrap().mul(base);
                v.push(next);
            }
            v
        };
        let n = map.len();
        let mut diffs = BTreeMap::new();
        for (h, a) in frames {
            let f = Form::basis(n, FormBasis::new(h.clone(), a.clone()), BiPoly::one(n));
            diffs.insert((h.clone(), a.clone()), f.pullback(map));
        }
        ChartCache {
            pow_h: map.iter().map(powers).collect(),
            pow_a: map.iter().map(|p| powers(&p.conj())).collect(),
            diffs,
        }
    }

    fn pull(&self, tf: &AmbientTestForm) -> Form {
        let k = self.pow_h.first().map(|v| v[0].arity()).unwrap_or(0);
        let mut c = BiPoly::one(k);
        for i in 0..tf.alpha.len() {
            if tf.alpha[i] > 0 {
                c = c.mul(&self.pow_h[i][tf.alpha[i] as usize]);
            }
            if tf.beta[i] > 0 {
                c = c.mul(&self.pow_a[i][tf.beta[i] as usize]);
            }
        }
        self.diffs[&(tf.holo.clone(), tf.anti.clone())].mul_poly(&c)
    }
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == size {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

/// All ambient monomial test forms up to total degree `bound` with the given frame bidegrees.
pub fn ambient_test_forms(n: usize, bound: u32, bidegrees: &[(usize, usize)]) -> Vec<AmbientTestForm> {
    let mut frames = Vec::new();
    for &(p, q) in bidegrees {
        if p > n || q > n {
            continue;
        }
        for h in subsets(n, p) {
            for a in subsets(n, q) {
                frames.push((h.clone(), a));
            }
        }
    }
    let mut out = Vec::new();
    for e in crate::space::exponents_up_to(2 * n, bound) {
        for (h, a) in &frames {
            out.push(AmbientTestForm {
                alpha: e[..n].to_vec(),
                beta: e[n..].to_vec(),
                holo: h.clone(),
                anti: a.clone(),
            });
        }
    }
    out
}

/// Pair a batch of ambient test forms, in order, using per-chart caches and rayon.
pub fn pair_batch(space: &SpacePresentation, t: &ChartCurrents, forms: &[AmbientTestForm], bound: u32) -> Result<Vec<ScalarSum>> {
    let mut frames: Vec<(Vec<usize>, Vec<usize>)> = forms.iter().map(|f| (f.holo.clone(), f.anti.clone())).collect();
    frames.sort();
    frames.dedup();
    let caches: Vec<ChartCache> = space.charts.iter().map(|c| ChartCache::new(&c.map, bound, &frames)).collect();
    forms
        .par_iter()
        .map(|tf| {
            let mut acc = ScalarSum::zero();
            for (cache, e) in caches.iter().zip(&t.exprs) {
                if e.is_zero() {
                    continue;
                }
                acc = acc.add(&evaluate(e, &cache.pull(tf))?);
            }
            Ok(acc)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Comparison {
    EqualUpToBound { bound: u32, checked: usize, symbolic: bool },
    Differ { witness: AmbientTestForm, lhs: ScalarSum, rhs: ScalarSum },
}

impl Comparison {
    pub fn is_equal(&self) -> bool {
        matches!(self, Comparison::EqualUpToBound { .. })
    }
}

/// Equality on Z: symbolic normal forms first, then every ambient monomial test form up to `bound`.
pub fn compare_on_z(
    lhs: (&SpacePresentation, &ChartCurrents),
    rhs: (&SpacePresentation, &ChartCurrents),
    bound: u32,
) -> Result<Comparison> {
    if lhs.0.ambient_dim != rhs.0.ambient_dim {
        return Err(Error::Argument("currents live in different ambient spaces".into()));
    }
    if lhs.0.charts == rhs.0.charts && lhs.1.sub(rhs.1).is_zero() {
        return Ok(Comparison::EqualUpToBound { bound, checked: 0, symbolic: true });
    }
    let n = lhs.0.ambient_dim;
    let mut bideg = lhs.1.needed_bidegrees();
    bideg.extend(rhs.1.needed_bidegrees());
    bideg.sort();
    bideg.dedup();
    let forms = ambient_test_forms(n, bound, &bideg);
    let lv = pair_batch(lhs.0, lhs.1, &forms, bound)?;
    let rv = pair_batch(rhs.0, rhs.1, &forms, bound)?;
    for ((tf, l), r) in forms.iter().zip(&lv).zip(&rv) {
        if l != r {
            return Ok(Comparison::Differ { witness: tf.clone(), lhs: l.clone(), rhs: r.clone() });
        }
    }
    Ok(Comparison::EqualUpToBound { bound, checked: forms.len(), symbolic: false })
}

fn mul_pullback(e: &ResidueExpr, pb: &Pullback) -> Result<ResidueExpr> {
    match pb {
        Pullback::Poly(p) => Ok(e.mul_poly(p)),
        Pullback::Ratio { .. } => {
            let f = MonomialUnit::from_pullback(pb)?;
            let m = f.positive()?;
            let mut terms = Vec::new();
            for t in &e.terms {
                let mut nt = t.clone();
                nt.coeff = nt.coeff.mul(&BiPoly::holo_monomial(&m));
                nt.mul_unit(&f.num, &f.den);
                terms.push(nt);
            }
            Ok(ResidueExpr { k: e.k, terms }.normalize())
        }
    }
}

/// `g T = pi_*(pi^* g T')`; only defined for canonical representatives.
pub fn weak_mul(g: &WeakFunction, t: &ChartCurrents) -> Result<ChartCurrents> {
    if !t.canonical {
        return Err(Error::Precondition(
            "weak multiplication needs the canonical upstairs representative of a CH product".into(),
        ));
    }
    Ok(ChartCurrents {
        exprs: t.exprs.iter().zip(&g.pullbacks).map(|(e, pb)| mul_pullback(e, pb)).collect::<Result<_>>()?,
        canonical: false,
    })
}

/// `phi mu := phi |h|^{2 lambda} mu at lambda = 0`, with `h` a monomial per chart covering the poles of `phi`.
pub fn weak_mul_intrinsic(
    space: &SpacePresentation,
    phi: &WeakFunction,
    mu: &ChartCurrents,
    h: &[BiPoly],
) -> Result<ChartCurrents> {
    let mut exprs = Vec::new();
    for (ci, e) in mu.exprs.iter().enumerate() {
        let vars = &space.charts[ci].vars;
        let r = restrict_complement(e, &h[ci])?;
        if r != *e {
            let bad = e.terms.iter().find(|t| !r.terms.contains(t)).expect("a dropped term");
            return Err(Error::Precondition(format!(
                "1_P mu != 0 on chart {}: term {} has a residue on {{h = 0}}",
                ci + 1,
                bad.display(vars)
            )));
        }
        let f = MonomialUnit::from_pullback(&phi.pullbacks[ci])?;
        let hm = h[ci].leading().map(|(m, _)| m.holo().to_vec()).unwrap();
        let mut terms = Vec::new();
        for t in &r.terms {
            let mut nt = t.clone();
            let mut pos = vec![0u32; e.k];
            for i in 0..e.k {
                if f.m[i] >= 0 {
                    pos[i] = f.m[i] as u32;
                } else {
                    if hm[i] == 0 {
                        return Err(Error::Precondition(format!(
                            "pole of phi along {} = 0 is not covered by h",
                            vars[i]
                        )));
                    }
                    nt.a[i] += (-f.m[i]) as u32;
                }
            }
            nt.coeff = nt.coeff.mul(&BiPoly::holo_monomial(&pos));
            nt.mul_unit(&f.num, &f.den);
            terms.push(nt);
        }
        exprs.push(ResidueExpr { k: e.k, terms }.normalize());
    }
    Ok(ChartCurrents { exprs, canonical: false })
}
