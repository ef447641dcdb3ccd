//! Exterior forms `sum c_{IJ} dt_I ^ dbar t_J` with bi-polynomial coefficients.
//!
//! A basis element stores the holomorphic block first, then the
//! anti-holomorphic block, each strictly increasing.

use super::poly::BiPoly;
use crate::error::{Error, Result};
use std::collections::BTreeMap;

#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct FormBasis {
    pub holo: Vec<usize>,
    pub anti: Vec<usize>,
}

impl FormBasis {
    pub fn empty() -> Self {
        FormBasis { holo: vec![], anti: vec![] }
    }

    pub fn new(holo: Vec<usize>, anti: Vec<usize>) -> Self {
        debug_assert!(holo.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(anti.windows(2).all(|w| w[0] < w[1]));
        FormBasis { holo, anti }
    }

    pub fn degree(&self) -> usize {
        self.holo.len() + self.anti.len()
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.holo.len(), self.anti.len())
    }
}

/// Merge two strictly increasing index lists; sign of the sorting permutation, or None on repeats.
pub fn merge_sign(a: &[usize], b: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut inversions = 0usize;
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            inversions += a.len() - i;
            out.push(b[j]);
            j += 1;
        } else {
            return None;
        }
    }
    Some((out, if inversions % 2 == 0 { 1 } else { -1 }))
}

/// Sign of the permutation sorting `v`, or None if `v` has repeats.
pub fn sort_sign(v: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut inv = 0usize;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            match v[i].cmp(&v[j]) {
                std::cmp::Ordering::Greater => inv += 1,
                std::cmp::Ordering::Equal => return None,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    let mut s = v.to_vec();
    s.sort_unstable();
    Some((s, if inv % 2 == 0 { 1 } else { -1 }))
}

#[derive(Clone, PartialEq, Debug)]
pub struct Form {
    k: usize,
    terms: BTreeMap<FormBasis, BiPoly>,
}

impl Form {
    pub fn zero(k: usize) -> Self {
        Form { k, terms: BTreeMap::new() }
    }

    pub fn function(p: BiPoly) -> Self {
        let mut f = Form::zero(p.arity());
        f.add_term(FormBasis::empty(), p);
        f
    }

    pub fn one(k: usize) -> Self {
        Form::function(BiPoly::one(k))
    }

    /// `dt_i` (or `dbar t_i`), 0-based index.
    pub fn differential(k: usize, i: usize, conj: bool) -> Self {
        let b = if conj {
            FormBasis::new(vec![], vec![i])
        } else {
            FormBasis::new(vec![i], vec![])
        };
        let mut f = Form::zero(k);
        f.add_term(b, BiPoly::one(k));
        f
    }

    pub fn basis(k: usize, b: FormBasis, c: BiPoly) -> Self {
        let mut f = Form::zero(k);
        f.add_term(b, c);
        f
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FormBasis, &BiPoly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, b: &FormBasis) -> BiPoly {
        self.terms.get(b).cloned().unwrap_or_else(|| BiPoly::zero(self.k))
    }

    pub fn add_term(&mut self, b: FormBasis, c: BiPoly) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(b.clone()).or_insert_with(|| BiPoly::zero(self.k));
        *e = e.add(&c);
        if e.is_zero() {
            self.terms.remove(&b);
        }
    }

    pub fn add(&self, o: &Form) -> Form {
        let mut r = self.clone();
        for (b, c) in &o.terms {
            r.add_term(b.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> Form {
        Form { k: self.k, terms: self.terms.iter().map(|(b, c)| (b.clone(), c.neg())).collect() }
    }

    pub fn sub(&self, o: &Form) -> Form {
        self.add(&o.neg())
    }

    pub fn mul_poly(&self, p: &BiPoly) -> Form {
        let mut r = Form::zero(self.k);
        for (b, c) in &self.terms {
            r.add_term(b.clone(), c.mul(p));
        }
        r
    }

    /// Homogeneous component of the given bidegree.
    pub fn component(&self, bideg: (usize, usize)) -> Form {
        Form {
            k: self.k,
            terms: self
                .terms
                .iter()
                .filter(|(b, _)| b.bidegree() == bideg)
                .map(|(b, c)| (b.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn wedge(&self, o: &Form) -> Result<Form> {
        if self.k != o.k {
            return Err(Error::Argument(format!(
                "wedge of forms with arities {} and {}",
                self.k, o.k
            )));
        }
        let mut r = Form::zero(self.k);
        for (b1, c1) in &self.terms {
            for (b2, c2) in &o.terms {
                if let Some((b, s)) = wedge_basis(b1, b2) {
                    let c = c1.mul(c2);
                    r.add_term(b, if s < 0 { c.neg() } else { c });
                }
            }
        }
        Ok(r)
    }

    /// Exterior derivative `d = del + delbar`.
    pub fn d(&self) -> Form {
        let mut r = Form::zero(self.k);
        for (b, c) in &self.terms {
            for i in 0..self.k {
                for conj in [false, true] {
                    let dc = c.derive(i, conj);
                    if dc.is_zero() {
                        continue;
                    }
                    let di = Form::differential(self.k, i, conj);
                    let rest = Form::basis(self.k, b.clone(), dc);
                    r = r.add(&di.wedge(&rest).expect("same arity"));
                }
            }
        }
        r
    }

    /// Pull back through a polynomial map `t_i = maps[i](s)`.
    pub fn pullback(&self, maps: &[BiPoly]) -> Form {
        let k2 = maps.first().map(BiPoly::arity).unwrap_or(0);
        let dmaps: Vec<Form> = maps.iter().map(|m| Form::function(m.clone()).d()).collect();
        let dmaps_c: Vec<Form> = maps.iter().map(|m| Form::function(m.conj()).d()).collect();
        let mut r = Form::zero(k2);
        for (b, c) in &self.terms {
            let mut acc = Form::function(c.compose(maps));
            for &i in &b.holo {
                acc = acc.wedge(&dmaps[i]).expect("same arity");
            }
            for &j in &b.anti {
                acc = acc.wedge(&dmaps_c[j]).expect("same arity");
            }
            r = r.add(&acc);
        }
        r
    }
}

/// `dt_I dbar t_J ^ dt_K dbar t_L`: move `dt_K` past `dbar t_J`, then merge.
pub fn wedge_basis(a: &FormBasis, b: &FormBasis) -> Option<(FormBasis, i32)> {
    let (holo, s1) = merge_sign(&a.holo, &b.holo)?;
    let (anti, s2) = merge_sign(&a.anti, &b.anti)?;
    let s0 = if (a.anti.len() * b.holo.len()) % 2 == 0 { 1 } else { -1 };
    Some((FormBasis { holo, anti }, s0 * s1 * s2))
}

pub fn form_wedge(a: &Form, b: &Form) -> Result<Form> {
    a.wedge(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::gauss::GaussRat;

    fn dt(k: usize, i: usize) -> Form {
        Form::differential(k, i, false)
    }

    #[test]
    fn antisymmetry() {
        let a = dt(2, 0).wedge(&dt(2, 1)).unwrap();
        let b = dt(2, 1).wedge(&dt(2, 0)).unwrap();
        assert_eq!(a, b.neg());
        assert!(dt(2, 0).wedge(&dt(2, 0)).unwrap().is_zero());
    }

    #[test]
    fn cusp_pullback_pair() {
        // dz1 ^ dz3 under (s,t) -> (s^2, s^3, t)
        let s = BiPoly::var(2, 0);
        let t = BiPoly::var(2, 1);
        let maps = vec![s.pow(2), s.pow(3), t];
        let w = dt(3, 0).wedge(&dt(3, 2)).unwrap();
        let pb = w.pullback(&maps);
        let expect = Form::basis(2, FormBasis::new(vec![0, 1], vec![]), BiPoly::var(2, 0).scale(&GaussRat::from_int(2)));
        assert_eq!(pb, expect);
    }

    #[test]
    fn mixed_sign() {
        // dbar t1 ^ dt2 = - dt2 ^ dbar t1
        let a = Form::differential(2, 0, true).wedge(&dt(2, 1)).unwrap();
        let expect = Form::basis(2, FormBasis::new(vec![1], vec![0]), BiPoly::one(2)).neg();
        assert_eq!(a, expect);
    }

    #[test]
    fn arity_mismatch() {
        assert!(dt(1, 0).wedge(&dt(2, 0)).is_err());
    }
}
