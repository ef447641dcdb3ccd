//! Forms with values in the exterior algebra of the frame `e_1, ..., e_p`.
//!
//! Differentials and frame elements anticommute with each other. A term is stored as
//! `c * d(codes) ^ e(frames)`, differentials first; code `2i` is `dbar t_i`, `2i + 1` is `dt_i`.

use std::collections::BTreeMap;

use crate::algebra::form::sort_sign;
use crate::algebra::{BiPoly, Form, GaussRat};

type Key = (Vec<usize>, Vec<usize>);

#[derive(Clone, Debug, PartialEq)]
pub struct SForm {
    k: usize,
    terms: BTreeMap<Key, BiPoly>,
}

fn codes_of(f: &Form) -> Vec<(Vec<usize>, BiPoly)> {
    f.terms()
        .map(|(b, c)| {
            let mut codes: Vec<usize> = b.holo.iter().map(|&i| 2 * i + 1).collect();
            codes.extend(b.anti.iter().map(|&i| 2 * i));
            (codes, c.clone())
        })
        .collect()
}

impl SForm {
    pub fn zero(k: usize) -> Self {
        SForm { k, terms: BTreeMap::new() }
    }

    pub fn function(p: BiPoly) -> Self {
        let mut s = SForm::zero(p.arity());
        s.push(vec![], vec![], p);
        s
    }

    /// `c * e_l`.
    pub fn frame(c: BiPoly, l: usize) -> Self {
        let mut s = SForm::zero(c.arity());
        s.push(vec![], vec![l], c);
        s
    }

    pub fn from_form(f: &Form) -> Self {
        let mut s = SForm::zero(f.arity());
        for (codes, c) in codes_of(f) {
            s.push(codes, vec![], c);
        }
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Add `c * d(codes) ^ e(frames)` for unsorted sequences.
    fn push(&mut self, codes: Vec<usize>, frames: Vec<usize>, c: BiPoly) {
        if c.is_zero() {
            return;
        }
        let (Some((d, s1)), Some((e, s2))) = (sort_sign(&codes), sort_sign(&frames)) else {
            return;
        };
        let c = if s1 * s2 < 0 { c.neg() } else { c };
        let key = (d, e);
        let entry = self.terms.entry(key.clone()).or_insert_with(|| BiPoly::zero(self.k));
        *entry = entry.add(&c);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, o: &SForm) -> SForm {
        let mut r = self.clone();
        for ((d, e), c) in &o.terms {
            r.push(d.clone(), e.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &SForm) -> SForm {
        self.add(&o.mul_poly(&BiPoly::constant(self.k, GaussRat::from_int(-1))))
    }

    pub fn mul_poly(&self, p: &BiPoly) -> SForm {
        let mut r = SForm::zero(self.k);
        for ((d, e), c) in &self.terms {
            r.push(d.clone(), e.clone(), c.mul(p));
        }
        r
    }

    pub fn wedge(&self, o: &SForm) -> SForm {
        let mut r = SForm::zero(self.k);
        for ((d1, e1), c1) in &self.terms {
            for ((d2, e2), c2) in &o.terms {
                let mut c = c1.mul(c2);
                if (e1.len() * d2.len()) % 2 == 1 {
                    c = c.neg();
                }
                r.push([d1.clone(), d2.clone()].concat(), [e1.clone(), e2.clone()].concat(), c);
            }
        }
        r
    }

    /// Wedge a scalar form on the right of the differential part, leaving frames in place.
    pub fn wedge_form_inside(&self, f: &Form) -> SForm {
        let mut r = SForm::zero(self.k);
        for ((d, e), c) in &self.terms {
            for (codes, c2) in codes_of(f) {
                r.push([d.clone(), codes].concat(), e.clone(), c.mul(&c2));
            }
        }
        r
    }

    /// Left multiplication by `dbar t_i` (code `2i`).
    pub fn dbar_var_left(&self, i: usize) -> SForm {
        let mut r = SForm::zero(self.k);
        for ((d, e), c) in &self.terms {
            r.push([vec![2 * i], d.clone()].concat(), e.clone(), c.clone());
        }
        r
    }

    pub fn dbar(&self) -> SForm {
        let mut r = SForm::zero(self.k);
        for ((d, e), c) in &self.terms {
            for i in 0..self.k {
                let dc = c.derive(i, true);
                r.push([vec![2 * i], d.clone()].concat(), e.clone(), dc);
            }
        }
        r
    }

    /// Interior multiplication by `sum f_l e_l^*`, an odd operator acting from the left.
    pub fn contract(&self, f: &[BiPoly]) -> SForm {
        let mut r = SForm::zero(self.k);
        for ((d, e), c) in &self.terms {
            for (pos, &l) in e.iter().enumerate() {
                let mut cc = c.mul(&f[l]);
                if (d.len() + pos) % 2 == 1 {
                    cc = cc.neg();
                }
                let mut rest = e.clone();
                rest.remove(pos);
                r.push(d.clone(), rest, cc);
            }
        }
        r
    }

    /// Frame multi-indices present.
    pub fn frames(&self) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = self.terms.keys().map(|(_, e)| e.clone()).collect();
        v.dedup();
        v.sort();
        v.dedup();
        v
    }

    /// Coefficient of `dbar t_1 ^ dt_1 ^ ... ^ dbar t_k ^ dt_k ^ e(frames)`.
    pub fn top(&self, frames: &[usize]) -> BiPoly {
        let full: Vec<usize> = (0..2 * self.k).collect();
        self.terms.get(&(full, frames.to_vec())).cloned().unwrap_or_else(|| BiPoly::zero(self.k))
    }

    /// Terms without frames, as `(codes, coefficient)`.
    pub fn plain_terms(&self) -> impl Iterator<Item = (&Vec<usize>, &BiPoly)> {
        self.terms.iter().filter(|((_, e), _)| e.is_empty()).map(|((d, _), c)| (d, c))
    }

    /// Keep terms with the given frame index, dropping the frames.
    pub fn frame_part(&self, frames: &[usize]) -> SForm {
        let mut r = SForm::zero(self.k);
        for ((d, e), c) in &self.terms {
            if e == frames {
                r.push(d.clone(), vec![], c.clone());
            }
        }
        r
    }
}
