//! Buchberger's algorithm over the Gaussian rationals, for holomorphic chart ideals.

use crate::algebra::{BiPoly, GaussRat, Mono};
use crate::error::{Error, Result};
use std::cmp::Ordering;

/// Hard cap on processed S-pairs.
pub const PAIR_BUDGET: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonomialOrder {
    Grevlex,
    Lex,
    /// Grevlex on the first `n` variables, ties broken by grevlex on the rest; eliminates the first block.
    Block(usize),
}

fn grevlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| {
        for i in (0..a.len()).rev() {
            if a[i] != b[i] {
                return b[i].cmp(&a[i]);
            }
        }
        Ordering::Equal
    })
}

impl MonomialOrder {
    pub fn cmp(&self, a: &[u32], b: &[u32]) -> Ordering {
        match *self {
            MonomialOrder::Grevlex => grevlex(a, b),
            MonomialOrder::Lex => a.cmp(b),
            MonomialOrder::Block(n) => grevlex(&a[..n], &b[..n]).then_with(|| grevlex(&a[n..], &b[n..])),
        }
    }
}

type Term = (Vec<u32>, GaussRat);

/// Sparse polynomial, terms sorted descending in the ambient order.
#[derive(Clone, Debug, PartialEq)]
pub struct GPoly {
    pub terms: Vec<Term>,
}

impl GPoly {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lm(&self) -> &[u32] {
        &self.terms[0].0
    }

    pub fn lc(&self) -> &GaussRat {
        &self.terms[0].1
    }

    fn from_terms(mut terms: Vec<Term>, ord: MonomialOrder) -> GPoly {
        terms.sort_by(|a, b| ord.cmp(&b.0, &a.0));
        let mut out: Vec<Term> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 += &c,
                _ => out.push((m, c)),
            }
        }
        out.retain(|t| !t.1.is_zero());
        GPoly { terms: out }
    }

    pub fn from_bipoly(p: &BiPoly, ord: MonomialOrder) -> Result<GPoly> {
        if !p.is_holomorphic() {
            return Err(Error::Argument("ideal generators must be holomorphic".into()));
        }
        Ok(GPoly::from_terms(
            p.terms().map(|(m, c)| (m.holo().to_vec(), c.clone())).collect(),
            ord,
        ))
    }

    pub fn to_bipoly(&self, k: usize) -> BiPoly {
        BiPoly::from_terms(
            k,
            self.terms.iter().map(|(m, c)| (Mono::from_parts(m, &vec![0; k]), c.clone())),
        )
    }

    fn monic(&self) -> GPoly {
        let inv = self.lc().inv().expect("nonzero leading coefficient");
        GPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * &inv)).collect() }
    }

    /// `self - c * x^m * g`, merging sorted term lists.
    fn sub_scaled(&self, c: &GaussRat, m: &[u32], g: &GPoly, ord: MonomialOrder) -> GPoly {
        let shifted: Vec<Term> = g
            .terms
            .iter()
            .map(|(gm, gc)| (gm.iter().zip(m).map(|(a, b)| a + b).collect(), -(gc * c)))
            .collect();
        let mut out = Vec::with_capacity(self.terms.len() + shifted.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < shifted.len() {
            let o = if i == self.terms.len() {
                Ordering::Less
            } else if j == shifted.len() {
                Ordering::Greater
            } else {
                ord.cmp(&self.terms[i].0, &shifted[j].0)
            };
            match o {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(shifted[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let s = &self.terms[i].1 + &shifted[j].1;
                    if !s.is_zero() {
                        out.push((self.terms[i].0.clone(), s));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        GPoly { terms: out }
    }
}

fn divides(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn lcm(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

fn full_reduce(p: &GPoly, basis: &[GPoly], ord: MonomialOrder) -> GPoly {
    let mut rem = p.clone();
    let mut done: Vec<Term> = Vec::new();
    while !rem.is_zero() {
        let (m, c) = rem.terms[0].clone();
        match basis.iter().find(|g| divides(g.lm(), &m)) {
            Some(g) => {
                let q: Vec<u32> = m.iter().zip(g.lm()).map(|(a, b)| a - b).collect();
                let qc = &c / g.lc();
                rem = rem.sub_scaled(&qc, &q, g, ord);
            }
            None => {
                done.push((m, c));
                rem.terms.remove(0);
            }
        }
    }
    GPoly { terms: done }
}

#[derive(Clone, Debug)]
pub struct Ideal {
    pub nvars: usize,
    pub generators: Vec<BiPoly>,
    pub order: MonomialOrder,
}

impl Ideal {
    pub fn new(nvars: usize, generators: Vec<BiPoly>, order: MonomialOrder) -> Result<Ideal> {
        for g in &generators {
            if g.arity() != nvars {
                return Err(Error::Argument("generator arity mismatch".into()));
            }
            if !g.is_holomorphic() {
                return Err(Error::Argument("ideal generators must be holomorphic".into()));
            }
        }
        let generators = generators.into_iter().filter(|g| !g.is_zero()).collect();
        Ok(Ideal { nvars, generators, order })
    }
}

#[derive(Clone, Debug)]
pub struct GroebnerBasis {
    pub nvars: usize,
    pub order: MonomialOrder,
    pub polys: Vec<GPoly>,
}

impl GroebnerBasis {
    pub fn to_bipolys(&self) -> Vec<BiPoly> {
        self.polys.iter().map(|g| g.to_bipoly(self.nvars)).collect()
    }

    pub fn is_unit(&self) -> bool {
        self.polys.iter().any(|g| g.lm().iter().all(|&e| e == 0))
    }

    pub fn normal_form(&self, p: &BiPoly) -> Result<BiPoly> {
        let g = GPoly::from_bipoly(p, self.order)?;
        Ok(full_reduce(&g, &self.polys, self.order).to_bipoly(self.nvars))
    }
}

/// Reduced Groebner basis with normal pair selection and the product criterion.
pub fn buchberger(ideal: &Ideal) -> Result<GroebnerBasis> {
    let ord = ideal.order;
    let mut basis: Vec<GPoly> = Vec::new();
    for g in &ideal.generators {
        let gp = GPoly::from_bipoly(g, ord)?;
        let r = full_reduce(&gp, &basis, ord);
        if !r.is_zero() {
            basis.push(r.monic());
        }
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 0..basis.len() {
        for i in 0..j {
            pairs.push((i, j));
        }
    }
    let mut processed = 0usize;
    while !pairs.is_empty() {
        processed += 1;
        if processed > PAIR_BUDGET {
            return Err(Error::Resource(format!(
                "S-pair budget {PAIR_BUDGET} exceeded; partial basis of {} elements is unusable",
                basis.len()
            )));
        }
        let best = (0..pairs.len())
            .min_by(|&a, &b| {
                let la = lcm(basis[pairs[a].0].lm(), basis[pairs[a].1].lm());
                let lb = lcm(basis[pairs[b].0].lm(), basis[pairs[b].1].lm());
                ord.cmp(&la, &lb).then(a.cmp(&b))
            })
            .unwrap();
        let (i, j) = pairs.remove(best);
        let (fi, fj) = (&basis[i], &basis[j]);
        let l = lcm(fi.lm(), fj.lm());
        let coprime = fi.lm().iter().zip(fj.lm()).all(|(a, b)| *a == 0 || *b == 0);
        if coprime {
            continue;
        }
        let mi: Vec<u32> = l.iter().zip(fi.lm()).map(|(a, b)| a - b).collect();
        let mj: Vec<u32> = l.iter().zip(fj.lm()).map(|(a, b)| a - b).collect();
        let zero = GPoly { terms: vec![] };
        let s = zero
            .sub_scaled(&-fi.lc().inv().unwrap(), &mi, fi, ord)
            .sub_scaled(&fj.lc().inv().unwrap(), &mj, fj, ord);
        let r = full_reduce(&s, &basis, ord);
        if r.is_zero() {
            continue;
        }
        let r = r.monic();
        let n = basis.len();
        basis.push(r);
        if basis[n].lm().iter().all(|&e| e == 0) {
            basis = vec![basis[n].clone()];
            pairs.clear();
            break;
        }
        for a in 0..n {
            pairs.push((a, n));
        }
    }
    Ok(GroebnerBasis { nvars: ideal.nvars, order: ord, polys: reduce_basis(basis, ord) })
}

fn reduce_basis(mut basis: Vec<GPoly>, ord: MonomialOrder) -> Vec<GPoly> {
    // Minimal: drop elements whose leading monomial is divisible by another's.
    let mut keep: Vec<GPoly> = Vec::new();
    basis.sort_by(|a, b| ord.cmp(a.lm(), b.lm()));
    for g in basis {
        if !keep.iter().any(|h| divides(h.lm(), g.lm())) {
            keep.push(g);
        }
    }
    let mut out = Vec::with_capacity(keep.len());
    for i in 0..keep.len() {
        let others: Vec<GPoly> = keep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
        let head = GPoly { terms: vec![keep[i].terms[0].clone()] };
        let tail = GPoly { terms: keep[i].terms[1..].to_vec() };
        let t = full_reduce(&tail, &others, ord);
        let mut terms = head.terms;
        terms.extend(t.terms);
        out.push(GPoly { terms }.monic());
    }
    out.sort_by(|a, b| ord.cmp(a.lm(), b.lm()));
    out
}

/// Krull dimension of the affine zero set; -1 when the ideal is the unit ideal.
pub fn dimension(gb: &GroebnerBasis) -> i64 {
    if gb.is_unit() {
        return -1;
    }
    let n = gb.nvars;
    let mut best = 0i64;
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as i64;
        if size <= best {
            continue;
        }
        let independent = gb
            .polys
            .iter()
            .all(|g| g.lm().iter().enumerate().any(|(i, &e)| e > 0 && mask & (1 << i) == 0));
        if independent {
            best = size;
        }
    }
    best
}

pub fn membership(p: &BiPoly, gb: &GroebnerBasis) -> Result<bool> {
    if p.arity() != gb.nvars {
        return Err(Error::Argument("arity mismatch".into()));
    }
    Ok(gb.normal_form(p)?.is_zero())
}

fn lift(p: &BiPoly, extra_front: usize) -> BiPoly {
    let k = p.arity();
    let idx: Vec<usize> = (0..k).map(|i| i + extra_front).collect();
    p.reindex(k + extra_front, &idx)
}

/// `p` vanishes on V(gens), by the Rabinowitsch trick.
pub fn radical_membership(p: &BiPoly, gens: &[BiPoly]) -> Result<bool> {
    let k = p.arity();
    let mut g: Vec<BiPoly> = gens.iter().map(|g| lift(g, 1)).collect();
    let y = BiPoly::var(k + 1, 0);
    g.push(BiPoly::one(k + 1).sub(&y.mul(&lift(p, 1))));
    let gb = buchberger(&Ideal::new(k + 1, g, MonomialOrder::Grevlex)?)?;
    Ok(gb.is_unit())
}

/// Generators of `I ∩ J` by elimination of an auxiliary variable.
pub fn intersect(a: &[BiPoly], b: &[BiPoly], k: usize) -> Result<Vec<BiPoly>> {
    let y = BiPoly::var(k + 1, 0);
    let one_minus_y = BiPoly::one(k + 1).sub(&y);
    let mut g: Vec<BiPoly> = a.iter().map(|p| y.mul(&lift(p, 1))).collect();
    g.extend(b.iter().map(|p| one_minus_y.mul(&lift(p, 1))));
    let gb = buchberger(&Ideal::new(k + 1, g, MonomialOrder::Block(1))?)?;
    let idx_back: Vec<usize> = (0..k).collect();
    Ok(gb
        .to_bipolys()
        .into_iter()
        .filter(|p| p.terms().all(|(m, _)| m.0[0] == 0))
        .map(|p| drop_first(&p, &idx_back))
        .collect())
}

fn drop_first(p: &BiPoly, idx: &[usize]) -> BiPoly {
    let k = idx.len();
    BiPoly::from_terms(
        k,
        p.terms().map(|(m, c)| {
            let h: Vec<u32> = m.holo()[1..].to_vec();
            (Mono::from_parts(&h, &vec![0; k]), c.clone())
        }),
    )
}

/// Polynomial gcd via `fg / lcm(f,g)`, with `lcm` the generator of `(f) ∩ (g)`.
pub fn gcd(f: &BiPoly, g: &BiPoly) -> Result<BiPoly> {
    let k = f.arity();
    if f.is_zero() {
        return Ok(g.make_monic().0);
    }
    if g.is_zero() {
        return Ok(f.make_monic().0);
    }
    let inter = intersect(&[f.clone()], &[g.clone()], k)?;
    let l = inter
        .into_iter()
        .min_by_key(|p| (p.degree(), p.len()))
        .ok_or_else(|| Error::Argument("empty intersection basis".into()))?;
    let q = f
        .mul(g)
        .div_exact(&l)
        .ok_or_else(|| Error::Argument("lcm does not divide the product".into()))?;
    Ok(q.make_monic().0)
}
