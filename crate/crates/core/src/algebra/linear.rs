//! Exact sparse span membership: is a target vector a combination of labelled columns?

use super::gauss::GaussRat;
use std::collections::BTreeMap;

pub type SparseVec<K> = BTreeMap<K, GaussRat>;

/// Columns kept in echelon form keyed by their largest entry.
#[derive(Debug, Default)]
pub struct SpanSolver<K: Ord + Clone> {
    pivots: BTreeMap<K, (SparseVec<K>, BTreeMap<usize, GaussRat>)>,
}

fn axpy<K: Ord + Clone>(v: &mut BTreeMap<K, GaussRat>, a: &GaussRat, w: &BTreeMap<K, GaussRat>) {
    for (k, c) in w {
        let e = v.entry(k.clone()).or_insert_with(GaussRat::zero);
        *e += &(a * c);
        if e.is_zero() {
            v.remove(k);
        }
    }
}

impl<K: Ord + Clone> SpanSolver<K> {
    pub fn new() -> Self {
        SpanSolver { pivots: BTreeMap::new() }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Reduce `v` against the pivots; the returned combination satisfies `v_out = v_in + sum comb * columns`.
    fn reduce(&self, mut v: SparseVec<K>, mut comb: BTreeMap<usize, GaussRat>) -> (SparseVec<K>, BTreeMap<usize, GaussRat>) {
        let mut done: SparseVec<K> = BTreeMap::new();
        while let Some((k, c)) = v.iter().next_back().map(|(k, c)| (k.clone(), c.clone())) {
            match self.pivots.get(&k) {
                Some((pv, pc)) => {
                    let a = -c;
                    axpy(&mut v, &a, pv);
                    axpy(&mut comb, &a, pc);
                }
                None => {
                    v.remove(&k);
                    done.insert(k, c);
                }
            }
        }
        (done, comb)
    }

    pub fn add_column(&mut self, label: usize, v: SparseVec<K>) {
        let mut comb = BTreeMap::new();
        comb.insert(label, GaussRat::one());
        let (r, comb) = self.reduce(v, comb);
        if let Some((k, c)) = r.iter().next_back().map(|(k, c)| (k.clone(), c.clone())) {
            let inv = c.inv().expect("nonzero");
            let r: SparseVec<K> = r.into_iter().map(|(k, x)| (k, &x * &inv)).collect();
            let comb = comb.into_iter().map(|(k, x)| (k, &x * &inv)).collect();
            self.pivots.insert(k, (r, comb));
        }
    }

    /// Coefficients `x` with `target = sum x_label * column_label`, if any.
    pub fn solve(&self, target: &SparseVec<K>) -> Option<BTreeMap<usize, GaussRat>> {
        let (r, comb) = self.reduce(target.clone(), BTreeMap::new());
        if r.is_empty() {
            Some(comb.into_iter().map(|(k, c)| (k, -c)).filter(|(_, c)| !c.is_zero()).collect())
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(e: &[(u32, i64)]) -> SparseVec<u32> {
        e.iter().map(|(k, c)| (*k, GaussRat::from_int(*c))).collect()
    }

    #[test]
    fn span_and_witness() {
        let mut s = SpanSolver::new();
        s.add_column(0, v(&[(0, 1), (1, 1)]));
        s.add_column(1, v(&[(1, 1), (2, 1)]));
        let x = s.solve(&v(&[(0, 2), (1, 5), (2, 3)])).unwrap();
        assert_eq!(x[&0], GaussRat::from_int(2));
        assert_eq!(x[&1], GaussRat::from_int(3));
        assert!(s.solve(&v(&[(0, 1)])).is_none());
    }
}
