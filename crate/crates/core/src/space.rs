//! Singular spaces presented by normalization charts, and weakly holomorphic functions on them.
//!
//! Each chart is a polynomial map `pi: C^k -> C^n`. The user asserts that the
//! charts jointly form the normalization; finiteness and generic injectivity
//! are recorded, not verified.

use crate::algebra::linear::{SparseVec, SpanSolver};
use crate::algebra::text::Ratio;
use crate::algebra::{BiPoly, GaussRat, Mono};
use crate::error::{Error, Result};
use crate::gbasis::{buchberger, dimension, Ideal, MonomialOrder};
use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationChart {
    pub vars: Vec<String>,
    pub map: Vec<BiPoly>,
}

impl NormalizationChart {
    pub fn new(vars: Vec<String>, map: Vec<BiPoly>) -> Result<Self> {
        let k = vars.len();
        if map.iter().any(|p| p.arity() != k || !p.is_holomorphic()) {
            return Err(Error::Argument("chart components must be holomorphic in the chart variables".into()));
        }
        if map.iter().all(|p| p.is_constant()) {
            return Err(Error::Argument("chart map is constant".into()));
        }
        Ok(NormalizationChart { vars, map })
    }

    /// Chart with default variable names `t1..tk`.
    pub fn with_default_vars(map: Vec<BiPoly>) -> Result<Self> {
        let k = map.first().map(BiPoly::arity).unwrap_or(0);
        Self::new((1..=k).map(|i| format!("t{i}")).collect(), map)
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.map.len()
    }

    pub fn max_degree(&self) -> u32 {
        self.map.iter().map(BiPoly::degree).max().unwrap_or(0)
    }

    /// Every component is zero or a single monomial.
    /// The chart `pi o psi` for a polynomial automorphism `psi` of the chart domain.
    pub fn compose(&self, psi: &[BiPoly]) -> Result<NormalizationChart> {
        if psi.len() != self.arity() {
            return Err(Error::Argument("automorphism arity differs from chart arity".into()));
        }
        Ok(NormalizationChart { vars: self.vars.clone(), map: self.map.iter().map(|p| p.compose(psi)).collect() })
    }

    pub fn is_monomial(&self) -> bool {
        self.map.iter().all(|p| p.len() <= 1 && p.is_holomorphic())
    }
}

#[derive(Clone, Debug)]
pub struct SpacePresentation {
    pub ambient_dim: usize,
    pub charts: Vec<NormalizationChart>,
    /// Recorded user assertions (normality, finiteness, generic injectivity).
    pub assertions: Vec<String>,
}

impl SpacePresentation {
    pub fn new(charts: Vec<NormalizationChart>) -> Result<Self> {
        let n = charts
            .first()
            .ok_or_else(|| Error::Argument("a space needs at least one chart".into()))?
            .ambient_dim();
        if charts.iter().any(|c| c.ambient_dim() != n) {
            return Err(Error::Argument("charts disagree on the ambient dimension".into()));
        }
        Ok(SpacePresentation {
            ambient_dim: n,
            charts,
            assertions: vec!["charts are finite and generically injective onto components of the normalization".into()],
        })
    }

    pub fn compose(&self, psis: &[Vec<BiPoly>]) -> Result<SpacePresentation> {
        let charts = self.charts.iter().zip(psis).map(|(c, psi)| c.compose(psi)).collect::<Result<Vec<_>>>()?;
        Ok(SpacePresentation { charts, ..self.clone() })
    }

    pub fn single(chart: NormalizationChart) -> Self {
        Self::new(vec![chart]).expect("one chart")
    }
}

pub fn pullback(ambient: &BiPoly, chart: &NormalizationChart) -> Result<BiPoly> {
    if ambient.arity() != chart.ambient_dim() {
        return Err(Error::Argument(format!(
            "ambient polynomial has {} variables, chart target has {}",
            ambient.arity(),
            chart.ambient_dim()
        )));
    }
    Ok(ambient.compose(&chart.map))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pullback {
    Poly(BiPoly),
    Ratio { num: BiPoly, den: Vec<BiPoly> },
}

impl Pullback {
    /// Cancel exact denominator factors; returns a polynomial when everything cancels.
    pub fn from_ratio(r: Ratio) -> Pullback {
        let mut num = r.num;
        let mut den = Vec::new();
        for d in r.den {
            if d.is_constant() {
                num = num.scale(&d.constant_term().inv().expect("nonzero"));
            } else if let Some(q) = num.div_exact(&d) {
                num = q;
            } else {
                den.push(d);
            }
        }
        if den.is_empty() {
            Pullback::Poly(num)
        } else {
            Pullback::Ratio { num, den }
        }
    }

    pub fn compose(&self, maps: &[BiPoly]) -> Pullback {
        match self {
            Pullback::Poly(p) => Pullback::Poly(p.compose(maps)),
            Pullback::Ratio { num, den } => {
                Pullback::Ratio { num: num.compose(maps), den: den.iter().map(|d| d.compose(maps)).collect() }
            }
        }
    }

    pub fn as_poly(&self) -> Option<&BiPoly> {
        match self {
            Pullback::Poly(p) => Some(p),
            Pullback::Ratio { .. } => None,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Pullback::Poly(p) => p.arity(),
            Pullback::Ratio { num, .. } => num.arity(),
        }
    }

    pub fn numerator(&self) -> &BiPoly {
        match self {
            Pullback::Poly(p) => p,
            Pullback::Ratio { num, .. } => num,
        }
    }

    pub fn den_factors(&self) -> &[BiPoly] {
        match self {
            Pullback::Poly(_) => &[],
            Pullback::Ratio { den, .. } => den,
        }
    }

    pub fn eval_exact(&self, t: &[GaussRat]) -> Option<GaussRat> {
        let n = self.numerator().eval_exact(t);
        let mut d = GaussRat::one();
        for f in self.den_factors() {
            d = &d * &f.eval_exact(t);
        }
        d.inv().map(|inv| &n * &inv)
    }

    /// Power series of total degree `<= order` around `p`, or None if a denominator vanishes at `p`.
    pub fn jet_at(&self, p: &[GaussRat], order: u32) -> Option<BiPoly> {
        let mut acc = self.numerator().shift(p).truncate_total(order);
        for d in self.den_factors() {
            let inv = d.shift(p).series_inverse(order)?;
            acc = acc.mul(&inv).truncate_total(order);
        }
        Some(acc)
    }
}

/// Inverse of a polynomial map fixing the origin with invertible linear part, if the inverse is polynomial.
///
/// Fixed-point iteration `psi <- L^-1 (u - N(psi))` truncated at `max_degree`, then checked exactly.
pub fn invert_polynomial_map(phi: &[BiPoly], max_degree: u32) -> Result<Vec<BiPoly>> {
    let k = phi.len();
    if phi.iter().any(|p| p.arity() != k || !p.is_holomorphic()) {
        return Err(Error::Argument("automorphism must be a holomorphic self-map".into()));
    }
    if phi.iter().any(|p| !p.constant_term().is_zero()) {
        return Err(Error::Argument("automorphism must fix the origin".into()));
    }
    let lin: Vec<Vec<GaussRat>> = phi
        .iter()
        .map(|p| (0..k).map(|j| p.coeff(&Mono::var(k, j, false))).collect())
        .collect();
    let linv = invert_matrix(&lin).ok_or_else(|| Error::Argument("linear part is singular".into()))?;
    let nonlin: Vec<BiPoly> = phi
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut q = p.clone();
            for j in 0..k {
                q.add_term(Mono::var(k, j, false), -lin[i][j].clone());
            }
            q
        })
        .collect();
    let apply_linv = |v: &[BiPoly]| -> Vec<BiPoly> {
        (0..k)
            .map(|i| (0..k).fold(BiPoly::zero(k), |acc, j| acc.add(&v[j].scale(&linv[i][j]))))
            .collect()
    };
    let ids: Vec<BiPoly> = (0..k).map(|i| BiPoly::var(k, i)).collect();
    let mut psi = apply_linv(&ids);
    for _ in 0..=max_degree {
        let rhs: Vec<BiPoly> =
            (0..k).map(|i| ids[i].sub(&nonlin[i].compose(&psi)).truncate_total(max_degree)).collect();
        let next = apply_linv(&rhs);
        if next == psi {
            break;
        }
        psi = next;
    }
    let back: Vec<BiPoly> = phi.iter().map(|p| p.compose(&psi)).collect();
    if back != ids {
        return Err(Error::Unsupported(format!(
            "no polynomial inverse of degree <= {max_degree}"
        )));
    }
    Ok(psi)
}

fn invert_matrix(m: &[Vec<GaussRat>]) -> Option<Vec<Vec<GaussRat>>> {
    let n = m.len();
    let mut a: Vec<Vec<GaussRat>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { GaussRat::one() } else { GaussRat::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, piv);
        let inv = a[c][c].inv()?;
        for x in a[c].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                let row_c = a[c].clone();
                for (x, y) in a[r].iter_mut().zip(&row_c) {
                    *x = &*x - &(&f * y);
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[derive(Clone, Debug)]
pub struct WeakFunction {
    pub pullbacks: Vec<Pullback>,
    pub ambient: Option<BiPoly>,
}

impl WeakFunction {
    pub fn from_pullbacks(space: &SpacePresentation, pullbacks: Vec<Pullback>) -> Result<Self> {
        if pullbacks.len() != space.charts.len() {
            return Err(Error::Argument(format!(
                "{} pullbacks given for {} charts",
                pullbacks.len(),
                space.charts.len()
            )));
        }
        for (p, c) in pullbacks.iter().zip(&space.charts) {
            if p.arity() != c.arity() {
                return Err(Error::Argument("pullback arity differs from chart arity".into()));
            }
        }
        Ok(WeakFunction { pullbacks, ambient: None })
    }

    pub fn from_polys(space: &SpacePresentation, polys: Vec<BiPoly>) -> Result<Self> {
        Self::from_pullbacks(space, polys.into_iter().map(Pullback::Poly).collect())
    }

    pub fn from_ambient(space: &SpacePresentation, h: &BiPoly) -> Result<Self> {
        let pullbacks = space
            .charts
            .iter()
            .map(|c| pullback(h, c).map(Pullback::Poly))
            .collect::<Result<Vec<_>>>()?;
        Ok(WeakFunction { pullbacks, ambient: Some(h.clone()) })
    }

    /// Transport through per-chart automorphisms `psi_c`.
    pub fn compose(&self, psis: &[Vec<BiPoly>]) -> WeakFunction {
        WeakFunction {
            pullbacks: self.pullbacks.iter().zip(psis).map(|(p, psi)| p.compose(psi)).collect(),
            ambient: self.ambient.clone(),
        }
    }

    pub fn poly(&self, chart: usize) -> Result<&BiPoly> {
        self.pullbacks[chart]
            .as_poly()
            .ok_or_else(|| Error::Factorization(format!("pullback on chart {} is not polynomial", chart + 1)))
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> GaussRat {
    let mut p: i64 = rng.gen_range(-20..=20);
    if p == 0 {
        p = 1;
    }
    GaussRat::from_ratio(p, rng.gen_range(1..=7))
}

pub fn random_point(rng: &mut ChaCha8Rng, k: usize) -> Vec<GaussRat> {
    (0..k).map(|_| random_rational(rng)).collect()
}

/// Check pullbacks against the ambient witness at 20 random chart points per chart.
pub fn check_consistency(space: &SpacePresentation, w: &WeakFunction, seed: u64) -> Result<()> {
    let Some(h) = &w.ambient else { return Ok(()) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (ci, (chart, pb)) in space.charts.iter().zip(&w.pullbacks).enumerate() {
        for _ in 0..20 {
            let p = random_point(&mut rng, chart.arity());
            let Some(v) = pb.eval_exact(&p) else { continue };
            let z: Vec<GaussRat> = chart.map.iter().map(|m| m.eval_exact(&p)).collect();
            if h.eval_exact(&z) != v {
                return Err(Error::Precondition(format!(
                    "pullback on chart {} disagrees with the ambient witness",
                    ci + 1
                )));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum StrongVerdict {
    Yes(BiPoly),
    /// `exact` is set when the exponent-monoid criterion decides the question outright.
    NoUpToBound { bound: u32, exact: bool },
    Unknown(String),
}

/// All exponent vectors of length `n` with total degree `<= d`, graded then lexicographic.
pub fn exponents_up_to(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=d {
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, i: usize, left: u32) {
    if cur.is_empty() {
        if left == 0 {
            out.push(vec![]);
        }
        return;
    }
    if i == cur.len() - 1 {
        cur[i] = left;
        out.push(cur.clone());
        cur[i] = 0;
        return;
    }
    for e in (0..=left).rev() {
        cur[i] = e;
        fill(out, cur, i + 1, left - e);
    }
    cur[i] = 0;
}

fn ambient_monomial(n: usize, a: &[u32]) -> BiPoly {
    BiPoly::monomial(n, Mono::from_parts(a, &vec![0; n]), GaussRat::one())
}

fn sparse_of(p: &BiPoly, chart: usize) -> SparseVec<(usize, Mono)> {
    p.terms().map(|(m, c)| ((chart, m.clone()), c.clone())).collect()
}

/// Search `e = sum alpha_i g_i` with generators `g_i` of the exponent monoid.
fn monoid_decompose(e: &[u32], gens: &[Vec<u32>]) -> Option<Vec<u32>> {
    fn go(e: &[u32], gens: &[Vec<u32>], start: usize, alpha: &mut Vec<u32>) -> bool {
        if e.iter().all(|&x| x == 0) {
            return true;
        }
        for g in start..gens.len() {
            if gens[g].iter().all(|&x| x == 0) {
                continue;
            }
            if gens[g].iter().zip(e).all(|(a, b)| a <= b) {
                let rest: Vec<u32> = e.iter().zip(&gens[g]).map(|(a, b)| a - b).collect();
                alpha[g] += 1;
                if go(&rest, gens, g, alpha) {
                    return true;
                }
                alpha[g] -= 1;
            }
        }
        false
    }
    let mut alpha = vec![0; gens.len()];
    go(e, gens, 0, &mut alpha).then_some(alpha)
}

fn monomial_chart_decide(chart: &NormalizationChart, w: &BiPoly, bound: u32) -> StrongVerdict {
    let n = chart.ambient_dim();
    // Generators: nonzero components, recorded with their coefficient.
    let gens: Vec<(usize, Vec<u32>, GaussRat)> = chart
        .map
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.leading().map(|(m, c)| (i, m.holo().to_vec(), c.clone())))
        .collect();
    let exps: Vec<Vec<u32>> = gens.iter().map(|g| g.1.clone()).collect();
    let mut h = BiPoly::zero(n);
    for (m, c) in w.terms() {
        let Some(alpha) = monoid_decompose(m.holo(), &exps) else {
            return StrongVerdict::NoUpToBound { bound, exact: true };
        };
        let mut a = vec![0u32; n];
        let mut coeff = c.clone();
        for (g, &k) in gens.iter().zip(&alpha) {
            a[g.0] += k;
            coeff = &coeff / &g.2.pow(k);
        }
        h = h.add(&ambient_monomial(n, &a).scale(&coeff));
    }
    StrongVerdict::Yes(h)
}

/// Search an ambient polynomial of degree `<= bound` pulling back to `w` on every chart.
pub fn is_strongly_holomorphic(space: &SpacePresentation, w: &WeakFunction, bound: u32) -> Result<StrongVerdict> {
    let mut polys = Vec::new();
    for pb in &w.pullbacks {
        match pb {
            Pullback::Poly(p) => polys.push(p.clone()),
            Pullback::Ratio { .. } => {
                return Ok(StrongVerdict::Unknown("pullback is a quotient; use pole_set".into()))
            }
        }
    }
    for (p, c) in polys.iter().zip(&space.charts) {
        if !p.is_holomorphic() {
            return Err(Error::Argument("pullbacks must be holomorphic".into()));
        }
        if (bound as u64) * (c.max_degree() as u64) < p.degree() as u64 {
            return Err(Error::Argument(format!(
                "bound {bound} cannot express a pullback of degree {}",
                p.degree()
            )));
        }
    }
    if space.charts.len() == 1 && space.charts[0].is_monomial() {
        return Ok(monomial_chart_decide(&space.charts[0], &polys[0], bound));
    }
    let n = space.ambient_dim;
    let alphas = exponents_up_to(n, bound);
    let mut solver: SpanSolver<(usize, Mono)> = SpanSolver::new();
    for (label, a) in alphas.iter().enumerate() {
        let mut col = BTreeMap::new();
        for (ci, chart) in space.charts.iter().enumerate() {
            col.extend(sparse_of(&pullback(&ambient_monomial(n, a), chart)?, ci));
        }
        solver.add_column(label, col);
    }
    let mut target = BTreeMap::new();
    for (ci, p) in polys.iter().enumerate() {
        target.extend(sparse_of(p, ci));
    }
    Ok(match solver.solve(&target) {
        Some(x) => {
            let mut h = BiPoly::zero(n);
            for (label, c) in x {
                h = h.add(&ambient_monomial(n, &alphas[label]).scale(&c));
            }
            StrongVerdict::Yes(h)
        }
        None => StrongVerdict::NoUpToBound { bound, exact: false },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartComponent {
    pub chart: usize,
    #[serde(skip)]
    pub generators: Vec<BiPoly>,
    /// Generator text in chart variables, for reports.
    pub ideal: Vec<String>,
    pub dimension: i64,
    pub codimension: Option<i64>,
}

impl ChartComponent {
    pub fn new(space: &SpacePresentation, chart: usize, generators: Vec<BiPoly>) -> Result<Self> {
        let k = space.charts[chart].arity();
        let gb = buchberger(&Ideal::new(k, generators.clone(), MonomialOrder::Grevlex)?)?;
        let dim = dimension(&gb);
        let vars = &space.charts[chart].vars;
        let reduced = gb.to_bipolys();
        Ok(ChartComponent {
            chart,
            ideal: reduced.iter().map(|g| crate::algebra::text::print_poly(g, vars)).collect(),
            generators,
            dimension: dim,
            codimension: (dim >= 0).then_some(k as i64 - dim),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.dimension < 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Variety {
    pub components: Vec<ChartComponent>,
    pub bound: Option<u32>,
}

impl Variety {
    pub fn is_empty(&self) -> bool {
        self.components.iter().all(ChartComponent::is_empty)
    }

    /// Max over chart components, as for the image under a finite map; -1 when empty.
    pub fn dimension(&self) -> i64 {
        self.components.iter().map(|c| c.dimension).max().unwrap_or(-1)
    }

    pub fn nonempty(&self) -> impl Iterator<Item = &ChartComponent> {
        self.components.iter().filter(|c| !c.is_empty())
    }
}

/// Chart-wise `V(f'_1, ..., f'_p)`.
pub fn zero_set(space: &SpacePresentation, fs: &[WeakFunction]) -> Result<Variety> {
    let mut comps = Vec::new();
    for ci in 0..space.charts.len() {
        let gens = fs.iter().map(|f| f.poly(ci).cloned()).collect::<Result<Vec<_>>>()?;
        comps.push(ChartComponent::new(space, ci, gens)?);
    }
    Ok(Variety { components: comps, bound: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CiVerdict {
    CompleteIntersection,
    NotCompleteIntersection,
    EmptyZeroSet,
}

/// Every nonempty chart ideal must have codimension `p`; with `p` generators this means `dim = k - p`.
pub fn is_complete_intersection(space: &SpacePresentation, fs: &[WeakFunction]) -> Result<CiVerdict> {
    let z = zero_set(space, fs)?;
    if z.is_empty() {
        return Ok(CiVerdict::EmptyZeroSet);
    }
    let p = fs.len() as i64;
    let ok = z.nonempty().all(|c| c.codimension == Some(p));
    Ok(if ok { CiVerdict::CompleteIntersection } else { CiVerdict::NotCompleteIntersection })
}

fn jacobian_minors(chart: &NormalizationChart) -> Vec<BiPoly> {
    let k = chart.arity();
    let rows: Vec<Vec<BiPoly>> = chart.map.iter().map(|p| (0..k).map(|j| p.derive(j, false)).collect()).collect();
    let mut out = Vec::new();
    let n = rows.len();
    let mut pick: Vec<usize> = (0..k).collect();
    if k > n {
        return vec![BiPoly::zero(k)];
    }
    loop {
        let m: Vec<Vec<BiPoly>> = pick.iter().map(|&r| rows[r].clone()).collect();
        out.push(det(&m, k));
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out.into_iter().filter(|p| !p.is_zero()).collect();
            }
            i -= 1;
            if pick[i] < n - k + i {
                pick[i] += 1;
                for j in i + 1..k {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Determinant by cofactor expansion; matrices here are at most 3x3.
pub fn det(m: &[Vec<BiPoly>], k: usize) -> BiPoly {
    let n = m.len();
    if n == 0 {
        return BiPoly::one(k);
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = BiPoly::zero(k);
    for j in 0..n {
        let minor: Vec<Vec<BiPoly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = m[0][j].mul(&det(&minor, k));
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

/// Minimal index sets `S` with `{t_i = 0 : i in S}` inside the non-immersion locus.
fn degenerate_coordinate_subspaces(chart: &NormalizationChart) -> Vec<Vec<usize>> {
    let k = chart.arity();
    let minors = jacobian_minors(chart);
    if minors.is_empty() {
        return vec![vec![]];
    }
    let mut found: Vec<Vec<usize>> = Vec::new();
    for size in 1..=k {
        for mask in 0u32..(1 << k) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let s: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            if found.iter().any(|f| f.iter().all(|i| s.contains(i))) {
                continue;
            }
            if minors.iter().all(|m| m.kill_vars(&s, true).is_zero()) {
                found.push(s);
            }
        }
    }
    found
}

/// Is the order-`bound` jet of `w` at `p` a jet of some `h(pi(p + u) - pi(p))`?
fn jet_is_pullback(chart: &NormalizationChart, w: &Pullback, p: &[GaussRat], bound: u32) -> Option<bool> {
    let target = w.jet_at(p, bound)?;
    let n = chart.ambient_dim();
    let local: Vec<BiPoly> = chart
        .map
        .iter()
        .map(|c| {
            let s = c.shift(p);
            s.sub(&BiPoly::constant(s.arity(), s.constant_term()))
        })
        .collect();
    let mut solver: SpanSolver<(usize, Mono)> = SpanSolver::new();
    for (label, a) in exponents_up_to(n, bound).iter().enumerate() {
        let mut col = BiPoly::one(chart.arity());
        for (i, &e) in a.iter().enumerate() {
            if e > 0 {
                col = col.mul(&local[i].pow(e)).truncate_total(bound);
            }
        }
        if !col.is_zero() {
            solver.add_column(label, sparse_of(&col, 0));
        }
    }
    Some(solver.solve(&sparse_of(&target, 0)).is_some())
}

/// Chart loci where `w` is not strongly holomorphic, decided by bounded jet tests.
pub fn pole_set(space: &SpacePresentation, w: &WeakFunction, bound: u32, seed: u64) -> Result<Variety> {
    if bound == 0 {
        return Err(Error::Argument("pole_set needs a positive bound".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comps = Vec::new();
    for (ci, chart) in space.charts.iter().enumerate() {
        let pb = &w.pullbacks[ci];
        let k = chart.arity();
        for d in pb.den_factors() {
            if !d.is_constant() {
                comps.push(ChartComponent::new(space, ci, vec![d.make_monic().0])?);
            }
        }
        for s in degenerate_coordinate_subspaces(chart) {
            let mut decided = None;
            for _attempt in 0..5 {
                let mut p = random_point(&mut rng, k);
                for &i in &s {
                    p[i] = GaussRat::zero();
                }
                if let Some(ok) = jet_is_pullback(chart, pb, &p, bound) {
                    decided = Some(ok);
                    break;
                }
            }
            if decided == Some(false) {
                let gens: Vec<BiPoly> = s.iter().map(|&i| BiPoly::var(k, i)).collect();
                comps.push(ChartComponent::new(space, ci, gens)?);
            }
        }
    }
    // Drop duplicates by (chart, reduced ideal).
    let mut seen = Vec::new();
    comps.retain(|c| {
        let key = (c.chart, c.ideal.clone());
        if seen.contains(&key) {
            false
        } else {
            seen.push(key);
            true
        }
    });
    Ok(Variety { components: comps, bound: Some(bound) })
}

/// Whether `point` (chart coordinates) lies on the variety component.
pub fn component_contains(c: &ChartComponent, point: &[GaussRat]) -> bool {
    c.generators.iter().all(|g| g.eval_exact(point).is_zero())
}

/// True if the rational number is zero; helper for reports.
pub fn is_zero_rat(x: &num_rational::BigRational) -> bool {
    x.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::text::{parse_expr, parse_poly, to_ratio};

    fn chart(vars: &[&str], map: &[&str]) -> NormalizationChart {
        let v: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let m = map.iter().map(|s| parse_poly(s, &v).unwrap()).collect();
        NormalizationChart::new(v, m).unwrap()
    }

    fn poly(vars: &[&str], s: &str) -> BiPoly {
        let v: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        parse_poly(s, &v).unwrap()
    }

    #[test]
    fn pullback_examples() {
        let cusp = chart(&["t"], &["t^2", "t^3"]);
        assert_eq!(pullback(&poly(&["z1", "z2"], "z1"), &cusp).unwrap(), poly(&["t"], "t^2"));
        assert_eq!(pullback(&poly(&["z1", "z2"], "z2 - z1^2"), &cusp).unwrap(), poly(&["t"], "t^3 - t^4"));
        let c3 = chart(&["s", "t"], &["s^2", "s^3", "t"]);
        assert_eq!(pullback(&poly(&["z1", "z2", "z3"], "z1*z2"), &c3).unwrap(), poly(&["s", "t"], "s^5"));
    }

    #[test]
    fn cusp_strong_holomorphy() {
        let z = SpacePresentation::single(chart(&["t"], &["t^2", "t^3"]));
        let f = WeakFunction::from_polys(&z, vec![poly(&["t"], "t")]).unwrap();
        assert_eq!(
            is_strongly_holomorphic(&z, &f, 6).unwrap(),
            StrongVerdict::NoUpToBound { bound: 6, exact: true }
        );
        let g = WeakFunction::from_polys(&z, vec![poly(&["t"], "t^2")]).unwrap();
        assert_eq!(is_strongly_holomorphic(&z, &g, 6).unwrap(), StrongVerdict::Yes(poly(&["z1", "z2"], "z1")));
    }

    #[test]
    fn exchintrinsic_zero_and_poles() {
        let z = SpacePresentation::single(chart(&["s", "t"], &["s^2", "s^3", "t"]));
        let f1 = WeakFunction::from_polys(&z, vec![poly(&["s", "t"], "s^2")]).unwrap();
        let f2 = WeakFunction::from_polys(&z, vec![poly(&["s", "t"], "(1+s)*t")]).unwrap();
        let zs = zero_set(&z, &[f1.clone(), f2.clone()]).unwrap();
        assert_eq!(zs.dimension(), 0);
        assert_eq!(is_complete_intersection(&z, &[f1, f2]).unwrap(), CiVerdict::CompleteIntersection);
        let v = vec!["s".to_string(), "t".to_string()];
        let inv = Pullback::from_ratio(to_ratio(&parse_expr("1/((1+s)*t)").unwrap(), &v).unwrap());
        let w = WeakFunction::from_pullbacks(&z, vec![inv]).unwrap();
        let ps = pole_set(&z, &w, 4, 0).unwrap();
        let ideals: Vec<Vec<String>> = ps.components.iter().map(|c| c.ideal.clone()).collect();
        assert!(ideals.contains(&vec!["s".to_string()]));
        assert!(ideals.contains(&vec!["t".to_string()]));
        assert!(ideals.contains(&vec!["s + 1".to_string()]));
    }

    #[test]
    fn cusp_pole_set_is_origin() {
        let z = SpacePresentation::single(chart(&["t"], &["t^2", "t^3"]));
        let f = WeakFunction::from_polys(&z, vec![poly(&["t"], "t")]).unwrap();
        let ps = pole_set(&z, &f, 6, 0).unwrap();
        assert_eq!(ps.components.len(), 1);
        assert_eq!(ps.components[0].ideal, vec!["t".to_string()]);
        let g = WeakFunction::from_polys(&z, vec![poly(&["t"], "t^3")]).unwrap();
        assert!(pole_set(&z, &g, 6, 0).unwrap().components.is_empty());
    }

    #[test]
    fn non_ci_tuple() {
        let z = SpacePresentation::single(chart(&["t1", "t2"], &["t1", "t2"]));
        let f = WeakFunction::from_polys(&z, vec![poly(&["t1", "t2"], "t1")]).unwrap();
        assert_eq!(
            is_complete_intersection(&z, &[f.clone(), f]).unwrap(),
            CiVerdict::NotCompleteIntersection
        );
    }
}
