//! Poincare-Lelong cycles of weakly holomorphic complete intersections.
//!
//! Upstairs multiplicities come from exact pairings of `dbar(1/f') ^ df'` at a point of each
//! component (a transversal slice for curves). Components are grouped by the elimination ideal
//! of their image and weighted by the generic sheet number of the chart map on them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::text::print_poly;
use crate::algebra::{BiPoly, Form, GaussRat, Mono};
use crate::ch::{ch_product, monomializing_changes, CHSpec};
use crate::currents::evaluate;
use crate::gbasis::{buchberger, gcd, Ideal, MonomialOrder};
use crate::space::{
    is_complete_intersection, random_point, CiVerdict, NormalizationChart, SpacePresentation, WeakFunction,
};
use crate::{Error, Result};

/// Samples per generic-point vote, and how many times a split vote is retried.
const VOTES: usize = 3;
const RETRIES: usize = 2;

/// A component upstairs: an isolated chart point or a curve `tau -> chart point`.
#[derive(Clone, Debug, PartialEq)]
pub enum Locus {
    Point(Vec<GaussRat>),
    Curve(Vec<BiPoly>),
}

impl Locus {
    pub fn dimension(&self) -> usize {
        match self {
            Locus::Point(_) => 0,
            Locus::Curve(_) => 1,
        }
    }

    fn describe(&self) -> Vec<String> {
        match self {
            Locus::Point(p) => p.iter().map(|c| c.to_string()).collect(),
            Locus::Curve(g) => g.iter().map(|c| print_poly(c, &["tau".to_string()])).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UpstairsComponent {
    /// 1-based chart index.
    pub chart: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parametrization: Option<Vec<String>>,
    pub alpha: u32,
    pub sheets: u32,
    #[serde(skip)]
    pub locus: Locus,
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleComponent {
    /// Reduced Groebner basis of the image in `z1, ..., zn`.
    pub image: Vec<String>,
    pub dimension: usize,
    pub beta: u32,
    pub upstairs: Vec<UpstairsComponent>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Cycle {
    pub components: Vec<CycleComponent>,
}

impl Cycle {
    /// Multiplicities in component order.
    pub fn betas(&self) -> Vec<u32> {
        self.components.iter().map(|c| c.beta).collect()
    }
}

fn univariate(p: &BiPoly, var: usize) -> BiPoly {
    let mut idx = vec![0; p.arity()];
    idx[var] = 0;
    p.reindex(1, &idx)
}

fn deriv_all(p: &BiPoly) -> Vec<BiPoly> {
    (0..p.arity()).map(|i| p.derive(i, false)).filter(|d| !d.is_zero()).collect()
}

/// `p / gcd(p, dp/dt_1, ..., dp/dt_k)`: the product of the distinct irreducible factors.
pub fn radical(p: &BiPoly) -> Result<BiPoly> {
    if p.is_constant() {
        return Ok(BiPoly::one(p.arity()));
    }
    let mut g = p.clone();
    for d in deriv_all(p) {
        g = gcd(&g, &d)?;
    }
    p.div_exact(&g)
        .map(|q| q.make_monic().0)
        .ok_or_else(|| Error::Argument("radical: gcd does not divide".into()))
}

/// `p = c * prod_j q_j^j` with each `q_j` squarefree; returns the nonconstant `(q_j, j)`.
pub fn squarefree_decomposition(p: &BiPoly) -> Result<Vec<(BiPoly, u32)>> {
    let mut rads = Vec::new();
    let mut r = p.clone();
    while !r.is_constant() {
        let rad = radical(&r)?;
        r = r.div_exact(&rad).ok_or_else(|| Error::Argument("radical does not divide".into()))?;
        rads.push(rad);
    }
    let mut out = Vec::new();
    for j in 0..rads.len() {
        let next = rads.get(j + 1).cloned().unwrap_or_else(|| BiPoly::one(p.arity()));
        let q = rads[j].div_exact(&next).ok_or_else(|| Error::Argument("radicals are not nested".into()))?;
        if !q.is_constant() {
            out.push((q.make_monic().0, j as u32 + 1));
        }
    }
    Ok(out)
}

fn divisors(n: &BigInt) -> Result<Vec<BigInt>> {
    let n = n.abs().to_u64().filter(|&x| x <= 1 << 40).ok_or_else(|| {
        Error::Unsupported("coefficients too large for rational root search".into())
    })?;
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(BigInt::from(d));
            if d * d != n {
                out.push(BigInt::from(n / d));
            }
        }
        d += 1;
    }
    Ok(out)
}

/// Distinct rational roots of a univariate polynomial that splits into them; anything else is unsupported.
pub fn rational_roots(p: &BiPoly) -> Result<Vec<BigRational>> {
    if p.arity() != 1 || !p.is_holomorphic() {
        return Err(Error::Argument("rational_roots expects a holomorphic univariate polynomial".into()));
    }
    let q = radical(p)?;
    let deg = q.holo_degree() as usize;
    let mut coeffs = vec![BigRational::zero(); deg + 1];
    for (m, c) in q.terms() {
        if !c.is_real() {
            return Err(Error::Unsupported("roots outside the rationals".into()));
        }
        coeffs[m.holo()[0] as usize] = c.re.clone();
    }
    let den = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = coeffs.iter().map(|c| (c * BigRational::from_integer(den.clone())).to_integer()).collect();
    let mut roots = Vec::new();
    let low = ints.iter().position(|c| !c.is_zero()).unwrap_or(0);
    if low > 0 {
        roots.push(BigRational::zero());
    }
    let eval = |x: &BigRational| {
        ints.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + BigRational::from_integer(c.clone()))
    };
    if deg > low {
        for p in divisors(&ints[low])? {
            for q in divisors(&ints[deg])? {
                for sign in [1, -1] {
                    let x = BigRational::new(&p * sign, q.clone());
                    if !roots.contains(&x) && eval(&x).is_zero() {
                        roots.push(x);
                    }
                }
            }
        }
    }
    if roots.len() != deg {
        return Err(Error::Unsupported("zero set has points with non-rational coordinates".into()));
    }
    roots.sort();
    Ok(roots)
}

fn rat(x: &BigRational) -> GaussRat {
    GaussRat::from_rational(x.clone())
}

/// `(1/(2 pi i)^p) <dbar(1/f_p) ^ ... ^ dbar(1/f_1) ^ df_1 ^ ... ^ df_p, 1>` at `point`, for `p = k`.
pub fn local_multiplicity(fs: &[BiPoly], point: &[GaussRat]) -> Result<u32> {
    let k = point.len();
    if fs.len() != k {
        return Err(Error::Argument("local multiplicity needs as many functions as variables".into()));
    }
    let shifted: Vec<BiPoly> = fs.iter().map(|f| f.shift(point)).collect();
    if let Some(i) = shifted.iter().position(|f| !f.constant_term().is_zero()) {
        return Err(Error::Argument(format!("f{} does not vanish at the point", i + 1)));
    }
    let ids: Vec<BiPoly> = (0..k).map(|i| BiPoly::var(k, i)).collect();
    let sp = SpacePresentation::single(NormalizationChart::with_default_vars(ids)?);
    let w: Vec<WeakFunction> = shifted.iter().map(|f| WeakFunction::from_polys(&sp, vec![f.clone()])).collect::<Result<_>>()?;
    let psi = monomializing_changes(&sp, &w)?.remove(0);
    let sp = sp.compose(&[psi.clone()])?;
    let w: Vec<WeakFunction> = w.iter().map(|x| x.compose(&[psi.clone()])).collect();
    let ch = ch_product(&sp, &CHSpec::new(w.clone(), k)?)?;
    let mut df = Form::one(k);
    for f in &w {
        df = df.wedge(&Form::function(f.poly(0)?.clone()).d())?;
    }
    let v = evaluate(&ch.exprs[0], &df)?;
    let s = v
        .as_scalar()
        .filter(|s| s.tau_power == k as i32 || s.is_zero())
        .ok_or_else(|| Error::Numeric(format!("multiplicity pairing {v} is not a multiple of (2 pi i)^{k}")))?;
    s.value
        .as_integer()
        .and_then(|n| n.to_u32())
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Numeric(format!("multiplicity {} is not a positive integer", s.value)))
}

/// Majority-free vote: every sample must agree; a split vote is retried with fresh samples.
fn vote(rng: &mut ChaCha8Rng, what: &str, mut sample: impl FnMut(&mut ChaCha8Rng) -> Result<u32>) -> Result<u32> {
    for _ in 0..=RETRIES {
        let mut vals = Vec::with_capacity(VOTES);
        for _ in 0..VOTES {
            vals.push(sample(rng)?);
        }
        if vals.iter().all(|&v| v == vals[0]) {
            return Ok(vals[0]);
        }
    }
    Err(Error::Numeric(format!("{what}: counts disagree across generic samples")))
}

/// Zero-dimensional `V(f)` on a chart with `p = k`, by a lex basis and rational roots.
fn points(fs: &[BiPoly], k: usize) -> Result<Vec<Vec<GaussRat>>> {
    if k == 1 {
        let g = fs.iter().try_fold(BiPoly::zero(1), |acc, f| gcd(&acc, f))?;
        return Ok(rational_roots(&g)?.iter().map(|r| vec![rat(r)]).collect());
    }
    let gb = buchberger(&Ideal::new(2, fs.to_vec(), MonomialOrder::Lex)?)?.to_bipolys();
    let elim = gb
        .iter()
        .find(|p| p.terms().all(|(m, _)| m.holo()[0] == 0))
        .ok_or_else(|| Error::Unsupported("zero set is not zero-dimensional".into()))?;
    let mut out = Vec::new();
    for r2 in rational_roots(&univariate(elim, 1))? {
        let v2 = rat(&r2);
        let g = gb.iter().try_fold(BiPoly::zero(1), |acc, p| gcd(&acc, &univariate(&p.substitute_values(&[(1, v2.clone())]), 0)))?;
        for r1 in rational_roots(&g)? {
            out.push(vec![rat(&r1), v2.clone()]);
        }
    }
    Ok(out)
}

/// Split a squarefree bivariate factor into parametrizable curves.
fn curves_of(q: &BiPoly) -> Result<Vec<Vec<BiPoly>>> {
    let tau = BiPoly::var(1, 0);
    let m = q.monomial_content();
    let mut out = Vec::new();
    for (i, &e) in m.iter().enumerate() {
        if e > 0 {
            // t_i = 0
            let mut g = vec![tau.clone(), tau.clone()];
            g[i] = BiPoly::zero(1);
            out.push(g);
        }
    }
    let q = q.div_holo_monomial(&m);
    if q.is_constant() {
        return Ok(out);
    }
    for i in 0..2 {
        let o = 1 - i;
        // q = a t_i + h(t_o) with a constant: the graph t_i = -h(t_o)/a.
        let deg_i = q.terms().map(|(mm, _)| mm.holo()[i]).max().unwrap_or(0);
        if deg_i == 1 && q.terms().all(|(mm, _)| mm.holo()[i] == 0 || mm.holo()[o] == 0) {
            let mut unit = [0u32; 2];
            unit[i] = 1;
            let a = q.coeff(&Mono::from_parts(&unit, &[0, 0]));
            let h = q.sub(&BiPoly::monomial(2, Mono::from_parts(&unit, &[0, 0]), a.clone()));
            let inv = a.inv().expect("nonzero leading coefficient");
            let ti = univariate(&h, o).scale(&inv).neg();
            let mut g = vec![BiPoly::zero(1), BiPoly::zero(1)];
            g[i] = ti;
            g[o] = tau.clone();
            out.push(g);
            return Ok(out);
        }
    }
    for i in 0..2 {
        if q.terms().all(|(mm, _)| mm.holo()[1 - i] == 0) {
            for r in rational_roots(&univariate(&q, i))? {
                let mut g = vec![tau.clone(), tau.clone()];
                g[i] = BiPoly::constant(1, rat(&r));
                out.push(g);
            }
            return Ok(out);
        }
    }
    Err(Error::Unsupported(
        "curve component is neither a coordinate line, a graph over a coordinate, nor a union of parallel lines".into(),
    ))
}

fn eval_curve(g: &[BiPoly], tau: &GaussRat) -> Vec<GaussRat> {
    g.iter().map(|c| c.eval_exact(std::slice::from_ref(tau))).collect()
}

fn random_tau(rng: &mut ChaCha8Rng) -> GaussRat {
    random_point(rng, 1).remove(0)
}

/// Multiplicity along a curve component: the slice transversal to the graph direction, at a generic point.
fn curve_multiplicity(f: &BiPoly, g: &[BiPoly], rng: &mut ChaCha8Rng) -> Result<u32> {
    // The parameter is one of the coordinates; slice along the other.
    let free = if g[0] == BiPoly::var(1, 0) && g[1] != BiPoly::var(1, 0) { 1 } else { 0 };
    let fixed = 1 - free;
    vote(rng, "curve multiplicity", |rng| {
        let p = eval_curve(g, &random_tau(rng));
        let slice = univariate(&f.substitute_values(&[(fixed, p[fixed].clone())]), free);
        local_multiplicity(&[slice], &[p[free].clone()])
    })
}

/// Components of `V(f')` on one chart with their multiplicities `alpha`.
pub fn upstairs_cycle(chart: &NormalizationChart, fs: &[BiPoly], seed: u64) -> Result<Vec<(Locus, u32)>> {
    let k = chart.arity();
    let p = fs.len();
    if p == k && k <= 2 {
        return points(fs, k)?
            .into_iter()
            .map(|pt| Ok((Locus::Point(pt.clone()), local_multiplicity(fs, &pt)?)))
            .collect();
    }
    if k == 2 && p == 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for (q, _) in squarefree_decomposition(&fs[0])? {
            for g in curves_of(&q)? {
                let alpha = curve_multiplicity(&fs[0], &g, &mut rng)?;
                out.push((Locus::Curve(g), alpha));
            }
        }
        return Ok(out);
    }
    Err(Error::Unsupported(format!(
        "components of dimension {} on a {k}-dimensional chart are outside points and curves",
        k as i64 - p as i64
    )))
}

/// Generic fiber size of the chart map restricted to a component.
pub fn sheet_number(chart: &NormalizationChart, locus: &Locus, seed: u64) -> Result<u32> {
    let g = match locus {
        Locus::Point(_) => return Ok(1),
        Locus::Curve(g) => g,
    };
    let image: Vec<BiPoly> = chart.map.iter().map(|c| c.compose(g)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vote(&mut rng, "sheet number", |rng| {
        let tau0 = random_tau(rng);
        let mut acc = BiPoly::zero(1);
        for c in &image {
            let shifted = c.sub(&BiPoly::constant(1, c.eval_exact(std::slice::from_ref(&tau0))));
            acc = gcd(&acc, &shifted)?;
        }
        if acc.is_zero() {
            return Err(Error::Precondition("the chart map collapses the component to a point".into()));
        }
        Ok(radical(&acc)?.holo_degree())
    })
}

fn ambient_vars(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("z{i}")).collect()
}

/// Reduced basis of the ideal of `pi(locus)` in the ambient variables.
fn image_ideal(chart: &NormalizationChart, locus: &Locus) -> Result<Vec<String>> {
    let n = chart.ambient_dim();
    let vars = ambient_vars(n);
    let polys = match locus {
        Locus::Point(pt) => chart
            .map
            .iter()
            .enumerate()
            .map(|(l, c)| BiPoly::var(n, l).sub(&BiPoly::constant(n, c.eval_exact(pt))))
            .collect(),
        Locus::Curve(g) => {
            // z_l - pi_l(gamma(tau)) in (tau, z); eliminate tau.
            let idx: Vec<usize> = vec![0];
            let gens: Vec<BiPoly> = chart
                .map
                .iter()
                .enumerate()
                .map(|(l, c)| BiPoly::var(n + 1, l + 1).sub(&c.compose(g).reindex(n + 1, &idx)))
                .collect();
            let gb = buchberger(&Ideal::new(n + 1, gens, MonomialOrder::Block(1))?)?;
            let back: Vec<usize> = (0..=n).map(|i| i.saturating_sub(1)).collect();
            gb.to_bipolys()
                .into_iter()
                .filter(|p| p.terms().all(|(m, _)| m.holo()[0] == 0))
                .map(|p| p.reindex(n, &back))
                .collect::<Vec<_>>()
        }
    };
    let gb = buchberger(&Ideal::new(n, polys, MonomialOrder::Grevlex)?)?;
    let mut out: Vec<String> = gb.to_bipolys().iter().map(|p| print_poly(p, &vars)).collect();
    out.sort();
    Ok(out)
}

/// `beta_i = sum k_j alpha_j` over upstairs components with image `W_i`.
pub fn pl_cycle(space: &SpacePresentation, fs: &[WeakFunction], seed: u64) -> Result<Cycle> {
    if is_complete_intersection(space, fs)? != CiVerdict::CompleteIntersection {
        return Err(Error::Precondition(crate::ch::CI_GATE.into()));
    }
    let mut groups: Vec<CycleComponent> = Vec::new();
    for (c, chart) in space.charts.iter().enumerate() {
        let polys = fs.iter().map(|f| f.poly(c).cloned()).collect::<Result<Vec<_>>>()?;
        for (locus, alpha) in upstairs_cycle(chart, &polys, seed)? {
            let sheets = sheet_number(chart, &locus, seed)?;
            let image = image_ideal(chart, &locus)?;
            let desc = locus.describe();
            let up = UpstairsComponent {
                chart: c + 1,
                point: matches!(locus, Locus::Point(_)).then(|| desc.clone()),
                parametrization: matches!(locus, Locus::Curve(_)).then_some(desc),
                alpha,
                sheets,
                locus: locus.clone(),
            };
            match groups.iter_mut().find(|g| g.image == image) {
                Some(g) => {
                    g.beta += sheets * alpha;
                    g.upstairs.push(up);
                }
                None => groups.push(CycleComponent { image, dimension: locus.dimension(), beta: sheets * alpha, upstairs: vec![up] }),
            }
        }
    }
    groups.sort_by(|a, b| (a.dimension, &a.image).cmp(&(b.dimension, &b.image)));
    Ok(Cycle { components: groups })
}
