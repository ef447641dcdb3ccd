//! Toric monomialization in chart dimension at most two.
//!
//! Every chart is a unimodular monomial map `t_i = prod_j s_j^{M_ij}`; its owned cone is
//! spanned by the columns of `M`. Point blow-ups are star subdivisions at `u + v`, and
//! principalization refines the Newton fan with Hirzebruch-Jung subdivisions.

use crate::algebra::text::print_poly;
use crate::algebra::{BiPoly, Form, ScalarSum};
use crate::currents::{pushforward_pair, ChartCurrents, MonomialUnit};
use crate::error::{Error, Result};
use crate::space::{NormalizationChart, SpacePresentation};
use num_integer::Integer;
use serde::Serialize;

/// Maximum number of star subdivisions per call.
pub const BLOWUP_BUDGET: usize = 25;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToricChart {
    /// Column `j` is the weight vector of `s_j`.
    pub matrix: Vec<Vec<i64>>,
    pub trail: Vec<String>,
}

impl ToricChart {
    pub fn identity(k: usize) -> Self {
        ToricChart {
            matrix: (0..k).map(|i| (0..k).map(|j| i64::from(i == j)).collect()).collect(),
            trail: vec![],
        }
    }

    fn from_rays(u: [i64; 2], v: [i64; 2], trail: Vec<String>) -> Self {
        ToricChart { matrix: vec![vec![u[0], v[0]], vec![u[1], v[1]]], trail }
    }

    pub fn k(&self) -> usize {
        self.matrix.len()
    }

    pub fn rays(&self) -> Vec<Vec<i64>> {
        let k = self.k();
        (0..k).map(|j| (0..k).map(|i| self.matrix[i][j]).collect()).collect()
    }

    fn ray2(&self, j: usize) -> [i64; 2] {
        [self.matrix[0][j], self.matrix[1][j]]
    }

    pub fn det(&self) -> i64 {
        match self.k() {
            1 => self.matrix[0][0],
            2 => self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0],
            _ => unreachable!("chart dimension is at most two"),
        }
    }

    /// `t_i` as a monomial in the chart variables.
    pub fn map(&self) -> Vec<BiPoly> {
        self.matrix
            .iter()
            .map(|row| BiPoly::holo_monomial(&row.iter().map(|&e| e as u32).collect::<Vec<_>>()))
            .collect()
    }

    /// `self` followed by `inner`: `t = s^M`, `s = r^N` gives `t = r^(MN)`.
    pub fn then(&self, inner: &ToricChart) -> ToricChart {
        let k = self.k();
        let matrix = (0..k)
            .map(|i| (0..k).map(|j| (0..k).map(|l| self.matrix[i][l] * inner.matrix[l][j]).sum()).collect())
            .collect();
        let mut trail = self.trail.clone();
        trail.extend(inner.trail.iter().cloned());
        ToricChart { matrix, trail }
    }
}

fn det2(u: [i64; 2], v: [i64; 2]) -> i64 {
    u[0] * v[1] - u[1] * v[0]
}

fn primitive(v: [i64; 2]) -> [i64; 2] {
    let g = v[0].gcd(&v[1]);
    [v[0] / g, v[1] / g]
}

/// Regular refinement of the cone `(u, v)` with `det(u, v) > 0`.
pub fn hirzebruch_jung(u: [i64; 2], v: [i64; 2]) -> Vec<[i64; 2]> {
    let mut rays = vec![u];
    let mut cur = u;
    loop {
        let d = det2(cur, v);
        if d == 1 {
            break;
        }
        let q = (0..d)
            .find(|q| (v[0] + q * cur[0]) % d == 0 && (v[1] + q * cur[1]) % d == 0)
            .expect("a lattice point exists in every nonregular cone");
        cur = [(v[0] + q * cur[0]) / d, (v[1] + q * cur[1]) / d];
        rays.push(cur);
    }
    rays.push(v);
    rays
}

/// Inner normals of the compact edges of `conv(points) + R^2_{>=0}`.
pub fn newton_rays(points: &[[i64; 2]]) -> Vec<[i64; 2]> {
    let mut pts: Vec<[i64; 2]> = points.to_vec();
    pts.sort();
    pts.dedup();
    // Pareto-minimal points, x ascending and y descending.
    let mut front: Vec<[i64; 2]> = Vec::new();
    for p in pts {
        if front.last().is_none_or(|q| p[1] < q[1]) {
            front.push(p);
        }
    }
    let mut hull: Vec<[i64; 2]> = Vec::new();
    for p in front {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull.windows(2).map(|w| primitive([w[0][1] - w[1][1], w[1][0] - w[0][0]])).collect()
}

#[derive(Clone, Debug)]
pub struct ResolutionAtlas {
    pub k: usize,
    pub charts: Vec<ToricChart>,
    pub targets: Vec<BiPoly>,
    pub factorizations: Vec<Vec<MonomialUnit>>,
}

fn factor_all(targets: &[BiPoly], chart: &ToricChart) -> Option<Vec<MonomialUnit>> {
    let map = chart.map();
    targets.iter().map(|f| MonomialUnit::from_poly(&f.compose(&map)).ok()).collect()
}

fn check_inputs(targets: &[BiPoly], k: usize) -> Result<()> {
    if k == 0 || k > 2 {
        return Err(Error::Unsupported(format!("toric resolution handles chart dimension 1 or 2, got {k}")));
    }
    for f in targets {
        if f.arity() != k || !f.is_holomorphic() {
            return Err(Error::Argument("targets must be holomorphic chart polynomials".into()));
        }
        if f.is_zero() {
            return Err(Error::Argument("cannot monomialize the zero function".into()));
        }
    }
    Ok(())
}

/// Star-subdivide chart origins until every target is a monomial times a unit.
pub fn monomialize(targets: &[BiPoly], k: usize) -> Result<ResolutionAtlas> {
    check_inputs(targets, k)?;
    let root = ToricChart::identity(k);
    let mut done = Vec::new();
    let mut todo = vec![root];
    let mut steps = 0;
    while let Some(c) = todo.pop() {
        if let Some(fs) = factor_all(targets, &c) {
            done.push((c, fs));
            continue;
        }
        if k == 1 {
            unreachable!("every nonzero polynomial in one variable is a monomial times a unit");
        }
        steps += 1;
        if steps > BLOWUP_BUDGET {
            return Err(Error::Resolution(format!(
                "blow-up budget of {BLOWUP_BUDGET} exceeded; input is outside the supported class"
            )));
        }
        let (u, v) = (c.ray2(0), c.ray2(1));
        let w = [u[0] + v[0], u[1] + v[1]];
        let mut t1 = c.trail.clone();
        t1.push(format!("blowup {}", steps));
        let mut t2 = t1.clone();
        t1.push("chart 1".into());
        t2.push("chart 2".into());
        // Push in reverse angular order so charts come out sorted from (1,0) to (0,1).
        todo.push(ToricChart::from_rays(w, v, t2));
        todo.push(ToricChart::from_rays(u, w, t1));
    }
    let (charts, factorizations) = done.into_iter().unzip();
    Ok(ResolutionAtlas { k, charts, targets: targets.to_vec(), factorizations })
}

/// Monomialize, then refine so that on each chart one target monomial divides all others.
pub fn principalize(targets: &[BiPoly], k: usize) -> Result<ResolutionAtlas> {
    principalize_groups(&[targets.to_vec()], k)
}

/// Like [`principalize`], but each group is principalized separately on a common fan.
/// The atlas targets are the groups concatenated in order.
pub fn principalize_groups(groups: &[Vec<BiPoly>], k: usize) -> Result<ResolutionAtlas> {
    let targets: Vec<BiPoly> = groups.concat();
    let base = monomialize(&targets, k)?;
    if k == 1 {
        return Ok(base);
    }
    let targets = &targets[..];
    let mut charts = Vec::new();
    let mut factorizations = Vec::new();
    for (c, fs) in base.charts.iter().zip(&base.factorizations) {
        let mut fan = vec![[1, 0]];
        let mut inner = Vec::new();
        let mut start = 0;
        for g in groups {
            let pts: Vec<[i64; 2]> = fs[start..start + g.len()].iter().map(|f| [f.m[0], f.m[1]]).collect();
            start += g.len();
            inner.extend(newton_rays(&pts));
        }
        inner.sort();
        inner.dedup();
        inner.sort_by(|a, b| (a[1] * b[0]).cmp(&(b[1] * a[0])));
        fan.extend(inner.into_iter().filter(|r| r[0] > 0 && r[1] > 0));
        fan.push([0, 1]);
        let mut regular = vec![fan[0]];
        for w in fan.windows(2) {
            regular.extend(hirzebruch_jung(w[0], w[1]).into_iter().skip(1));
        }
        for (i, w) in regular.windows(2).enumerate() {
            let trail = if regular.len() > 2 { vec![format!("newton cone {}", i + 1)] } else { vec![] };
            let sub = c.then(&ToricChart::from_rays(w[0], w[1], trail));
            let fs = factor_all(targets, &sub)
                .ok_or_else(|| Error::Resolution("refinement lost the monomial factorization".into()))?;
            charts.push(sub);
            factorizations.push(fs);
        }
    }
    let atlas = ResolutionAtlas { k, charts, targets: targets.to_vec(), factorizations };
    let mut start = 0;
    for g in groups {
        let ok = atlas.factorizations.iter().all(|fs| is_principal_tuple(&fs[start..start + g.len()]));
        if !ok {
            return Err(Error::Resolution("Newton fan refinement did not principalize".into()));
        }
        start += g.len();
    }
    Ok(atlas)
}

fn is_principal_tuple(fs: &[MonomialUnit]) -> bool {
    fs.iter().any(|f| fs.iter().all(|g| f.m.iter().zip(&g.m).all(|(a, b)| a <= b)))
}

impl ResolutionAtlas {
    /// Each chart has a target whose monomial divides every other target monomial.
    pub fn is_principal(&self) -> bool {
        self.factorizations.iter().all(|fs| is_principal_tuple(fs))
    }

    /// Substitute each chart map and re-derive the factorization exactly.
    pub fn verify(&self) -> Result<()> {
        for (c, (chart, fs)) in self.charts.iter().zip(&self.factorizations).enumerate() {
            if chart.det().abs() != 1 {
                return Err(Error::Resolution(format!("chart {} is not unimodular", c + 1)));
            }
            let again = factor_all(&self.targets, chart)
                .ok_or_else(|| Error::Resolution(format!("chart {}: a target is not a monomial times a unit", c + 1)))?;
            if &again != fs {
                return Err(Error::Resolution(format!("chart {}: recorded factorization is stale", c + 1)));
            }
        }
        self.check_partition()
    }

    /// Owned cones cover the positive quadrant with disjoint interiors.
    pub fn check_partition(&self) -> Result<()> {
        if self.k == 1 {
            return if self.charts.len() == 1 { Ok(()) } else { Err(Error::Resolution("duplicate charts".into())) };
        }
        let mut cones: Vec<([i64; 2], [i64; 2])> = self
            .charts
            .iter()
            .map(|c| {
                let (u, v) = (c.ray2(0), c.ray2(1));
                if det2(u, v) > 0 {
                    (u, v)
                } else {
                    (v, u)
                }
            })
            .collect();
        cones.sort_by(|a, b| (a.0[1] * b.0[0]).cmp(&(b.0[1] * a.0[0])));
        let mut at = [1, 0];
        for (u, v) in &cones {
            if *u != at {
                return Err(Error::Resolution(format!("cones do not tile the quadrant near ray {:?}", at)));
            }
            at = *v;
        }
        if at != [0, 1] {
            return Err(Error::Resolution("cones do not reach the ray (0,1)".into()));
        }
        Ok(())
    }

    /// Charts composed with a base chart, as a space presentation.
    pub fn space_over(&self, base: &NormalizationChart) -> Result<SpacePresentation> {
        let vars: Vec<String> = (1..=self.k).map(|i| format!("s{i}")).collect();
        let charts = self
            .charts
            .iter()
            .map(|c| NormalizationChart::new(vars.clone(), base.map.iter().map(|p| p.compose(&c.map())).collect()))
            .collect::<Result<Vec<_>>>()?;
        SpacePresentation::new(charts)
    }

    pub fn dump(&self) -> AtlasDump {
        let vars: Vec<String> = (1..=self.k).map(|i| format!("s{i}")).collect();
        AtlasDump {
            charts: self
                .charts
                .iter()
                .zip(&self.factorizations)
                .map(|(c, fs)| ChartDump {
                    matrix: c.matrix.clone(),
                    cone_rays: c.rays(),
                    trail: c.trail.clone(),
                    factorizations: fs.iter().map(|f| factorization_text(f, &vars)).collect(),
                })
                .collect(),
        }
    }
}

fn factorization_text(f: &MonomialUnit, vars: &[String]) -> String {
    let mut parts: Vec<String> = f
        .m
        .iter()
        .enumerate()
        .filter(|(_, &e)| e != 0)
        .map(|(i, &e)| if e == 1 { vars[i].clone() } else { format!("{}^{}", vars[i], e) })
        .collect();
    let num = print_poly(&f.num, vars);
    if num != "1" {
        parts.push(format!("({num})"));
    }
    let mut s = if parts.is_empty() { "1".to_string() } else { parts.join("*") };
    for d in &f.den {
        s.push_str(&format!("/({})", print_poly(d, vars)));
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct AtlasDump {
    pub charts: Vec<ChartDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartDump {
    pub matrix: Vec<Vec<i64>>,
    pub cone_rays: Vec<Vec<i64>>,
    pub trail: Vec<String>,
    pub factorizations: Vec<String>,
}

/// Pair per-chart expressions with a test form on the unresolved chart.
///
/// Chart origins are distinct points upstairs, so point-supported terms are owned by
/// exactly one chart. Terms along a coordinate axis lie on a face shared by two cones.
pub fn pushforward_from_atlas(atlas: &ResolutionAtlas, exprs: &ChartCurrents, test: &Form) -> Result<ScalarSum> {
    if exprs.exprs.len() != atlas.charts.len() {
        return Err(Error::Argument("one expression per atlas chart is required".into()));
    }
    if atlas.charts.len() > 1 {
        for (c, e) in exprs.exprs.iter().enumerate() {
            if let Some(t) = e.terms.iter().find(|t| t.residue_vars().len() < atlas.k) {
                let vars: Vec<String> = (1..=atlas.k).map(|i| format!("s{i}")).collect();
                return Err(Error::Ambiguity(format!(
                    "chart {}: term {} is supported on a face shared by several cones",
                    c + 1,
                    t.display(&vars)
                )));
            }
        }
    }
    let id = NormalizationChart::with_default_vars((0..atlas.k).map(|i| BiPoly::var(atlas.k, i)).collect())?;
    let space = atlas.space_over(&id)?;
    pushforward_pair(&space, exprs, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::text::parse_poly;
    use crate::algebra::{FormBasis, Scalar};
    use crate::ch::{ch_product, CHSpec};
    use crate::space::WeakFunction;

    fn polys(v: &[&str], fs: &[&str]) -> Vec<BiPoly> {
        let v: Vec<String> = v.iter().map(|s| s.to_string()).collect();
        fs.iter().map(|f| parse_poly(f, &v).unwrap()).collect()
    }

    #[test]
    fn monomial_input_is_identity() {
        let a = monomialize(&polys(&["t1", "t2"], &["t1", "t2"]), 2).unwrap();
        assert_eq!(a.charts, vec![ToricChart::identity(2)]);
        a.verify().unwrap();
    }

    #[test]
    fn newton_fan_of_t1sq_t2cube() {
        assert_eq!(newton_rays(&[[2, 0], [0, 3]]), vec![[3, 2]]);
        assert_eq!(hirzebruch_jung([1, 0], [3, 2]), vec![[1, 0], [2, 1], [3, 2]]);
        let a = principalize(&polys(&["t1", "t2"], &["t1^2", "t2^3"]), 2).unwrap();
        a.verify().unwrap();
        assert!(a.is_principal());
        let rays: Vec<Vec<i64>> = a.charts.iter().flat_map(|c| c.rays()).collect();
        assert!(rays.contains(&vec![3, 2]));
        assert_eq!(a.charts.len(), 4);
    }

    #[test]
    fn cusp_resolution() {
        let a = monomialize(&polys(&["t1", "t2"], &["t2^2 - t1^3"]), 2).unwrap();
        a.verify().unwrap();
        assert_eq!(a.charts.len(), 4);
        assert!(a.charts.iter().all(|c| c.trail.iter().filter(|s| s.starts_with("blowup")).count() <= 3));
    }

    #[test]
    fn budget_exceeded() {
        // Two smooth branches tangent to order 30 need more than 25 blow-ups.
        let e = monomialize(&polys(&["t1", "t2"], &["t2*(t2 - t1^30)"]), 2);
        assert!(matches!(e, Err(Error::Resolution(_))));
    }

    #[test]
    fn two_chart_pushforward_matches_direct() {
        let k = 2;
        let targets = polys(&["t1", "t2"], &["t1", "t2"]);
        let id = NormalizationChart::with_default_vars(targets.clone()).unwrap();
        // Atlas along the ray (1,1): one blow-up of the origin.
        let atlas = ResolutionAtlas {
            k,
            charts: vec![ToricChart::from_rays([1, 0], [1, 1], vec![]), ToricChart::from_rays([1, 1], [0, 1], vec![])],
            targets: targets.clone(),
            factorizations: vec![],
        };
        let space = atlas.space_over(&id).unwrap();
        let fs: Vec<WeakFunction> = (0..2)
            .map(|i| WeakFunction::from_polys(&space, space.charts.iter().map(|c| c.map[i].clone()).collect()).unwrap())
            .collect();
        let up = ch_product(&space, &CHSpec::new(fs, 2).unwrap()).unwrap();
        let test = Form::basis(2, FormBasis::new(vec![0, 1], vec![]), BiPoly::one(2));
        let v = pushforward_from_atlas(&atlas, &up, &test).unwrap();
        assert_eq!(v, ScalarSum::from_scalar(&Scalar::tau_pow(2)));
    }
}
