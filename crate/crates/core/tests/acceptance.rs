//! Acceptance criteria, one printed line each.
//!
//! Runs without the libtest harness so the per-criterion lines always reach the output.
//! Tolerances and runtime limits are pinned below; a criterion passes only if its checks hold
//! and it finishes within its limit.

mod common;

use common::{ambient, chart, exchintrinsic_oracle, wf};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use residue_core::algebra::text::{parse_expr, parse_poly, to_ratio};
use residue_core::algebra::{BiPoly, Form, FormBasis, GaussRat, Mono};
use residue_core::bm::checks::{bm_vs_ch, f_independence_check, taylor_order_check};
use residue_core::bm::continuation::{continue_at_zero, ContinuationIntegral, QuadParams};
use residue_core::bm::cutoff::ChartCutoff;
use residue_core::bm::pairing::{bm_pairing, prepare, BMSpec, Part};
use residue_core::ch::{
    ch_product, check_annihilation, check_commutation, check_leibniz, transformation_check, CHSpec,
};
use residue_core::currents::{
    ambient_test_forms, compare_on_z, evaluate, pair_batch, pushforward_pair, restrict_complement, weak_mul,
    ChartCurrents, ResidueExpr, Term,
};
use residue_core::pl::pl_cycle;
use residue_core::space::{
    component_contains, is_complete_intersection, is_strongly_holomorphic, pole_set, zero_set, CiVerdict,
    NormalizationChart, Pullback, SpacePresentation, StrongVerdict, WeakFunction,
};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

/// Numeric agreement for BM against CH, F-independence and the lambda-oracle constant.
const TOL_BM: f64 = 1e-6;
/// Numeric agreement for the continuation engine and the conjugate-annihilation oracle.
const TOL_ENGINE: f64 = 1e-8;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Check); 10] = [
        (1, "exmultcholo n=2", secs(5), exmultcholo),
        (2, "exchintrinsic", secs(10), exchintrinsic),
        (3, "zero-set suite", secs(2), zero_sets),
        (4, "Coleff-Herrera identities", secs(60), ch_identities),
        (5, "transformation law", secs(30), transformation),
        (6, "BM = CH", secs(600), bm_equals_ch),
        (7, "F-independence", secs(180), f_independence),
        (8, "Poincare-Lelong", secs(5), poincare_lelong),
        (9, "pseudomeromorphic structure", secs(300), pseudomeromorphic),
        (10, "continuation self-check", secs(120), continuation_self_check),
    ];
    let mut failed = 0;
    for (n, name, limit, run) in criteria {
        let start = Instant::now();
        let res = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let took = start.elapsed();
        let res = res.and_then(|d| {
            if took <= limit {
                Ok(d)
            } else {
                Err(format!("{d}; runtime exceeds the limit"))
            }
        });
        let (tag, detail) = match res {
            Ok(d) => ("PASS", d),
            Err(e) => {
                failed += 1;
                ("FAIL", e)
            }
        };
        println!("criterion {n:>2} {tag} {name} ({:.2}s of {}s): {detail}", took.as_secs_f64(), limit.as_secs());
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn identity_space(k: usize) -> SpacePresentation {
    SpacePresentation::single(NormalizationChart::with_default_vars((0..k).map(|i| BiPoly::var(k, i)).collect()).unwrap())
}

fn tvars(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("t{i}")).collect()
}

fn polys(sp: &SpacePresentation, per_chart: &[&str]) -> WeakFunction {
    let ps = per_chart.iter().zip(&sp.charts).map(|(s, c)| parse_poly(s, &c.vars).unwrap()).collect();
    WeakFunction::from_polys(sp, ps).unwrap()
}

fn tuple(sp: &SpacePresentation, fs: &[String]) -> Vec<WeakFunction> {
    fs.iter().map(|s| wf(sp, s)).collect()
}

fn exmultcholo() -> Check {
    let sp = chart(&["t1", "t2"], &["t1", "t1^2*t2", "t2^2", "t2^5"]);
    let s = ch_product(&sp, &CHSpec::new(vec![wf(&sp, "t1"), wf(&sp, "t2^3")], 2).unwrap()).unwrap();
    let forms = ambient_test_forms(4, 6, &s.needed_bidegrees());
    let vals = pair_batch(&sp, &s, &forms, 6).unwrap();
    let nonzero = vals.iter().filter(|v| !v.is_zero()).count();
    ensure!(nonzero == 0, "{nonzero} of {} pairings of S~ are nonzero", forms.len());

    let g = wf(&sp, "t2");
    ensure!(
        matches!(is_strongly_holomorphic(&sp, &g, 10).unwrap(), StrongVerdict::NoUpToBound { .. }),
        "g should not be strongly holomorphic up to degree 10"
    );
    let gs = weak_mul(&g, &s).unwrap();
    let v = pushforward_pair(&sp, &gs, &ambient(4, vec![0, 2])).unwrap();
    ensure!(v.to_string() == "2*tau^2", "<t2 S~, dz1^dz3> = {v}, expected 2*tau^2");
    let zero = ChartCurrents::zero(&sp);
    ensure!(!compare_on_z((&sp, &gs), (&sp, &zero), 6).unwrap().is_equal(), "t2 S~ compares equal to 0");
    Ok(format!(
        "all {} pairings of S~ up to degree 6 are exactly 0; <t2 S~, dz1^dz3> = {v} = 2(2 pi i)^2",
        forms.len()
    ))
}

fn exchintrinsic() -> Check {
    let sp = chart(&["s", "t"], &["s^2", "s^3", "t"]);
    let fs = vec![wf(&sp, "s^2"), wf(&sp, "(1+s)*t")];
    let zs = zero_set(&sp, &fs).unwrap();
    let origin = [GaussRat::from_int(0), GaussRat::from_int(0)];
    ensure!(zs.dimension() == 0, "zero set has dimension {}", zs.dimension());
    ensure!(zs.nonempty().all(|c| component_contains(c, &origin)), "zero set is not the origin");
    let ci = is_complete_intersection(&sp, &fs).unwrap();
    ensure!(ci == CiVerdict::CompleteIntersection, "verdict {ci:?}");

    let vars = sp.charts[0].vars.clone();
    let inv = Pullback::from_ratio(to_ratio(&parse_expr("1/((1+s)*t)").unwrap(), &vars).unwrap());
    let w = WeakFunction::from_pullbacks(&sp, vec![inv]).unwrap();
    let poles = pole_set(&sp, &w, 4, 0).unwrap();
    let pt = |s: i64, t: i64| [GaussRat::from_int(s), GaussRat::from_int(t)];
    for (label, p) in [("s = 0", pt(0, 5)), ("s = -1", pt(-1, 3)), ("t = 0", pt(7, 0))] {
        ensure!(poles.nonempty().any(|c| component_contains(c, &p)), "pole set misses {label}");
    }
    ensure!(!poles.nonempty().any(|c| component_contains(c, &pt(2, 3))), "pole set contains a regular point");

    let ch = ch_product(&sp, &CHSpec::new(fs, 2).unwrap()).unwrap();
    let exact = pushforward_pair(&sp, &ch, &ambient(3, vec![0, 2])).unwrap();
    ensure!(exact.to_string() == "2*tau^2", "CH pairing {exact}");
    let oracle = exchintrinsic_oracle();
    let dev = (oracle - exact.to_c64()).norm();
    ensure!(dev <= TOL_BM, "lambda-oracle {oracle} deviates by {dev:e}");
    let paper = Complex64::new(0.0, 4.0 * PI);
    Ok(format!(
        "Z_f = {{0}}, CI; poles cover s=0, s=-1, t=0 at bound 4; <mu, dz1^dz3> = {exact} = {:.6} \
         (lambda-oracle deviation {dev:.1e}; printed value 4 pi i = {:.6}i)",
        exact.to_c64().re,
        paper.im
    ))
}

fn zero_sets() -> Check {
    // Z1 = C^3 x 0 and Z2 = 0 x C^3, one chart each.
    let map1: Vec<BiPoly> = (0..6).map(|i| if i < 3 { BiPoly::var(3, i) } else { BiPoly::zero(3) }).collect();
    let map2: Vec<BiPoly> = (0..6).map(|i| if i >= 3 { BiPoly::var(3, i - 3) } else { BiPoly::zero(3) }).collect();
    let sp = SpacePresentation::new(vec![
        NormalizationChart::with_default_vars(map1).unwrap(),
        NormalizationChart::with_default_vars(map2).unwrap(),
    ])
    .unwrap();
    let f = polys(&sp, &["t1", "1"]);
    let g = polys(&sp, &["1", "t1"]);
    for (name, h) in [("f", &f), ("g", &g)] {
        let z = zero_set(&sp, &[h.clone()]).unwrap();
        ensure!(z.nonempty().count() == 1, "Z_{name} should lie on one chart");
        ensure!(z.nonempty().all(|c| c.codimension == Some(1)), "Z_{name} is not of codimension 1");
    }
    let both = zero_set(&sp, &[f.clone(), g.clone()]).unwrap();
    ensure!(both.is_empty(), "Z_(f,g) is not empty");
    ensure!(is_complete_intersection(&sp, &[f, g]).unwrap() == CiVerdict::EmptyZeroSet, "verdict is not empty_zero_set");

    let cusp2 = chart(&["t1", "t2"], &["t1^2", "t1^3", "t2^2", "t2^3"]);
    let h = wf(&cusp2, "t1 - t2");
    let z = zero_set(&cusp2, &[h.clone()]).unwrap();
    ensure!(z.dimension() == 1 && z.nonempty().all(|c| c.codimension == Some(1)), "Z_f is not a curve");
    let v = is_strongly_holomorphic(&cusp2, &h, 6).unwrap();
    ensure!(matches!(v, StrongVerdict::NoUpToBound { bound: 6, .. }), "strong-holomorphy verdict {v:?}");
    Ok("Z_f, Z_g codim 1 and Z_(f,g) empty; t1 - t2 has a codim-1 curve and no strong witness to degree 6".into())
}

fn ch_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut leibniz, mut closed, mut commuted, mut annihilated, mut absorbed) = (0, 0, 0, 0, 0);
    for i in 0..20 {
        let e = |rng: &mut ChaCha8Rng| rng.gen_range(1..=4u32);
        let (k, fs, p): (usize, Vec<String>, usize) = match i % 4 {
            0 => (1, vec![format!("t1^{}", e(&mut rng))], 1),
            1 => (2, vec![format!("t1^{}*t2^{}", e(&mut rng), rng.gen_range(0..=4u32))], 1),
            _ => {
                let (x, y) = if rng.gen_bool(0.5) { ("t1", "t2") } else { ("t2", "t1") };
                (2, vec![format!("{x}^{}", e(&mut rng)), format!("{y}^{}", e(&mut rng))], 1 + i % 4 / 3)
            }
        };
        let sp = identity_space(k);
        let ws = tuple(&sp, &fs);
        let spec = CHSpec::new(ws.clone(), p).unwrap();
        let label = format!("{fs:?} res {p}");

        ensure!(check_leibniz(&sp, &spec, 4).unwrap().passed(), "Leibniz fails for {label}");
        leibniz += 1;
        let ch = ch_product(&sp, &spec).unwrap();
        if p == ws.len() {
            ensure!(ch.exprs.iter().all(|x| x.dbar().is_zero()), "dbar of {label} is not 0");
            closed += 1;
        }
        if p == 2 {
            let r = check_commutation(&sp, &spec, &[1, 0], 4).unwrap();
            ensure!(r.passed() && r.notes.iter().any(|n| n == "sign -1"), "commutation fails for {label}: {r:?}");
            // Without the sign the two orders must differ.
            let swapped = ch_product(&sp, &spec.clone().with_order(vec![1, 0]).unwrap()).unwrap();
            ensure!(!compare_on_z((&sp, &swapped), (&sp, &ch), 4).unwrap().is_equal(), "sign of {label} is not visible");
            commuted += 1;
        }
        for j in 0..ws.len() {
            let r = check_annihilation(&sp, &spec, j, 4).unwrap();
            ensure!(r.passed(), "f{} times {label}: {r:?}", j + 1);
            if j < p {
                annihilated += 1;
            } else {
                absorbed += 1;
            }
        }
    }
    Ok(format!(
        "20 tuples: Leibniz {leibniz}, dbar-closed {closed}, anticommuting {commuted}, \
         f_j mu = 0 {annihilated}, PV absorption {absorbed}"
    ))
}

fn weak(sp: &SpacePresentation, p: &BiPoly) -> WeakFunction {
    WeakFunction::from_polys(sp, vec![p.clone()]).unwrap()
}

fn transformation() -> Check {
    let sp = identity_space(2);
    let v = tvars(2);
    let pp = |s: &str| parse_poly(s, &v).unwrap();
    let (one, zero) = (BiPoly::one(2), BiPoly::zero(2));
    let run = |f: [BiPoly; 2], a: [[BiPoly; 2]; 2]| -> bool {
        let g: Vec<BiPoly> = (0..2).map(|i| a[i][0].mul(&f[0]).add(&a[i][1].mul(&f[1]))).collect();
        let fw: Vec<WeakFunction> = f.iter().map(|x| weak(&sp, x)).collect();
        let gw: Vec<WeakFunction> = g.iter().map(|x| weak(&sp, x)).collect();
        let aw: Vec<Vec<WeakFunction>> = a.iter().map(|r| r.iter().map(|x| weak(&sp, x)).collect()).collect();
        transformation_check(&sp, &fw, &gw, &aw, 4).unwrap().passed()
    };
    ensure!(
        run([pp("t1"), pp("t2")], [[one.clone(), zero.clone()], [pp("t1"), one.clone()]]),
        "fixture A = [[1, 0], [t1, 1]] fails"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut shown = Vec::new();
    for i in 0..5 {
        // h depends only on the variable left alone by the coordinate change, so g inverts polynomially.
        let var = if i % 2 == 0 { "t1" } else { "t2" };
        let terms: Vec<String> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let c = [-3, -2, -1, 1, 2, 3][rng.gen_range(0..6)];
                format!("{c}*{var}^{}", rng.gen_range(0..=2u32))
            })
            .collect();
        let h = pp(&terms.join(" + "));
        let e = rng.gen_range(1..=3u32);
        let ok = if i % 2 == 0 {
            run([pp(&format!("t1^{e}")), pp("t2")], [[one.clone(), zero.clone()], [h, one.clone()]])
        } else {
            run([pp("t1"), pp(&format!("t2^{e}"))], [[one.clone(), h], [zero.clone(), one.clone()]])
        };
        ensure!(ok, "random unipotent fixture {} fails (h = {})", i + 1, terms.join(" + "));
        shown.push(terms.join(" + "));
    }
    Ok(format!("fixture and 5 unipotent fixtures pass at bound 4 (h = {})", shown.join("; ")))
}

fn bm_equals_ch() -> Check {
    let sp = identity_space(2);
    let params = QuadParams::default();
    let mut out = Vec::new();
    for fs in [["t1", "t2"], ["t1^2", "t2"], ["t1^2", "t2^3"]] {
        let ws = tuple(&sp, &fs.map(String::from));
        let r = bm_vs_ch(&sp, &ws, 3, TOL_BM, params).unwrap();
        ensure!(r.passed(), "top grade for {fs:?}: {r:?}");
        let charts = prepare(&sp, &BMSpec::new(ws).unwrap()).unwrap();
        let mut lower: f64 = 0.0;
        let forms = ambient_test_forms(2, 3, &[(2, 1)]);
        for tf in &forms {
            for v in bm_pairing(&sp, &charts, &tf.to_form(), 1, Part::R, params).unwrap() {
                lower = lower.max(v.value().norm());
            }
        }
        ensure!(lower <= TOL_BM, "grade-1 part of {fs:?} reaches {lower:e}");
        out.push(format!("{fs:?}: {} forms, dev {:.1e}, grade 1 max {lower:.1e}", r.checked, r.max_deviation));
    }
    Ok(out.join("; "))
}

fn f_independence() -> Check {
    let params = QuadParams::default();
    let c2 = identity_space(2);
    let cusp = chart(&["s", "t"], &["s^2", "s^3", "t"]);
    let cases: [(&SpacePresentation, [&str; 2], &[&str]); 3] = [
        (&c2, ["t1", "t2"], &["t1*t2"]),
        (&c2, ["t1^2", "t2"], &["t1*(t2 - 3)", "t2"]),
        (&cusp, ["s^2", "(1+s)*t"], &["s", "t"]),
    ];
    let mut out = Vec::new();
    for (sp, fs, alt) in cases {
        let ws = tuple(sp, &fs.map(String::from));
        let alt: Vec<String> = alt.iter().map(|s| s.to_string()).collect();
        let forms: Vec<_> = [(2, 0), (2, 1)]
            .iter()
            .flat_map(|b| ambient_test_forms(sp.ambient_dim, 2, &[*b]).into_iter().take(4))
            .collect();
        let r = f_independence_check(sp, &ws, &ws, &tuple(sp, &alt), &forms, TOL_BM, params).unwrap();
        ensure!(r.passed(), "{fs:?}: {r:?}");
        out.push(format!("{fs:?} vs F = {alt:?}: {} values, dev {:.1e}", r.checked, r.max_deviation));
    }
    Ok(out.join("; "))
}

fn poincare_lelong() -> Check {
    let cusp = chart(&["t1"], &["t1^2", "t1^3"]);
    let c1 = pl_cycle(&cusp, &[wf(&cusp, "t1")], 0).unwrap();
    ensure!(c1.betas() == [1] && c1.components[0].dimension == 0, "w/z gives {:?}", c1.betas());
    ensure!(c1.components[0].image == ["z1", "z2"], "w/z cycle sits at {:?}", c1.components[0].image);
    let c2 = pl_cycle(&cusp, &[wf(&cusp, "t1^2")], 0).unwrap();
    ensure!(c2.betas() == [2], "z gives {:?}", c2.betas());
    let a = NormalizationChart::with_default_vars(vec![BiPoly::var(2, 0), BiPoly::zero(2), BiPoly::var(2, 1)]).unwrap();
    let b = NormalizationChart::with_default_vars(vec![BiPoly::zero(2), BiPoly::var(2, 0), BiPoly::var(2, 1)]).unwrap();
    let planes = SpacePresentation::new(vec![a, b]).unwrap();
    let c3 = pl_cycle(&planes, &[polys(&planes, &["t1", "t1^2"])], 0).unwrap();
    ensure!(c3.betas() == [3] && c3.components[0].upstairs.len() == 2, "grouped sheets give {:?}", c3.betas());
    Ok("w/z: 1[0]; z: 2[0]; two upstairs components (1 + 2) over the z3-axis: beta 3".into())
}

fn mono(h: &[u32], g: &[u32]) -> BiPoly {
    BiPoly::monomial(h.len(), Mono::from_parts(h, g), GaussRat::from_int(1))
}

fn cont(k: usize, weight: Vec<u32>, pole: Vec<u32>, form: Form) -> Complex64 {
    let ci = ContinuationIntegral {
        weight,
        dbar_weight: true,
        pole,
        form,
        den: BiPoly::one(k),
        den_power: 0,
        cutoff: ChartCutoff::identity(k),
        params: QuadParams::default(),
    };
    continue_at_zero(&ci).unwrap().value
}

fn pseudomeromorphic() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut smallest_base = f64::INFINITY;
    for n in 0..20 {
        let k = 1 + n % 2;
        let i = rng.gen_range(0..k);
        // Residue in t_i; for k = 2 the other variable carries a principal value.
        let (mut a, mut b) = (vec![0u32; k], vec![0u32; k]);
        let (mut h, mut g) = (vec![0u32; k], vec![0u32; k]);
        let (mut m, mut nn) = (vec![0u32; k], vec![0u32; k]);
        let mut weight = vec![0u32; k];
        weight[i] = 1;
        b[i] = rng.gen_range(1..=3);
        h[i] = rng.gen_range(0..b[i]);
        let c = rng.gen_range(1..=2u32);
        // t^m matches the angular frequency of the control; the conjugate factor keeps it matched.
        m[i] = b[i] - 1 - h[i];
        if k == 2 {
            let o = 1 - i;
            a[o] = rng.gen_range(1..=2);
            h[o] = rng.gen_range(0..=1);
            g[o] = rng.gen_range(0..=1);
            nn[o] = rng.gen_range(0..=1);
            m[o] = a[o] + g[o] + nn[o] - h[o];
            weight[o] = 1;
        }
        let coeff = mono(&h, &g);
        let term = Term {
            tau: 0,
            a: a.clone(),
            b: b.clone(),
            den: vec![],
            coeff: coeff.clone(),
            basis: FormBasis::empty(),
            grade: vec![],
        };
        let t = ResidueExpr::from_terms(k, vec![term]);
        ensure!(!t.is_zero(), "expression {n} normalized to 0");
        let conj_i = BiPoly::conj_var(k, i).pow(c);
        ensure!(t.mul_poly(&conj_i).is_zero(), "conj(t{})^{c} does not annihilate {t:?}", i + 1);
        ensure!(t.wedge_form(&Form::differential(k, i, true)).unwrap().is_zero(), "dbar t{} does not annihilate", i + 1);
        ensure!(t.terms.iter().all(|x| x.residue_vars().len() <= x.anti_degree()), "purge left a term");

        let basis = FormBasis::new((0..k).collect(), (0..k).filter(|&x| x != i).collect());
        let mut pole = a.clone();
        pole[i] = b[i];
        let mut lift = vec![0u32; k];
        lift[i] = c;
        let mut mc = m.clone();
        mc[i] += c;
        let annihilated = Form::basis(k, basis.clone(), coeff.mul(&mono(&mc, &nn)).mul(&mono(&vec![0; k], &lift)));
        let v = cont(k, weight.clone(), pole.clone(), annihilated).norm();
        worst = worst.max(v);
        ensure!(v <= TOL_ENGINE, "conj-annihilated pairing {n} is {v:e}");
        let control = Form::basis(k, basis, coeff.mul(&mono(&m, &nn)));
        smallest_base = smallest_base.min(cont(k, weight, pole, control).norm());
    }
    ensure!(smallest_base > 1e-3, "an unannihilated control pairing vanished ({smallest_base:e})");

    // Restriction 1_{h != 0} on random elementary expressions.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let k = 3;
        let terms: Vec<Term> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let (mut a, mut b) = (vec![0u32; k], vec![0u32; k]);
                for x in 0..k {
                    match rng.gen_range(0..3) {
                        0 => a[x] = rng.gen_range(1..=2),
                        1 => b[x] = rng.gen_range(1..=2),
                        _ => {}
                    }
                }
                let h: Vec<u32> = (0..k).map(|_| rng.gen_range(0..=1)).collect();
                let anti: Vec<usize> = (0..k).filter(|&x| b[x] == 0 && rng.gen_bool(0.3)).collect();
                Term {
                    tau: 0,
                    a,
                    b,
                    den: vec![],
                    coeff: mono(&h, &vec![0; k]).scale(&GaussRat::from_int(rng.gen_range(1..=3))),
                    basis: FormBasis::new(vec![], anti),
                    grade: vec![],
                }
            })
            .collect();
        let e = ResidueExpr::from_terms(k, terms);
        let h1 = BiPoly::holo_monomial(&(0..k).map(|_| rng.gen_range(0..=2)).collect::<Vec<u32>>());
        let h2 = BiPoly::holo_monomial(&(0..k).map(|_| rng.gen_range(0..=2)).collect::<Vec<u32>>());
        let r1 = restrict_complement(&e, &h1).unwrap();
        ensure!(restrict_complement(&r1, &h1).unwrap() == r1, "restriction is not idempotent");
        ensure!(
            restrict_complement(&r1, &h2).unwrap() == restrict_complement(&e, &h1.mul(&h2)).unwrap(),
            "restriction is not multiplicative"
        );
    }
    Ok(format!(
        "20 expressions: conj and dbar-conj annihilate exactly, continuation max |value| {worst:.1e} \
         (controls >= {smallest_base:.2}); no purgeable term; restriction idempotent and multiplicative on 20"
    ))
}

fn continuation_self_check() -> Check {
    let tau = Complex64::new(0.0, 2.0 * PI);
    let dt = |p: BiPoly| Form::basis(1, FormBasis::new(vec![0], vec![]), p);
    let simple = cont(1, vec![1], vec![1], dt(BiPoly::one(1)));
    ensure!((simple - tau).norm() <= TOL_ENGINE, "<dbar(1/t), dt> = {simple}");
    let residue = ResidueExpr::from_terms(
        1,
        vec![Term { tau: 0, a: vec![0], b: vec![1], den: vec![], coeff: BiPoly::one(1), basis: FormBasis::empty(), grade: vec![] }],
    );
    ensure!(evaluate(&residue, &dt(BiPoly::one(1))).unwrap().to_string() == "tau", "exact residue value");

    // (1 + c t)^e t^h dbar(1/t^b) against t^m dt: exact rewrite, hand coefficient and continuation agree.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let v = tvars(1);
    let mut worst: f64 = 0.0;
    for _ in 0..12 {
        let b = rng.gen_range(1..=4u32);
        let h = rng.gen_range(0..b + 1);
        let (c, e, m) = (rng.gen_range(-2..=2i64), rng.gen_range(0..=3u32), rng.gen_range(0..=2u32));
        let coeff = parse_poly(&format!("(1 + {c}*t1)^{e} * t1^{h}"), &v).unwrap();
        let expr = ResidueExpr::from_terms(
            1,
            vec![Term { tau: 0, a: vec![0], b: vec![b], den: vec![], coeff: coeff.clone(), basis: FormBasis::empty(), grade: vec![] }],
        );
        let test = parse_poly(&format!("t1^{m}"), &v).unwrap();
        let exact = evaluate(&expr, &dt(test.clone())).unwrap().to_c64();
        // Hand value: 2 pi i times the t^(b-1) coefficient of (1 + c t)^e t^(h+m).
        let want = match (b - 1).checked_sub(h + m) {
            Some(r) if r <= e => binom(e, r) * (c as f64).powi(r as i32),
            _ => 0.0,
        } * tau;
        let numeric = cont(1, vec![1], vec![b], dt(coeff.mul(&test)));
        ensure!((exact - want).norm() <= TOL_ENGINE, "exact {exact} vs hand {want}");
        let dev = (numeric - exact).norm();
        worst = worst.max(dev);
        ensure!(dev <= TOL_ENGINE, "numeric {numeric} vs exact {exact} for b={b} h={h} c={c} e={e} m={m}");
    }

    let sp = identity_space(2);
    let mut taylor = Vec::new();
    for fs in [["t1", "t2"], ["t1^2", "t2"]] {
        let spec = BMSpec::new(tuple(&sp, &fs.map(String::from))).unwrap();
        let forms: Vec<_> = ambient_test_forms(2, 2, &[(2, 0), (2, 1)]).into_iter().step_by(2).collect();
        let r = taylor_order_check(&sp, &spec, &forms, Part::R, QuadParams::default()).unwrap();
        ensure!(r.passed(), "Taylor order N vs N+2 for {fs:?}: {r:?}");
        taylor.push(format!("{:.1e}", r.max_deviation));
    }
    Ok(format!(
        "2 pi i residue; 12 rewritten currents, max numeric deviation {worst:.1e}; Taylor N vs N+2 deviations {}",
        taylor.join(", ")
    ))
}

fn binom(n: u32, r: u32) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
