//! Golden constants against the brute-force lambda oracle in `common`.

mod common;

use common::{ambient, chart, exchintrinsic_oracle, exmultcholo_oracle, tau2, wf};
use residue_core::bm::continuation::QuadParams;
use residue_core::bm::pairing::{bm_pairing, frame_value, prepare, BMSpec, Part};
use residue_core::ch::{ch_product, CHSpec};
use residue_core::currents::{pushforward_pair, weak_mul};

#[test]
fn exchintrinsic_constant() {
    let oracle = exchintrinsic_oracle();
    assert!((oracle - 2.0 * tau2()).norm() < 1e-6, "oracle {oracle}");

    let sp = chart(&["s", "t"], &["s^2", "s^3", "t"]);
    let fs = vec![wf(&sp, "s^2"), wf(&sp, "(1+s)*t")];
    let phi = ambient(3, vec![0, 2]);
    let ch = ch_product(&sp, &CHSpec::new(fs.clone(), 2).unwrap()).unwrap();
    let exact = pushforward_pair(&sp, &ch, &phi).unwrap().to_c64();
    assert!((oracle - exact).norm() < 1e-6, "oracle {oracle}, exact {exact}");
    let charts = prepare(&sp, &BMSpec::new(fs).unwrap()).unwrap();
    let bm = frame_value(&bm_pairing(&sp, &charts, &phi, 2, Part::R, QuadParams::default()).unwrap(), &[0, 1]);
    assert!((oracle - bm).norm() < 1e-6, "oracle {oracle}, bm {bm}");
}

#[test]
fn exmultcholo_constant() {
    let oracle = exmultcholo_oracle();
    assert!((oracle - 2.0 * tau2()).norm() < 1e-6, "oracle {oracle}");

    let sp = chart(&["t1", "t2"], &["t1", "t1^2*t2", "t2^2", "t2^5"]);
    let fs = vec![wf(&sp, "t1"), wf(&sp, "t2^3")];
    let ch = ch_product(&sp, &CHSpec::new(fs, 2).unwrap()).unwrap();
    let gs = weak_mul(&wf(&sp, "t2"), &ch).unwrap();
    let exact = pushforward_pair(&sp, &gs, &ambient(4, vec![0, 2])).unwrap().to_c64();
    assert!((oracle - exact).norm() < 1e-6, "oracle {oracle}, exact {exact}");
}
