//! Invariants of every synthesis output on randomized plants.

#![allow(dead_code)]

use fdikit::fdianalysis::{fdigenspec, fditspec, AnalysisOptions};
use fdikit::fdiperf::fdif2ngap;
use fdikit::fdisyn::{afdisyn, afdsyn, efdisyn, efdsyn, emmsyn, FdiFilter, SynthesisOptions};
use fdikit::mdetect::{amdsyn, emdsyn, mdgap, MdBank, MdOptions};
use fdikit::rng::SplitMix;
use fdikit::sslib::{freqresp, mdmodset, LtiModel, MultiModel};
use fdikit::sysnorms::{norm_hinf, poles};
use fdikit::{CMat, Mat, C64};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

/// Randomized cases per invariant.
pub const SEEDS: u32 = 25;

pub fn config() -> ProptestConfig {
    ProptestConfig { cases: SEEDS, failure_persistence: None, rng_seed: RngSeed::Fixed(0x5eed), ..ProptestConfig::default() }
}

pub fn probes() -> Vec<C64> {
    (0..20).map(|k| C64::new(0.0, 10f64.powf(-2.0 + 4.0 * k as f64 / 19.0))).collect()
}

fn margin() -> f64 {
    -f64::EPSILON.sqrt()
}

/// Random plant with one control, one disturbance, two faults and one noise input.
/// The faults also act directly on the outputs, which keeps the isolation problems
/// well conditioned.
pub fn plant(seed: u64) -> LtiModel {
    let mut rng = SplitMix::new(seed);
    let (n, p) = (3, 3);
    let a = rng.matrix(n, n);
    let b = rng.matrix(n, 5);
    let c = rng.matrix(p, n);
    let mut d = Mat::zeros(p, 5);
    d.columns_mut(2, 2).copy_from(&rng.matrix(p, 2));
    LtiModel::new(a, b, c, d, 0.0)
        .unwrap()
        .with_groups(&[("controls", vec![0]), ("disturbances", vec![1]), ("faults", vec![2, 3]), ("noise", vec![4])])
        .unwrap()
}

fn peak_abs(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `[G_cols; E]` evaluated at `z`, where `E` selects the controls among `cols`.
fn augmented(sys: &LtiModel, cols: &[usize], z: C64) -> CMat {
    let g = freqresp(sys, z).unwrap();
    let controls = sys.group("controls");
    let p = sys.n_out();
    let mut out = CMat::zeros(p + controls.len(), cols.len());
    for (j, &c) in cols.iter().enumerate() {
        for i in 0..p {
            out[(i, j)] = g[(i, c)];
        }
        if let Some(k) = controls.iter().position(|&u| u == c) {
            out[(p + k, j)] = C64::new(1.0, 0.0);
        }
    }
    out
}

fn cols_of(sys: &LtiModel, names: &[&str]) -> Vec<usize> {
    names.iter().flat_map(|g| sys.group(g).iter().copied()).collect()
}

/// Largest response of `Q [G_u G_d; I 0]` relative to the size of `Q`.
pub fn decoupling(q: &LtiModel, sys: &LtiModel) -> f64 {
    let cols = cols_of(sys, &["controls", "disturbances"]);
    probes()
        .into_iter()
        .map(|z| {
            let qz = freqresp(q, z).unwrap();
            peak_abs(&(&qz * augmented(sys, &cols, z))) / peak_abs(&qz).max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Mismatch between `R` and `Q [G_f G_w; 0 0]`, relative to the size of `Q`.
pub fn consistency(f: &FdiFilter, sys: &LtiModel) -> f64 {
    let cols = cols_of(sys, &["faults", "noise", "aux"]);
    let rcols = cols_of(&f.r, &["faults", "noise", "aux"]);
    assert_eq!(cols.len(), rcols.len());
    probes()
        .into_iter()
        .map(|z| {
            let qz = freqresp(&f.q, z).unwrap();
            let want = &qz * augmented(sys, &cols, z);
            let rz = freqresp(&f.r, z).unwrap();
            let got = CMat::from_fn(rz.nrows(), rcols.len(), |i, j| rz[(i, rcols[j])]);
            peak_abs(&(got - want)) / peak_abs(&qz).max(1.0)
        })
        .fold(0.0, f64::max)
}

pub fn stable(m: &LtiModel) -> bool {
    poles(m).unwrap().iter().all(|z| z.re <= margin())
}

pub fn check_filter(f: &FdiFilter, sys: &LtiModel) -> Result<(), TestCaseError> {
    let d = decoupling(&f.q, sys);
    prop_assert!(d < 1e-7, "decoupling {d}");
    let c = consistency(f, sys);
    prop_assert!(c < 1e-7, "consistency {c}");
    prop_assert!(stable(&f.q), "Q poles {:?}", poles(&f.q).unwrap());
    prop_assert!(stable(&f.r), "R poles {:?}", poles(&f.r).unwrap());
    Ok(())
}

fn options(seed: u64) -> SynthesisOptions {
    SynthesisOptions { seed, sdeg: Some(-1.0), ..Default::default() }
}

/// Three components sharing the dynamics, with different actuator gains and
/// component-specific noise inputs.
pub fn multi(seed: u64, noise: bool) -> MultiModel {
    let mut rng = SplitMix::new(seed);
    let (n, p) = (3, 2);
    let a = rng.matrix(n, n) - Mat::identity(n, n) * 2.0;
    let b = rng.matrix(n, 2);
    let c = rng.matrix(p, n);
    let bw = rng.matrix(n, 1) * 0.1;
    let models: Vec<LtiModel> = (0..3)
        .map(|k| {
            let g = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0 - 0.4 * k as f64, 0.3 + 0.35 * k as f64]));
            let bk = &b * g;
            let (bb, d) = if noise {
                (fdikit::numkern::dense::hstack(&[&bk, &bw]), Mat::zeros(p, 3))
            } else {
                (bk, Mat::zeros(p, 2))
            };
            LtiModel::new(a.clone(), bb, c.clone(), d, 0.0).unwrap()
        })
        .collect();
    let nz: Vec<Vec<usize>> = if noise { vec![vec![2]; 3] } else { vec![] };
    mdmodset(&models, &[0, 1], &[], &nz).unwrap()
}

pub fn check_bank(bank: &MdBank, mm: &MultiModel) -> Result<(), TestCaseError> {
    let n = mm.len();
    for i in 0..n {
        let q = bank.q[i].as_ref().expect("every row selected");
        prop_assert!(stable(q), "filter {i} poles {:?}", poles(q).unwrap());
        let qn = norm_hinf(q).unwrap().0.max(1.0);
        for j in 0..n {
            let r = bank.r[i][j].as_ref().unwrap();
            prop_assert!(stable(r));
            // consistency: R^(i,j) = Q_i [G_j; I 0]
            let g = &mm.components[j];
            let cols: Vec<usize> = (0..g.n_in()).collect();
            for z in probes() {
                let want = freqresp(q, z).unwrap() * augmented(g, &cols, z);
                let e = peak_abs(&(freqresp(r, z).unwrap() - want)) / qn;
                prop_assert!(e < 1e-7, "consistency ({i},{j}) {e}");
            }
            let v = bank.info.mdperf[(i, j)];
            if i == j {
                prop_assert!(v < 1e-7 * qn, "diagonal ({i}) {v}");
            } else {
                prop_assert!(v > 1e-6, "off-diagonal ({i},{j}) {v}");
            }
        }
    }
    Ok(())
}

pub fn efdsyn_case(seed: u64) -> Result<(), TestCaseError> {
    let sys = plant(seed);
    let f = efdsyn(&sys, &options(seed)).unwrap();
    check_filter(&f, &sys)?;
    prop_assert!(fditspec(&f.r, 0.0, 1e-4, &[], true).unwrap().pages[0][0].iter().all(|&b| b));
    Ok(())
}

pub fn efdisyn_case(seed: u64) -> Result<(), TestCaseError> {
    let sys = plant(seed);
    let s = fdigenspec(&sys, &AnalysisOptions::default()).unwrap();
    let opts = SynthesisOptions { sfdi: Some(s.clone()), ..options(seed) };
    let bank = efdisyn(&sys, &opts).unwrap();
    prop_assert_eq!(bank.len(), s.rows());
    for (k, f) in bank.iter().enumerate() {
        let f = f.as_ref().unwrap();
        check_filter(f, &sys)?;
        let got = fditspec(&f.r, 0.0, 1e-4, &[], true).unwrap();
        prop_assert_eq!(&got.pages[0][0], &s.combined()[k]);
    }
    Ok(())
}

pub fn afdsyn_case(seed: u64) -> Result<(), TestCaseError> {
    let sys = plant(seed);
    let f = afdsyn(&sys, &options(seed)).unwrap();
    check_filter(&f, &sys)?;
    let gap = f.info.gap.unwrap();
    let recomputed = fdif2ngap(&f.r, &[], None).unwrap().value[0];
    prop_assert!((gap - recomputed).abs() <= 1e-6 * gap.max(1.0), "{} vs {}", gap, recomputed);
    Ok(())
}

pub fn afdisyn_case(seed: u64) -> Result<(), TestCaseError> {
    let sys = plant(seed);
    let s = fdigenspec(&sys, &AnalysisOptions::default()).unwrap();
    let opts = SynthesisOptions { sfdi: Some(s.clone()), ..options(seed) };
    for f in afdisyn(&sys, &opts).unwrap().iter() {
        let f = f.as_ref().unwrap();
        check_filter(f, &sys)?;
    }
    Ok(())
}

pub fn emmsyn_case(seed: u64) -> Result<(), TestCaseError> {
    let sys = plant(seed);
    let mr = LtiModel::gain(Mat::identity(2, 2), 0.0).with_groups(&[("faults", vec![0, 1])]).unwrap();
    let (f, m) = emmsyn(&sys, &mr, &options(seed)).unwrap();
    check_filter(&f, &sys)?;
    prop_assert!(stable(&m));
    let diff = fdikit::sslib::parallel(&f.r.columns_of(&["faults"]), &m.scale(-1.0)).unwrap();
    let e = norm_hinf(&diff).unwrap().0;
    prop_assert!(e < 1e-7 * norm_hinf(&m).unwrap().0.max(1.0), "{}", e);
    Ok(())
}

pub fn emdsyn_case(seed: u64) -> Result<(), TestCaseError> {
    let mm = multi(seed, false);
    let bank = emdsyn(&mm, &MdOptions { seed, sdeg: Some(-1.0), ..Default::default() }).unwrap();
    check_bank(&bank, &mm)?;
    // standard normalization: first row equals first column
    for j in 1..mm.len() {
        let (a, b) = (bank.info.mdperf[(0, j)], bank.info.mdperf[(j, 0)]);
        prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
    }
    Ok(())
}

pub fn amdsyn_case(seed: u64) -> Result<(), TestCaseError> {
    let mm = multi(seed, true);
    let bank = amdsyn(&mm, &MdOptions { seed, sdeg: Some(-1.0), ..Default::default() }).unwrap();
    check_bank(&bank, &mm)?;
    let g = mdgap(&bank.r, &[], false).unwrap();
    for (a, b) in g.value.iter().zip(&bank.info.mdgap) {
        prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{} vs {}", a, b);
    }
    Ok(())
}

/// Every case, by name.
pub const CASES: [(&str, fn(u64) -> Result<(), TestCaseError>); 7] = [
    ("efdsyn", efdsyn_case),
    ("efdisyn", efdisyn_case),
    ("afdsyn", afdsyn_case),
    ("afdisyn", afdisyn_case),
    ("emmsyn", emmsyn_case),
    ("emdsyn", emdsyn_case),
    ("amdsyn", amdsyn_case),
];
