//! Module-level properties on random instances.

use fdikit::factor::{coouter_coinner, left_nullspace, Stabilization};
use fdikit::fdianalysis::{fdichkspec, fdigenspec, fditspec, AnalysisOptions, StructureMatrix};
use fdikit::fdiperf::{fdif2ngap, fdif2ngap_bank, fdifscond, fdimmperf, NormKind};
use fdikit::numkern::dense::orth_defect;
use fdikit::numkern::real_schur;
use fdikit::rng::SplitMix;
use fdikit::sslib::{fdimodset, freqresp, minimal_realization, series, LtiModel, ModSelection};
use fdikit::sysnorms::{hinf_minus_index, norm_hinf, zeros};
use fdikit::{benchmarks, CMat, Mat, C64};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 25, failure_persistence: None, rng_seed: RngSeed::Fixed(0x5eed), ..ProptestConfig::default() }
}

fn random_freqs(rng: &mut SplitMix, k: usize) -> Vec<f64> {
    (0..k).map(|_| 10f64.powf(-2.0 + 4.0 * rng.next_f64())).collect()
}

fn stable(rng: &mut SplitMix, n: usize, p: usize, m: usize) -> LtiModel {
    let a = rng.matrix(n, n);
    let shift = fdikit::numkern::dense::eigenvalues(&a).unwrap().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let a = a - Mat::identity(n, n) * (shift + 0.5 + rng.next_f64());
    LtiModel::new(a, rng.matrix(n, m), rng.matrix(p, n), rng.matrix(p, m), 0.0).unwrap()
}

fn rel_err(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn group_bookkeeping(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let g = stable(&mut rng, 3, 2, 5);
        let sel = ModSelection { controls: vec![0], disturbances: vec![1, 2], faults: vec![3], noise: vec![4], aux: vec![0], ..Default::default() };
        let sys = fdimodset(&g, &sel).unwrap();
        for w in random_freqs(&mut rng, 20) {
            let z = C64::new(0.0, w);
            let src = freqresp(&g, z).unwrap();
            let out = freqresp(&sys, z).unwrap();
            for (name, cols) in [("controls", &sel.controls), ("disturbances", &sel.disturbances), ("faults", &sel.faults), ("noise", &sel.noise), ("aux", &sel.aux)] {
                for (k, &j) in sys.group(name).iter().enumerate() {
                    for i in 0..2 {
                        prop_assert!((out[(i, j)] - src[(i, cols[k])]).norm() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn series_is_pointwise_product(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let g1 = stable(&mut rng, 2, 2, 3);
        let g2 = stable(&mut rng, 3, 3, 2);
        let s = series(&g1, &g2).unwrap();
        for w in random_freqs(&mut rng, 20) {
            let z = C64::new(0.0, w);
            let want = freqresp(&g1, z).unwrap() * freqresp(&g2, z).unwrap();
            prop_assert!(rel_err(&freqresp(&s, z).unwrap(), &want) <= 1e-9);
        }
    }

    #[test]
    fn minreal_keeps_response(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        // a non-minimal realization: parallel copy with an uncontrollable block
        let g = stable(&mut rng, 3, 2, 2);
        let n = 5;
        let mut a = Mat::zeros(n, n);
        a.view_mut((0, 0), (3, 3)).copy_from(&g.a);
        a.view_mut((3, 3), (2, 2)).copy_from(&(-Mat::identity(2, 2) * 2.0 + rng.matrix(2, 2) * 0.1));
        let mut b = Mat::zeros(n, 2);
        b.view_mut((0, 0), (3, 2)).copy_from(&g.b);
        let mut c = rng.matrix(2, n);
        c.view_mut((0, 0), (2, 3)).copy_from(&g.c);
        let big = LtiModel::new(a, b, c, g.d.clone(), 0.0).unwrap();
        let m = minimal_realization(&big, 0.0).unwrap();
        prop_assert!(m.order() <= big.order());
        prop_assert_eq!(m.order(), 3);
        for w in random_freqs(&mut rng, 20) {
            let z = C64::new(0.0, w);
            prop_assert!(rel_err(&freqresp(&m, z).unwrap(), &freqresp(&big, z).unwrap()) <= 1e-7);
        }
    }

    #[test]
    fn schur_factor_is_orthogonal(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let a = rng.matrix(6, 6);
        let (q, t) = real_schur(&a).unwrap();
        prop_assert!(orth_defect(&q) <= 1e-12);
        prop_assert!((&q * &t * q.transpose() - &a).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn hinf_bounds_pointwise_gains(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let g = stable(&mut rng, 4, 2, 3);
        let (nrm, _) = norm_hinf(&g).unwrap();
        for w in random_freqs(&mut rng, 30) {
            let s = fdikit::numkern::dense::cnorm2(&freqresp(&g, C64::new(0.0, w)).unwrap());
            prop_assert!(nrm >= s - 1e-8, "{} < {}", nrm, s);
        }
    }

    #[test]
    fn zeros_invariant_under_output_mixing(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let g = stable(&mut rng, 3, 2, 2);
        let m = rng.matrix(2, 2) + Mat::identity(2, 2) * 2.0;
        let mg = LtiModel::new(g.a.clone(), g.b.clone(), &m * &g.c, &m * &g.d, 0.0).unwrap();
        let mut z1 = zeros(&g, 0.0).unwrap();
        let mut z2 = zeros(&mg, 0.0).unwrap();
        prop_assert_eq!(z1.len(), z2.len());
        let key = |z: &C64| (z.re, z.im);
        z1.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        z2.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (a, b) in z1.iter().zip(&z2) {
            prop_assert!((a - b).norm() <= 1e-6 * a.norm().max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn hinf_minus_index_bounds(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let g = stable(&mut rng, 3, 2, 3);
        let cols: Vec<f64> = (0..3).map(|j| norm_hinf(&g.select(&[0, 1], &[j]).unwrap()).unwrap().0).collect();
        let min = cols.iter().cloned().fold(f64::INFINITY, f64::min);
        let exact = hinf_minus_index(&g, None).unwrap();
        prop_assert!((exact - min).abs() <= 1e-12 * min.max(1.0));
        let grid = hinf_minus_index(&g, Some(&random_freqs(&mut rng, 10))).unwrap();
        prop_assert!(grid <= min + 1e-8);
    }

    #[test]
    fn coinner_factor_is_coinner(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let g = stable(&mut rng, 3, 2, 3);
        let f = coouter_coinner(&g).unwrap();
        for w in random_freqs(&mut rng, 20) {
            let gi = freqresp(&f.inner, C64::new(0.0, w)).unwrap();
            let defect = &gi * gi.adjoint() - CMat::identity(gi.nrows(), gi.nrows());
            prop_assert!(defect.norm() < 1e-6);
            let prod = freqresp(&f.outer, C64::new(0.0, w)).unwrap() * &gi;
            prop_assert!(rel_err(&prod, &freqresp(&g, C64::new(0.0, w)).unwrap()) < 1e-6);
        }
    }

    #[test]
    fn nullspace_basis_annihilates(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let g = stable(&mut rng, 3, 3, 3);
        let sys = g.clone().with_groups(&[("controls", vec![0]), ("disturbances", vec![1]), ("faults", vec![2])]).unwrap();
        // the observer basis applies to models without disturbances
        let plain = g.with_groups(&[("controls", vec![0]), ("faults", vec![1, 2])]).unwrap();
        for (sys, observer) in [(&sys, false), (&plain, true)] {
            let nb = left_nullspace(sys, &[], observer, &Stabilization::default(), 0.0).unwrap();
            let q = nb.basis();
            let scale = freqresp(&q, C64::new(0.0, 1.0)).unwrap().norm().max(1.0);
            for w in random_freqs(&mut rng, 20) {
                let z = C64::new(0.0, w);
                let qz = freqresp(&q, z).unwrap();
                let gz = freqresp(sys, z).unwrap();
                let nd = if observer { 1 } else { 2 };
                let mut aug = CMat::zeros(4, nd);
                for i in 0..3 {
                    for j in 0..nd {
                        aug[(i, j)] = gz[(i, j)];
                    }
                }
                aug[(3, 0)] = C64::new(1.0, 0.0);
                prop_assert!((qz * aug).norm() < 1e-7 * scale);
            }
        }
    }

    #[test]
    fn generated_rows_are_feasible(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let g = stable(&mut rng, 3, 3, 5);
        let sys = g.with_groups(&[("controls", vec![0]), ("disturbances", vec![1]), ("faults", vec![2, 3, 4])]).unwrap();
        let opts = AnalysisOptions::default();
        let s = fdigenspec(&sys, &opts).unwrap();
        let check = fdichkspec(&sys, &s, &opts, seed).unwrap();
        prop_assert!(check.rdims.iter().all(|&r| r > 0), "{:?}", check.rdims);
    }

    #[test]
    fn block_structure_is_row_union(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let mut r = stable(&mut rng, 2, 3, 4);
        // sparsify so that rows differ
        for j in 0..4 {
            if rng.next_f64() < 0.3 {
                r.b.column_mut(j).fill(0.0);
                r.d.column_mut(j).fill(0.0);
            }
        }
        let r = r.with_groups(&[("faults", vec![0, 1, 2, 3])]).unwrap();
        let el = fditspec(&r, 0.0, 1e-4, &[], false).unwrap().combined();
        let bl = fditspec(&r, 0.0, 1e-4, &[], true).unwrap().combined();
        prop_assert_eq!(bl.len(), 1);
        let union: Vec<bool> = (0..4).map(|j| el.iter().any(|row| row[j])).collect();
        prop_assert_eq!(&bl[0], &union);
    }

    #[test]
    fn performance_measures(seed in any::<u64>()) {
        let mut rng = SplitMix::new(seed);
        let r = stable(&mut rng, 3, 2, 3).with_groups(&[("faults", vec![0, 1]), ("noise", vec![2])]).unwrap();
        let fs = fdifscond(&r, &[], None).unwrap();
        prop_assert!(fs.value[0] >= 0.0 && fs.value[0] <= 1.0 + 1e-12);
        let ones = |rows| StructureMatrix::from_rows(vec![vec![true, true]; rows], 2);
        let all = fdif2ngap(&r, &[], None).unwrap().value[0];
        let block = fdif2ngap_bank(&[Some(r.clone())], &[], Some(&ones(1))).unwrap().value[0];
        prop_assert!((all - block).abs() <= 1e-10 * all.max(1.0), "{} vs {}", all, block);
        let r0 = r.select(&[0], &[0, 1, 2]).unwrap();
        let one = fdif2ngap(&r0, &[], None).unwrap().value[0];
        let with = fdif2ngap(&r0, &[], Some(&ones(1))).unwrap().value[0];
        prop_assert!((one - with).abs() <= 1e-10 * one.max(1.0), "{} vs {}", one, with);
        let mm = fdimmperf(&r, Some(&r), NormKind::Hinf, None).unwrap();
        prop_assert!(mm[0] <= 1e-10);
    }
}

#[test]
fn strong_rows_are_weak_rows() {
    let sys = benchmarks::yuan();
    let weak = fdigenspec(&sys, &AnalysisOptions::default()).unwrap().combined();
    let strong = fdigenspec(&sys, &AnalysisOptions { freqs: vec![0.0], ..Default::default() }).unwrap().combined();
    assert!(strong.iter().all(|r| weak.contains(r)));
}
