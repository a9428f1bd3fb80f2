use fdikit::benchmarks;
use fdikit::mdetect::{amdsyn, emdsyn, mddist, mddist2c, mdgap, mdmatch, mdperf, nugap, Distance, DistOptions, MdOptions, PerfOptions};
use fdikit::rng::SplitMix;
use fdikit::sslib::{freqresp, lambda_of, mdmodset, LtiModel, MultiModel};
use fdikit::sysnorms::poles;
use fdikit::{CMat, Mat, C64};

fn f16_options() -> MdOptions {
    let h = Mat::from_row_slice(1, 4, &[0.7645, 0.8848, 0.5778, 0.9026]);
    MdOptions { sdeg: Some(-1.0), poles: vec![C64::new(-1.0, 0.0)], hdesign: vec![Some(h); 9], ..Default::default() }
}

/// The aircraft model at an arbitrary loss-of-efficiency point.
fn aircraft_at(r1: f64, r2: f64) -> LtiModel {
    let grid = benchmarks::aircraft_grid().unwrap();
    let g = &grid.components[0];
    let gamma = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0 - r1, 1.0 - r2]));
    let m = LtiModel::new(g.a.clone(), &g.b * gamma, g.c.clone(), g.d.clone(), 0.0).unwrap();
    mdmodset(&[m], &[0, 1], &[], &[]).unwrap().components.remove(0)
}

#[test]
fn emdsyn_aircraft_grid() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let bank = emdsyn(&mm, &f16_options()).unwrap();
    let p = &bank.info.mdperf;
    for i in 0..9 {
        for j in 0..9 {
            if i == j {
                assert!(p[(i, j)] < 1e-8, "diag {i}: {}", p[(i, j)]);
            } else {
                assert!(p[(i, j)] > 1e-3, "({i},{j}): {}", p[(i, j)]);
            }
        }
        let q = bank.q[i].as_ref().unwrap();
        assert_eq!(q.order(), 1);
        assert!((poles(q).unwrap()[0] - C64::new(-1.0, 0.0)).norm() < 1e-6);
    }
    // Symmetric normalization against the first model.
    for j in 1..9 {
        assert!((p[(0, j)] - p[(j, 0)]).abs() < 1e-8 * p[(0, j)].max(1.0));
    }
    let again = mdperf(&bank.r, &PerfOptions::default()).unwrap();
    assert!((&again.values - p).abs().max() < 1e-10);
}

/// Independent check of `Q_i [G_j; I]` against the stored internal forms.
#[test]
fn emdsyn_internal_forms_match_filters() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let bank = emdsyn(&mm, &f16_options()).unwrap();
    for i in [0, 4, 8] {
        let q = bank.q[i].as_ref().unwrap();
        for j in [0, 3, 8] {
            let r = bank.r[i][j].as_ref().unwrap();
            for w in [0.1, 1.0, 10.0] {
                let z = C64::new(0.0, w);
                let g = freqresp(&mm.components[j], z).unwrap();
                let qz = freqresp(q, z).unwrap();
                let mut stacked = CMat::zeros(6, 2);
                stacked.view_mut((0, 0), (4, 2)).copy_from(&g);
                stacked[(4, 0)] = C64::new(1.0, 0.0);
                stacked[(5, 1)] = C64::new(1.0, 0.0);
                let d = qz * stacked - freqresp(r, z).unwrap();
                assert!(d.iter().all(|x| x.norm() < 1e-8));
            }
        }
    }
}

#[test]
fn emdsyn_normalized_rows() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let bank = emdsyn(&mm, &MdOptions { normalize: true, ..f16_options() }).unwrap();
    for i in 0..9 {
        let lo = (0..9).filter(|&j| j != i).map(|j| bank.info.mdperf[(i, j)]).fold(f64::INFINITY, f64::min);
        assert!((lo - 1.0).abs() < 1e-10);
    }
}

#[test]
fn emdsyn_least_order_without_design() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let bank = emdsyn(&mm, &MdOptions { sdeg: Some(-1.0), ..Default::default() }).unwrap();
    for i in 0..9 {
        assert_eq!(bank.q[i].as_ref().unwrap().order(), 1);
        assert!(bank.info.mdperf[(i, i)] < 1e-8);
    }
}

#[test]
fn emdsyn_single_model_and_duplicates() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let one = MultiModel::new(vec![mm.components[2].clone()]).unwrap();
    let bank = emdsyn(&one, &MdOptions::default()).unwrap();
    assert_eq!(bank.info.mdperf.shape(), (1, 1));
    assert!(bank.info.mdperf[(0, 0)] < 1e-8);
    let dup = MultiModel::new(vec![mm.components[2].clone(), mm.components[2].clone()]).unwrap();
    assert!(matches!(emdsyn(&dup, &MdOptions::default()), Err(fdikit::FdiError::NotDistinguishable(0, 1))));
}

#[test]
fn mdselect_leaves_other_rows_empty() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let bank = emdsyn(&mm, &MdOptions { mdselect: Some(vec![1, 2]), ..f16_options() }).unwrap();
    assert!(bank.q[0].is_none() && bank.q[1].is_some());
    assert_eq!(bank.info.mdperf[(0, 3)], -1.0);
}

#[test]
fn mddist2c_classifies_midpoint() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let cur = aircraft_at(0.5, 0.5);
    for distance in [Distance::Nugap, Distance::Hinf, Distance::H2] {
        let c = mddist2c(&mm, &cur, &DistOptions { distance, ..Default::default() }).unwrap();
        assert_eq!(c.mind, 4, "{distance:?}: {:?}", c.values);
        assert!(c.values[4] < 1e-8);
    }
}

#[test]
fn mddist2c_off_grid_matches_mdmatch() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let bank = emdsyn(&mm, &MdOptions { normalize: true, ..f16_options() }).unwrap();
    for (r1, r2) in [(0.1, 0.9), (0.6, 0.4), (0.95, 0.05)] {
        let cur = aircraft_at(r1, r2);
        let d = mddist2c(&mm, &cur, &DistOptions { distance: Distance::Hinf, ..Default::default() }).unwrap();
        let m = mdmatch(&bank.q, &cur, &PerfOptions::default()).unwrap();
        let nearest = benchmarks::aircraft_grid_points()
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1 .0 - r1).powi(2) + (a.1 .1 - r2).powi(2);
                let db = (b.1 .0 - r1).powi(2) + (b.1 .1 - r2).powi(2);
                da.total_cmp(&db)
            })
            .unwrap()
            .0;
        assert_eq!(d.mind, nearest);
        assert!(m.values.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn mdmatch_recovers_component() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let bank = emdsyn(&mm, &f16_options()).unwrap();
    for l in [0, 5, 8] {
        let m = mdmatch(&bank.q, &mm.components[l], &PerfOptions::default()).unwrap();
        assert_eq!(m.mind, l);
        assert!(m.values[l] < 1e-6);
    }
    let mut only = vec![None; 9];
    only[6] = bank.q[6].clone();
    assert_eq!(mdmatch(&only, &mm.components[0], &PerfOptions::default()).unwrap().mind, 6);
}

#[test]
fn mddist_hinf_is_symmetric() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let t = mddist(&mm, &DistOptions { distance: Distance::Hinf, ..Default::default() }).unwrap();
    for i in 0..9 {
        assert_eq!(t.values[(i, i)], 0.0);
        assert_eq!(t.perm[i][0], i);
        for j in 0..9 {
            assert!((t.values[(i, j)] - t.values[(j, i)]).abs() < 1e-12);
            if i != j {
                assert!(t.values[(i, j)] > 0.0);
            }
        }
    }
}

#[test]
fn mddist_nugap_in_unit_interval() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let t = mddist(&mm, &DistOptions::default()).unwrap();
    assert!(t.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    let grid: Vec<f64> = (0..30).map(|k| 10f64.powf(-2.0 + 4.0 * k as f64 / 29.0)).collect();
    let p = mddist(&mm, &DistOptions { mdfreq: grid, ..Default::default() }).unwrap();
    // The grid variant cannot exceed the global value.
    for (a, b) in p.values.iter().zip(t.values.iter()) {
        assert!(*a <= *b + 1e-6);
    }
}

/// Random stable model with a shifted spectrum.
fn random_stable(rng: &mut SplitMix, n: usize, p: usize, m: usize) -> LtiModel {
    let a0 = rng.matrix(n, n);
    let shift = fdikit::numkern::dense::eigenvalues(&a0).unwrap().iter().map(|z| z.re).fold(f64::MIN, f64::max);
    let a = a0 - Mat::identity(n, n) * (shift + 0.5 + rng.next_f64());
    LtiModel::new(a, rng.matrix(n, m), rng.matrix(p, n), rng.matrix(p, m) * 0.5, 0.0).unwrap()
}

fn chordal_grid(g1: &LtiModel, g2: &LtiModel) -> f64 {
    (0..200)
        .map(|k| {
            let w = 10f64.powf(-3.0 + 6.0 * k as f64 / 199.0);
            let a = freqresp(g1, lambda_of(0.0, w)).unwrap();
            let b = freqresp(g2, lambda_of(0.0, w)).unwrap();
            let (p, m) = (a.nrows(), a.ncols());
            let l = CMat::identity(p, p) + &b * b.adjoint();
            let r = CMat::identity(m, m) + a.adjoint() * &a;
            // Chordal distance through Cholesky factors instead of symmetric square roots.
            let ll = l.cholesky().unwrap().l();
            let rl = r.cholesky().unwrap().l();
            let x = ll.solve_lower_triangular(&(&a - &b)).unwrap();
            let x = rl.solve_lower_triangular(&x.adjoint()).unwrap().adjoint();
            fdikit::numkern::dense::cnorm2(&x)
        })
        .fold(0.0, f64::max)
}

#[test]
fn nugap_random_pairs() {
    let mut rng = SplitMix::new(11);
    for _ in 0..20 {
        let g1 = random_stable(&mut rng, 3, 2, 2);
        let g2 = random_stable(&mut rng, 2, 2, 2);
        let (d12, _) = nugap(&g1, &g2, &[]).unwrap();
        let (d21, _) = nugap(&g2, &g1, &[]).unwrap();
        assert!((0.0..=1.0).contains(&d12));
        assert!((d12 - d21).abs() < 1e-8, "{d12} {d21}");
        assert!(nugap(&g1, &g1, &[]).unwrap().0 <= 1e-10);
        // Stable pairs with matching winding data: the gap is the peak chordal distance.
        if d12 < 1.0 {
            let c = chordal_grid(&g1, &g2);
            assert!(c <= d12 + 1e-8 && c > d12 - 2e-2, "{c} {d12}");
        }
    }
}

#[test]
fn nugap_scalar_closed_form() {
    // 1/(s+1) against 1/(s+2): chordal distance |g1 - g2| / sqrt((1+|g1|^2)(1+|g2|^2)).
    let g1 = LtiModel::new(Mat::from_element(1, 1, -1.0), Mat::identity(1, 1), Mat::identity(1, 1), Mat::zeros(1, 1), 0.0).unwrap();
    let g2 = LtiModel::new(Mat::from_element(1, 1, -2.0), Mat::identity(1, 1), Mat::identity(1, 1), Mat::zeros(1, 1), 0.0).unwrap();
    let best = (0..20001)
        .map(|k| {
            let w = k as f64 * 1e-3;
            let a = C64::new(1.0, 0.0) / C64::new(1.0, w);
            let b = C64::new(1.0, 0.0) / C64::new(2.0, w);
            (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
        })
        .fold(0.0, f64::max);
    let (d, _) = nugap(&g1, &g2, &[]).unwrap();
    assert!((d - best).abs() < 1e-6, "{d} {best}");
    // An integrator against its sign flip violates the winding condition.
    let int = LtiModel::new(Mat::from_element(1, 1, 1.0), Mat::identity(1, 1), Mat::identity(1, 1), Mat::zeros(1, 1), 0.0).unwrap();
    let neg = LtiModel::new(Mat::from_element(1, 1, -1.0), Mat::identity(1, 1), Mat::identity(1, 1) * -1.0, Mat::zeros(1, 1), 0.0).unwrap();
    assert_eq!(nugap(&int, &neg, &[]).unwrap().0, 1.0);
}

fn noisy_grid() -> MultiModel {
    let grid = benchmarks::aircraft_grid().unwrap();
    let models: Vec<LtiModel> = grid
        .components
        .iter()
        .map(|g| {
            let mut b = Mat::zeros(4, 10);
            b.view_mut((0, 0), (4, 2)).copy_from(&g.b);
            b.view_mut((0, 2), (4, 4)).copy_from(&Mat::identity(4, 4));
            let mut d = Mat::zeros(4, 10);
            d.view_mut((0, 6), (4, 4)).copy_from(&Mat::identity(4, 4));
            LtiModel::new(g.a.clone(), b, g.c.clone(), d, 0.0).unwrap()
        })
        .collect();
    let noise: Vec<Vec<usize>> = vec![(2..10).collect(); 9];
    mdmodset(&models, &[0, 1], &[], &noise).unwrap()
}

#[test]
fn amdsyn_noisy_grid() {
    let mm = noisy_grid();
    let bank = amdsyn(&mm, &MdOptions { sdeg: Some(-1.0), ..Default::default() }).unwrap();
    let gaps = &bank.info.mdgap;
    assert_eq!(gaps.len(), 9);
    for i in 0..9 {
        assert!(gaps[i].is_finite() && gaps[i] > 0.0, "{gaps:?}");
        assert!(bank.info.mdperf[(i, i)] < 1e-8);
    }
    let again = mdgap(&bank.r, &[], false).unwrap();
    for i in 0..9 {
        assert!((again.value[i] - gaps[i]).abs() < 1e-10 * gaps[i].max(1.0));
    }
}

#[test]
fn amdsyn_without_noise_has_infinite_gaps() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let a = amdsyn(&mm, &f16_options()).unwrap();
    let e = emdsyn(&mm, &f16_options()).unwrap();
    assert!(a.info.mdgap.iter().all(|g| g.is_infinite()));
    assert!((&a.info.mdperf - &e.info.mdperf).abs().max() < 1e-12);
}

#[test]
fn mdgap_static_bank() {
    let g = |v: &[f64], groups: &[(&str, Vec<usize>)]| {
        LtiModel::gain(Mat::from_row_slice(1, v.len(), v), 0.0).with_groups(groups).unwrap()
    };
    let grp = [("controls", vec![0]), ("noise", vec![1])];
    let bank = vec![
        vec![Some(g(&[0.0, 0.5], &grp)), Some(g(&[2.0, 0.1], &grp))],
        vec![Some(g(&[3.0, 0.0], &grp)), Some(g(&[0.0, 0.25], &grp))],
    ];
    let r = mdgap(&bank, &[], false).unwrap();
    assert!((r.value[0] - 4.0).abs() < 1e-12);
    assert!((r.value[1] - 12.0).abs() < 1e-12);
}

/// With full state measurements each filter is `H [sI - A, -B Γ_i] / (s + 1)`, so the
/// performance entries are `‖H B (Γ_j - Γ_i)‖` with the peak at zero frequency.
#[test]
fn emdsyn_aircraft_gains_closed_form() {
    let mm = benchmarks::aircraft_grid().unwrap();
    let bank = emdsyn(&mm, &f16_options()).unwrap();
    let h = Mat::from_row_slice(1, 4, &[0.7645, 0.8848, 0.5778, 0.9026]);
    let b0 = &mm.components[0].b;
    let hb = &h * b0.columns(0, 2);
    let pts = benchmarks::aircraft_grid_points();
    for (i, pi) in pts.iter().enumerate() {
        for (j, pj) in pts.iter().enumerate() {
            let d = [(1.0 - pj.0) - (1.0 - pi.0), (1.0 - pj.1) - (1.0 - pi.1)];
            let want = (hb[(0, 0)] * d[0]).hypot(hb[(0, 1)] * d[1]);
            let got = bank.info.mdperf[(i, j)];
            assert!((got - want).abs() < 1e-8 * want.max(1.0), "({i},{j}) {got} {want}");
        }
    }
}
