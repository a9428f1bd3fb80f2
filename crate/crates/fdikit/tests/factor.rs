use fdikit::benchmarks;
use fdikit::factor::{self, Side, Stabilization};
use fdikit::sslib::{freqresp, LtiModel};
use fdikit::{Mat, C64};

fn probe(k: usize) -> C64 {
    C64::new(0.0, 10f64.powf(-2.0 + 4.0 * k as f64 / 19.0))
}

/// Largest response magnitude of `q * [Gu Gd; I 0]` over the probes.
fn annihilation(q: &LtiModel, sys: &LtiModel) -> f64 {
    let cols: Vec<usize> = sys.group("controls").iter().chain(sys.group("disturbances")).copied().collect();
    let mu = sys.group("controls").len();
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let z = probe(k);
        let qz = freqresp(q, z).unwrap();
        let gz = freqresp(sys, z).unwrap();
        let p = sys.n_out();
        for (j, &c) in cols.iter().enumerate() {
            for r in 0..qz.nrows() {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..p {
                    acc += qz[(r, i)] * gz[(i, c)];
                }
                if j < mu {
                    acc += qz[(r, p + j)];
                }
                worst = worst.max(acc.norm());
            }
        }
    }
    worst
}

#[test]
fn yuan_basis_annihilates() {
    let sys = benchmarks::yuan();
    let nb = factor::left_nullspace(&sys, &[], false, &Stabilization::default(), 0.0).unwrap();
    assert_eq!(nb.len(), 3);
    assert!(nb.degs.windows(2).all(|w| w[0] <= w[1]));
    assert!(annihilation(&nb.basis(), &sys) < 1e-8);
}

#[test]
fn observer_basis() {
    let g = LtiModel::new(
        Mat::from_element(1, 1, -1.0),
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, 1.0),
        Mat::zeros(1, 1),
        0.0,
    )
    .unwrap()
    .with_groups(&[("controls", vec![0])])
    .unwrap();
    let nb = factor::left_nullspace(&g, &[], true, &Stabilization::default(), 0.0).unwrap();
    assert!(nb.degs.is_empty());
    assert!(annihilation(&nb.basis(), &g) < 1e-12);
}

#[test]
fn unstable_plant_basis() {
    let sys = benchmarks::unstable_plant().unwrap();
    let nb = factor::left_nullspace(&sys, &[], false, &Stabilization::sdeg(-3.0), 0.0).unwrap();
    assert_eq!(nb.degs, vec![1]);
    let q = nb.basis();
    // Expected direction [0, s - 3, -(s + 2)] / (s + 3).
    for k in 0..20 {
        let z = probe(k);
        let qz = freqresp(&q, z).unwrap();
        let want = [C64::new(0.0, 0.0), (z - 3.0) / (z + 3.0), -(z + 2.0) / (z + 3.0)];
        let scale = qz[(0, 1)] / want[1];
        for j in 0..3 {
            assert!((qz[(0, j)] - scale * want[j]).norm() < 1e-9, "entry {j}");
        }
    }
    assert!(annihilation(&q, &sys) < 1e-8);
}

#[test]
fn triplex_rank_one_disturbance() {
    // Three identical sensors of a first-order plant disturbed through a common channel.
    let a = Mat::from_element(1, 1, -2.0);
    let b = Mat::from_row_slice(1, 2, &[1.0, 0.5]);
    let c = Mat::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
    let g = LtiModel::new(a, b, c, Mat::zeros(3, 2), 0.0)
        .unwrap()
        .with_groups(&[("controls", vec![0]), ("disturbances", vec![1])])
        .unwrap();
    let nb = factor::left_nullspace(&g, &[], false, &Stabilization::default(), 0.0).unwrap();
    assert_eq!(nb.len(), 2);
    assert!(annihilation(&nb.basis(), &g) < 1e-10);
}

#[test]
fn lcf_of_unstable_first_order() {
    // (s+1)/(s-2) = 1 + 3/(s-2)
    let g = LtiModel::new(
        Mat::from_element(1, 1, 2.0),
        Mat::from_element(1, 1, 3.0),
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, 1.0),
        0.0,
    )
    .unwrap();
    let (n, m) = factor::lcf_stabilize(&g, Some(-3.0), &[]).unwrap();
    for k in 0..20 {
        let z = probe(k);
        let nz = freqresp(&n, z).unwrap()[(0, 0)];
        let mz = freqresp(&m, z).unwrap()[(0, 0)];
        assert!((nz - (z + 1.0) / (z + 3.0)).norm() < 1e-12);
        assert!((mz - (z - 2.0) / (z + 3.0)).norm() < 1e-12);
    }
}

#[test]
fn lcf_places_complex_pairs() {
    // Unstable oscillator measured through a single output.
    let a = Mat::from_row_slice(3, 3, &[0.5, 2.0, 0.0, -2.0, 0.5, 0.0, 0.0, 0.0, 1.0]);
    let b = Mat::from_row_slice(3, 1, &[1.0, 0.0, 1.0]);
    let c = Mat::from_row_slice(1, 3, &[1.0, 0.3, 1.0]);
    let g = LtiModel::new(a, b, c, Mat::zeros(1, 1), 0.0).unwrap();
    let poles = [C64::new(-1.0, 1.0), C64::new(-1.0, -1.0)];
    let (n, m) = factor::lcf_stabilize(&g, Some(-2.0), &poles).unwrap();
    let mut eig = fdikit::sysnorms::realization_poles(&n).unwrap();
    eig.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
    assert!((eig[0] - C64::new(-2.0, 0.0)).norm() < 1e-7, "{eig:?}");
    assert!((eig[1] - C64::new(-1.0, -1.0)).norm() < 1e-7, "{eig:?}");
    assert!((eig[2] - C64::new(-1.0, 1.0)).norm() < 1e-7, "{eig:?}");
    for k in 0..20 {
        let z = probe(k);
        let gz = freqresp(&g, z).unwrap()[(0, 0)];
        let nz = freqresp(&n, z).unwrap()[(0, 0)];
        let mz = freqresp(&m, z).unwrap()[(0, 0)];
        assert!((nz / mz - gz).norm() < 1e-7 * (1.0 + gz.norm()));
    }
}

#[test]
fn coouter_of_nonminimum_phase() {
    // (s-1)/(s+2) = 1 - 3/(s+2)
    let g = LtiModel::new(
        Mat::from_element(1, 1, -2.0),
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, -3.0),
        Mat::from_element(1, 1, 1.0),
        0.0,
    )
    .unwrap();
    let f = factor::coouter_coinner(&g).unwrap();
    assert_eq!(f.rank, 1);
    assert!(!f.nonstandard);
    for k in 0..20 {
        let z = probe(k);
        let o = freqresp(&f.outer, z).unwrap()[(0, 0)];
        let i = freqresp(&f.inner, z).unwrap()[(0, 0)];
        assert!((o - (z + 1.0) / (z + 2.0)).norm() < 1e-10);
        assert!((i - (z - 1.0) / (z + 1.0)).norm() < 1e-10);
        assert!((i.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn normalized_factors_of_first_order() {
    let g = LtiModel::new(
        Mat::from_element(1, 1, -1.0),
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, 1.0),
        Mat::zeros(1, 1),
        0.0,
    )
    .unwrap();
    for side in [Side::Left, Side::Right] {
        let (n, m) = factor::normalized_coprime(&g, side).unwrap();
        for k in 0..20 {
            let z = probe(k);
            let nz = freqresp(&n, z).unwrap()[(0, 0)];
            let mz = freqresp(&m, z).unwrap()[(0, 0)];
            assert!((nz.norm_sqr() + mz.norm_sqr() - 1.0).abs() < 1e-10);
            assert!((nz / mz - 1.0 / (z + 1.0)).norm() < 1e-10);
        }
    }
    let s = LtiModel::gain(Mat::from_element(1, 1, 2.0), 0.0);
    let (n, m) = factor::normalized_coprime(&s, Side::Left).unwrap();
    assert!((m.d[(0, 0)].abs() - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    assert!((n.d[(0, 0)] / m.d[(0, 0)] - 2.0).abs() < 1e-12);
}
