use fdikit::benchmarks;
use fdikit::fdianalysis::{fdichkspec, fdigenspec, fdisspec, fditspec, AnalysisOptions, StructureMatrix};

const WEAK: [[u8; 8]; 18] = [
    [0, 0, 0, 1, 0, 0, 1, 1],
    [0, 1, 1, 0, 1, 1, 1, 0],
    [0, 1, 1, 1, 1, 1, 0, 1],
    [0, 1, 1, 1, 1, 1, 1, 1],
    [1, 0, 1, 0, 1, 1, 1, 0],
    [1, 0, 1, 1, 1, 1, 0, 1],
    [1, 0, 1, 1, 1, 1, 1, 1],
    [1, 1, 0, 0, 1, 1, 0, 0],
    [1, 1, 0, 1, 1, 1, 1, 1],
    [1, 1, 1, 0, 0, 1, 1, 0],
    [1, 1, 1, 0, 1, 0, 1, 0],
    [1, 1, 1, 0, 1, 1, 1, 0],
    [1, 1, 1, 1, 0, 1, 0, 1],
    [1, 1, 1, 1, 0, 1, 1, 1],
    [1, 1, 1, 1, 1, 0, 0, 1],
    [1, 1, 1, 1, 1, 0, 1, 1],
    [1, 1, 1, 1, 1, 1, 0, 1],
    [1, 1, 1, 1, 1, 1, 1, 1],
];

const STRONG_IDX: [usize; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 11, 16, 17];

fn bools(rows: &[[u8; 8]]) -> Vec<Vec<bool>> {
    rows.iter().map(|r| r.iter().map(|&x| x == 1).collect()).collect()
}

#[test]
fn yuan_weak_specs() {
    let sys = benchmarks::yuan();
    let opts = AnalysisOptions { tol: 1e-7, fdtol: 1e-5, ..Default::default() };
    let s = fdigenspec(&sys, &opts).unwrap();
    assert_eq!(s.page(0), bools(&WEAK).as_slice());
}

#[test]
fn yuan_strong_specs() {
    let sys = benchmarks::yuan();
    let opts = AnalysisOptions {
        tol: 1e-7,
        fdtol: 1e-4,
        fdgaintol: 1e-3,
        freqs: vec![0.0],
        sdeg: Some(-0.05),
    };
    let s = fdigenspec(&sys, &opts).unwrap();
    let expected: Vec<[u8; 8]> = STRONG_IDX.iter().map(|&i| WEAK[i]).collect();
    assert_eq!(s.page(0), bools(&expected).as_slice());
}

#[test]
fn yuan_least_orders() {
    let sys = benchmarks::yuan();
    let opts = AnalysisOptions { tol: 1e-7, fdtol: 1e-4, fdgaintol: 1e-3, freqs: vec![0.0], sdeg: None };
    let sfdi = StructureMatrix::from_rows(bools(&WEAK), 8);
    let chk = fdichkspec(&sys, &sfdi, &opts, 1).unwrap();
    let feasible: Vec<usize> = (0..18).filter(|&i| chk.rdims[i] > 0).collect();
    assert_eq!(feasible, STRONG_IDX.to_vec());
    let least: Vec<i64> = feasible.iter().map(|&i| chk.leastorders[i]).collect();
    assert_eq!(least, vec![1, 2, 2, 2, 1, 1, 1, 2, 2, 2, 2, 2]);
    for i in 0..18 {
        if chk.rdims[i] == 0 {
            assert_eq!((chk.orders[i], chk.leastorders[i]), (-1, -1));
        }
    }
}

#[test]
fn unstable_plant_fault_gains() {
    // Fault channel of the exact decoupling filter: [(s+2)/(s+3), (s-3)/(s+3)].
    use fdikit::poly::{tf_matrix, Poly};
    let nums = vec![vec![Poly(vec![2.0, 1.0]), Poly(vec![-3.0, 1.0])]];
    let dens = vec![vec![Poly(vec![3.0, 1.0]), Poly(vec![3.0, 1.0])]];
    let rf = tf_matrix(&nums, &dens, 0.0).unwrap();
    let (s, g) = fdisspec(&rf, 0.0, &[], false).unwrap();
    assert!((g[(0, 0)] - 2.0 / 3.0).abs() < 1e-10);
    assert!((g[(0, 1)] - 1.0).abs() < 1e-10);
    assert_eq!(s.page(0), &[vec![true, true]]);
    let w = fditspec(&rf, 0.0, 0.0, &[], false).unwrap();
    assert_eq!(w.page(0), &[vec![true, true]]);
    let strong = fditspec(&rf, 0.0, 0.0, &[0.0], false).unwrap();
    assert_eq!(strong.page(0), &[vec![true, true]]);
}

#[test]
fn zero_at_frequency_breaks_strong_pattern() {
    use fdikit::poly::{tf_matrix, Poly};
    // s/(s+1) vanishes at dc.
    let nums = vec![vec![Poly(vec![0.0, 1.0]), Poly(vec![1.0])]];
    let dens = vec![vec![Poly(vec![1.0, 1.0]), Poly(vec![1.0, 1.0])]];
    let rf = tf_matrix(&nums, &dens, 0.0).unwrap();
    let s = fditspec(&rf, 0.0, 0.0, &[0.0, 1.0], false).unwrap();
    assert_eq!(s.page(0), &[vec![false, true]]);
    assert_eq!(s.page(1), &[vec![true, true]]);
    let (ss, _) = fdisspec(&rf, 0.0, &[0.0], false).unwrap();
    assert_eq!(ss.page(0), &[vec![false, true]]);
}
