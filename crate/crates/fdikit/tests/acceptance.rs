//! Acceptance criteria, one PASS/FAIL line each.

mod common;

use fdikit::benchmarks;
use fdikit::fdianalysis::{fdichkspec, fdigenspec, AnalysisOptions, StructureMatrix};
use fdikit::fdiperf::fdif2ngap_bank;
use fdikit::fdisyn::{afdisyn, afdsyn, efdsyn, emmsyn, SynthesisOptions};
use fdikit::mdetect::{emdsyn, mddist2c, nugap, DistOptions, Distance, MdOptions};
use fdikit::numkern::{dense, solve_lyapunov, solve_riccati, Kind};
use fdikit::poly::{tf_matrix, Poly};
use fdikit::rng::SplitMix;
use fdikit::sslib::{freqresp, mdmodset, LtiModel};
use fdikit::sysnorms::{norm_h2, norm_hinf, poles};
use fdikit::{CMat, Mat, C64};
use proptest::prelude::any;
use proptest::test_runner::TestRunner;
use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Debug>(r: std::result::Result<T, E>) -> Result<T, String> {
    r.map_err(|e| format!("{e:?}"))
}

fn lin(c: f64) -> Poly {
    Poly::linear(c)
}

fn peak_abs(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Largest entry mismatch of `c * got` against `want` over the probes, with the scalar
/// `c` fixed at `s = 0` on the reference entry of largest magnitude.
fn scaled_mismatch(got: &LtiModel, want: &LtiModel) -> Result<f64, String> {
    let g0 = ok(freqresp(got, C64::new(0.0, 0.0)))?;
    let w0 = ok(freqresp(want, C64::new(0.0, 0.0)))?;
    let (mut at, mut best) = ((0, 0), 0.0);
    for i in 0..w0.nrows() {
        for j in 0..w0.ncols() {
            if w0[(i, j)].norm() > best {
                best = w0[(i, j)].norm();
                at = (i, j);
            }
        }
    }
    let c = w0[at] / g0[at];
    let mut worst: f64 = 0.0;
    for z in common::probes() {
        worst = worst.max(peak_abs(&(ok(freqresp(got, z))? * c - ok(freqresp(want, z))?)));
    }
    Ok(worst)
}

fn structure(rows: &[&[u8]]) -> StructureMatrix {
    StructureMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| x != 0).collect()).collect(), rows[0].len())
}

const YUAN_WEAK: [[u8; 8]; 18] = [
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

const YUAN_STRONG: [usize; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 11, 16, 17];

fn row_set(rows: &[Vec<bool>]) -> BTreeSet<Vec<bool>> {
    rows.iter().cloned().collect()
}

fn weak_rows() -> Vec<Vec<bool>> {
    YUAN_WEAK.iter().map(|r| r.iter().map(|&x| x == 1).collect()).collect()
}

fn yuan_specifications() -> Outcome {
    let start = Instant::now();
    let sys = benchmarks::yuan();
    let weak = ok(fdigenspec(&sys, &AnalysisOptions { tol: 1e-7, fdtol: 1e-5, ..Default::default() }))?;
    let strong_opts = AnalysisOptions { tol: 1e-7, fdtol: 1e-4, fdgaintol: 1e-3, freqs: vec![0.0], sdeg: Some(-0.05) };
    let strong = ok(fdigenspec(&sys, &strong_opts))?;
    let elapsed = start.elapsed();
    let want_weak = weak_rows();
    let want_strong: Vec<Vec<bool>> = YUAN_STRONG.iter().map(|&i| want_weak[i].clone()).collect();
    ensure!(weak.page(0).len() == 18 && row_set(weak.page(0)) == row_set(&want_weak), "weak rows differ: {} found", weak.page(0).len());
    ensure!(
        strong.page(0).len() == 12 && row_set(strong.page(0)) == row_set(&want_strong),
        "strong rows differ: {} found",
        strong.page(0).len()
    );
    ensure!(elapsed < Duration::from_secs(5), "runtime {elapsed:?}");
    Ok(format!("18 weak and 12 strong rows in {elapsed:.2?}"))
}

fn yuan_least_orders() -> Outcome {
    let start = Instant::now();
    let sys = benchmarks::yuan();
    let opts = AnalysisOptions { tol: 1e-7, fdtol: 1e-4, fdgaintol: 1e-3, freqs: vec![0.0], sdeg: None };
    let chk = ok(fdichkspec(&sys, &StructureMatrix::from_rows(weak_rows(), 8), &opts, 1))?;
    let elapsed = start.elapsed();
    let feasible: Vec<usize> = (0..18).filter(|&i| chk.rdims[i] > 0).collect();
    ensure!(feasible.len() == 12, "{} feasible rows", feasible.len());
    let least: Vec<i64> = feasible.iter().map(|&i| chk.leastorders[i]).collect();
    ensure!(least == [1, 2, 2, 2, 1, 1, 1, 2, 2, 2, 2, 2], "least orders {least:?}");
    ensure!(elapsed < Duration::from_secs(10), "runtime {elapsed:?}");
    Ok(format!("least orders {least:?} in {elapsed:.2?}"))
}

fn exact_filter() -> Outcome {
    let sys = ok(benchmarks::unstable_plant())?;
    let f = ok(efdsyn(&sys, &SynthesisOptions { rdim: Some(1), sdeg: Some(-3.0), ..Default::default() }))?;
    let dec = common::decoupling(&f.q, &sys);
    ensure!(dec < 1e-7, "decoupling {dec:e}");
    ensure!(f.q.order() == 1, "order {}", f.q.order());
    let p = ok(poles(&f.q))?;
    ensure!((p[0] - C64::new(-3.0, 0.0)).norm() < 1e-6, "pole {}", p[0]);
    let (z, one) = (Poly::zero(), Poly::one());
    let q_ref = ok(tf_matrix(&[vec![z, lin(-3.0), lin(2.0).scale(-1.0)]], &[vec![one, lin(3.0), lin(3.0)]], 0.0))?;
    let rf_ref = ok(tf_matrix(&[vec![lin(2.0), lin(-3.0)]], &[vec![lin(3.0), lin(3.0)]], 0.0))?;
    let joint = |q: &LtiModel, r: &LtiModel| ok(fdikit::sslib::augment_columns(q, r));
    let e = scaled_mismatch(&joint(&f.q, &f.r.columns_of(&["faults"]))?, &joint(&q_ref, &rf_ref)?)?;
    ensure!(e < 1e-6, "response mismatch {e:e}");
    Ok(format!("decoupling {dec:.1e}, pole {:.9}, mismatch {e:.1e}", p[0].re))
}

fn afdip_gaps() -> Outcome {
    let sys = ok(benchmarks::noisy_plant())?;
    let spec = structure(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0]]);
    let opts = SynthesisOptions { sfdi: Some(spec.clone()), sdeg: Some(-3.0), smarg: Some(-3.0), tol: 1e-7, ..Default::default() };
    let bank = ok(afdisyn(&sys, &opts))?;
    let gaps: Vec<f64> = bank.iter().map(|f| f.as_ref().and_then(|f| f.info.gap).unwrap_or(f64::NAN)).collect();
    let rs: Vec<Option<LtiModel>> = bank.iter().map(|f| f.as_ref().map(|f| f.r.clone())).collect();
    let again = ok(fdif2ngap_bank(&rs, &[], Some(&spec)))?.value;
    for (i, want) in [1.5, f64::INFINITY, 1.0].into_iter().enumerate() {
        if want.is_infinite() {
            ensure!(gaps[i] == want && again[i] == want, "gap {i}: {} / {}", gaps[i], again[i]);
        } else {
            ensure!((gaps[i] - want).abs() < 1e-4, "gap {i}: {}", gaps[i]);
            ensure!((again[i] - gaps[i]).abs() < 1e-6, "recomputed gap {i}: {} vs {}", again[i], gaps[i]);
        }
    }
    Ok(format!("gaps {gaps:?}, recomputed {again:?}"))
}

fn emms_example() -> Outcome {
    let sys = ok(benchmarks::actuator_plant())?;
    let mr = ok(LtiModel::gain(Mat::identity(2, 2), 0.0).with_groups(&[("faults", vec![0, 1])]))?;
    let (f, m) = ok(emmsyn(&sys, &mr, &SynthesisOptions { sdeg: Some(-1.0), minimal: false, ..Default::default() }))?;
    let s = Poly(vec![0.0, 1.0]);
    let m_ref = ok(tf_matrix(
        &[vec![s, Poly::zero()], vec![Poly::zero(), Poly::one()]],
        &[vec![lin(1.0), Poly::one()], vec![Poly::one(), lin(1.0)]],
        0.0,
    ))?;
    let em = scaled_mismatch(&m, &m_ref)?;
    ensure!(em < 1e-6, "M mismatch {em:e}");
    // Q [G; I] against [0 M Mr] over every input, from the raw frequency responses.
    let faults = sys.group("faults");
    let controls = sys.group("controls");
    let (p, mu) = (sys.n_out(), controls.len());
    let mut worst: f64 = 0.0;
    for z in common::probes() {
        let g = ok(freqresp(&sys, z))?;
        let mut stacked = CMat::zeros(p + mu, sys.n_in());
        stacked.view_mut((0, 0), (p, sys.n_in())).copy_from(&g);
        for (k, &c) in controls.iter().enumerate() {
            stacked[(p + k, c)] = C64::new(1.0, 0.0);
        }
        let mut target = CMat::zeros(f.q.n_out(), sys.n_in());
        let mz = ok(freqresp(&m, z))? * ok(freqresp(&mr, z))?;
        for (k, &c) in faults.iter().enumerate() {
            target.column_mut(c).copy_from(&mz.column(k));
        }
        worst = worst.max(peak_abs(&(ok(freqresp(&f.q, z))? * stacked - target)));
    }
    let diff = ok(fdikit::sslib::parallel(&f.r.columns_of(&["faults"]), &m.scale(-1.0)))?;
    let hinf = ok(norm_hinf(&diff))?.0;
    ensure!(worst < 1e-7 && hinf < 1e-7, "model-matching error {worst:e} at probes, {hinf:e} peak");
    Ok(format!("M mismatch {em:.1e}, matching error {:.1e}", worst.max(hinf)))
}

fn afdp_internal_form() -> Outcome {
    let sys = ok(benchmarks::noisy_plant())?;
    let f = ok(afdsyn(&sys, &SynthesisOptions::default()))?;
    let gap = f.info.gap.unwrap_or(f64::NAN);
    let rw_ref = ok(tf_matrix(&[vec![lin(-1.0)]], &[vec![lin(1.0)]], 0.0))?;
    let e = scaled_mismatch(&f.r.columns_of(&["noise"]), &rw_ref)?;
    ensure!(e < 1e-6, "R_w mismatch {e:e}");
    ensure!((gap - 2.0).abs() < 1e-6, "gap {gap}");
    Ok(format!("R_w mismatch {e:.1e}, gap {gap:.12}"))
}

fn model_detection() -> Outcome {
    let start = Instant::now();
    let mm = ok(benchmarks::aircraft_grid())?;
    let h = Mat::from_row_slice(1, 4, &[0.7645, 0.8848, 0.5778, 0.9026]);
    let opts = MdOptions { sdeg: Some(-1.0), poles: vec![C64::new(-1.0, 0.0)], hdesign: vec![Some(h); 9], ..Default::default() };
    let bank = ok(emdsyn(&mm, &opts))?;
    let perf = &bank.info.mdperf;
    let n = mm.len();
    ensure!(n == 9, "{n} models");
    let (mut diag, mut off): (f64, f64) = (0.0, f64::INFINITY);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                diag = diag.max(perf[(i, j)]);
            } else {
                off = off.min(perf[(i, j)]);
            }
        }
        let q = bank.q[i].as_ref().ok_or(format!("filter {i} missing"))?;
        ensure!(q.order() == 1, "filter {i} order {}", q.order());
        let p = ok(poles(q))?;
        ensure!((p[0] - C64::new(-1.0, 0.0)).norm() < 1e-6, "filter {i} pole {}", p[0]);
    }
    ensure!(diag < 1e-8, "diagonal {diag:e}");
    ensure!(off > 1e-3, "off-diagonal {off:e}");
    // grid point (0.5, 0.5) is the fifth model
    let g = &mm.components[0];
    let half = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.5]));
    let cur = ok(LtiModel::new(g.a.clone(), &g.b * half, g.c.clone(), g.d.clone(), 0.0))?;
    let cur = ok(mdmodset(&[cur], &[0, 1], &[], &[]))?.components.remove(0);
    for distance in [Distance::Nugap, Distance::Hinf, Distance::H2] {
        let c = ok(mddist2c(&mm, &cur, &DistOptions { distance, ..Default::default() }))?;
        ensure!(c.mind == 4, "{distance:?} picks model {}", c.mind + 1);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "runtime {elapsed:?}");
    Ok(format!("diagonal {diag:.1e}, off-diagonal min {off:.3e}, model 5 selected, {elapsed:.2?}"))
}

fn stable_matrix(rng: &mut SplitMix, n: usize) -> Result<Mat, String> {
    let a0 = rng.matrix(n, n);
    let shift = ok(dense::eigenvalues(&a0))?.iter().map(|z| z.re).fold(f64::MIN, f64::max);
    Ok(a0 - Mat::identity(n, n) * (shift + 0.5 + rng.next_f64()))
}

fn random_stable(rng: &mut SplitMix, n: usize, p: usize, m: usize) -> Result<LtiModel, String> {
    let a = stable_matrix(rng, n)?;
    ok(LtiModel::new(a, rng.matrix(n, m), rng.matrix(p, n), rng.matrix(p, m) * 0.5, 0.0))
}

/// Residuals are relative to `1 + |X|`.
fn norm_kernels() -> Outcome {
    let allpass = ok(tf_matrix(&[vec![lin(-1.0)]], &[vec![lin(1.0)]], 0.0))?;
    let hinf = ok(norm_hinf(&allpass))?.0;
    ensure!((hinf - 1.0).abs() <= 1e-8, "Hinf {hinf}");
    let lag = ok(tf_matrix(&[vec![Poly::one()]], &[vec![lin(1.0)]], 0.0))?;
    let h2 = ok(norm_h2(&lag))?;
    ensure!((h2 - 0.7071067).abs() <= 1e-6, "H2 {h2}");
    let mut rng = SplitMix::new(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = 2 + (rng.next_f64() * 4.0) as usize;
        let a = stable_matrix(&mut rng, n)?;
        let b = rng.matrix(n, 2);
        let c = rng.matrix(2, n);
        let q = c.transpose() * &c;
        let r = Mat::identity(2, 2);
        let s = rng.matrix(n, 2) * 0.1;
        // A'X + XA - (XB + S) R^-1 (XB + S)' + Q
        let x = ok(solve_riccati(&a, &b, &q, &r, Some(&s), Kind::Continuous))?.x;
        let l = &x * &b + &s;
        let res = a.transpose() * &x + &x * &a - &l * l.transpose() + &q;
        worst = worst.max(res.norm() / (1.0 + x.norm()));
        // A'XA - X - A'XB (R + B'XB)^-1 B'XA + Q
        let ad = &a / (1.0 + a.norm());
        let x = ok(solve_riccati(&ad, &b, &q, &r, None, Kind::Discrete))?.x;
        let l = ad.transpose() * &x * &b;
        let k = ok(dense::solve(&(&r + b.transpose() * &x * &b), &l.transpose()))?;
        let res = ad.transpose() * &x * &ad - &x - &l * k + &q;
        worst = worst.max(res.norm() / (1.0 + x.norm()));
        let x = ok(solve_lyapunov(&a, None, &q, Kind::Continuous))?;
        let res = a.transpose() * &x + &x * &a + &q;
        worst = worst.max(res.norm() / (1.0 + x.norm()));
        let x = ok(solve_lyapunov(&ad, None, &q, Kind::Discrete))?;
        let res = ad.transpose() * &x * &ad - &x + &q;
        worst = worst.max(res.norm() / (1.0 + x.norm()));
    }
    ensure!(worst <= 1e-8, "worst residual {worst:e}");
    Ok(format!("Hinf {hinf:.12}, H2 {h2:.9}, worst residual {worst:.1e} over 100 instances"))
}

fn nugap_properties() -> Outcome {
    let mut rng = SplitMix::new(77);
    let (mut asym, mut selfgap): (f64, f64) = (0.0, 0.0);
    for k in 0..50 {
        let n1 = 1 + (rng.next_f64() * 4.0) as usize;
        let n2 = 1 + (rng.next_f64() * 4.0) as usize;
        let g1 = random_stable(&mut rng, n1, 2, 2)?;
        let g2 = random_stable(&mut rng, n2, 2, 2)?;
        let d12 = ok(nugap(&g1, &g2, &[]))?.0;
        let d21 = ok(nugap(&g2, &g1, &[]))?.0;
        ensure!((0.0..=1.0).contains(&d12) && (0.0..=1.0).contains(&d21), "pair {k}: {d12} {d21}");
        asym = asym.max((d12 - d21).abs());
        selfgap = selfgap.max(ok(nugap(&g1, &g1, &[]))?.0);
    }
    ensure!(asym <= 1e-8, "asymmetry {asym:e}");
    ensure!(selfgap <= 1e-10, "self gap {selfgap:e}");
    Ok(format!("asymmetry {asym:.1e}, self gap {selfgap:.1e} over 50 pairs"))
}

fn invariant_suite() -> Outcome {
    let mut failed = vec![];
    for (name, case) in common::CASES {
        let mut runner = TestRunner::new(common::config());
        if let Err(e) = runner.run(&any::<u64>(), case) {
            failed.push(format!("{name}: {e}"));
        }
    }
    ensure!(failed.is_empty(), "{}", failed.join("; "));
    Ok(format!("{} generators x {} seeds, zero failures", common::CASES.len(), common::SEEDS))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Yuan weak and strong specifications", yuan_specifications),
        ("Yuan least orders", yuan_least_orders),
        ("exact fault detection filter", exact_filter),
        ("approximate isolation gaps", afdip_gaps),
        ("exact model matching", emms_example),
        ("approximate detection internal form", afdp_internal_form),
        ("model detection on the aircraft grid", model_detection),
        ("norm and matrix equation kernels", norm_kernels),
        ("nu-gap properties", nugap_properties),
        ("invariant suite", invariant_suite),
    ];
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail})", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {}: {name} ({detail})", k + 1);
            }
        }
    }
    std::panic::set_hook(hook);
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
