//! Exact model matching with a diagonal updating factor.

use super::{finish, FdiFilter, Setup, SynthesisOptions, SynthesisReport};
use crate::factor::{self, realize_rows, PencilRow};
use crate::fdianalysis::poly_nonzero;
use crate::poly::{siso_tf, tf_matrix, row_realization, Poly};
use crate::rng::SplitMix;
use crate::sslib::LtiModel;
use crate::sysnorms::norm_hinf;
use crate::{CMat, FdiError, Mat, Result, C64};

/// Scaling applied to each diagonal entry of the updating factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalize {
    /// Monic numerator: unit high-frequency gain when the entry is biproper.
    #[default]
    Gain,
    /// Unit magnitude at `s = 0` (`z = 1`); falls back to `Gain` when the entry vanishes there.
    DcGain,
    /// Unit H∞ norm.
    InfNorm,
}

/// A left inverse row `r / den` of the reduced fault channel for one fault.
struct Inverse {
    row: PencilRow,
    den: Poly,
}

fn fault_numerators(set: &Setup, row: &PencilRow) -> Vec<Poly> {
    let num = row.internal_numerators(&set.sys, &set.controls);
    set.faults.iter().map(|&j| num[j].clone()).collect()
}

/// One least-order row per fault, decoupling the other faults.
fn per_fault_inverses(set: &Setup, opts: &SynthesisOptions) -> Result<Vec<Inverse>> {
    let mf = set.faults.len();
    (0..mf)
        .map(|i| {
            let others: Vec<usize> = (0..mf).filter(|&j| j != i).collect();
            let cols = factor::decoupled_columns(&set.sys, &set.fault_cols(&others));
            let rows = factor::pencil_basis(&set.sys, &cols, &set.controls, opts.tol)?;
            if rows.is_empty() {
                return Err(FdiError::NotSolvable(format!("fault {i} cannot be isolated from the others")));
            }
            let admissible = |r: &PencilRow| poly_nonzero(&fault_numerators(set, &r.normalized())[i], opts.fdtol);
            let sel = factor::select_admissible_subsets(&rows, &admissible, opts.seed.wrapping_add(i as u64))
                .map_err(|_| FdiError::NotSolvable(format!("fault {i} cannot be isolated from the others")))?;
            let row = sel.row.normalized();
            let den = fault_numerators(set, &row)[i].clone();
            Ok(Inverse { row, den })
        })
        .collect()
}

fn poly_det(p: &[Vec<Poly>]) -> Poly {
    let n = p.len();
    match n {
        0 => Poly::one(),
        1 => p[0][0].clone(),
        _ => {
            let mut acc = Poly::zero();
            for j in 0..n {
                if p[0][j].is_zero() {
                    continue;
                }
                let term = p[0][j].mul(&poly_det(&minor(p, 0, j)));
                acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

fn minor(p: &[Vec<Poly>], r: usize, c: usize) -> Vec<Vec<Poly>> {
    p.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, x)| x.clone()).collect())
        .collect()
}

/// Rows of `adj(H F) H W` over `det(H F)` for a full nullspace basis `W`.
fn design_inverses(set: &Setup, h: &Mat, opts: &SynthesisOptions, rng: &mut SplitMix) -> Result<(Vec<Inverse>, Vec<usize>)> {
    let mf = set.faults.len();
    let rows = factor::pencil_basis(&set.sys, &factor::decoupled_columns(&set.sys, &[]), &set.controls, opts.tol)?;
    if rows.is_empty() {
        return Err(FdiError::EmptyNullspace);
    }
    let nb = rows.len();
    if h.nrows() != mf || h.ncols() != nb {
        return Err(FdiError::Dimension(format!("design matrix must be {mf}x{nb}")));
    }
    let refs: Vec<&PencilRow> = rows.iter().collect();
    let hw: Vec<PencilRow> = (0..mf).map(|i| PencilRow::combine(&refs, &h.row(i).iter().copied().collect::<Vec<_>>())).collect();
    let p: Vec<Vec<Poly>> = hw.iter().map(|r| fault_numerators(set, r)).collect();
    let z = set.probe(opts, rng);
    let pz = CMat::from_fn(mf, mf, |i, j| p[i][j].eval(z));
    let sv = crate::numkern::dense::csingular_values(&pz);
    if sv.last().copied().unwrap_or(0.0) <= 1e-9 * sv[0].max(1e-300) {
        return Err(FdiError::NotSolvable("the reduced fault channel is not left invertible".into()));
    }
    let det = poly_det(&p);
    let inv = (0..mf)
        .map(|k| {
            let mut row = hw[0].zero_like();
            for (m, hm) in hw.iter().enumerate() {
                // adj(P)[k][m] = (-1)^(k+m) det(minor(P, m, k))
                let mut cof = poly_det(&minor(&p, m, k));
                if (k + m) % 2 == 1 {
                    cof = cof.scale(-1.0);
                }
                if !cof.is_zero() {
                    row = row.add(&hm.mul_poly(&cof));
                }
            }
            Inverse { row, den: det.clone() }
        })
        .collect();
    Ok((inv, rows.iter().map(|r| r.degree).collect()))
}

/// Linear and quadratic real factors of `p` with one representative root each.
fn real_factors(p: &Poly) -> Result<(f64, Vec<(Poly, C64)>)> {
    let mut out = vec![];
    for z in p.roots()? {
        if z.im.abs() <= 1e-9 * (1.0 + z.norm()) {
            out.push((Poly(vec![-z.re, 1.0]), C64::new(z.re, 0.0)));
        } else if z.im > 0.0 {
            out.push((Poly(vec![z.norm_sqr(), -2.0 * z.re, 1.0]), z));
        }
    }
    Ok((p.lead(), out))
}

/// Exact model matching `R_f = M M_rf` for a reference `sysr` with fault inputs only.
///
/// Returns the filter and the diagonal, stable and invertible updating factor `M`.
pub fn emmsyn(sysf: &LtiModel, sysr: &LtiModel, opts: &SynthesisOptions) -> Result<(FdiFilter, LtiModel)> {
    let set = Setup::new(sysf, opts)?;
    let mf = set.faults.len();
    if mf == 0 {
        return Err(FdiError::InvalidOption("the system has no fault inputs".into()));
    }
    for g in ["controls", "disturbances", "noise", "aux"] {
        if !sysr.group(g).is_empty() {
            return Err(FdiError::InvalidOption(format!("the reference model must have fault inputs only (found `{g}`)")));
        }
    }
    let sysr = sysr.to_standard()?;
    if sysr.n_in() != mf || sysr.n_out() != mf {
        return Err(FdiError::Dimension(format!("the reference model must be {mf}x{mf}")));
    }
    if sysr.ts != set.ts() {
        return Err(FdiError::SampleTime);
    }
    let mut rng = SplitMix::new(opts.seed);
    let (inv, degs) = match &opts.hdesign {
        Some(h) => design_inverses(&set, h, opts, &mut rng)?,
        None => (per_fault_inverses(&set, opts)?, vec![]),
    };
    let mut refs = vec![vec![(Poly::zero(), Poly::one()); mf]; mf];
    for (i, r) in refs.iter_mut().enumerate() {
        for (k, e) in r.iter_mut().enumerate() {
            *e = siso_tf(&sysr, i, k)?;
        }
    }
    let stab = opts.stabilization(set.ts());
    let ts = set.ts();
    let mut nrows = Vec::with_capacity(mf);
    let mut dens = Vec::with_capacity(mf);
    let mut mnum = vec![vec![Poly::zero(); mf]; mf];
    let mut mden = vec![vec![Poly::one(); mf]; mf];
    for i in 0..mf {
        let active: Vec<usize> = (0..mf).filter(|&k| poly_nonzero(&refs[i][k].0, 1e-12)).collect();
        if active.is_empty() {
            return Err(FdiError::NotSolvable(format!("row {i} of the reference model is zero")));
        }
        let factor_of = |k: usize| refs[i][k].1.mul(&inv[k].den);
        let mut n = inv[0].row.zero_like();
        for &k in &active {
            let mut coef = refs[i][k].0.clone();
            for &l in active.iter().filter(|&&l| l != k) {
                coef = coef.mul(&factor_of(l));
            }
            n = n.add(&inv[k].row.mul_poly(&coef));
        }
        let mut lead = 1.0;
        let mut kept = Poly::one();
        for &k in &active {
            for p in [&refs[i][k].1, &inv[k].den] {
                let (l, fs) = real_factors(p)?;
                lead *= l;
                for (f, z) in fs {
                    if n.vanishes_at(z, 1e-7) {
                        n = n.div_poly(&f);
                    } else {
                        kept = kept.mul(&f);
                    }
                }
            }
        }
        let d = kept.scale(lead);
        let deg = d.degree().unwrap_or(0).max(n.w_degree());
        let phi = stab.denominator(deg, ts);
        let c = match opts.normalize {
            Normalize::Gain => 1.0 / d.lead(),
            Normalize::DcGain => {
                let z0 = C64::new(if ts > 0.0 { 1.0 } else { 0.0 }, 0.0);
                let v = (d.eval(z0) / phi.eval(z0)).norm();
                if v > 1e-10 * d.max_abs() { 1.0 / v } else { 1.0 / d.lead() }
            }
            Normalize::InfNorm => 1.0 / norm_hinf(&row_realization(std::slice::from_ref(&d), &phi, ts))?.0,
        };
        let mut n = n.mul_poly(&Poly::constant(c));
        n.degree = deg;
        mnum[i][i] = d.scale(c);
        mden[i][i] = phi.clone();
        nrows.push(n);
        dens.push(phi);
    }
    let pair = realize_rows(&set.sys, &set.controls, &nrows, &dens)?;
    let m = tf_matrix(&mnum, &mden, ts)?;
    let info = SynthesisReport {
        hdesign: opts.hdesign.clone(),
        degs,
        tcond: 1.0,
        seed: opts.seed,
        ..Default::default()
    };
    Ok((finish(&pair, info), m))
}
