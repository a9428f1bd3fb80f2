//! Exact fault detection and isolation filters.

use super::{design_matrix, fault_structure, finish, realize, undetected, w_rank, FdiFilter, Setup, SynthesisOptions, SynthesisReport};
use crate::factor::{self, stabilizing_injection, FilterPair, PencilRow};
use crate::fdianalysis::StructureMatrix;
use crate::rng::SplitMix;
use crate::sslib::LtiModel;
use crate::{FdiError, Mat, Result};

/// Filter rows built from a nullspace basis, with the design matrix that produced them.
pub(crate) struct EfdRows {
    pub pair: FilterPair,
    pub h: Mat,
}

/// Builds `q` filter rows from the basis `rows` so that every fault in `targets` is detected.
pub(crate) fn efd_rows(
    set: &Setup,
    rows: &[PencilRow],
    targets: &[usize],
    opts: &SynthesisOptions,
    hdesign: Option<&Mat>,
    rdim: Option<usize>,
    rng: &mut SplitMix,
) -> Result<EfdRows> {
    let nb = rows.len();
    let aopts = opts.analysis();
    let tester = set.tester(&aopts, opts);
    let pattern = tester.pattern(rows);
    let missing: Vec<usize> = targets.iter().copied().filter(|&j| !pattern[j]).collect();
    if !missing.is_empty() {
        return Err(FdiError::NotDetectable(missing));
    }
    let q = rdim.or(hdesign.map(|h| h.nrows())).unwrap_or(if opts.minimal { 1 } else { nb }).min(nb);
    let covers = |row: &PencilRow| {
        let p = tester.pattern(std::slice::from_ref(row));
        targets.iter().all(|&j| p[j])
    };
    if let Some(h) = hdesign {
        if h.ncols() != nb || h.nrows() != q {
            return Err(FdiError::Dimension(format!("design matrix must be {q}x{nb}")));
        }
        let pair = if opts.minimal {
            let refs: Vec<&PencilRow> = rows.iter().collect();
            let combined: Vec<PencilRow> = (0..q)
                .map(|i| {
                    let hi: Vec<f64> = h.row(i).iter().copied().collect();
                    let mut r = PencilRow::combine(&refs, &hi);
                    r.degree = rows.iter().zip(&hi).filter(|(_, &x)| x != 0.0).map(|(r, _)| r.degree).max().unwrap_or(0);
                    r
                })
                .collect();
            realize(set, &combined, opts)?
        } else {
            realize(set, rows, opts)?.left_mul(h)
        };
        return Ok(EfdRows { pair, h: h.clone() });
    }
    if !opts.minimal {
        let h = design_matrix(q, nb, rng);
        let pair = realize(set, rows, opts)?.left_mul(&h);
        return Ok(EfdRows { pair, h });
    }
    let sel = factor::select_admissible_subsets(rows, &covers, opts.seed)?;
    let mut h = Mat::zeros(q, nb);
    for (k, &i) in sel.subset.iter().enumerate() {
        h[(0, i)] = sel.h[k];
    }
    let mut chosen = vec![sel.row.clone()];
    let z = set.probe(opts, rng);
    for i in 0..nb {
        if chosen.len() == q {
            break;
        }
        let mut trial: Vec<&PencilRow> = chosen.iter().collect();
        trial.push(&rows[i]);
        if w_rank(&trial, z) == trial.len() {
            h[(chosen.len(), i)] = 1.0;
            chosen.push(rows[i].clone());
        }
    }
    let pair = realize(set, &chosen, opts)?;
    Ok(EfdRows { pair, h })
}

fn observer_filter(set: &Setup, opts: &SynthesisOptions, rng: &mut SplitMix) -> Result<(FilterPair, Mat)> {
    let nb = factor::left_nullspace(&set.sys, &[], true, &opts.stabilization(set.ts()), opts.tol)?;
    let p = set.sys.n_out();
    let q = opts.rdim.or(opts.hdesign.as_ref().map(|h| h.nrows())).unwrap_or(if opts.minimal { 1 } else { p }).min(p);
    let h = match &opts.hdesign {
        Some(h) if h.ncols() == p && h.nrows() == q => h.clone(),
        Some(_) => return Err(FdiError::Dimension(format!("design matrix must be {q}x{p}"))),
        None => design_matrix(q, p, rng),
    };
    let mut pair = nb.pair.left_mul(&h);
    let k = stabilizing_injection(&pair.a, &pair.c, &opts.targets(set.ts())?)?;
    pair.inject(&k);
    Ok((pair, h))
}

/// Exact fault detection filter: decouples controls and disturbances and detects every fault.
pub fn efdsyn(sysf: &LtiModel, opts: &SynthesisOptions) -> Result<FdiFilter> {
    let set = Setup::new(sysf, opts)?;
    if set.faults.is_empty() {
        return Err(FdiError::InvalidOption("the system has no fault inputs".into()));
    }
    let mut rng = SplitMix::new(opts.seed);
    let targets: Vec<usize> = (0..set.faults.len()).collect();
    let observer = !opts.nullspace && set.sys.group("disturbances").is_empty();
    let (pair, h, degs) = if observer {
        let (pair, h) = observer_filter(&set, opts, &mut rng)?;
        (pair, h, vec![])
    } else {
        let rows = factor::pencil_basis(&set.sys, &factor::decoupled_columns(&set.sys, &[]), &set.controls, opts.tol)?;
        if rows.is_empty() {
            return Err(FdiError::EmptyNullspace);
        }
        let degs = rows.iter().map(|r| r.degree).collect();
        let out = efd_rows(&set, &rows, &targets, opts, opts.hdesign.as_ref(), opts.rdim, &mut rng)?;
        (out.pair, out.h, degs)
    };
    let s = fault_structure(&pair, opts)?;
    let missing = undetected(&s, &targets);
    if !missing.is_empty() {
        return Err(FdiError::NotDetectable(missing));
    }
    let info = SynthesisReport {
        hdesign: Some(h),
        degs,
        s: Some(s),
        tcond: 1.0,
        seed: opts.seed,
        ..Default::default()
    };
    Ok(finish(&pair, info))
}

pub(crate) fn default_sfdi(mf: usize) -> StructureMatrix {
    StructureMatrix::from_rows(vec![vec![true; mf]], mf)
}

pub(crate) fn selected(opts: &SynthesisOptions, nb: usize) -> Result<Vec<bool>> {
    let mut sel = vec![opts.fdselect.is_none(); nb];
    if let Some(list) = &opts.fdselect {
        for &i in list {
            if i >= nb {
                return Err(FdiError::IndexOutOfRange { index: i, limit: nb });
            }
            sel[i] = true;
        }
    }
    Ok(sel)
}

pub(crate) fn bank_rows(opts: &SynthesisOptions, mf: usize) -> Result<Vec<Vec<bool>>> {
    let sfdi = opts.sfdi.clone().unwrap_or_else(|| default_sfdi(mf));
    if sfdi.rows() > 0 && sfdi.cols != mf {
        return Err(FdiError::Dimension(format!("specifications have {} columns, the system has {mf} faults", sfdi.cols)));
    }
    Ok(sfdi.combined())
}

fn row_error(i: usize, e: FdiError) -> FdiError {
    match e {
        FdiError::NotSolvable(m) => FdiError::NotSolvable(format!("specification {i}: {m}")),
        FdiError::EmptyNullspace | FdiError::NotDetectable(_) => FdiError::NotSolvable(format!("specification {i}: {e}")),
        other => other,
    }
}

/// Bank of exact fault detection and isolation filters, one per specification row.
///
/// Member `i` decouples the faults with zero entries in row `i` and detects the others.
/// Members outside `fdselect` are `None`.
pub fn efdisyn(sysf: &LtiModel, opts: &SynthesisOptions) -> Result<Vec<Option<FdiFilter>>> {
    let set = Setup::new(sysf, opts)?;
    let mf = set.faults.len();
    if mf == 0 {
        return Err(FdiError::InvalidOption("the system has no fault inputs".into()));
    }
    let spec = bank_rows(opts, mf)?;
    let sel = selected(opts, spec.len())?;
    let mut out = Vec::with_capacity(spec.len());
    for (i, row) in spec.iter().enumerate() {
        if !sel[i] {
            out.push(None);
            continue;
        }
        let filter = efdi_member(&set, row, i, opts).map_err(|e| row_error(i, e))?;
        out.push(Some(filter));
    }
    Ok(out)
}

fn efdi_member(set: &Setup, row: &[bool], i: usize, opts: &SynthesisOptions) -> Result<FdiFilter> {
    let mut rng = SplitMix::new(opts.seed.wrapping_add(i as u64));
    let zeros: Vec<usize> = (0..row.len()).filter(|&j| !row[j]).collect();
    let targets: Vec<usize> = (0..row.len()).filter(|&j| row[j]).collect();
    let extra = set.fault_cols(&zeros);
    let rows = factor::pencil_basis(&set.sys, &factor::decoupled_columns(&set.sys, &extra), &set.controls, opts.tol)?;
    if rows.is_empty() {
        return Err(FdiError::EmptyNullspace);
    }
    let hdesign = opts.bank_hdesign.get(i).and_then(|h| h.as_ref());
    let rdim = opts.bank_rdim.get(i).copied().flatten().or(opts.rdim);
    let out = efd_rows(set, &rows, &targets, opts, hdesign, rdim, &mut rng)?;
    let s = fault_structure(&out.pair, opts)?;
    let achieved: Vec<bool> = (0..row.len()).map(|j| s.combined().iter().any(|r| r[j])).collect();
    if achieved != row {
        return Err(FdiError::NotSolvable(format!("achieved structure {achieved:?} differs from the specification")));
    }
    let info = SynthesisReport {
        hdesign: Some(out.h),
        degs: rows.iter().map(|r| r.degree).collect(),
        s: Some(s),
        tcond: 1.0,
        seed: opts.seed,
        ..Default::default()
    };
    Ok(finish(&out.pair, info))
}
