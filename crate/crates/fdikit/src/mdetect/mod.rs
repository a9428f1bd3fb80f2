//! Model detection: distances between component models, filter banks that single out
//! the active component, and their performance measures.

mod distance;
mod perf;
mod synthesis;

pub use distance::{mddist, mddist2c, nugap, Distance, DistOptions};
pub use perf::{mdgap, mdmatch, mdperf, PerfOptions};
pub use synthesis::{amdsyn, emdsyn, MdBank, MdOptions, MdReport};

use crate::numkern::dense;
use crate::sslib::{feedthrough_identity, freqresp, lambda_of, LtiModel};
use crate::sysnorms::norm_hinf;
use crate::{FdiError, Mat, Result};

/// A square (or row-selected) table of pairwise values.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    pub values: Mat,
    /// Frequency where each value is attained.
    pub fpeak: Mat,
    /// Column indices of each row sorted by increasing value (ties keep the lower index).
    pub perm: Vec<Vec<usize>>,
    /// Second smallest over the `mdindex`-th smallest value of each row.
    pub rel: Vec<f64>,
}

/// Values against a single reference with the index of the smallest one.
#[derive(Debug, Clone, PartialEq)]
pub struct Closest {
    pub values: Vec<f64>,
    pub fpeak: Vec<f64>,
    /// Index of the smallest value; ties go to the lowest index.
    pub mind: usize,
}

/// Peak gain over all frequencies, or the largest 2-norm over a frequency grid.
pub(crate) fn peak(sys: &LtiModel, freqs: &[f64]) -> Result<(f64, f64)> {
    if sys.n_in() == 0 || sys.n_out() == 0 {
        return Ok((0.0, 0.0));
    }
    if freqs.is_empty() {
        return norm_hinf(sys);
    }
    let mut best = (0.0, freqs[0]);
    for &w in freqs {
        let g = freqresp(sys, lambda_of(sys.ts, w)).map_err(|_| FdiError::PoleOnGrid(w))?;
        let v = dense::cnorm2(&g);
        if v > best.0 {
            best = (v, w);
        }
    }
    Ok(best)
}

/// Control columns, followed by the disturbance columns when `cdinp` is set.
pub(crate) fn channel_cols(g: &LtiModel, cdinp: bool) -> Vec<usize> {
    let mut cols = g.group("controls").to_vec();
    if cdinp {
        cols.extend_from_slice(g.group("disturbances"));
    }
    cols
}

/// `[G; S_u]` with the input groups of `g`, the signals seen by a filter.
pub(crate) fn filter_inputs(g: &LtiModel) -> LtiModel {
    feedthrough_identity(g, g.group("controls"))
}

/// Sorted column order and relative value of each row.
pub(crate) fn rank_rows(values: &Mat, mdindex: usize) -> (Vec<Vec<usize>>, Vec<f64>) {
    let n = values.ncols();
    let mut perm = Vec::with_capacity(values.nrows());
    let mut rel = Vec::with_capacity(values.nrows());
    for i in 0..values.nrows() {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| values[(i, a)].total_cmp(&values[(i, b)]));
        let l = mdindex.clamp(2, n.max(2));
        rel.push(if n < 2 { f64::NAN } else { values[(i, idx[1])] / values[(i, idx[l.min(n) - 1])] });
        perm.push(idx);
    }
    (perm, rel)
}

/// Index of the smallest non-NaN value among `allowed`; ties go to the lowest index.
pub(crate) fn argmin(values: &[f64], allowed: &[bool]) -> usize {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if !allowed[i] || v.is_nan() {
            continue;
        }
        if best.is_none_or(|b| v < values[b]) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

pub(crate) fn selection(list: &Option<Vec<usize>>, n: usize) -> Result<Vec<bool>> {
    match list {
        None => Ok(vec![true; n]),
        Some(l) => {
            let mut sel = vec![false; n];
            for &i in l {
                if i >= n {
                    return Err(FdiError::IndexOutOfRange { index: i, limit: n });
                }
                sel[i] = true;
            }
            Ok(sel)
        }
    }
}
