//! Performance of model detection banks.

use super::{argmin, channel_cols, filter_inputs, peak, rank_rows, selection, Closest, DistanceTable};
use crate::fdiperf::{gap_ratio, Ratios};
use crate::sslib::{minimal_realization, series, LtiModel};
use crate::{FdiError, Mat, Result};

#[derive(Debug, Clone)]
pub struct PerfOptions {
    /// Rows (filters) to evaluate; all when absent.
    pub mdselect: Option<Vec<usize>>,
    pub mdfreq: Vec<f64>,
    /// Include the disturbance channels.
    pub cdinp: bool,
    pub mdindex: usize,
}

impl Default for PerfOptions {
    fn default() -> Self {
        PerfOptions { mdselect: None, mdfreq: vec![], cdinp: false, mdindex: 3 }
    }
}

fn gain(r: &LtiModel, cdinp: bool, freqs: &[f64]) -> Result<(f64, f64)> {
    let ch = r.select(&(0..r.n_out()).collect::<Vec<_>>(), &channel_cols(r, cdinp))?;
    peak(&ch, freqs)
}

/// Gains of the internal forms `r[i][j]`; rows of missing or unselected filters are `-1`.
pub fn mdperf(rbank: &[Vec<Option<LtiModel>>], opts: &PerfOptions) -> Result<DistanceTable> {
    let n = rbank.len();
    if n == 0 {
        return Err(FdiError::InvalidOption("empty bank".into()));
    }
    if rbank.iter().any(|row| row.len() != n) {
        return Err(FdiError::Dimension("the bank of internal forms must be square".into()));
    }
    let sel = selection(&opts.mdselect, n)?;
    let mut values = Mat::from_element(n, n, -1.0);
    let mut fpeak = Mat::zeros(n, n);
    for i in (0..n).filter(|&i| sel[i]) {
        if rbank[i].iter().any(|r| r.is_none()) {
            continue;
        }
        for (j, r) in rbank[i].iter().enumerate() {
            let (v, f) = gain(r.as_ref().unwrap(), opts.cdinp, &opts.mdfreq)?;
            values[(i, j)] = v;
            fpeak[(i, j)] = f;
        }
    }
    let (perm, mut rel) = rank_rows(&values, opts.mdindex);
    for i in 0..n {
        if values[(i, 0)] < 0.0 {
            rel[i] = f64::NAN;
        }
    }
    Ok(DistanceTable { values, fpeak, perm, rel })
}

/// Gains of every filter on the current model `sys` and the index of the best match.
/// Missing filters have gain 0 and are never selected.
pub fn mdmatch(qbank: &[Option<LtiModel>], sys: &LtiModel, opts: &PerfOptions) -> Result<Closest> {
    let n = qbank.len();
    let sel = selection(&opts.mdselect, n)?;
    let s = sys.to_standard()?;
    let aug = filter_inputs(&s);
    let mut values = vec![0.0; n];
    let mut fpeak = vec![0.0; n];
    let mut allowed = vec![false; n];
    for (i, q) in qbank.iter().enumerate() {
        let Some(q) = q else { continue };
        if !sel[i] {
            continue;
        }
        if q.n_in() != aug.n_out() {
            return Err(FdiError::Dimension(format!("filter {i} has {} inputs, expected {}", q.n_in(), aug.n_out())));
        }
        let r = minimal_realization(&series(q, &aug)?, 0.0)?;
        let (v, f) = gain(&r, opts.cdinp, &opts.mdfreq)?;
        values[i] = v;
        fpeak[i] = f;
        allowed[i] = true;
    }
    let mind = argmin(&values, &allowed);
    Ok(Closest { values, fpeak, mind })
}

/// Noise gaps of a bank: `beta_i = min_{j != i}` gain of `r[i][j]` over
/// `gamma_i =` gain of the noise channel of `r[i][i]`.
pub fn mdgap(rbank: &[Vec<Option<LtiModel>>], mdfreq: &[f64], cdinp: bool) -> Result<Ratios> {
    let n = rbank.len();
    let mut out = Ratios { value: vec![], beta: vec![], gamma: vec![] };
    for (i, row) in rbank.iter().enumerate() {
        if row.len() != n {
            return Err(FdiError::Dimension("the bank of internal forms must be square".into()));
        }
        if row.iter().any(|r| r.is_none()) {
            out.value.push(f64::NAN);
            out.beta.push(f64::NAN);
            out.gamma.push(f64::NAN);
            continue;
        }
        let mut beta = f64::INFINITY;
        for (j, r) in row.iter().enumerate() {
            if j != i {
                beta = beta.min(gain(r.as_ref().unwrap(), cdinp, mdfreq)?.0);
            }
        }
        let gamma = peak(&row[i].as_ref().unwrap().columns_of(&["noise"]), mdfreq)?.0;
        out.value.push(gap_ratio(beta, gamma));
        out.beta.push(beta);
        out.gamma.push(gamma);
    }
    Ok(out)
}
