//! Performance measures of fault detection filters.

use crate::fdianalysis::StructureMatrix;
use crate::sslib::{freqresp, lambda_of, parallel, LtiModel};
use crate::sysnorms::{column_hinf, norm_h2, norm_hinf};
use crate::{FdiError, Result};

/// Relative level below which a denominator gain counts as zero.
pub const ZERO_GAIN_TOL: f64 = 1e-9;

/// `beta / gamma` with `+inf` for a vanishing `gamma` (and `0` when `beta` vanishes too).
pub fn gap_ratio(beta: f64, gamma: f64) -> f64 {
    if gamma <= ZERO_GAIN_TOL * beta.max(1.0) {
        if beta > 0.0 { f64::INFINITY } else { 0.0 }
    } else {
        beta / gamma
    }
}

/// Per-row (or per-member) ratios with their numerators and denominators.
#[derive(Debug, Clone, PartialEq)]
pub struct Ratios {
    pub value: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Ratios {
    fn with_capacity(n: usize) -> Self {
        Ratios { value: Vec::with_capacity(n), beta: Vec::with_capacity(n), gamma: Vec::with_capacity(n) }
    }
    fn push(&mut self, v: f64, b: f64, g: f64) {
        self.value.push(v);
        self.beta.push(b);
        self.gamma.push(g);
    }
}

/// Norm used by [`fdimmperf`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    #[default]
    Hinf,
    H2,
}

/// Column gains: H∞ norms, or `(min, max)` over the grid of column 2-norms.
fn column_gains(r: &LtiModel, freqs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if freqs.is_empty() {
        let g = column_hinf(r)?;
        return Ok((g.clone(), g));
    }
    let m = r.n_in();
    let (mut lo, mut hi) = (vec![f64::INFINITY; m], vec![0.0f64; m]);
    for &w in freqs {
        let g = freqresp(r, lambda_of(r.ts, w)).map_err(|_| FdiError::PoleOnGrid(w))?;
        for j in 0..m {
            let n = g.column(j).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            lo[j] = lo[j].min(n);
            hi[j] = hi[j].max(n);
        }
    }
    Ok((lo, hi))
}

fn sub(r: &LtiModel, rows: &[usize], cols: &[usize]) -> Result<LtiModel> {
    r.select(rows, cols)
}

fn fault_noise(r: &LtiModel) -> (Vec<usize>, Vec<usize>) {
    (r.group("faults").to_vec(), r.group("noise").to_vec())
}

fn check_spec(s: &StructureMatrix, rows: usize, mf: usize) -> Result<Vec<Vec<bool>>> {
    if s.rows() != rows || s.cols != mf {
        return Err(FdiError::Dimension(format!("structure matrix must be {rows}x{mf}")));
    }
    Ok(s.combined())
}

fn fscond_one(r: &LtiModel, rows: &[usize], cols: &[usize], freqs: &[f64]) -> Result<(f64, f64, f64)> {
    if cols.is_empty() || rows.is_empty() {
        return Ok((0.0, 0.0, 0.0));
    }
    let (lo, hi) = column_gains(&sub(r, rows, cols)?, freqs)?;
    let beta = lo.iter().copied().fold(f64::INFINITY, f64::min);
    let gamma = hi.iter().copied().fold(0.0, f64::max);
    Ok((if gamma > 0.0 { beta / gamma } else { 0.0 }, beta, gamma))
}

/// Fault sensitivity condition of an internal form: smallest over largest fault column gain.
///
/// With `s` (one row per output) each row uses only its faults with `true` entries.
pub fn fdifscond(r: &LtiModel, freqs: &[f64], s: Option<&StructureMatrix>) -> Result<Ratios> {
    let (f, _) = fault_noise(r);
    let all: Vec<usize> = (0..r.n_out()).collect();
    let mut out = Ratios::with_capacity(r.n_out());
    match s {
        None => {
            let (v, b, g) = fscond_one(r, &all, &f, freqs)?;
            out.push(v, b, g);
        }
        Some(s) => {
            let spec = check_spec(s, r.n_out(), f.len())?;
            for (i, row) in spec.iter().enumerate() {
                let cols: Vec<usize> = f.iter().zip(row).filter(|(_, &x)| x).map(|(&c, _)| c).collect();
                let (v, b, g) = fscond_one(r, &[i], &cols, freqs)?;
                out.push(v, b, g);
            }
        }
    }
    Ok(out)
}

/// [`fdifscond`] over a bank; member `i` uses row `i` of `s` when given. Empty members give NaN.
pub fn fdifscond_bank(rs: &[Option<LtiModel>], freqs: &[f64], s: Option<&StructureMatrix>) -> Result<Ratios> {
    bank(rs, s, |r, sel| {
        let (f, _) = fault_noise(r);
        let cols: Vec<usize> = match sel {
            Some(row) => f.iter().zip(row).filter(|(_, &x)| x).map(|(&c, _)| c).collect(),
            None => f,
        };
        fscond_one(r, &(0..r.n_out()).collect::<Vec<_>>(), &cols, freqs)
    })
}

fn bank_spec(rs: &[Option<LtiModel>], s: Option<&StructureMatrix>) -> Result<Option<Vec<Vec<bool>>>> {
    match s {
        Some(s) => {
            let mf = rs.iter().flatten().map(|r| r.group("faults").len()).next().unwrap_or(s.cols);
            Ok(Some(check_spec(s, rs.len(), mf)?))
        }
        None => Ok(None),
    }
}

fn bank(
    rs: &[Option<LtiModel>],
    s: Option<&StructureMatrix>,
    one: impl Fn(&LtiModel, Option<&[bool]>) -> Result<(f64, f64, f64)>,
) -> Result<Ratios> {
    let spec = bank_spec(rs, s)?;
    let mut out = Ratios::with_capacity(rs.len());
    for (i, r) in rs.iter().enumerate() {
        match r {
            Some(r) if r.n_out() > 0 => {
                let (v, b, g) = one(r, spec.as_ref().map(|sp| sp[i].as_slice()))?;
                out.push(v, b, g);
            }
            _ => out.push(f64::NAN, f64::NAN, f64::NAN),
        }
    }
    Ok(out)
}

fn gap_one(r: &LtiModel, rows: &[usize], tcols: &[usize], ocols: &[usize], freqs: &[f64]) -> Result<(f64, f64, f64)> {
    if rows.is_empty() {
        return Ok((0.0, 0.0, 0.0));
    }
    let beta = if tcols.is_empty() {
        0.0
    } else {
        let (lo, _) = column_gains(&sub(r, rows, tcols)?, freqs)?;
        lo.into_iter().fold(f64::INFINITY, f64::min)
    };
    let gamma = if ocols.is_empty() { 0.0 } else { norm_hinf(&sub(r, rows, ocols)?)?.0 };
    Ok((gap_ratio(beta, gamma), beta, gamma))
}

fn split(f: &[usize], w: &[usize], row: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let t: Vec<usize> = f.iter().zip(row).filter(|(_, &x)| x).map(|(&c, _)| c).collect();
    let mut o: Vec<usize> = f.iter().zip(row).filter(|(_, &x)| !x).map(|(&c, _)| c).collect();
    o.extend_from_slice(w);
    (t, o)
}

/// Fault-to-noise gap: smallest fault column gain over the noise gain.
///
/// With `s` (one row per output) row `i` compares its `true` faults against its other
/// faults and the noise.
pub fn fdif2ngap(r: &LtiModel, freqs: &[f64], s: Option<&StructureMatrix>) -> Result<Ratios> {
    let (f, w) = fault_noise(r);
    let all: Vec<usize> = (0..r.n_out()).collect();
    let mut out = Ratios::with_capacity(r.n_out());
    match s {
        None => {
            let (v, b, g) = gap_one(r, &all, &f, &w, freqs)?;
            out.push(v, b, g);
        }
        Some(s) => {
            let spec = check_spec(s, r.n_out(), f.len())?;
            for (i, row) in spec.iter().enumerate() {
                let (t, o) = split(&f, &w, row);
                let (v, b, g) = gap_one(r, &[i], &t, &o, freqs)?;
                out.push(v, b, g);
            }
        }
    }
    Ok(out)
}

/// [`fdif2ngap`] over a bank; member `i` uses row `i` of `s` when given. Empty members give NaN.
pub fn fdif2ngap_bank(rs: &[Option<LtiModel>], freqs: &[f64], s: Option<&StructureMatrix>) -> Result<Ratios> {
    bank(rs, s, |r, sel| {
        let (f, w) = fault_noise(r);
        let (t, o) = match sel {
            Some(row) => split(&f, &w, row),
            None => (f, w),
        };
        gap_one(r, &(0..r.n_out()).collect::<Vec<_>>(), &t, &o, freqs)
    })
}

fn norm_of(sys: &LtiModel, kind: NormKind) -> Result<f64> {
    if sys.n_in() == 0 || sys.n_out() == 0 {
        return Ok(0.0);
    }
    match kind {
        NormKind::Hinf => Ok(norm_hinf(sys)?.0),
        NormKind::H2 => norm_h2(sys),
    }
}

fn mm_one(r: &LtiModel, sysr: Option<&LtiModel>, kind: NormKind, rows: &[usize], sel: Option<&[bool]>) -> Result<f64> {
    match sysr {
        Some(m) => {
            let rr = sub(r, rows, &(0..r.n_in()).collect::<Vec<_>>())?;
            if m.n_in() != rr.n_in() || m.n_out() != rr.n_out() {
                return Err(FdiError::Dimension("reference and internal form shapes differ".into()));
            }
            norm_of(&parallel(&rr, &m.scale(-1.0))?, kind)
        }
        None => {
            let (f, w) = fault_noise(r);
            let cols = match sel {
                Some(row) => split(&f, &w, row).1,
                None => w,
            };
            if cols.is_empty() {
                return Ok(0.0);
            }
            norm_of(&sub(r, rows, &cols)?, kind)
        }
    }
}

/// Model-matching error `‖R - Mr‖`; without a reference, the noise gain (with `s`, per row
/// together with the faults having `false` entries).
pub fn fdimmperf(r: &LtiModel, sysr: Option<&LtiModel>, kind: NormKind, s: Option<&StructureMatrix>) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..r.n_out()).collect();
    match s {
        None => Ok(vec![mm_one(r, sysr, kind, &all, None)?]),
        Some(s) => {
            let spec = check_spec(s, r.n_out(), r.group("faults").len())?;
            spec.iter()
                .enumerate()
                .map(|(i, row)| {
                    let sr = match sysr {
                        Some(m) => Some(m.select(&[i], &(0..m.n_in()).collect::<Vec<_>>())?),
                        None => None,
                    };
                    mm_one(r, sr.as_ref(), kind, &[i], Some(row))
                })
                .collect()
        }
    }
}

/// [`fdimmperf`] over a bank; empty members give NaN.
pub fn fdimmperf_bank(
    rs: &[Option<LtiModel>],
    sysr: Option<&[LtiModel]>,
    kind: NormKind,
    s: Option<&StructureMatrix>,
) -> Result<Vec<f64>> {
    if let Some(m) = sysr {
        if m.len() != rs.len() {
            return Err(FdiError::Dimension("one reference per bank member is required".into()));
        }
    }
    let spec = bank_spec(rs, s)?;
    rs.iter()
        .enumerate()
        .map(|(i, r)| match r {
            Some(r) if r.n_out() > 0 => {
                let rows: Vec<usize> = (0..r.n_out()).collect();
                mm_one(r, sysr.map(|m| &m[i]), kind, &rows, spec.as_ref().map(|sp| sp[i].as_slice()))
            }
            _ => Ok(f64::NAN),
        })
        .collect()
}
