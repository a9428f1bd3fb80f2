//! Residual generator synthesis for fault detection, isolation and model matching.

mod approx;
mod exact;
mod matching;

pub use approx::{afdisyn, afdsyn};
pub(crate) use approx::normalize_noise;
pub use exact::{efdisyn, efdsyn};
pub use matching::{emmsyn, Normalize};

use crate::factor::{FilterPair, PencilRow, PoleTargets, Stabilization};
use crate::fdianalysis::{fditspec, AnalysisOptions, RowTester, StructureMatrix};
use crate::numkern::dense;
use crate::rng::SplitMix;
use crate::sslib::LtiModel;
use crate::{FdiError, Mat, Result, C64};

/// A synthesized filter with its internal form.
#[derive(Debug, Clone)]
pub struct FdiFilter {
    /// Filter with inputs `outputs` and `controls` and output group `residuals`.
    pub q: LtiModel,
    /// Internal form on the fault, noise and auxiliary inputs.
    pub r: LtiModel,
    pub info: SynthesisReport,
}

/// Design data reported by the synthesis functions.
#[derive(Debug, Clone, Default)]
pub struct SynthesisReport {
    pub hdesign: Option<Mat>,
    pub hdesign2: Option<Mat>,
    /// Row degrees of the polynomial nullspace basis (empty for the observer basis).
    pub degs: Vec<usize>,
    pub degs2: Vec<usize>,
    pub s: Option<StructureMatrix>,
    pub s2: Option<StructureMatrix>,
    /// Fault-to-noise gap (approximate synthesis only).
    pub gap: Option<f64>,
    pub tcond: f64,
    /// Frequency used for rank-based admissibility checks.
    pub freq: Option<C64>,
    pub seed: u64,
}

/// Options shared by the synthesis functions. Fields not used by a function are ignored.
#[derive(Debug, Clone)]
pub struct SynthesisOptions {
    /// Relative rank tolerance (`0` selects internal defaults).
    pub tol: f64,
    pub fdtol: f64,
    pub fdgaintol: f64,
    /// Number of residual outputs.
    pub rdim: Option<usize>,
    /// Frequencies for strong detectability checks.
    pub freqs: Vec<f64>,
    /// Stability margin; defaults to `-sqrt(eps)` or `1 - sqrt(eps)`.
    pub smarg: Option<f64>,
    /// Stability degree; defaults to `-0.05` or `0.95`.
    pub sdeg: Option<f64>,
    pub poles: Vec<C64>,
    /// Minimal polynomial basis (`true`) or observer basis (`false`).
    pub nullspace: bool,
    /// Least-order synthesis.
    pub minimal: bool,
    pub hdesign: Option<Mat>,
    pub hdesign2: Option<Mat>,
    pub tcond: f64,
    pub seed: u64,
    /// Bound on the noise gain of the approximate part.
    pub gamma: f64,
    /// Skip the noise attenuation step.
    pub exact: bool,
    /// Frequency for rank checks; random when absent.
    pub freq: Option<C64>,
    /// Specification rows for bank synthesis.
    pub sfdi: Option<StructureMatrix>,
    /// Bank members to synthesize (all when absent).
    pub fdselect: Option<Vec<usize>>,
    /// Per-member residual dimensions (overrides `rdim`).
    pub bank_rdim: Vec<Option<usize>>,
    pub bank_hdesign: Vec<Option<Mat>>,
    pub bank_hdesign2: Vec<Option<Mat>>,
    pub normalize: Normalize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            tol: 0.0,
            fdtol: 1e-4,
            fdgaintol: 1e-2,
            rdim: None,
            freqs: vec![],
            smarg: None,
            sdeg: None,
            poles: vec![],
            nullspace: true,
            minimal: true,
            hdesign: None,
            hdesign2: None,
            tcond: 1e4,
            seed: 0,
            gamma: 1.0,
            exact: false,
            freq: None,
            sfdi: None,
            fdselect: None,
            bank_rdim: vec![],
            bank_hdesign: vec![],
            bank_hdesign2: vec![],
            normalize: Normalize::Gain,
        }
    }
}

impl SynthesisOptions {
    pub(crate) fn sdeg_or_default(&self, ts: f64) -> f64 {
        self.sdeg.unwrap_or(if ts > 0.0 { 0.95 } else { -0.05 })
    }

    pub(crate) fn smarg_or_default(&self, ts: f64) -> f64 {
        let r = f64::EPSILON.sqrt();
        self.smarg.unwrap_or(if ts > 0.0 { 1.0 - r } else { -r })
    }

    pub(crate) fn stabilization(&self, ts: f64) -> Stabilization {
        Stabilization { sdeg: Some(self.sdeg_or_default(ts)), poles: self.poles.clone() }
    }

    pub(crate) fn targets(&self, ts: f64) -> Result<PoleTargets> {
        Ok(PoleTargets::new(Some(self.sdeg_or_default(ts)), &self.poles, ts)?.with_margin(self.smarg_or_default(ts)))
    }

    pub(crate) fn analysis(&self) -> AnalysisOptions {
        AnalysisOptions {
            tol: self.tol,
            fdtol: self.fdtol,
            fdgaintol: self.fdgaintol,
            freqs: self.freqs.clone(),
            sdeg: self.sdeg,
        }
    }

    fn validate(&self, ts: f64) -> Result<()> {
        self.targets(ts)?;
        let (sdeg, smarg) = (self.sdeg_or_default(ts), self.smarg_or_default(ts));
        if sdeg > smarg {
            return Err(FdiError::InvalidOption(format!("stability degree {sdeg} exceeds the margin {smarg}")));
        }
        if self.fdtol < 0.0 || self.fdgaintol < 0.0 || self.gamma < 0.0 {
            return Err(FdiError::InvalidOption("thresholds must be nonnegative".into()));
        }
        if self.rdim == Some(0) {
            return Err(FdiError::InvalidOption("rdim must be positive".into()));
        }
        Ok(())
    }
}

/// A grouped system prepared for synthesis.
pub(crate) struct Setup {
    pub sys: LtiModel,
    pub controls: Vec<usize>,
    pub faults: Vec<usize>,
    pub noise: Vec<usize>,
}

impl Setup {
    pub fn new(sysf: &LtiModel, opts: &SynthesisOptions) -> Result<Setup> {
        let sys = sysf.to_standard()?;
        opts.validate(sys.ts)?;
        Ok(Setup {
            controls: sys.group("controls").to_vec(),
            faults: sys.group("faults").to_vec(),
            noise: sys.group("noise").to_vec(),
            sys,
        })
    }

    pub fn ts(&self) -> f64 {
        self.sys.ts
    }

    pub fn tester<'a>(&'a self, aopts: &'a AnalysisOptions, opts: &SynthesisOptions) -> RowTester<'a> {
        let mut t = RowTester::new(&self.sys, aopts);
        t.stab = opts.stabilization(self.ts());
        t
    }

    /// Random admissibility frequency inside the stability region unless one is given.
    pub fn probe(&self, opts: &SynthesisOptions, rng: &mut SplitMix) -> C64 {
        if let Some(f) = opts.freq {
            return f;
        }
        if self.ts() > 0.0 {
            C64::from_polar(0.3 + 0.4 * rng.next_f64(), std::f64::consts::PI * rng.next_f64())
        } else {
            C64::new(-0.1 - rng.next_f64(), 0.5 + rng.next_f64())
        }
    }

    /// Fault columns whose structure entry is false in `pattern`.
    pub fn fault_cols(&self, idx: &[usize]) -> Vec<usize> {
        idx.iter().map(|&j| self.faults[j]).collect()
    }
}

/// Wraps a pair as a filter, keeping the fault, noise and auxiliary columns of the internal form.
pub(crate) fn finish(pair: &FilterPair, info: SynthesisReport) -> FdiFilter {
    FdiFilter { q: pair.q(), r: pair.r_of(&["faults", "noise", "aux"]), info }
}

/// Element structure of the fault channel of a pair.
pub(crate) fn fault_structure(pair: &FilterPair, opts: &SynthesisOptions) -> Result<StructureMatrix> {
    let rf = pair.r_of(&["faults"]);
    if rf.n_in() == 0 {
        return Ok(StructureMatrix::from_rows(vec![vec![]; rf.n_out()], 0));
    }
    fditspec(&rf, opts.tol, opts.fdtol, &opts.freqs, false)
}

/// Fault indices in `targets` that no row of `s` reaches.
pub(crate) fn undetected(s: &StructureMatrix, targets: &[usize]) -> Vec<usize> {
    let rows = s.combined();
    targets.iter().copied().filter(|&j| !rows.iter().any(|r| r[j])).collect()
}

/// Rank of the values of polynomial rows at `z`.
pub(crate) fn rank_at(polys: &[Vec<crate::poly::Poly>], z: C64) -> usize {
    if polys.is_empty() || polys[0].is_empty() {
        return 0;
    }
    let m = crate::CMat::from_fn(polys.len(), polys[0].len(), |i, j| polys[i][j].eval(z));
    let sv = dense::csingular_values(&m);
    let top = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&x| x > 1e-9 * top.max(1e-300) && x > 1e-12).count()
}

/// Rows of the `w` parts evaluated at `z`, for rank checks on candidate rows.
pub(crate) fn w_rank(rows: &[&PencilRow], z: C64) -> usize {
    let polys: Vec<Vec<crate::poly::Poly>> = rows.iter().map(|r| r.w.clone()).collect();
    rank_at(&polys, z)
}

/// Random `q x n` design matrix, the identity when square.
pub(crate) fn design_matrix(q: usize, n: usize, rng: &mut SplitMix) -> Mat {
    if q == n { Mat::identity(n, n) } else { rng.matrix(q, n) }
}

/// Realizes polynomial rows, each over its own stable denominator.
pub(crate) fn realize(set: &Setup, rows: &[PencilRow], opts: &SynthesisOptions) -> Result<FilterPair> {
    let stab = opts.stabilization(set.ts());
    let dens: Vec<_> = rows.iter().map(|r| stab.denominator(r.degree, set.ts())).collect();
    crate::factor::realize_rows(&set.sys, &set.controls, rows, &dens)
}
