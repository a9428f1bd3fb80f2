//! Distances between component models.

use super::{argmin, channel_cols, rank_rows, selection, Closest, DistanceTable};
use crate::factor::{normalized_coprime, Side};
use crate::numkern::dense;
use crate::sslib::{freqresp, lambda_of, minimal_realization, parallel, series, stack_rows, LtiModel, MultiModel};
use crate::sysnorms::{bilinear_to_continuous, norm_h2, norm_hinf_with, poles, zeros, BOUNDARY_OFFSET};
use crate::{CMat, FdiError, Mat, Result, C64};

/// Distance measure between two transfer matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distance {
    /// ν-gap metric.
    #[default]
    Nugap,
    /// H∞ norm of the difference.
    Hinf,
    /// H2 norm of the difference.
    H2,
}

#[derive(Debug, Clone)]
pub struct DistOptions {
    /// Rows (reference components) to evaluate; all when absent.
    pub mdselect: Option<Vec<usize>>,
    pub distance: Distance,
    /// Frequency grid for pointwise distances; empty for the global ones.
    pub mdfreq: Vec<f64>,
    /// Include the disturbance channels.
    pub cdinp: bool,
    pub mdindex: usize,
    /// Boundary offset for the H∞ computations.
    pub offset: f64,
}

impl Default for DistOptions {
    fn default() -> Self {
        DistOptions { mdselect: None, distance: Distance::Nugap, mdfreq: vec![], cdinp: false, mdindex: 3, offset: BOUNDARY_OFFSET }
    }
}

/// Relative margin used to classify zeros as lying on the stability boundary.
const BOUNDARY_ZERO_TOL: f64 = 1e-6;

/// Continuous-time data needed by the ν-gap: the system and its normalized factors.
struct NcfData {
    g: LtiModel,
    /// Right factors stacked as `[N; M]`.
    right: LtiModel,
    /// Left factors `(Ñ, M̃)`.
    left: (LtiModel, LtiModel),
}

impl NcfData {
    fn new(g: &LtiModel) -> Result<NcfData> {
        let s = g.to_standard()?;
        let c = if s.is_discrete() { bilinear_to_continuous(&s)? } else { s.clone() };
        let c = minimal_realization(&c, 0.0)?;
        let (n, m) = normalized_coprime(&c, Side::Right)?;
        let right = stack_rows(&n, &m)?;
        let left = normalized_coprime(&c, Side::Left)?;
        Ok(NcfData { g: s, right, left })
    }
}

/// Para-conjugate `R(-s)^T` of a continuous-time model.
fn conjugate(r: &LtiModel) -> LtiModel {
    LtiModel {
        a: -r.a.transpose(),
        e: None,
        b: r.c.transpose(),
        c: -r.b.transpose(),
        d: r.d.transpose(),
        ts: 0.0,
        in_groups: Default::default(),
        out_groups: Default::default(),
    }
}

/// Winding condition: `det(R2~ R1)` has no boundary zeros and as many unstable zeros
/// as unstable poles.
fn winding_ok(f1: &NcfData, f2: &NcfData) -> Result<bool> {
    let w = minimal_realization(&series(&conjugate(&f2.right), &f1.right)?, 0.0)?;
    let sv = dense::csingular_values(&dense::to_complex(&w.d));
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 || sv.last().copied().unwrap_or(0.0) <= BOUNDARY_ZERO_TOL * top {
        // Zeros at infinity lie on the boundary.
        return Ok(false);
    }
    let z = zeros(&w, 0.0)?;
    let on_boundary = |x: &C64| x.re.abs() <= BOUNDARY_ZERO_TOL * (1.0 + x.norm());
    if z.iter().any(on_boundary) {
        return Ok(false);
    }
    let unstable_z = z.iter().filter(|x| x.re > 0.0).count();
    let unstable_p = poles(&w)?.iter().filter(|x| x.re > 0.0).count();
    Ok(unstable_z == unstable_p)
}

/// `σ̄((I + G2 G2*)^{-1/2} (G1 - G2) (I + G1* G1)^{-1/2})` at one point.
pub(crate) fn chordal(g1: &CMat, g2: &CMat) -> f64 {
    let inv_sqrt = |h: CMat| {
        let e = nalgebra::SymmetricEigen::new(h);
        let d = CMat::from_diagonal(&e.eigenvalues.map(|x| C64::new(1.0 / x.max(1.0).sqrt(), 0.0)));
        &e.eigenvectors * d * e.eigenvectors.adjoint()
    };
    let (p, m) = (g1.nrows(), g1.ncols());
    let l = inv_sqrt(CMat::identity(p, p) + g2 * g2.adjoint());
    let r = inv_sqrt(CMat::identity(m, m) + g1.adjoint() * g1);
    dense::cnorm2(&(l * (g1 - g2) * r)).min(1.0)
}

fn nugap_pair(f1: &NcfData, f2: &NcfData, freqs: &[f64], offset: f64) -> Result<(f64, f64)> {
    if !winding_ok(f1, f2)? {
        return Ok((1.0, 0.0));
    }
    if !freqs.is_empty() {
        let mut best = (0.0, freqs[0]);
        for &w in freqs {
            let z = lambda_of(f1.g.ts, w);
            let g1 = freqresp(&f1.g, z).map_err(|_| FdiError::PoleOnGrid(w))?;
            let g2 = freqresp(&f2.g, z).map_err(|_| FdiError::PoleOnGrid(w))?;
            let v = chordal(&g1, &g2);
            if v > best.0 {
                best = (v, w);
            }
        }
        return Ok(best);
    }
    let p = f1.g.n_out();
    let m = f1.g.n_in();
    let r1 = &f1.right;
    let n1 = r1.select(&(0..p).collect::<Vec<_>>(), &(0..m).collect::<Vec<_>>())?;
    let m1 = r1.select(&(p..p + m).collect::<Vec<_>>(), &(0..m).collect::<Vec<_>>())?;
    let (nt2, mt2) = &f2.left;
    let psi = parallel(&series(nt2, &m1)?, &series(mt2, &n1)?.scale(-1.0))?;
    let psi = minimal_realization(&psi, 0.0)?;
    let (v, wc) = norm_hinf_with(&psi, offset)?;
    let f = if f1.g.is_discrete() {
        let theta = if wc.is_infinite() { std::f64::consts::PI } else { 2.0 * wc.atan() };
        theta / f1.g.ts
    } else {
        wc
    };
    Ok((v.min(1.0), f))
}

/// ν-gap between two systems with equal dimensions and sample time, with its peak frequency.
///
/// A nonempty `freqs` gives the pointwise variant (largest chordal distance over the grid).
/// The value is 1 when the winding condition fails. Boundary zeros are detected with a
/// relative margin of `1e-6`, so near-boundary cases can flip between the two branches.
pub fn nugap(g1: &LtiModel, g2: &LtiModel, freqs: &[f64]) -> Result<(f64, f64)> {
    check_pair(g1, g2)?;
    nugap_pair(&NcfData::new(g1)?, &NcfData::new(g2)?, freqs, BOUNDARY_OFFSET)
}

fn check_pair(g1: &LtiModel, g2: &LtiModel) -> Result<()> {
    if g1.n_in() != g2.n_in() || g1.n_out() != g2.n_out() {
        return Err(FdiError::Dimension("models must have equal dimensions".into()));
    }
    if g1.ts != g2.ts {
        return Err(FdiError::SampleTime);
    }
    Ok(())
}

fn norm_distance(g1: &LtiModel, g2: &LtiModel, opts: &DistOptions) -> Result<(f64, f64)> {
    if !opts.mdfreq.is_empty() {
        let mut best = (0.0, opts.mdfreq[0]);
        for &w in &opts.mdfreq {
            let z = lambda_of(g1.ts, w);
            let a = freqresp(g1, z).map_err(|_| FdiError::PoleOnGrid(w))?;
            let b = freqresp(g2, z).map_err(|_| FdiError::PoleOnGrid(w))?;
            let v = dense::cnorm2(&(a - b));
            if v > best.0 {
                best = (v, w);
            }
        }
        return Ok(best);
    }
    let diff = parallel(g1, &g2.scale(-1.0))?;
    match opts.distance {
        Distance::H2 => Ok((norm_h2(&diff)?, 0.0)),
        _ => norm_hinf_with(&diff, opts.offset),
    }
}

/// The channel of `g` compared by the distances, without groups.
fn channel(g: &LtiModel, cdinp: bool) -> Result<LtiModel> {
    let s = g.to_standard()?;
    let mut c = s.select(&(0..s.n_out()).collect::<Vec<_>>(), &channel_cols(&s, cdinp))?;
    c.in_groups.clear();
    c.out_groups.clear();
    Ok(c)
}

/// Distance evaluator with per-component factorizations cached.
struct Evaluator<'a> {
    opts: &'a DistOptions,
    chans: Vec<LtiModel>,
    ncf: Vec<Option<NcfData>>,
}

impl<'a> Evaluator<'a> {
    fn new(chans: Vec<LtiModel>, opts: &'a DistOptions) -> Result<Self> {
        for c in &chans[1..] {
            check_pair(&chans[0], c)?;
        }
        let ncf = chans.iter().map(|_| None).collect();
        Ok(Evaluator { opts, chans, ncf })
    }

    fn ensure(&mut self, i: usize) -> Result<()> {
        if self.opts.distance == Distance::Nugap && self.ncf[i].is_none() {
            self.ncf[i] = Some(NcfData::new(&self.chans[i])?);
        }
        Ok(())
    }

    /// Distance of operand `i` (first) to operand `j` (second).
    fn eval(&mut self, i: usize, j: usize) -> Result<(f64, f64)> {
        match self.opts.distance {
            Distance::Nugap => {
                self.ensure(i)?;
                self.ensure(j)?;
                let (fi, fj) = (self.ncf[i].as_ref().unwrap(), self.ncf[j].as_ref().unwrap());
                nugap_pair(fi, fj, &self.opts.mdfreq, self.opts.offset)
            }
            _ => norm_distance(&self.chans[i], &self.chans[j], self.opts),
        }
    }
}

/// Pairwise distances between the components; row `i` holds the distances of the selected
/// component `mdselect[i]` to all components.
pub fn mddist(mm: &MultiModel, opts: &DistOptions) -> Result<DistanceTable> {
    let n = mm.len();
    selection(&opts.mdselect, n)?;
    let rows: Vec<usize> = match &opts.mdselect {
        Some(l) => l.clone(),
        None => (0..n).collect(),
    };
    let chans = mm.components.iter().map(|g| channel(g, opts.cdinp)).collect::<Result<Vec<_>>>()?;
    let mut ev = Evaluator::new(chans, opts)?;
    let mut cache: Vec<Vec<Option<(f64, f64)>>> = vec![vec![None; n]; n];
    let mut values = Mat::zeros(rows.len(), n);
    let mut fpeak = Mat::zeros(rows.len(), n);
    for (r, &i) in rows.iter().enumerate() {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (v, f) = match cache[j][i] {
                Some(x) => x,
                None => {
                    let x = ev.eval(j, i)?;
                    cache[j][i] = Some(x);
                    cache[i][j] = Some(x);
                    x
                }
            };
            values[(r, j)] = v;
            fpeak[(r, j)] = f;
        }
    }
    let (perm, rel) = rank_rows(&values, opts.mdindex);
    Ok(DistanceTable { values, fpeak, perm, rel })
}

/// Distances of every component to the current model `sys`, with the index of the nearest.
pub fn mddist2c(mm: &MultiModel, sys: &LtiModel, opts: &DistOptions) -> Result<Closest> {
    let n = mm.len();
    let allowed = selection(&opts.mdselect, n)?;
    let mut chans = mm.components.iter().map(|g| channel(g, opts.cdinp)).collect::<Result<Vec<_>>>()?;
    let cur = if sys.in_groups.is_empty() {
        let mut s = sys.to_standard()?;
        s.out_groups.clear();
        s
    } else {
        channel(sys, opts.cdinp)?
    };
    chans.push(cur);
    let mut ev = Evaluator::new(chans, opts)?;
    let mut values = vec![f64::NAN; n];
    let mut fpeak = vec![f64::NAN; n];
    for j in 0..n {
        if allowed[j] {
            let (v, f) = ev.eval(j, n)?;
            values[j] = v;
            fpeak[j] = f;
        }
    }
    let mind = argmin(&values, &allowed);
    Ok(Closest { values, fpeak, mind })
}
