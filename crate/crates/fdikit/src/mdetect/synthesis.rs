//! Exact and approximate model detection filter banks.

use super::{channel_cols, filter_inputs, peak, selection};
use crate::factor::{self, stabilizing_injection, FilterPair, PencilRow};
use crate::fdiperf::gap_ratio;
use crate::fdisyn::{design_matrix, normalize_noise, realize, w_rank, Setup, SynthesisOptions};
use crate::rng::SplitMix;
use crate::sslib::{freqresp, lambda_of, minimal_realization, series, LtiModel, MultiModel};
use crate::{CMat, FdiError, Mat, Result, C64};

/// Options of [`emdsyn`] and [`amdsyn`].
#[derive(Debug, Clone)]
pub struct MdOptions {
    pub tol: f64,
    /// Relative threshold for model detectability checks.
    pub mdtol: f64,
    /// Relative threshold for the checks on `mdfreq`.
    pub mdgaintol: f64,
    /// Number of residual outputs of each filter.
    pub rdim: Option<usize>,
    /// Frequency grid; when nonempty, performance uses the largest gain on the grid.
    pub mdfreq: Vec<f64>,
    /// Also require sensitivity to the disturbances of the other models.
    pub emdtest: bool,
    pub smarg: Option<f64>,
    pub sdeg: Option<f64>,
    pub poles: Vec<C64>,
    /// Minimal polynomial basis (`true`) or observer basis (`false`).
    pub nullspace: bool,
    pub minimal: bool,
    /// Filters to build (all when absent).
    pub mdselect: Option<Vec<usize>>,
    /// Per-filter design matrices.
    pub hdesign: Vec<Option<Mat>>,
    /// Scale each filter so its smallest off-diagonal performance is one; otherwise use
    /// the symmetric normalization `MDperf(0, j) = MDperf(j, 0)`.
    pub normalize: bool,
    pub seed: u64,
    /// Frequency for the rank checks; random when absent.
    pub freq: Option<C64>,
}

impl Default for MdOptions {
    fn default() -> Self {
        MdOptions {
            tol: 0.0,
            mdtol: 1e-4,
            mdgaintol: 1e-2,
            rdim: None,
            mdfreq: vec![],
            emdtest: false,
            smarg: None,
            sdeg: None,
            poles: vec![],
            nullspace: true,
            minimal: true,
            mdselect: None,
            hdesign: vec![],
            normalize: false,
            seed: 0,
            freq: None,
        }
    }
}

impl MdOptions {
    fn synthesis(&self) -> SynthesisOptions {
        SynthesisOptions {
            tol: self.tol,
            fdtol: self.mdtol,
            fdgaintol: self.mdgaintol,
            rdim: self.rdim,
            freqs: self.mdfreq.clone(),
            smarg: self.smarg,
            sdeg: self.sdeg,
            poles: self.poles.clone(),
            nullspace: self.nullspace,
            minimal: self.minimal,
            seed: self.seed,
            freq: self.freq,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MdReport {
    /// `MDperf(i, j)`: gain of filter `i` on model `j`; rows of unbuilt filters are `-1`.
    pub mdperf: Mat,
    /// Noise gaps (approximate synthesis only).
    pub mdgap: Vec<f64>,
    pub hdesign: Vec<Option<Mat>>,
    /// Row degrees of each nullspace basis.
    pub degs: Vec<Vec<usize>>,
    pub seed: u64,
}

/// A bank of model detection filters with all internal forms.
#[derive(Debug, Clone)]
pub struct MdBank {
    /// Filter `i`, with inputs `outputs` and `controls`.
    pub q: Vec<Option<LtiModel>>,
    /// `r[i][j] = Q_i [G_j; S_u]` on all inputs of model `j`.
    pub r: Vec<Vec<Option<LtiModel>>>,
    pub info: MdReport,
}

/// Component data shared by all filters.
struct Models {
    sys: Vec<LtiModel>,
    /// `[G_j; S_u]` restricted to the detection channel.
    chan: Vec<LtiModel>,
    cols: Vec<Vec<usize>>,
    aug: Vec<LtiModel>,
}

impl Models {
    fn new(mm: &MultiModel, emdtest: bool) -> Result<Models> {
        let sys = mm.components.iter().map(|g| g.to_standard()).collect::<Result<Vec<_>>>()?;
        let aug: Vec<LtiModel> = sys.iter().map(filter_inputs).collect();
        let cols: Vec<Vec<usize>> = sys.iter().map(|g| channel_cols(g, emdtest)).collect();
        let chan = aug
            .iter()
            .zip(&cols)
            .map(|(a, c)| a.select(&(0..a.n_out()).collect::<Vec<_>>(), c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Models { sys, chan, cols, aug })
    }
}

/// A candidate filter for one model with its internal forms and gains.
struct Member {
    pair: FilterPair,
    h: Mat,
    r: Vec<LtiModel>,
    perf: Vec<f64>,
    gap: f64,
}

/// Row values at `z` for admissibility tests.
fn w_at(row: &PencilRow, z: C64) -> CMat {
    CMat::from_fn(1, row.w.len(), |_, c| row.w[c].eval(z))
}

/// Tests that a row keeps every other model visible at `z` (and on the grid).
struct Detectability {
    z: C64,
    others: Vec<(usize, CMat)>,
    grid: Vec<(C64, Vec<CMat>)>,
    mdtol: f64,
    mdgaintol: f64,
}

impl Detectability {
    fn new(models: &Models, i: usize, z: C64, opts: &MdOptions) -> Result<Self> {
        let n = models.sys.len();
        let others = (0..n)
            .filter(|&j| j != i)
            .map(|j| Ok((j, freqresp(&models.chan[j], z)?)))
            .collect::<Result<Vec<_>>>()?;
        let ts = models.sys[i].ts;
        let grid = opts
            .mdfreq
            .iter()
            .map(|&w| {
                let l = lambda_of(ts, w);
                let rs = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| freqresp(&models.chan[j], l).map_err(|_| FdiError::PoleOnGrid(w)))
                    .collect::<Result<Vec<_>>>()?;
                Ok((l, rs))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Detectability { z, others, grid, mdtol: opts.mdtol, mdgaintol: opts.mdgaintol })
    }

    /// First model that `row` fails to see.
    fn missed(&self, row: &PencilRow) -> Option<usize> {
        let wz = w_at(row, self.z);
        let scale = wz.norm().max(1e-300);
        for (k, (j, g)) in self.others.iter().enumerate() {
            if (&wz * g).norm() <= self.mdtol * scale {
                return Some(*j);
            }
            if !self.grid.is_empty() {
                let seen = self.grid.iter().any(|(l, rs)| {
                    let wl = w_at(row, *l);
                    (&wl * &rs[k]).norm() > self.mdgaintol * wl.norm().max(1e-300)
                });
                if !seen {
                    return Some(*j);
                }
            }
        }
        None
    }
}

/// Candidate filters for model `i`: one, or several random least-order combinations
/// when `trials > 1`.
fn candidates(models: &Models, i: usize, opts: &MdOptions, trials: usize) -> Result<(Vec<(FilterPair, Mat)>, Vec<usize>, Setup)> {
    let sopts = opts.synthesis();
    let set = Setup::new(&models.sys[i], &sopts)?;
    let mut rng = SplitMix::new(opts.seed.wrapping_add(i as u64));
    let hdesign = opts.hdesign.get(i).and_then(|h| h.as_ref());
    let p = set.sys.n_out();
    if !opts.nullspace && set.sys.group("disturbances").is_empty() {
        let nb = factor::left_nullspace(&set.sys, &[], true, &sopts.stabilization(set.ts()), opts.tol)?;
        let q = opts.rdim.or(hdesign.map(|h| h.nrows())).unwrap_or(if opts.minimal { 1 } else { p }).min(p);
        let h = match hdesign {
            Some(h) if h.ncols() == p && h.nrows() == q => h.clone(),
            Some(_) => return Err(FdiError::Dimension(format!("design matrix {i} must be {q}x{p}"))),
            None => design_matrix(q, p, &mut rng),
        };
        let mut pair = nb.pair.left_mul(&h);
        let k = stabilizing_injection(&pair.a, &pair.c, &sopts.targets(set.ts())?)?;
        pair.inject(&k);
        return Ok((vec![(pair, h)], vec![], set));
    }
    let rows = factor::pencil_basis(&set.sys, &factor::decoupled_columns(&set.sys, &[]), &set.controls, opts.tol)?;
    if rows.is_empty() {
        return Err(FdiError::NotSolvable(format!("model {i}: {}", FdiError::EmptyNullspace)));
    }
    let rows = canonical_basis(rows, p);
    let degs: Vec<usize> = rows.iter().map(|r| r.degree).collect();
    let nb = rows.len();
    let q = opts.rdim.or(hdesign.map(|h| h.nrows())).unwrap_or(if opts.minimal { 1 } else { nb }).min(nb);
    if let Some(h) = hdesign {
        if h.ncols() != nb || h.nrows() != q {
            return Err(FdiError::Dimension(format!("design matrix {i} must be {q}x{nb}")));
        }
        let pair = if opts.minimal {
            let refs: Vec<&PencilRow> = rows.iter().collect();
            let combined: Vec<PencilRow> = (0..q)
                .map(|k| {
                    let hk: Vec<f64> = h.row(k).iter().copied().collect();
                    let mut r = PencilRow::combine(&refs, &hk);
                    r.degree = rows.iter().zip(&hk).filter(|(_, &x)| x != 0.0).map(|(r, _)| r.degree).max().unwrap_or(0);
                    r
                })
                .collect();
            realize(&set, &combined, &sopts)?
        } else {
            realize(&set, &rows, &sopts)?.left_mul(h)
        };
        return Ok((vec![(pair, h.clone())], degs, set));
    }
    if !opts.minimal {
        let h = design_matrix(q, nb, &mut rng);
        let pair = realize(&set, &rows, &sopts)?.left_mul(&h);
        return Ok((vec![(pair, h)], degs, set));
    }
    let z = set.probe(&sopts, &mut rng);
    let test = Detectability::new(models, i, z, opts)?;
    let admissible = |r: &PencilRow| test.missed(r).is_none();
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let seed = opts.seed.wrapping_add(i as u64).wrapping_add(1000 * t as u64);
        let sel = match factor::select_admissible_subsets(&rows, &admissible, seed) {
            Ok(s) => s,
            Err(_) => return Err(undistinguished(&test, &rows, i)),
        };
        let mut h = Mat::zeros(q, nb);
        for (k, &c) in sel.subset.iter().enumerate() {
            h[(0, c)] = sel.h[k];
        }
        let mut chosen = vec![sel.row.clone()];
        for (c, row) in rows.iter().enumerate() {
            if chosen.len() == q {
                break;
            }
            let mut trial: Vec<&PencilRow> = chosen.iter().collect();
            trial.push(row);
            if w_rank(&trial, z) == trial.len() {
                h[(chosen.len(), c)] = 1.0;
                chosen.push(row.clone());
            }
        }
        out.push((realize(&set, &chosen, &sopts)?, h));
        if sel.subset.len() == 1 {
            // Single rows admit no other combination of the same order.
            break;
        }
    }
    Ok((out, degs, set))
}

/// Rescales a basis of rows with a common degree so that the leading coefficient of its
/// output part is the identity; other bases are returned unchanged. For full state
/// measurements this yields the rows `[λI - A, -B]`.
fn canonical_basis(rows: Vec<PencilRow>, p: usize) -> Vec<PencilRow> {
    let nb = rows.len();
    let d = rows[0].degree;
    if nb != p || rows.iter().any(|r| r.degree != d) {
        return rows;
    }
    let lead = Mat::from_fn(nb, p, |i, j| rows[i].w[j].coeff(d));
    let Some(t) = lead.clone().try_inverse() else { return rows };
    let sv = lead.singular_values();
    if sv.min() <= 1e-10 * sv.max() {
        return rows;
    }
    let refs: Vec<&PencilRow> = rows.iter().collect();
    (0..nb).map(|k| PencilRow::combine(&refs, &t.row(k).iter().copied().collect::<Vec<_>>())).collect()
}

fn undistinguished(test: &Detectability, rows: &[PencilRow], i: usize) -> FdiError {
    for (j, g) in &test.others {
        let blind = rows.iter().all(|r| {
            let wz = w_at(r, test.z);
            (&wz * g).norm() <= test.mdtol * wz.norm().max(1e-300)
        });
        if blind {
            return FdiError::NotDistinguishable(i, *j);
        }
    }
    FdiError::NotSolvable(format!("model {i}: no combination of basis rows sees every other model"))
}

/// Internal forms of filter `pair` (built on model `i`) for all models, and their gains.
fn evaluate(models: &Models, i: usize, pair: &FilterPair, opts: &MdOptions) -> Result<(Vec<LtiModel>, Vec<f64>)> {
    let q = pair.q();
    let n = models.sys.len();
    let mut r = Vec::with_capacity(n);
    let mut perf = Vec::with_capacity(n);
    for j in 0..n {
        let rij = if j == i {
            pair.r()
        } else {
            let mut x = minimal_realization(&series(&q, &models.aug[j])?, 0.0)?;
            x.out_groups = q.out_groups.clone();
            x
        };
        let ch = rij.select(&(0..rij.n_out()).collect::<Vec<_>>(), &models.cols[j])?;
        perf.push(peak(&ch, &opts.mdfreq)?.0);
        r.push(rij);
    }
    Ok((r, perf))
}

fn noise_gain(r: &LtiModel, freqs: &[f64]) -> Result<f64> {
    Ok(peak(&r.columns_of(&["noise"]), freqs)?.0)
}

fn min_off(perf: &[f64], i: usize) -> f64 {
    perf.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &v)| v).fold(f64::INFINITY, f64::min)
}

fn build_member(models: &Models, i: usize, opts: &MdOptions, noise: bool) -> Result<(Member, Vec<usize>)> {
    let has_noise = noise && !models.sys[i].group("noise").is_empty();
    let trials = if has_noise { 11 } else { 1 };
    let (cands, degs, set) = candidates(models, i, opts, trials)?;
    let sopts = opts.synthesis();
    let mut best: Option<Member> = None;
    for (pair, h) in cands {
        let pair = if has_noise { normalize_noise(pair, &set, &sopts)? } else { pair };
        let (r, perf) = evaluate(models, i, &pair, opts)?;
        let gap = if noise { gap_ratio(min_off(&perf, i), noise_gain(&r[i], &opts.mdfreq)?) } else { f64::NAN };
        if best.as_ref().is_none_or(|b| gap > b.gap) {
            best = Some(Member { pair, h, r, perf, gap });
        }
    }
    let m = best.expect("at least one candidate");
    let qn = peak(&m.pair.q(), &[])?.0;
    for (j, &v) in m.perf.iter().enumerate() {
        if j != i && v <= opts.mdtol * qn {
            return Err(FdiError::NotDistinguishable(i, j));
        }
    }
    Ok((m, degs))
}

fn bank(mm: &MultiModel, opts: &MdOptions, noise: bool) -> Result<MdBank> {
    let n = mm.len();
    let sel = selection(&opts.mdselect, n)?;
    let models = Models::new(mm, opts.emdtest)?;
    let mut members: Vec<Option<Member>> = Vec::with_capacity(n);
    let mut degs = vec![vec![]; n];
    for i in 0..n {
        if !sel[i] {
            members.push(None);
            continue;
        }
        let (m, d) = build_member(&models, i, opts, noise)?;
        degs[i] = d;
        members.push(Some(m));
    }
    let scales = normalization(&members, opts.normalize);
    let mut mdperf = Mat::from_element(n, n, -1.0);
    let mut q = vec![None; n];
    let mut r = vec![vec![None; n]; n];
    let mut hdesign = vec![None; n];
    let mut mdgap = vec![];
    for (i, m) in members.into_iter().enumerate() {
        let Some(m) = m else {
            if noise {
                mdgap.push(f64::NAN);
            }
            continue;
        };
        let k = scales[i];
        for j in 0..n {
            mdperf[(i, j)] = m.perf[j] * k;
            r[i][j] = Some(m.r[j].scale(k));
        }
        if noise {
            mdgap.push(m.gap);
        }
        q[i] = Some(m.pair.q().scale(k));
        hdesign[i] = Some(m.h);
    }
    Ok(MdBank { q, r, info: MdReport { mdperf, mdgap, hdesign, degs, seed: opts.seed } })
}

/// Output scaling of each filter.
fn normalization(members: &[Option<Member>], normalize: bool) -> Vec<f64> {
    let n = members.len();
    let mut k = vec![1.0; n];
    if normalize {
        for (i, m) in members.iter().enumerate() {
            if let Some(m) = m {
                let lo = min_off(&m.perf, i);
                if lo.is_finite() && lo > 0.0 {
                    k[i] = 1.0 / lo;
                }
            }
        }
    } else if let Some(Some(first)) = members.first() {
        for j in 1..n {
            if let Some(m) = &members[j] {
                if m.perf[0] > 0.0 {
                    k[j] = first.perf[j] / m.perf[0];
                }
            }
        }
    }
    k
}

/// Exact model detection bank: filter `i` decouples the controls and disturbances of model
/// `i` and responds to the controls of every other model.
pub fn emdsyn(mm: &MultiModel, opts: &MdOptions) -> Result<MdBank> {
    bank(mm, opts, false)
}

/// Approximate model detection bank: as [`emdsyn`], with each filter's own noise channel
/// equalized by a co-outer factor and scaled to unit gain. Reports the noise gaps
/// `min_j MDperf(i, j) / ‖R_w(i, i)‖`.
pub fn amdsyn(mm: &MultiModel, opts: &MdOptions) -> Result<MdBank> {
    bank(mm, opts, true)
}
