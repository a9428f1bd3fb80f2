//! Approximate fault detection and isolation filters with noise attenuation.

use super::exact::{bank_rows, efd_rows, selected};
use super::{design_matrix, fault_structure, finish, rank_at, realize, undetected, FdiFilter, Setup, SynthesisOptions, SynthesisReport};
use crate::factor::{self, coouter_coinner, outer_gain, stabilizing_injection, FilterPair, PencilRow};
use crate::numkern::dense;
use crate::poly::Poly;
use crate::rng::SplitMix;
use crate::sslib::LtiModel;
use crate::fdiperf::gap_ratio;
use crate::sysnorms::{hinf_minus_index, norm_hinf, BOUNDARY_OFFSET};
use crate::{FdiError, Mat, Result, C64};

/// Fault-to-noise gap of the internal form `r` (all system inputs) for the fault
/// columns `tcols` against the columns `ocols`.
fn gap_of(r: &LtiModel, tcols: &[usize], ocols: &[usize], freqs: &[f64]) -> Result<f64> {
    let rows: Vec<usize> = (0..r.n_out()).collect();
    if rows.is_empty() {
        return Ok(0.0);
    }
    let beta = if tcols.is_empty() {
        0.0
    } else {
        let f = if freqs.is_empty() { None } else { Some(freqs) };
        hinf_minus_index(&r.select(&rows, tcols)?, f)?
    };
    let gamma = if ocols.is_empty() { 0.0 } else { norm_hinf(&r.select(&rows, ocols)?)?.0 };
    Ok(gap_ratio(beta, gamma))
}

fn invert_outer(g: &LtiModel) -> Result<LtiModel> {
    let di = dense::inverse(&g.d).map_err(|_| FdiError::InfiniteZeros)?;
    Ok(LtiModel {
        a: &g.a - &g.b * &di * &g.c,
        e: None,
        b: &g.b * &di,
        c: -(&di * &g.c),
        d: di,
        ts: g.ts,
        in_groups: Default::default(),
        out_groups: Default::default(),
    })
}

fn has_bad_poles(pair: &FilterPair) -> Result<bool> {
    let eig = dense::eigenvalues(&pair.a)?;
    let lim = BOUNDARY_OFFSET.sqrt();
    Ok(if pair.ts > 0.0 {
        eig.iter().any(|z| z.norm() >= 1.0 - lim)
    } else {
        eig.iter().any(|z| z.re >= -lim)
    })
}

/// Cancels the co-outer factor of the noise channel and scales it to `gamma`.
pub(crate) fn normalize_noise(pair: FilterPair, set: &Setup, opts: &SynthesisOptions) -> Result<FilterPair> {
    if pair.rows() == 0 || set.noise.is_empty() {
        return Ok(pair);
    }
    let bw = dense::select_cols(&pair.br, &set.noise);
    let dw = dense::select_cols(&pair.dr, &set.noise);
    let q = pair.rows();
    let mut nonstandard = false;
    let mut pair = if set.ts() == 0.0 && dense::rank(&dw, 1e-10 * dense::norm1(&dw).max(1.0)) == q {
        let g = outer_gain(&pair.a, &bw, &pair.c, &dw)?;
        nonstandard = g.boundary;
        pair.with_joint(&g.apply_inverse(&pair.joint())?)
    } else {
        let rw = pair.r_of(&["noise"]);
        match coouter_coinner(&rw) {
            Ok(f) if f.rank == q => match invert_outer(&f.outer) {
                Ok(inv) => {
                    nonstandard = f.nonstandard;
                    pair.left_apply(&inv, opts.tol)?
                }
                Err(_) => pair,
            },
            Ok(_) | Err(FdiError::InfiniteZeros) => pair,
            Err(e) => return Err(e),
        }
    };
    if nonstandard || has_bad_poles(&pair)? {
        let k = stabilizing_injection(&pair.a, &pair.c, &opts.targets(set.ts())?)?;
        pair.inject(&k);
    }
    let n = norm_hinf(&pair.r_of(&["noise"]))?.0;
    if n > 0.0 {
        pair = pair.scaled(opts.gamma / n);
    }
    Ok(pair)
}

fn noise_polys(rows: &[&PencilRow], set: &Setup) -> Vec<Vec<Poly>> {
    rows.iter()
        .map(|r| {
            let num = r.internal_numerators(&set.sys, &set.controls);
            set.noise.iter().map(|&j| num[j].clone()).collect()
        })
        .collect()
}

/// Data for one approximate synthesis.
pub(crate) struct AfdProblem<'a> {
    pub set: &'a Setup,
    /// System columns decoupled in addition to controls and disturbances.
    pub extra: Vec<usize>,
    /// Fault indices to detect.
    pub targets: Vec<usize>,
    pub hdesign: Option<&'a Mat>,
    pub hdesign2: Option<&'a Mat>,
    pub rdim: Option<usize>,
    pub seed: u64,
}

pub(crate) struct AfdResult {
    pub pair: FilterPair,
    pub info: SynthesisReport,
}

impl AfdProblem<'_> {
    fn gap(&self, pair: &FilterPair, opts: &SynthesisOptions) -> Result<f64> {
        let set = self.set;
        let tcols = set.fault_cols(&self.targets);
        let mut ocols: Vec<usize> = set.faults.iter().copied().filter(|c| !tcols.contains(c)).collect();
        ocols.extend_from_slice(&set.noise);
        gap_of(&pair.r(), &tcols, &ocols, &opts.freqs)
    }

    fn part_one(
        &self,
        rows: &[PencilRow],
        q1: usize,
        opts: &SynthesisOptions,
        z: C64,
        rng: &mut SplitMix,
    ) -> Result<(FilterPair, Mat)> {
        let set = self.set;
        let nb = rows.len();
        if let Some(h) = self.hdesign {
            if h.ncols() != nb || h.nrows() != q1 {
                return Err(FdiError::Dimension(format!("design matrix must be {q1}x{nb}")));
            }
            let pair = if opts.minimal {
                let refs: Vec<&PencilRow> = rows.iter().collect();
                let combined: Vec<PencilRow> =
                    (0..q1).map(|i| PencilRow::combine(&refs, &h.row(i).iter().copied().collect::<Vec<_>>())).collect();
                realize(set, &combined, opts)?
            } else {
                realize(set, rows, opts)?.left_mul(h)
            };
            return Ok((normalize_noise(pair, set, opts)?, h.clone()));
        }
        if !opts.minimal {
            let h = design_matrix(q1, nb, rng);
            let pair = realize(set, rows, opts)?.left_mul(&h);
            return Ok((normalize_noise(pair, set, opts)?, h));
        }
        let aopts = opts.analysis();
        let tester = set.tester(&aopts, opts);
        let admissible = |row: &PencilRow| {
            let p = tester.pattern(std::slice::from_ref(row));
            self.targets.iter().all(|&j| p[j]) && rank_at(&noise_polys(&[row], set), z) == 1
        };
        // Least order first; among combinations of that order keep the largest gap.
        let degs: Vec<usize> = rows.iter().map(|r| r.degree).collect();
        let mut draw = SplitMix::new(self.seed);
        let mut best: Option<(f64, FilterPair, Vec<f64>, usize)> = None;
        let mut order = None;
        for subset in factor::candidate_subsets(&degs) {
            let d = subset.iter().map(|&i| degs[i]).max().unwrap_or(0);
            if order.is_some_and(|o| d > o) {
                break;
            }
            let members: Vec<&PencilRow> = subset.iter().map(|&i| &rows[i]).collect();
            let mut trials = vec![vec![1.0; subset.len()]];
            if subset.len() > 1 {
                trials.extend((0..10).map(|_| (0..subset.len()).map(|_| draw.uniform()).collect::<Vec<f64>>()));
            }
            for hs in trials {
                let mut row = PencilRow::combine(&members, &hs);
                row.degree = d;
                if !admissible(&row) {
                    continue;
                }
                order = Some(d);
                let pair = normalize_noise(realize(set, std::slice::from_ref(&row), opts)?, set, opts)?;
                let gap = self.gap(&pair, opts)?;
                let better = best.as_ref().is_none_or(|b| gap > b.0 * (1.0 + 1e-9));
                if better {
                    let mut h = vec![0.0; nb];
                    for (k, &i) in subset.iter().enumerate() {
                        h[i] = hs[k];
                    }
                    best = Some((gap, pair, h, d));
                }
            }
        }
        let Some((_, pair, h, _)) = best else {
            return Err(FdiError::NotSolvable("no combination of basis rows detects all faults".into()));
        };
        let mut hm = Mat::zeros(q1, nb);
        hm.row_mut(0).copy_from_slice(&h);
        if q1 == 1 {
            return Ok((pair, hm));
        }
        // Further rows raise the noise rank.
        let first = PencilRow::combine(&rows.iter().collect::<Vec<_>>(), &h);
        let mut chosen = vec![first];
        for i in 0..nb {
            if chosen.len() == q1 {
                break;
            }
            let mut trial: Vec<&PencilRow> = chosen.iter().collect();
            trial.push(&rows[i]);
            if rank_at(&noise_polys(&trial, set), z) == trial.len() {
                hm[(chosen.len(), i)] = 1.0;
                chosen.push(rows[i].clone());
            }
        }
        let pair = normalize_noise(realize(set, &chosen, opts)?, set, opts)?;
        Ok((pair, hm))
    }

    pub fn solve(&self, opts: &SynthesisOptions) -> Result<AfdResult> {
        let set = self.set;
        let mut rng = SplitMix::new(self.seed);
        let z = set.probe(opts, &mut rng);
        let rows1 = factor::pencil_basis(&set.sys, &factor::decoupled_columns(&set.sys, &self.extra), &set.controls, opts.tol)?;
        if rows1.is_empty() {
            return Err(FdiError::EmptyNullspace);
        }
        let nb = rows1.len();
        let aopts = opts.analysis();
        let tester = set.tester(&aopts, opts);
        let s1 = tester.pattern(&rows1);
        let missing: Vec<usize> = self.targets.iter().copied().filter(|&j| !s1[j]).collect();
        if !missing.is_empty() {
            return Err(FdiError::NotDetectable(missing));
        }
        let refs: Vec<&PencilRow> = rows1.iter().collect();
        let rw = if set.noise.is_empty() { 0 } else { rank_at(&noise_polys(&refs, set), z) };
        let degs: Vec<usize> = rows1.iter().map(|r| r.degree).collect();

        if opts.exact || rw == 0 {
            let out = efd_rows(set, &rows1, &self.targets, opts, self.hdesign, self.rdim, &mut rng)?;
            let info = SynthesisReport {
                hdesign: Some(out.h),
                degs,
                gap: Some(self.gap(&out.pair, opts)?),
                freq: Some(z),
                ..Default::default()
            };
            return Ok(AfdResult { pair: out.pair, info });
        }

        let mut noise_extra = self.extra.clone();
        noise_extra.extend_from_slice(&set.noise);
        let rows2 = match factor::pencil_basis(&set.sys, &factor::decoupled_columns(&set.sys, &noise_extra), &set.controls, opts.tol) {
            Ok(r) => r,
            Err(FdiError::Rank(_)) => vec![],
            Err(e) => return Err(e),
        };
        let s2 = tester.pattern(&rows2);
        let targets2: Vec<usize> = self.targets.iter().copied().filter(|&j| s2[j]).collect();

        if opts.gamma == 0.0 {
            let missing: Vec<usize> = self.targets.iter().copied().filter(|&j| !s2[j]).collect();
            if rows2.is_empty() || !missing.is_empty() {
                return Err(FdiError::NotDetectable(missing));
            }
            let out = efd_rows(set, &rows2, &self.targets, opts, self.hdesign2, self.rdim, &mut rng)?;
            let info = SynthesisReport {
                hdesign2: Some(out.h),
                degs2: rows2.iter().map(|r| r.degree).collect(),
                gap: Some(self.gap(&out.pair, opts)?),
                freq: Some(z),
                ..Default::default()
            };
            return Ok(AfdResult { pair: out.pair, info });
        }

        let nb2 = nb - rw;
        let (q1, q2) = match self.rdim {
            Some(q) => {
                let q1 = q.min(rw);
                (q1, (q - q1).min(nb2))
            }
            None => {
                let q1 = self.hdesign.map(|h| h.nrows()).unwrap_or(if opts.minimal { 1 } else { rw }).min(rw);
                let q2 = self.hdesign2.map(|h| h.nrows()).unwrap_or(if opts.minimal { 0 } else { nb2 }).min(nb2);
                (q1, q2)
            }
        };
        let (mut pair, h1) = self.part_one(&rows1, q1.max(1), opts, z, &mut rng)?;
        let mut info = SynthesisReport { hdesign: Some(h1), degs, freq: Some(z), ..Default::default() };
        if q2 > 0 && !rows2.is_empty() && !targets2.is_empty() {
            let out = efd_rows(set, &rows2, &targets2, opts, self.hdesign2, Some(q2), &mut rng)?;
            pair = pair.stack(&out.pair)?;
            info.hdesign2 = Some(out.h);
            info.degs2 = rows2.iter().map(|r| r.degree).collect();
        }
        info.gap = Some(self.gap(&pair, opts)?);
        Ok(AfdResult { pair, info })
    }
}

/// Approximate fault detection filter: decouples controls and disturbances, detects
/// every fault and maximizes the fault-to-noise gap reported in `info.gap`.
pub fn afdsyn(sysf: &LtiModel, opts: &SynthesisOptions) -> Result<FdiFilter> {
    let set = Setup::new(sysf, opts)?;
    if set.faults.is_empty() {
        return Err(FdiError::InvalidOption("the system has no fault inputs".into()));
    }
    let prob = AfdProblem {
        set: &set,
        extra: vec![],
        targets: (0..set.faults.len()).collect(),
        hdesign: opts.hdesign.as_ref(),
        hdesign2: opts.hdesign2.as_ref(),
        rdim: opts.rdim,
        seed: opts.seed,
    };
    let mut out = prob.solve(opts)?;
    let s = fault_structure(&out.pair, opts)?;
    let missing = undetected(&s, &prob.targets);
    if !missing.is_empty() {
        return Err(FdiError::NotDetectable(missing));
    }
    out.info.s = Some(s);
    out.info.tcond = 1.0;
    out.info.seed = opts.seed;
    Ok(finish(&out.pair, out.info))
}

/// Setup in which the given fault indices are relabeled as noise inputs.
fn faults_as_noise(set: &Setup, idx: &[usize]) -> Setup {
    let cols = set.fault_cols(idx);
    let mut sys = set.sys.clone();
    let faults: Vec<usize> = set.faults.iter().copied().filter(|c| !cols.contains(c)).collect();
    let mut noise = set.noise.clone();
    noise.extend_from_slice(&cols);
    noise.sort_unstable();
    for (name, g) in [("faults", &faults), ("noise", &noise)] {
        if g.is_empty() {
            sys.in_groups.remove(name);
        } else {
            sys.in_groups.insert(name.to_string(), g.clone());
        }
    }
    Setup { sys, controls: set.controls.clone(), faults, noise }
}

/// Bank of approximate fault detection and isolation filters, one per specification row.
///
/// Each member first decouples the faults with zero entries in its row exactly. When that
/// fails, or leaves a zero-entry gain above `fdgaintol`, those faults are attenuated as noise.
/// `info.gap` is the ratio of the smallest target gain to the largest gain of the other
/// fault and noise inputs.
pub fn afdisyn(sysf: &LtiModel, opts: &SynthesisOptions) -> Result<Vec<Option<FdiFilter>>> {
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
        let f = afdi_member(&set, row, i, opts).map_err(|e| match e {
            FdiError::NotSolvable(_) | FdiError::EmptyNullspace | FdiError::NotDetectable(_) => {
                FdiError::NotSolvable(format!("specification {i}: {e}"))
            }
            other => other,
        })?;
        out.push(Some(f));
    }
    Ok(out)
}

fn afdi_member(set: &Setup, row: &[bool], i: usize, opts: &SynthesisOptions) -> Result<FdiFilter> {
    let zeros: Vec<usize> = (0..row.len()).filter(|&j| !row[j]).collect();
    let targets: Vec<usize> = (0..row.len()).filter(|&j| row[j]).collect();
    let hdesign = opts.bank_hdesign.get(i).and_then(|h| h.as_ref());
    let hdesign2 = opts.bank_hdesign2.get(i).and_then(|h| h.as_ref());
    let rdim = opts.bank_rdim.get(i).copied().flatten().or(opts.rdim);
    let seed = opts.seed.wrapping_add(i as u64);
    let strict = AfdProblem { set, extra: set.fault_cols(&zeros), targets: targets.clone(), hdesign, hdesign2, rdim, seed }
        .solve(opts)
        .and_then(|res| {
            let gains = zero_gains(&res.pair, set, &zeros)?;
            if gains > opts.fdgaintol {
                return Err(FdiError::NotSolvable("decoupled faults remain visible".into()));
            }
            Ok(res)
        });
    let res = match strict {
        Ok(r) => r,
        Err(e) if e.is_solvability() => {
            let soft = faults_as_noise(set, &zeros);
            let soft_targets: Vec<usize> =
                targets.iter().map(|&j| soft.faults.iter().position(|&c| c == set.faults[j]).unwrap_or(j)).collect();
            let mut r = AfdProblem { set: &soft, extra: vec![], targets: soft_targets, hdesign, hdesign2, rdim, seed }.solve(opts)?;
            r.pair.r_groups = set.sys.in_groups.clone();
            r
        }
        Err(e) => return Err(e),
    };
    let mut info = res.info;
    let s = fault_structure(&res.pair, opts)?;
    let missing = undetected(&s, &targets);
    if !missing.is_empty() {
        return Err(FdiError::NotDetectable(missing));
    }
    info.s = Some(s);
    info.tcond = 1.0;
    info.seed = opts.seed;
    Ok(finish(&res.pair, info))
}

/// Largest H∞ gain from the given fault indices.
fn zero_gains(pair: &FilterPair, set: &Setup, idx: &[usize]) -> Result<f64> {
    if idx.is_empty() || pair.rows() == 0 {
        return Ok(0.0);
    }
    let rows: Vec<usize> = (0..pair.rows()).collect();
    Ok(norm_hinf(&pair.r().select(&rows, &set.fault_cols(idx))?)?.0)
}
