//! Structure matrices, achievable specifications and feasibility checks.

use crate::factor::{self, PencilRow, Stabilization};
use crate::numkern::dense;
use crate::poly::Poly;
use crate::sslib::{freqresp, lambda_of, minimal_realization, LtiModel};
use crate::{FdiError, Mat, Result, C64};
use std::collections::{BTreeSet, HashSet};

/// Boolean structure matrix, one page per frequency (a single page in the weak case).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureMatrix {
    pub cols: usize,
    pub pages: Vec<Vec<Vec<bool>>>,
}

impl StructureMatrix {
    pub fn from_rows(rows: Vec<Vec<bool>>, cols: usize) -> Self {
        StructureMatrix { cols, pages: vec![rows] }
    }
    pub fn empty(cols: usize) -> Self {
        Self::from_rows(vec![], cols)
    }
    pub fn rows(&self) -> usize {
        self.pages.first().map(|p| p.len()).unwrap_or(0)
    }
    pub fn page(&self, k: usize) -> &[Vec<bool>] {
        &self.pages[k]
    }
    /// Entries true on every page.
    pub fn combined(&self) -> Vec<Vec<bool>> {
        let mut out = self.pages[0].clone();
        for p in &self.pages[1..] {
            for (r, pr) in out.iter_mut().zip(p) {
                for (x, &y) in r.iter_mut().zip(pr) {
                    *x = *x && y;
                }
            }
        }
        out
    }
    /// Parses rows of `0`/`1` values.
    pub fn from_numeric(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| x != 0.0).collect()).collect(), cols)
    }
}

/// Thresholds shared by the analysis functions.
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Relative rank tolerance (`0` selects internal defaults).
    pub tol: f64,
    /// Threshold for structurally zero entries.
    pub fdtol: f64,
    /// Threshold for frequency-response gains in strong tests.
    pub fdgaintol: f64,
    /// Real frequencies for strong tests; empty for weak tests.
    pub freqs: Vec<f64>,
    /// Stability degree of the internally generated filters when `freqs` is nonempty.
    pub sdeg: Option<f64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { tol: 0.0, fdtol: 1e-4, fdgaintol: 1e-2, freqs: vec![], sdeg: None }
    }
}

impl AnalysisOptions {
    fn stabilization(&self, ts: f64) -> Stabilization {
        let default = if ts > 0.0 { 0.9 } else { -0.05 };
        Stabilization::sdeg(self.sdeg.unwrap_or(default))
    }
}

fn fault_columns(r: &LtiModel) -> Vec<usize> {
    let f = r.group("faults");
    if f.is_empty() { (0..r.n_in()).collect() } else { f.to_vec() }
}

fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Whether a realization with minimal state dimension is structurally nonzero.
fn is_nonzero(m: &LtiModel, fdtol: f64) -> bool {
    max_abs(&m.d) > fdtol || (m.order() > 0 && max_abs(&m.b) > fdtol && max_abs(&m.c) > fdtol)
}

/// Whether a minimal single-column realization has a zero at `lambda`.
fn has_zero_at(m: &LtiModel, lambda: C64, fdtol: f64) -> bool {
    let n = m.order();
    let mut s = dense::to_complex(&dense::vstack(&[
        &dense::hstack(&[&m.a, &m.b]),
        &dense::hstack(&[&m.c, &m.d]),
    ]));
    for i in 0..n {
        s[(i, i)] -= lambda;
    }
    let sv = dense::csingular_values(&s);
    let scale = dense::norm1(&dense::vstack(&[&dense::hstack(&[&m.a, &m.b]), &dense::hstack(&[&m.c, &m.d])]));
    let tol = if fdtol > 0.0 { fdtol * scale.max(1.0) } else { 1e-4 * scale.max(1.0) };
    let rank = sv.iter().filter(|&&x| x > tol).count();
    rank < n + 1
}

/// Weak (or, with `freqs`, strong) structure matrix of the fault channel of `r`.
///
/// In block mode the result has a single row flagging nonzero columns.
pub fn fditspec(r: &LtiModel, tol: f64, fdtol: f64, freqs: &[f64], block: bool) -> Result<StructureMatrix> {
    let r = r.to_standard()?;
    let cols = fault_columns(&r);
    let mf = cols.len();
    let q = r.n_out();
    let bf = dense::select_cols(&r.b, &cols);
    let df = dense::select_cols(&r.d, &cols);
    let fdtol = if fdtol > 0.0 {
        fdtol
    } else {
        1e-4 * 1f64.max(dense::norm1(&bf)).max(dense::norm1(&r.c.transpose())).max(dense::norm1(&df))
    };
    let rows_out = if block { 1 } else { q };
    let npages = freqs.len().max(1);
    let mut pages = vec![vec![vec![false; mf]; rows_out]; npages];
    for (j, &c) in cols.iter().enumerate() {
        let row_sets: Vec<Vec<usize>> = if block { vec![(0..q).collect()] } else { (0..q).map(|i| vec![i]).collect() };
        for (ri, rows) in row_sets.iter().enumerate() {
            let e = minimal_realization(&r.select(rows, &[c])?, tol)?;
            if !is_nonzero(&e, fdtol) {
                continue;
            }
            if freqs.is_empty() {
                pages[0][ri][j] = true;
            } else {
                for (k, &w) in freqs.iter().enumerate() {
                    pages[k][ri][j] = !has_zero_at(&e, lambda_of(r.ts, w), fdtol);
                }
            }
        }
    }
    Ok(StructureMatrix { cols: mf, pages })
}

/// Block structure rows of a bank of internal forms; empty members give all-false rows.
pub fn fditspec_bank(rs: &[LtiModel], tol: f64, fdtol: f64, freqs: &[f64]) -> Result<StructureMatrix> {
    let mf = rs.iter().map(|r| fault_columns(r).len()).max().unwrap_or(0);
    let npages = freqs.len().max(1);
    let mut pages = vec![Vec::with_capacity(rs.len()); npages];
    for r in rs {
        if r.n_out() == 0 {
            for p in pages.iter_mut() {
                p.push(vec![false; mf]);
            }
            continue;
        }
        let s = fditspec(r, tol, fdtol, freqs, true)?;
        for (k, p) in pages.iter_mut().enumerate() {
            p.push(s.pages[k][0].clone());
        }
    }
    Ok(StructureMatrix { cols: mf, pages })
}

/// Strong structure matrix from frequency-response gains, with the gains themselves
/// (minimum over the frequencies). `freqs` defaults to `[0]`, `gaintol` to `0.01`.
pub fn fdisspec(r: &LtiModel, gaintol: f64, freqs: &[f64], block: bool) -> Result<(StructureMatrix, Mat)> {
    let r = r.to_standard()?;
    let gaintol = if gaintol > 0.0 { gaintol } else { 1e-2 };
    let freqs: Vec<f64> = if freqs.is_empty() { vec![0.0] } else { freqs.to_vec() };
    let cols = fault_columns(&r);
    let mf = cols.len();
    let q = r.n_out();
    let rows_out = if block { 1 } else { q };
    let mut gains = Mat::from_element(rows_out, mf, f64::INFINITY);
    let mut pages = vec![vec![vec![false; mf]; rows_out]; freqs.len()];
    for (k, &w) in freqs.iter().enumerate() {
        let g = freqresp(&r, lambda_of(r.ts, w)).map_err(|_| FdiError::PoleOnGrid(w))?;
        for (j, &c) in cols.iter().enumerate() {
            if block {
                let v = g.column(c).norm();
                gains[(0, j)] = gains[(0, j)].min(v);
                pages[k][0][j] = v >= gaintol;
            } else {
                for i in 0..q {
                    let v = g[(i, c)].norm();
                    gains[(i, j)] = gains[(i, j)].min(v);
                    pages[k][i][j] = v >= gaintol;
                }
            }
        }
    }
    if q == 0 && block {
        gains.fill(0.0);
    }
    Ok((StructureMatrix { cols: mf, pages }, gains))
}

/// Block strong structure rows of a bank; empty members give false rows and zero gains.
pub fn fdisspec_bank(rs: &[LtiModel], gaintol: f64, freqs: &[f64]) -> Result<(StructureMatrix, Mat)> {
    let mf = rs.iter().map(|r| fault_columns(r).len()).max().unwrap_or(0);
    let npages = freqs.len().max(1);
    let mut pages = vec![Vec::with_capacity(rs.len()); npages];
    let mut gains = Mat::zeros(rs.len(), mf);
    for (i, r) in rs.iter().enumerate() {
        if r.n_out() == 0 {
            for p in pages.iter_mut() {
                p.push(vec![false; mf]);
            }
            continue;
        }
        let (s, g) = fdisspec(r, gaintol, freqs, true)?;
        for (k, p) in pages.iter_mut().enumerate() {
            p.push(s.pages[k][0].clone());
        }
        gains.row_mut(i).copy_from(&g.row(0));
    }
    Ok((StructureMatrix { cols: mf, pages }, gains))
}

/// Weak test on a polynomial numerator of a normalized basis row.
pub(crate) fn poly_nonzero(p: &Poly, fdtol: f64) -> bool {
    p.max_abs() > fdtol
}

/// Column gains `|num_j(lambda)| / |den(lambda)|`.
pub(crate) fn row_gain(num: &Poly, den: &Poly, lambda: C64) -> f64 {
    (num.eval(lambda) / den.eval(lambda)).norm()
}

/// Evaluates a set of basis rows against the fault columns.
pub(crate) struct RowTester<'a> {
    pub sys: &'a LtiModel,
    pub controls: Vec<usize>,
    pub faults: Vec<usize>,
    pub opts: &'a AnalysisOptions,
    pub stab: Stabilization,
}

impl<'a> RowTester<'a> {
    pub fn new(sys: &'a LtiModel, opts: &'a AnalysisOptions) -> Self {
        RowTester {
            sys,
            controls: sys.group("controls").to_vec(),
            faults: sys.group("faults").to_vec(),
            opts,
            stab: opts.stabilization(sys.ts),
        }
    }

    fn fault_numerators(&self, row: &PencilRow) -> Vec<Poly> {
        let all = row.internal_numerators(self.sys, &self.controls);
        self.faults.iter().map(|&c| all[c].clone()).collect()
    }

    /// Weak block pattern of the stacked rows.
    pub fn weak(&self, rows: &[PencilRow]) -> Vec<bool> {
        let mut out = vec![false; self.faults.len()];
        for r in rows {
            for (j, n) in self.fault_numerators(r).iter().enumerate() {
                out[j] |= poly_nonzero(n, self.opts.fdtol);
            }
        }
        out
    }

    /// Strong block pattern of the stacked rows over their stabilizing denominators.
    pub fn strong(&self, rows: &[PencilRow]) -> Vec<bool> {
        let mf = self.faults.len();
        let nums: Vec<Vec<Poly>> = rows.iter().map(|r| self.fault_numerators(r)).collect();
        let dens: Vec<Poly> = rows.iter().map(|r| self.stab.denominator(r.degree, self.sys.ts)).collect();
        let mut out = vec![true; mf];
        for &w in &self.opts.freqs {
            let lam = lambda_of(self.sys.ts, w);
            for j in 0..mf {
                let g2: f64 = nums.iter().zip(&dens).map(|(n, d)| row_gain(&n[j], d, lam).powi(2)).sum();
                out[j] = out[j] && g2.sqrt() >= self.opts.fdgaintol;
            }
        }
        if self.opts.freqs.is_empty() {
            return self.weak(rows);
        }
        let weak = self.weak(rows);
        out.iter().zip(&weak).map(|(&s, &w)| s && w).collect()
    }

    pub fn pattern(&self, rows: &[PencilRow]) -> Vec<bool> {
        if self.opts.freqs.is_empty() { self.weak(rows) } else { self.strong(rows) }
    }
}

/// All achievable fault specifications, as sorted distinct rows.
///
/// Fault subsets are decoupled recursively: each node computes a nullspace basis with the
/// chosen faults treated as disturbances and records the pattern of the whole basis; with
/// frequencies, a node contributes only when its strong pattern equals its weak pattern.
pub fn fdigenspec(sysf: &LtiModel, opts: &AnalysisOptions) -> Result<StructureMatrix> {
    let sys = sysf.to_standard()?;
    let faults = sys.group("faults").to_vec();
    let mf = faults.len();
    if mf == 0 {
        return Ok(StructureMatrix::empty(0));
    }
    let tester = RowTester::new(&sys, opts);
    let mut found: BTreeSet<Vec<bool>> = BTreeSet::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(dset) = stack.pop() {
        if !seen.insert(dset.clone()) {
            continue;
        }
        let extra: Vec<usize> = dset.iter().map(|&j| faults[j]).collect();
        let cols = factor::decoupled_columns(&sys, &extra);
        let rows = factor::pencil_basis(&sys, &cols, &tester.controls, opts.tol)?;
        if rows.is_empty() {
            continue;
        }
        let weak = tester.weak(&rows);
        if !weak.iter().any(|&x| x) {
            continue;
        }
        if opts.freqs.is_empty() || tester.strong(&rows) == weak {
            found.insert(weak.clone());
        }
        if rows.len() == 1 {
            continue;
        }
        for j in 0..mf {
            if weak[j] && !dset.contains(&j) {
                let mut next = dset.clone();
                next.push(j);
                next.sort_unstable();
                if !seen.contains(&next) {
                    stack.push(next);
                }
            }
        }
    }
    Ok(StructureMatrix::from_rows(found.into_iter().collect(), mf))
}

/// Feasibility data for a list of specifications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecCheck {
    /// Number of basis rows; `0` marks an infeasible specification.
    pub rdims: Vec<usize>,
    /// Order of the nullspace-basis filter, `-1` when infeasible.
    pub orders: Vec<i64>,
    /// Least order of a scalar filter, `-1` when infeasible.
    pub leastorders: Vec<i64>,
}

/// Checks each row of `sfdi` for feasibility, reporting basis sizes and least orders.
pub fn fdichkspec(sysf: &LtiModel, sfdi: &StructureMatrix, opts: &AnalysisOptions, seed: u64) -> Result<SpecCheck> {
    let sys = sysf.to_standard()?;
    let faults = sys.group("faults").to_vec();
    let rows = sfdi.combined();
    if !rows.is_empty() && sfdi.cols != faults.len() {
        return Err(FdiError::Dimension(format!(
            "specifications have {} columns, the system has {} faults",
            sfdi.cols,
            faults.len()
        )));
    }
    let tester = RowTester::new(&sys, opts);
    let mut out = SpecCheck { rdims: vec![], orders: vec![], leastorders: vec![] };
    for spec in &rows {
        let extra: Vec<usize> = (0..faults.len()).filter(|&j| !spec[j]).map(|j| faults[j]).collect();
        let targets: Vec<usize> = (0..faults.len()).filter(|&j| spec[j]).collect();
        let cols = factor::decoupled_columns(&sys, &extra);
        let basis = factor::pencil_basis(&sys, &cols, &tester.controls, opts.tol)?;
        let pattern = if basis.is_empty() { vec![false; faults.len()] } else { tester.pattern(&basis) };
        let feasible = !basis.is_empty() && targets.iter().all(|&j| pattern[j]);
        if !feasible {
            out.rdims.push(0);
            out.orders.push(-1);
            out.leastorders.push(-1);
            continue;
        }
        let admissible = |row: &PencilRow| {
            let p = tester.pattern(std::slice::from_ref(row));
            targets.iter().all(|&j| p[j])
        };
        let least = factor::select_admissible_subsets(&basis, &admissible, seed)
            .map(|s| s.order as i64)
            .unwrap_or(-1);
        out.rdims.push(basis.len());
        out.orders.push(basis.iter().map(|r| r.degree as i64).sum());
        out.leastorders.push(least);
    }
    Ok(out)
}
