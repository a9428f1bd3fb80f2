//! Minimal polynomial left nullspace bases and their proper realizations.

use super::pair::FilterPair;
use crate::numkern::dense::{self, norm1};
use crate::poly::{row_realization, Poly};
use crate::sslib::{freqresp, LtiModel};
use crate::{FdiError, Mat, Result, C64};

/// Polynomial row `[ξ(λ), w(λ)]` with `ξ (A - λI) + w C̃ = 0` and `ξ B̃ + w D̃ = 0`,
/// where `w` acts on the stacked signals `[y; u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilRow {
    pub xi: Vec<Poly>,
    pub w: Vec<Poly>,
    pub degree: usize,
}

impl PencilRow {
    pub fn combine(rows: &[&PencilRow], h: &[f64]) -> PencilRow {
        let n = rows[0].xi.len();
        let k = rows[0].w.len();
        let mut xi = vec![Poly::zero(); n];
        let mut w = vec![Poly::zero(); k];
        let mut degree = 0;
        for (r, &hi) in rows.iter().zip(h) {
            for i in 0..n {
                xi[i] = xi[i].add(&r.xi[i].scale(hi));
            }
            for i in 0..k {
                w[i] = w[i].add(&r.w[i].scale(hi));
            }
            degree = degree.max(r.degree);
        }
        PencilRow { xi, w, degree }
    }

    /// Numerators of `w(λ) [G(λ); S_u]` for every system input; `sys` must be in
    /// standard form and the row built from its realization.
    pub fn internal_numerators(&self, sys: &LtiModel, controls: &[usize]) -> Vec<Poly> {
        let p = sys.n_out();
        (0..sys.n_in())
            .map(|j| {
                let mut acc = Poly::zero();
                for (k, x) in self.xi.iter().enumerate() {
                    let bkj = sys.b[(k, j)];
                    if bkj != 0.0 {
                        acc = acc.add(&x.scale(bkj));
                    }
                }
                for l in 0..p {
                    let dlj = sys.d[(l, j)];
                    if dlj != 0.0 {
                        acc = acc.add(&self.w[l].scale(dlj));
                    }
                }
                if let Some(k) = controls.iter().position(|&c| c == j) {
                    acc = acc.add(&self.w[p + k]);
                }
                acc
            })
            .collect()
    }

    pub fn zero_like(&self) -> PencilRow {
        PencilRow { xi: vec![Poly::zero(); self.xi.len()], w: vec![Poly::zero(); self.w.len()], degree: 0 }
    }

    /// `f(λ)` times the row.
    pub fn mul_poly(&self, f: &Poly) -> PencilRow {
        let mut r = PencilRow {
            xi: self.xi.iter().map(|p| p.mul(f)).collect(),
            w: self.w.iter().map(|p| p.mul(f)).collect(),
            degree: 0,
        };
        r.degree = r.w_degree();
        r
    }

    pub fn add(&self, o: &PencilRow) -> PencilRow {
        let mut r = PencilRow {
            xi: self.xi.iter().zip(&o.xi).map(|(a, b)| a.add(b)).collect(),
            w: self.w.iter().zip(&o.w).map(|(a, b)| a.add(b)).collect(),
            degree: 0,
        };
        r.degree = r.w_degree();
        r
    }

    /// Quotient of every entry by `f`; remainders are dropped.
    pub fn div_poly(&self, f: &Poly) -> PencilRow {
        let mut r = PencilRow {
            xi: self.xi.iter().map(|p| p.divrem(f).0).collect(),
            w: self.w.iter().map(|p| p.divrem(f).0).collect(),
            degree: 0,
        };
        r.degree = r.w_degree();
        r
    }

    /// Largest degree among the entries of `w`.
    pub fn w_degree(&self) -> usize {
        self.w.iter().filter_map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Whether every entry vanishes at `z`, relative to the coefficient size.
    pub fn vanishes_at(&self, z: C64, rtol: f64) -> bool {
        let scale = (1.0 + z.norm()).powi(self.degree as i32 + 1);
        self.w.iter().chain(self.xi.iter()).all(|p| p.eval(z).norm() <= rtol * p.max_abs().max(1e-300) * scale)
    }

    pub fn max_abs(&self) -> f64 {
        self.w.iter().chain(self.xi.iter()).map(|p| p.max_abs()).fold(0.0, f64::max)
    }

    /// Scales the row so that the largest coefficient of `w` has magnitude one.
    pub fn normalized(&self) -> PencilRow {
        let s = self.w.iter().map(|p| p.max_abs()).fold(0.0, f64::max);
        if s == 0.0 {
            return self.clone();
        }
        PencilRow {
            xi: self.xi.iter().map(|p| p.scale(1.0 / s)).collect(),
            w: self.w.iter().map(|p| p.scale(1.0 / s)).collect(),
            degree: self.degree,
        }
    }
}

/// Pole choice for proper realizations of polynomial rows.
#[derive(Debug, Clone, Default)]
pub struct Stabilization {
    pub sdeg: Option<f64>,
    pub poles: Vec<C64>,
}

impl Stabilization {
    pub fn sdeg(v: f64) -> Self {
        Stabilization { sdeg: Some(v), poles: vec![] }
    }

    /// Monic denominator of degree `d`: listed poles first (conjugate pairs kept
    /// together), the rest at `sdeg`; without `sdeg` at `-1` (continuous) or `0` (discrete).
    pub fn denominator(&self, d: usize, ts: f64) -> Poly {
        let fill = self.sdeg.unwrap_or(if ts > 0.0 { 0.0 } else { -1.0 });
        let mut roots: Vec<C64> = Vec::with_capacity(d);
        let mut i = 0;
        while roots.len() < d && i < self.poles.len() {
            let z = self.poles[i];
            if z.im.abs() > 0.0 {
                if roots.len() + 2 <= d {
                    roots.push(z);
                    roots.push(z.conj());
                }
                // Skip the conjugate partner if listed next.
                if i + 1 < self.poles.len() && (self.poles[i + 1] - z.conj()).norm() <= 1e-12 * (1.0 + z.norm()) {
                    i += 1;
                }
            } else {
                roots.push(z);
            }
            i += 1;
        }
        while roots.len() < d {
            roots.push(C64::new(fill, 0.0));
        }
        Poly::from_roots(&roots)
    }
}

/// Lifted realization pieces for `[G(:, cols); S]` where `S` selects the controls.
fn lifted(sys: &LtiModel, cols: &[usize], controls: &[usize]) -> (Mat, Mat, Mat, Mat) {
    let (n, p) = (sys.order(), sys.n_out());
    let mu = controls.len();
    let b = dense::select_cols(&sys.b, cols);
    let mut c = Mat::zeros(p + mu, n);
    c.view_mut((0, 0), (p, n)).copy_from(&sys.c);
    let mut d = Mat::zeros(p + mu, cols.len());
    d.view_mut((0, 0), (p, cols.len())).copy_from(&dense::select_cols(&sys.d, cols));
    for (k, ctl) in controls.iter().enumerate() {
        if let Some(j) = cols.iter().position(|c| c == ctl) {
            d[(p + k, j)] = 1.0;
        }
    }
    (sys.a.clone(), b, c, d)
}

/// Normal rank of `[G(:, cols); S]`, evaluated at a generic complex point.
pub fn normal_rank(sys: &LtiModel, cols: &[usize], controls: &[usize]) -> Result<usize> {
    let (a, b, c, d) = lifted(sys, cols, controls);
    if cols.is_empty() {
        return Ok(0);
    }
    let g = LtiModel { a, e: None, b, c, d, ..LtiModel::zero(0, 0, sys.ts) };
    let mut best = 0;
    for z in [C64::new(0.3711, 1.2839), C64::new(-0.8123, 0.5297)] {
        let gz = freqresp(&g, z);
        if let Ok(gz) = gz {
            let s = dense::csingular_values(&gz);
            let tol = 1e-9 * s.first().copied().unwrap_or(0.0).max(1e-300);
            best = best.max(s.iter().filter(|&&x| x > tol).count());
        }
    }
    Ok(best)
}

/// Minimal polynomial basis of the left nullspace of `[G(:, cols); S_u]`, built from the
/// system pencil of the given realization. `sys` must be in standard form; `controls`
/// must be contained in `cols`. Rows are returned with non-decreasing degrees.
pub fn pencil_basis(sys: &LtiModel, cols: &[usize], controls: &[usize], tol: f64) -> Result<Vec<PencilRow>> {
    let (n, p) = (sys.order(), sys.n_out());
    let mu = controls.len();
    let nr = normal_rank(sys, cols, controls)?;
    let want = p + mu - nr;
    if want == 0 {
        return Ok(vec![]);
    }
    let (a, b, c, d) = lifted(sys, cols, controls);
    let rows = n + p + mu;
    let colsz = n + cols.len();
    let mut s0 = Mat::zeros(rows, colsz);
    s0.view_mut((0, 0), (n, n)).copy_from(&a);
    s0.view_mut((0, n), (n, cols.len())).copy_from(&b);
    s0.view_mut((n, 0), (p + mu, n)).copy_from(&c);
    s0.view_mut((n, n), (p + mu, cols.len())).copy_from(&d);
    let scale = norm1(&s0).max(1.0);
    let tol = if tol > 0.0 { tol * scale } else { 1e-10 * scale };
    let mut found: Vec<(usize, Vec<f64>)> = Vec::new();
    for deg in 0..=n {
        if found.len() >= want {
            break;
        }
        let br = deg + 1;
        let bc = deg + 2;
        let mut m = Mat::zeros(br * rows, bc * colsz);
        for k in 0..br {
            m.view_mut((k * rows, k * colsz), (rows, colsz)).copy_from(&s0);
            let mut neg = m.view_mut((k * rows, (k + 1) * colsz), (rows, n));
            for i in 0..n {
                neg[(i, i)] = -1.0;
            }
        }
        let null = dense::left_null(&m, tol);
        if null.nrows() == 0 {
            continue;
        }
        // Shifts of the earlier vectors already span part of this space.
        let len = br * rows;
        let mut shifts: Vec<Vec<f64>> = Vec::new();
        for (e, v) in &found {
            for j in 0..=(deg - e) {
                let mut s = vec![0.0; len];
                s[j * rows..j * rows + v.len()].copy_from_slice(v);
                shifts.push(s);
            }
        }
        let mut x = null.clone();
        if !shifts.is_empty() {
            let smat = Mat::from_fn(len, shifts.len(), |i, j| shifts[j][i]);
            let (qs, _) = dense::range(&smat, 1e-8);
            for _ in 0..2 {
                let proj = (&x * &qs) * qs.transpose();
                x -= proj;
            }
        }
        let (_, sv, v) = dense::svd_full(&x);
        let newcount = sv.iter().filter(|&&s| s > 1e-6).count();
        for k in 0..newcount.min(want - found.len()) {
            found.push((deg, v.column(k).iter().copied().collect()));
        }
    }
    if found.len() < want {
        return Err(FdiError::Rank(format!(
            "nullspace basis: found {} of {} vectors",
            found.len(),
            want
        )));
    }
    Ok(found
        .into_iter()
        .map(|(deg, v)| {
            let cut = 1e-13 * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let coeff = |idx: usize| {
                Poly(
                    (0..=deg)
                        .map(|j| {
                            let x = v[j * rows + idx];
                            if x.abs() <= cut { 0.0 } else { x }
                        })
                        .collect(),
                )
                .trimmed(0.0)
            };
            PencilRow {
                xi: (0..n).map(coeff).collect(),
                w: (n..rows).map(coeff).collect(),
                degree: deg,
            }
            .normalized()
        })
        .collect())
}

/// Proper left nullspace basis of `[G_u G_d; I 0]`.
#[derive(Debug, Clone)]
pub struct NullBasis {
    /// Filter rows (inputs `[y; u]`) with the internal form on all system inputs.
    pub pair: FilterPair,
    /// Row degrees (empty for the observer basis).
    pub degs: Vec<usize>,
    /// Polynomial rows behind `pair` (empty for the observer basis).
    pub rows: Vec<PencilRow>,
}

impl NullBasis {
    pub fn basis(&self) -> LtiModel {
        self.pair.q()
    }
    pub fn len(&self) -> usize {
        self.pair.rows()
    }
    pub fn is_empty(&self) -> bool {
        self.pair.rows() == 0
    }
}

/// Realizes polynomial rows over their denominators as a [`FilterPair`].
pub fn realize_rows(sys: &LtiModel, controls: &[usize], rows: &[PencilRow], dens: &[Poly]) -> Result<FilterPair> {
    let p = sys.n_out();
    let mut out = FilterPair::empty(p, controls.len(), sys.n_in(), sys.ts, sys.in_groups.clone());
    for (row, den) in rows.iter().zip(dens) {
        let q = row_realization(&row.w, den, sys.ts);
        let r = row_realization(&row.internal_numerators(sys, controls), den, sys.ts);
        let pr = FilterPair {
            a: q.a,
            c: q.c,
            bq: q.b,
            dq: q.d,
            br: r.b,
            dr: r.d,
            ts: sys.ts,
            r_groups: sys.in_groups.clone(),
            p,
        };
        out = out.stack(&pr)?;
    }
    Ok(out)
}

/// Input columns to decouple: controls, disturbances and any extra columns.
pub fn decoupled_columns(sys: &LtiModel, extra: &[usize]) -> Vec<usize> {
    let mut cols: Vec<usize> = sys.group("controls").to_vec();
    cols.extend_from_slice(sys.group("disturbances"));
    for &e in extra {
        if !cols.contains(&e) {
            cols.push(e);
        }
    }
    cols
}

/// Proper left nullspace basis of `[G_u G_d; I 0]` (plus the `extra` columns treated as
/// disturbances).
///
/// With `use_observer` the full-order observer basis `[I, -G_u]` is returned; it requires
/// no disturbances. Otherwise a minimal polynomial basis is computed and each row of degree
/// `d` is divided by a degree-`d` denominator chosen by `stab`.
pub fn left_nullspace(sys: &LtiModel, extra: &[usize], use_observer: bool, stab: &Stabilization, tol: f64) -> Result<NullBasis> {
    let s = sys.to_standard()?;
    let controls = s.group("controls").to_vec();
    let cols = decoupled_columns(&s, extra);
    let p = s.n_out();
    if use_observer {
        if cols.len() != controls.len() {
            return Err(FdiError::InvalidOption("the observer basis needs a system without disturbances".into()));
        }
        let (n, m) = (s.order(), s.n_in());
        let mu = controls.len();
        let mut bq = Mat::zeros(n, p + mu);
        let mut dq = Mat::zeros(p, p + mu);
        dq.view_mut((0, 0), (p, p)).fill_with_identity();
        let bu = dense::select_cols(&s.b, &controls);
        let du = dense::select_cols(&s.d, &controls);
        bq.view_mut((0, p), (n, mu)).copy_from(&(-&bu));
        dq.view_mut((0, p), (p, mu)).copy_from(&(-&du));
        let mut su = Mat::zeros(mu, m);
        for (k, &c) in controls.iter().enumerate() {
            su[(k, c)] = 1.0;
        }
        let pair = FilterPair {
            a: s.a.clone(),
            c: s.c.clone(),
            bq,
            dq,
            br: &s.b - &bu * &su,
            dr: &s.d - &du * &su,
            ts: s.ts,
            r_groups: s.in_groups.clone(),
            p,
        };
        return Ok(NullBasis { pair, degs: vec![], rows: vec![] });
    }
    let rows = pencil_basis(&s, &cols, &controls, tol)?;
    if rows.is_empty() {
        return Err(FdiError::EmptyNullspace);
    }
    let dens: Vec<Poly> = rows.iter().map(|r| stab.denominator(r.degree, s.ts)).collect();
    let pair = realize_rows(&s, &controls, &rows, &dens)?;
    let degs = rows.iter().map(|r| r.degree).collect();
    Ok(NullBasis { pair, degs, rows })
}
