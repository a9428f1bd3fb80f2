//! Real Schur forms with standardized blocks and eigenvalue reordering.

use super::dense::{self, EPS};
use crate::{FdiError, Mat, Result, C64};
use nalgebra::Schur;

/// Eigenvalue region used to select the leading block.
#[derive(Clone, Copy)]
pub enum Region<'a> {
    /// Re(λ) < 0.
    StableContinuous,
    /// |λ| < 1.
    StableDiscrete,
    Custom(&'a dyn Fn(C64) -> bool),
}

impl Region<'_> {
    pub fn contains(&self, z: C64) -> bool {
        match self {
            Region::StableContinuous => z.re < 0.0,
            Region::StableDiscrete => z.norm() < 1.0,
            Region::Custom(f) => f(z),
        }
    }
}

impl std::fmt::Debug for Region<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::StableContinuous => write!(f, "StableContinuous"),
            Region::StableDiscrete => write!(f, "StableDiscrete"),
            Region::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Orthogonal split of a pencil `(A, E)` with the selected eigenvalues leading.
///
/// `q.transpose() * A * z` and `q.transpose() * E * z` are block upper triangular,
/// the leading `k x k` diagonal block carrying the selected eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub q: Mat,
    pub z: Mat,
    pub k: usize,
    pub eigenvalues: Vec<(C64, bool)>,
}

/// Ordered real Schur form `A = z * t * z^T`.
#[derive(Debug, Clone)]
pub struct OrderedSchur {
    pub z: Mat,
    pub t: Mat,
    pub k: usize,
}

/// Real Schur decomposition `a = q * t * q^T`; 2x2 blocks carry complex pairs only.
pub fn real_schur(a: &Mat) -> Result<(Mat, Mat)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(FdiError::Dimension("Schur form needs a square matrix".into()));
    }
    if n == 0 {
        return Ok((Mat::zeros(0, 0), Mat::zeros(0, 0)));
    }
    if !a.iter().all(|x| x.is_finite()) {
        return Err(FdiError::InvalidOption("non-finite matrix entry".into()));
    }
    let schur = Schur::try_new(a.clone(), EPS, 200 * n + 1000)
        .ok_or(FdiError::NoConvergence("real Schur decomposition"))?;
    let (mut q, mut t) = schur.unpack();
    clean(&mut t);
    standardize(&mut t, &mut q);
    Ok((q, t))
}

fn clean(t: &mut Mat) {
    let n = t.nrows();
    for j in 0..n {
        for i in j + 2..n {
            t[(i, j)] = 0.0;
        }
    }
    for i in 0..n.saturating_sub(1) {
        let s = t[(i, i)].abs() + t[(i + 1, i + 1)].abs();
        let s = if s == 0.0 { dense::norm1(t) } else { s };
        if t[(i + 1, i)].abs() <= EPS * s {
            t[(i + 1, i)] = 0.0;
        }
    }
    // Two consecutive nonzero subdiagonals cannot occur in a converged form;
    // drop the smaller one if roundoff produced it.
    for i in 0..n.saturating_sub(2) {
        if t[(i + 1, i)] != 0.0 && t[(i + 2, i + 1)] != 0.0 {
            if t[(i + 1, i)].abs() < t[(i + 2, i + 1)].abs() {
                t[(i + 1, i)] = 0.0;
            } else {
                t[(i + 2, i + 1)] = 0.0;
            }
        }
    }
}

fn rot_rows(t: &mut Mat, i: usize, j: usize, c: f64, s: f64, from: usize) {
    for k in from..t.ncols() {
        let (x, y) = (t[(i, k)], t[(j, k)]);
        t[(i, k)] = c * x + s * y;
        t[(j, k)] = -s * x + c * y;
    }
}

fn rot_cols(t: &mut Mat, i: usize, j: usize, c: f64, s: f64, upto: usize) {
    for k in 0..upto {
        let (x, y) = (t[(k, i)], t[(k, j)]);
        t[(k, i)] = c * x + s * y;
        t[(k, j)] = -s * x + c * y;
    }
}

/// Splits 2x2 blocks with real eigenvalues into two 1x1 blocks.
fn standardize(t: &mut Mat, q: &mut Mat) {
    let n = t.nrows();
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)] == 0.0 {
            i += 1;
            continue;
        }
        let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
        let p = 0.5 * (a - d);
        let disc = p * p + b * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let lam = 0.5 * (a + d) + if p >= 0.0 { sq } else { -sq };
            // Eigenvector of the block for lam.
            let v1 = (b, lam - a);
            let v2 = (lam - d, c);
            let (x, y) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
            let r = x.hypot(y);
            if r > 0.0 {
                let (cs, sn) = (x / r, y / r);
                rot_rows(t, i, i + 1, cs, sn, 0);
                rot_cols(t, i, i + 1, cs, sn, n);
                rot_cols(q, i, i + 1, cs, sn, q.nrows());
            }
            t[(i + 1, i)] = 0.0;
            i += 1;
        } else {
            i += 2;
        }
    }
}

pub(crate) fn block_size(t: &Mat, i: usize) -> usize {
    if i + 1 < t.nrows() && t[(i + 1, i)] != 0.0 {
        2
    } else {
        1
    }
}

pub(crate) fn block_eig(t: &Mat, i: usize, sz: usize) -> (C64, C64) {
    if sz == 1 {
        let z = C64::new(t[(i, i)], 0.0);
        return (z, z);
    }
    let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
    let p = 0.5 * (a - d);
    let disc = p * p + b * c;
    let m = 0.5 * (a + d);
    if disc >= 0.0 {
        (C64::new(m + disc.sqrt(), 0.0), C64::new(m - disc.sqrt(), 0.0))
    } else {
        let w = (-disc).sqrt();
        (C64::new(m, w), C64::new(m, -w))
    }
}

/// Eigenvalues read off a quasi-triangular matrix, in diagonal order.
pub fn quasi_eigenvalues(t: &Mat) -> Vec<C64> {
    let n = t.nrows();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let sz = block_size(t, i);
        let (l1, l2) = block_eig(t, i, sz);
        out.push(l1);
        if sz == 2 {
            out.push(l2);
        }
        i += sz;
    }
    out
}

/// Swaps the adjacent diagonal blocks starting at `j` (size `p`) and `j + p` (size `q`).
pub(crate) fn swap_blocks(t: &mut Mat, z: &mut Mat, j: usize, p: usize, q: usize) -> Result<()> {
    let n = t.nrows();
    let m = p + q;
    let a11 = t.view((j, j), (p, p)).into_owned();
    let a22 = t.view((j + p, j + p), (q, q)).into_owned();
    let a12 = t.view((j, j + p), (p, q)).into_owned();
    // A11 X - X A22 = A12 via the Kronecker form, column-major vec.
    let ip = Mat::identity(p, p);
    let iq = Mat::identity(q, q);
    let k = iq.kronecker(&a11) - a22.transpose().kronecker(&ip);
    let rhs = Mat::from_column_slice(p * q, 1, a12.as_slice());
    let x = dense::solve(&k, &rhs).map_err(|_| FdiError::SwapFailed)?;
    let x = Mat::from_column_slice(p, q, x.as_slice());
    // Columns [-X; I] span the invariant subspace of the trailing block.
    let mut basis = Mat::zeros(m, q);
    basis.view_mut((0, 0), (p, q)).copy_from(&(-x));
    basis.view_mut((p, 0), (q, q)).fill_with_identity();
    let mut aug = Mat::zeros(m, q + m);
    aug.view_mut((0, 0), (m, q)).copy_from(&basis);
    aug.view_mut((0, q), (m, m)).fill_with_identity();
    let qq = nalgebra::QR::new(aug).q();
    let qq = qq.columns(0, m).into_owned();
    let tn = dense::norm1(t).max(1e-300);
    // Apply the local transformation.
    let rows = t.rows(j, m).into_owned();
    t.rows_mut(j, m).copy_from(&(qq.transpose() * rows));
    let cols = t.columns(j, m).into_owned();
    t.columns_mut(j, m).copy_from(&(cols * &qq));
    let zc = z.columns(j, m).into_owned();
    z.columns_mut(j, m).copy_from(&(zc * &qq));
    let ll = t.view((j + q, j), (p, q)).norm();
    if ll > 1e-10 * tn {
        return Err(FdiError::SwapFailed);
    }
    t.view_mut((j + q, j), (p, q)).fill(0.0);
    for c in 0..n {
        for r in c + 2..n {
            t[(r, c)] = 0.0;
        }
    }
    standardize_local(t, z, j, m);
    Ok(())
}

fn standardize_local(t: &mut Mat, z: &mut Mat, j: usize, m: usize) {
    // Real-eigenvalue 2x2 blocks can reappear after a swap.
    let n = t.nrows();
    let mut i = j;
    while i + 1 < (j + m).min(n) {
        if t[(i + 1, i)] != 0.0 {
            let (l1, _) = block_eig(t, i, 2);
            if l1.im == 0.0 {
                let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
                let lam = l1.re;
                let v1 = (b, lam - a);
                let v2 = (lam - d, c);
                let (x, y) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
                let r = x.hypot(y);
                if r > 0.0 {
                    rot_rows(t, i, i + 1, x / r, y / r, 0);
                    rot_cols(t, i, i + 1, x / r, y / r, n);
                    rot_cols(z, i, i + 1, x / r, y / r, z.nrows());
                }
                t[(i + 1, i)] = 0.0;
            }
            i += 2;
        } else {
            i += 1;
        }
    }
}

/// Reorders a real Schur form so that eigenvalues with `select` true lead.
pub fn reorder(t: &mut Mat, z: &mut Mat, select: &dyn Fn(C64) -> bool) -> Result<usize> {
    let n = t.nrows();
    let mut ks = 0;
    let mut i = 0;
    while i < n {
        let sz = block_size(t, i);
        let (l, _) = block_eig(t, i, sz);
        if select(l) {
            let mut pos = i;
            while pos > ks {
                let prev = if pos >= 2 && t[(pos - 1, pos - 2)] != 0.0 && pos - 2 >= ks { 2 } else { 1 };
                swap_blocks(t, z, pos - prev, prev, sz)?;
                pos -= prev;
            }
            ks += sz;
        }
        i += sz;
    }
    Ok(ks)
}

/// Real Schur form of `a` with the eigenvalues selected by `select` leading.
pub fn ordered_schur(a: &Mat, select: &dyn Fn(C64) -> bool) -> Result<OrderedSchur> {
    let (mut z, mut t) = real_schur(a)?;
    let k = reorder(&mut t, &mut z, select)?;
    Ok(OrderedSchur { z, t, k })
}

/// Orthogonal split of `(a, e)` with the eigenvalues inside `region` leading.
pub fn spectral_split(a: &Mat, e: Option<&Mat>, region: Region) -> Result<SpectralSplit> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(FdiError::Dimension("spectral_split needs a square matrix".into()));
    }
    let ae = match e {
        Some(e) => {
            if e.shape() != (n, n) {
                return Err(FdiError::Dimension("E must match A".into()));
            }
            dense::solve(e, a).map_err(|_| FdiError::SingularE)?
        }
        None => a.clone(),
    };
    let sel = |z: C64| region.contains(z);
    let os = ordered_schur(&ae, &sel)?;
    let q = match e {
        Some(e) => {
            if n == 0 {
                Mat::zeros(0, 0)
            } else {
                nalgebra::QR::new(e * &os.z).q()
            }
        }
        None => os.z.clone(),
    };
    let eigenvalues = quasi_eigenvalues(&os.t)
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i < os.k))
        .collect();
    Ok(SpectralSplit { q, z: os.z, k: os.k, eigenvalues })
}
