//! Small dense helpers on top of nalgebra factorizations.

use crate::{FdiError, Mat, Result, C64, CMat};
use nalgebra::{Dyn, SVD};


pub const EPS: f64 = f64::EPSILON;

pub fn norm1(m: &Mat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Default rank tolerance: dimension times machine epsilon times the largest 1-norm.
pub fn default_tol(mats: &[&Mat]) -> f64 {
    let dim = mats
        .iter()
        .map(|m| m.nrows().max(m.ncols()))
        .max()
        .unwrap_or(1)
        .max(1);
    let scale = mats.iter().map(|m| norm1(m)).fold(0.0, f64::max).max(1.0);
    dim as f64 * EPS * scale
}

/// Full SVD: `u` is `rows x rows`, `s` sorted decreasingly, `v` is `cols x cols`.
pub fn svd_full(m: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (Mat::identity(r, r), vec![], Mat::identity(c, c));
    }
    if r < c {
        let (v, s, u) = svd_full(&m.transpose());
        return (u, s, v);
    }
    // r >= c: thin u is r x c, v_t is c x c.
    let svd = SVD::new(m.clone(), true, true);
    let mut idx: Vec<usize> = (0..c).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let uu = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut u = Mat::zeros(r, c);
    let mut v = Mat::zeros(c, c);
    let mut s = Vec::with_capacity(c);
    for (j, &i) in idx.iter().enumerate() {
        u.set_column(j, &uu.column(i));
        v.set_column(j, &vt.row(i).transpose());
        s.push(svd.singular_values[i]);
    }
    let u = if r > c { complete_basis(&u, r) } else { u };
    (u, s, v)
}

/// Extends the orthonormal columns of `q` to an orthonormal basis of R^n.
pub fn complete_basis(q: &Mat, n: usize) -> Mat {
    let k = q.ncols();
    let mut m = Mat::zeros(n, k + n);
    if k > 0 {
        m.view_mut((0, 0), (n, k)).copy_from(q);
    }
    m.view_mut((0, k), (n, n)).fill_with_identity();
    let full = nalgebra::QR::new(m).q();
    let mut out = full.columns(0, n).into_owned();
    // Keep the original columns exactly, the QR may flip signs.
    for j in 0..k {
        out.set_column(j, &q.column(j));
    }
    // Re-orthogonalize the completion against the kept columns.
    for j in k..n {
        let mut col = out.column(j).into_owned();
        for _ in 0..2 {
            for i in 0..j {
                let p = out.column(i).dot(&col);
                col -= out.column(i) * p;
            }
        }
        let nrm = col.norm();
        out.set_column(j, &(col / nrm));
    }
    out
}

pub fn rank_of(s: &[f64], tol: f64) -> usize {
    s.iter().filter(|&&x| x > tol).count()
}

/// Orthonormal basis of the column range of `m`, returned as `(basis, rank)`.
pub fn range(m: &Mat, tol: f64) -> (Mat, usize) {
    let (u, s, _) = svd_full(m);
    let r = rank_of(&s, tol);
    (u.columns(0, r).into_owned(), r)
}

/// Rows spanning the left nullspace: `n * m = 0`, `n` has orthonormal rows.
pub fn left_null(m: &Mat, tol: f64) -> Mat {
    let (u, s, _) = svd_full(m);
    let r = rank_of(&s, tol);
    let rows = m.nrows();
    u.columns(r, rows - r).transpose()
}

/// Columns spanning the right nullspace.
pub fn right_null(m: &Mat, tol: f64) -> Mat {
    left_null(&m.transpose(), tol).transpose()
}

pub fn rank(m: &Mat, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let (_, s, _) = svd_full(m);
    rank_of(&s, tol)
}

pub fn solve(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.nrows() == 0 {
        return Ok(Mat::zeros(0, b.ncols()));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| FdiError::Rank("singular linear system".into()))
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    if a.nrows() == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| FdiError::Rank("singular matrix".into()))
}

pub fn csolve(a: &CMat, b: &CMat) -> Option<CMat> {
    if a.nrows() == 0 {
        return Some(CMat::zeros(0, b.ncols()));
    }
    let lu = a.clone().lu();
    // Reject near-singular systems by a pivot test.
    let u = lu.u();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let minp = (0..u.nrows()).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if minp <= 1e3 * EPS * scale * a.nrows() as f64 {
        return None;
    }
    lu.solve(b)
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn blockdiag(a: &Mat, b: &Mat) -> Mat {
    let mut m = Mat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

pub fn hstack(ms: &[&Mat]) -> Mat {
    let rows = ms.first().map(|m| m.nrows()).unwrap_or(0);
    let cols: usize = ms.iter().map(|m| m.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c = 0;
    for m in ms {
        assert_eq!(m.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, c), m.shape()).copy_from(*m);
        c += m.ncols();
    }
    out
}

pub fn vstack(ms: &[&Mat]) -> Mat {
    let cols = ms.first().map(|m| m.ncols()).unwrap_or(0);
    let rows: usize = ms.iter().map(|m| m.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r = 0;
    for m in ms {
        assert_eq!(m.ncols(), cols, "vstack column mismatch");
        out.view_mut((r, 0), m.shape()).copy_from(*m);
        r += m.nrows();
    }
    out
}

pub fn select_cols(m: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

pub fn select_rows(m: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(a: &Mat) -> Result<Vec<C64>> {
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    let (_, t) = super::real_schur(a)?;
    Ok(super::schur::quasi_eigenvalues(&t))
}

/// Largest singular value of a complex matrix.
pub fn cnorm2(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let k = m.nrows().max(m.ncols());
    let mut sq = CMat::zeros(k, k);
    sq.view_mut((0, 0), m.shape()).copy_from(m);
    nalgebra::SVD::<_, Dyn, Dyn>::new(sq, false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Singular values of a complex matrix, decreasing.
pub fn csingular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return vec![];
    }
    let k = m.nrows().max(m.ncols());
    let mut sq = CMat::zeros(k, k);
    sq.view_mut((0, 0), m.shape()).copy_from(m);
    let mut s: Vec<f64> = nalgebra::SVD::<_, Dyn, Dyn>::new(sq, false, false)
        .singular_values
        .iter()
        .cloned()
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s.truncate(m.nrows().min(m.ncols()));
    s
}

pub fn symmetrize(x: &Mat) -> Mat {
    (x + x.transpose()) * 0.5
}

pub fn orth_defect(q: &Mat) -> f64 {
    (q.transpose() * q - Mat::identity(q.ncols(), q.ncols())).norm()
}
