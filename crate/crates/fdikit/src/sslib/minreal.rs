//! Orthogonal removal of uncontrollable and unobservable parts.

use super::LtiModel;
use crate::numkern::dense::{self, norm1};
use crate::{Mat, Result};

/// Orthonormal basis of the controllable subspace of `(a, b)` by block Arnoldi steps.
pub(crate) fn controllable_basis(a: &Mat, b: &Mat, tol: f64) -> Mat {
    let n = a.nrows();
    let (mut v, r) = dense::range(b, tol);
    if r == 0 {
        return Mat::zeros(n, 0);
    }
    let mut frontier = v.clone();
    while v.ncols() < n {
        let mut w = a * &frontier;
        for _ in 0..2 {
            let proj = &v * (v.transpose() * &w);
            w -= proj;
        }
        let (qn, rn) = dense::range(&w, tol);
        if rn == 0 {
            break;
        }
        let mut next = dense::hstack(&[&v, &qn]);
        // One more orthogonalization pass keeps the basis orthonormal to working precision.
        let k = v.ncols();
        for j in k..next.ncols() {
            let mut col = next.column(j).into_owned();
            for i in 0..j {
                let p = next.column(i).dot(&col);
                col -= next.column(i) * p;
            }
            let nrm = col.norm();
            next.set_column(j, &(col / nrm));
        }
        frontier = next.columns(k, rn).into_owned();
        v = next;
    }
    v
}

fn scale_of(a: &Mat, b: &Mat, c: &Mat) -> f64 {
    norm1(a).max(norm1(b)).max(norm1(c)).max(1.0)
}

/// Controllable and observable realization with the same transfer function.
///
/// `tol` is the absolute rank threshold; `0` selects `1e-10` times the largest matrix 1-norm.
pub fn minimal_realization(sys: &LtiModel, tol: f64) -> Result<LtiModel> {
    let s = sys.to_standard()?;
    if s.order() == 0 {
        return Ok(s);
    }
    let tol = if tol > 0.0 { tol } else { 1e-10 * scale_of(&s.a, &s.b, &s.c) };
    let v = controllable_basis(&s.a, &s.b, tol);
    let (a1, b1, c1) = (v.transpose() * &s.a * &v, v.transpose() * &s.b, &s.c * &v);
    let w = controllable_basis(&a1.transpose(), &c1.transpose(), tol);
    let (a2, b2, c2) = (w.transpose() * &a1 * &w, w.transpose() * &b1, &c1 * &w);
    Ok(LtiModel { a: a2, e: None, b: b2, c: c2, ..s })
}
