//! Lyapunov equations by a complex Bartels-Stewart sweep.

use super::dense;
use super::Kind;
use crate::{CMat, FdiError, Mat, Result, C64};
use nalgebra::Schur;

/// Solves `A'XE + E'XA + Q = 0` (continuous) or `A'XA - E'XE + Q = 0` (discrete).
///
/// The pencil `(A, E)` must be stable for the given kind.
pub fn solve_lyapunov(a: &Mat, e: Option<&Mat>, q: &Mat, kind: Kind) -> Result<Mat> {
    let n = a.nrows();
    if a.ncols() != n || q.shape() != (n, n) {
        return Err(FdiError::Dimension("Lyapunov operands must be square and conformant".into()));
    }
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let (at, qt) = match e {
        Some(e) => {
            if e.shape() != (n, n) {
                return Err(FdiError::Dimension("E must match A".into()));
            }
            let einv = dense::inverse(e).map_err(|_| FdiError::SingularE)?;
            (a * &einv, einv.transpose() * q * &einv)
        }
        None => (a.clone(), q.clone()),
    };
    let f = dense::to_complex(&at.transpose());
    let schur = Schur::try_new(f, f64::EPSILON, 200 * n + 1000)
        .ok_or(FdiError::NoConvergence("complex Schur decomposition"))?;
    let (u, mut t) = schur.unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    for i in 0..n {
        let l = t[(i, i)];
        let ok = match kind {
            Kind::Continuous => l.re < 0.0,
            Kind::Discrete => l.norm() < 1.0,
        };
        if !ok {
            return Err(FdiError::Unstable);
        }
    }
    let g = u.adjoint() * dense::to_complex(&qt) * &u;
    let mut y = CMat::zeros(n, n);
    for j in (0..n).rev() {
        let mut acc = nalgebra::DVector::<C64>::zeros(n);
        for k in j + 1..n {
            acc += y.column(k) * t[(j, k)].conj();
        }
        let tjj = t[(j, j)].conj();
        let (m, rhs) = match kind {
            Kind::Continuous => {
                let mut m = t.clone();
                for i in 0..n {
                    m[(i, i)] += tjj;
                }
                (m, -g.column(j) - acc)
            }
            Kind::Discrete => {
                let mut m = &t * tjj;
                for i in 0..n {
                    m[(i, i)] -= C64::new(1.0, 0.0);
                }
                (m, -g.column(j) - &t * acc)
            }
        };
        let col = back_substitute(&m, &rhs);
        y.set_column(j, &col);
    }
    let x = (&u * y * u.adjoint()).map(|z| z.re);
    Ok(dense::symmetrize(&x))
}

fn back_substitute(m: &CMat, b: &nalgebra::DVector<C64>) -> nalgebra::DVector<C64> {
    let n = m.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= m[(i, k)] * x[k];
        }
        x[i] = s / m[(i, i)];
    }
    x
}
