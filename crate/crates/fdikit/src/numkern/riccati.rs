//! Algebraic Riccati equations.
//!
//! Continuous: `A'X + XA - (XB + S) R^-1 (B'X + S') + Q = 0`, via the ordered Schur
//! form of the Hamiltonian matrix.
//! Discrete: `A'XA - X - (A'XB + S)(R + B'XB)^-1 (B'XA + S') + Q = 0`, via the
//! structure-preserving doubling iteration.

use super::dense;
use super::schur::{ordered_schur, quasi_eigenvalues};
use super::Kind;
use crate::{FdiError, Mat, Result, C64};

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Stabilizing solution, symmetrized.
    pub x: Mat,
    /// Gain `K` such that `A - B K` is stable.
    pub gain: Mat,
    /// Eigenvalues of `A - B K`.
    pub closed_loop: Vec<C64>,
}

fn check_dims(a: &Mat, b: &Mat, q: &Mat, r: &Mat, s: Option<&Mat>) -> Result<()> {
    let n = a.nrows();
    let m = b.ncols();
    let ok = a.ncols() == n
        && b.nrows() == n
        && q.shape() == (n, n)
        && r.shape() == (m, m)
        && s.map_or(true, |s| s.shape() == (n, m));
    if ok {
        Ok(())
    } else {
        Err(FdiError::Dimension("Riccati operands are not conformant".into()))
    }
}

struct Reduced {
    abar: Mat,
    qbar: Mat,
    g: Mat,
    rinv: Mat,
}

fn reduce(a: &Mat, b: &Mat, q: &Mat, r: &Mat, s: Option<&Mat>) -> Result<Reduced> {
    let rinv = dense::inverse(r)
        .map_err(|_| FdiError::NoStabilizingSolution("weighting matrix R is singular"))?;
    let (abar, qbar) = match s {
        Some(s) => (a - b * &rinv * s.transpose(), q - s * &rinv * s.transpose()),
        None => (a.clone(), q.clone()),
    };
    let g = b * &rinv * b.transpose();
    Ok(Reduced { abar, qbar: dense::symmetrize(&qbar), g: dense::symmetrize(&g), rinv })
}

/// Stabilizing solution of the continuous or discrete Riccati equation.
pub fn solve_riccati(
    a: &Mat,
    b: &Mat,
    q: &Mat,
    r: &Mat,
    s: Option<&Mat>,
    kind: Kind,
) -> Result<RiccatiSolution> {
    match kind {
        Kind::Continuous => solve_care_ext(a, b, q, r, s, false).map(|(sol, _)| sol),
        Kind::Discrete => solve_dare(a, b, q, r, s),
    }
}

/// Continuous Riccati solver that optionally tolerates Hamiltonian eigenvalues on the
/// imaginary axis. The flag in the result reports whether such eigenvalues were found.
pub fn solve_care_ext(
    a: &Mat,
    b: &Mat,
    q: &Mat,
    r: &Mat,
    s: Option<&Mat>,
    allow_boundary: bool,
) -> Result<(RiccatiSolution, bool)> {
    check_dims(a, b, q, r, s)?;
    let n = a.nrows();
    if n == 0 {
        let sol = RiccatiSolution { x: Mat::zeros(0, 0), gain: Mat::zeros(b.ncols(), 0), closed_loop: vec![] };
        return Ok((sol, false));
    }
    let red = reduce(a, b, q, r, s)?;
    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&red.abar);
    h.view_mut((0, n), (n, n)).copy_from(&(-&red.g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-&red.qbar));
    h.view_mut((n, n), (n, n)).copy_from(&(-red.abar.transpose()));
    let hn = h.norm().max(1e-300);
    let btol = 1e-8 * hn;
    let os = ordered_schur(&h, &|z: C64| z.re < 0.0)?;
    let eig = quasi_eigenvalues(&os.t);
    let boundary = eig.iter().any(|z| z.re.abs() <= btol);
    if boundary && !allow_boundary {
        return Err(FdiError::NoStabilizingSolution("Hamiltonian eigenvalues on the imaginary axis"));
    }
    if os.k != n {
        return Err(FdiError::NoStabilizingSolution("stable invariant subspace has wrong dimension"));
    }
    let u11 = os.z.view((0, 0), (n, n)).into_owned();
    let u21 = os.z.view((n, 0), (n, n)).into_owned();
    let x = dense::solve(&u11.transpose(), &u21.transpose())
        .map_err(|_| FdiError::NoStabilizingSolution("U11 is singular"))?
        .transpose();
    let x = dense::symmetrize(&x);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(FdiError::NoStabilizingSolution("non-finite solution"));
    }
    let mut bx = b.transpose() * &x;
    if let Some(s) = s {
        bx += s.transpose();
    }
    let gain = &red.rinv * bx;
    let cl = a - b * &gain;
    let closed_loop = dense::eigenvalues(&cl)?;
    if !boundary && closed_loop.iter().any(|z| z.re >= 0.0) {
        return Err(FdiError::NoStabilizingSolution("closed loop is not stable"));
    }
    Ok((RiccatiSolution { x, gain, closed_loop }, boundary))
}

fn solve_dare(a: &Mat, b: &Mat, q: &Mat, r: &Mat, s: Option<&Mat>) -> Result<RiccatiSolution> {
    check_dims(a, b, q, r, s)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(RiccatiSolution { x: Mat::zeros(0, 0), gain: Mat::zeros(b.ncols(), 0), closed_loop: vec![] });
    }
    let red = reduce(a, b, q, r, s)?;
    let id = Mat::identity(n, n);
    let (mut ak, mut gk, mut hk) = (red.abar.clone(), red.g.clone(), red.qbar.clone());
    let mut converged = false;
    for _ in 0..100 {
        let w = &id + &gk * &hk;
        let wi = dense::inverse(&w)
            .map_err(|_| FdiError::NoStabilizingSolution("singular doubling step"))?;
        let wa = &wi * &ak;
        let a1 = &ak * &wa;
        let g1 = dense::symmetrize(&(&gk + &ak * &wi * &gk * ak.transpose()));
        let h1 = dense::symmetrize(&(&hk + ak.transpose() * &hk * &wa));
        let diff = (&h1 - &hk).norm();
        let scale = h1.norm().max(1.0);
        ak = a1;
        gk = g1;
        hk = h1;
        if !hk.iter().all(|v| v.is_finite()) {
            return Err(FdiError::NoStabilizingSolution("doubling iteration diverged"));
        }
        if diff <= 1e-14 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(FdiError::NoConvergence("discrete Riccati doubling iteration"));
    }
    let x = hk;
    let rr = r + b.transpose() * &x * b;
    let mut rhs = b.transpose() * &x * a;
    if let Some(s) = s {
        rhs += s.transpose();
    }
    let gain = dense::solve(&rr, &rhs)
        .map_err(|_| FdiError::NoStabilizingSolution("R + B'XB is singular"))?;
    let cl = a - b * &gain;
    let closed_loop = dense::eigenvalues(&cl)?;
    if closed_loop.iter().any(|z| z.norm() >= 1.0) {
        return Err(FdiError::NoStabilizingSolution("closed loop is not stable"));
    }
    Ok(RiccatiSolution { x, gain, closed_loop })
}

/// Residual of the Riccati equation for a candidate `x`.
pub fn riccati_residual(a: &Mat, b: &Mat, q: &Mat, r: &Mat, s: Option<&Mat>, x: &Mat, kind: Kind) -> f64 {
    let zero = Mat::zeros(a.nrows(), b.ncols());
    let s = s.unwrap_or(&zero);
    match kind {
        Kind::Continuous => {
            let l = x * b + s;
            let k = dense::solve(r, &l.transpose()).unwrap_or_else(|_| Mat::from_element(r.nrows(), a.nrows(), f64::NAN));
            (a.transpose() * x + x * a - l * k + q).norm()
        }
        Kind::Discrete => {
            let l = a.transpose() * x * b + s;
            let rr = r + b.transpose() * x * b;
            let k = dense::solve(&rr, &l.transpose()).unwrap_or_else(|_| Mat::from_element(r.nrows(), a.nrows(), f64::NAN));
            (a.transpose() * x * a - x - l * k + q).norm()
        }
    }
}
