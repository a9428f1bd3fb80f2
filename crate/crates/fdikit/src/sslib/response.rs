//! Frequency and time responses.

use super::LtiModel;
use crate::numkern::dense;
use crate::{CMat, FdiError, Mat, Result, Vector, C64};

/// Sampled signal: `u` has one row per time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub t: Vec<f64>,
    pub u: Mat,
}

impl Signal {
    pub fn new(t: Vec<f64>, u: Mat) -> Result<Self> {
        if u.nrows() != t.len() {
            return Err(FdiError::Dimension(format!("{} samples for {} time points", u.nrows(), t.len())));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FdiError::InvalidOption("time grid must be strictly increasing".into()));
        }
        Ok(Signal { t, u })
    }

    /// Uniform grid `0, h, 2h, ...` up to `tf`.
    pub fn grid(tf: f64, h: f64) -> Vec<f64> {
        let n = (tf / h).round() as usize;
        (0..=n).map(|k| k as f64 * h).collect()
    }
}

/// Complex frequency point for a real frequency: `iω` or `exp(iω ts)`.
pub fn lambda_of(ts: f64, omega: f64) -> C64 {
    if ts > 0.0 {
        C64::from_polar(1.0, omega * ts)
    } else {
        C64::new(0.0, omega)
    }
}

/// `C (λE - A)^-1 B + D` at a complex point.
pub fn freqresp(sys: &LtiModel, lambda: C64) -> Result<CMat> {
    let n = sys.order();
    let d = dense::to_complex(&sys.d);
    if n == 0 {
        return Ok(d);
    }
    let e = match &sys.e {
        Some(e) => dense::to_complex(e),
        None => CMat::identity(n, n),
    };
    let pencil = e * lambda - dense::to_complex(&sys.a);
    let x = dense::csolve(&pencil, &dense::to_complex(&sys.b)).ok_or(FdiError::PoleOnGrid(lambda.im))?;
    Ok(dense::to_complex(&sys.c) * x + d)
}

/// Responses at the real frequencies `omegas`.
pub fn freqresp_grid(sys: &LtiModel, omegas: &[f64]) -> Result<Vec<CMat>> {
    omegas
        .iter()
        .map(|&w| freqresp(sys, lambda_of(sys.ts, w)).map_err(|_| FdiError::PoleOnGrid(w)))
        .collect()
}

/// Simulates the model for the input samples `u` from initial state `x0`.
///
/// Continuous models are discretized exactly with a zero-order hold on the (uniform) grid.
pub fn time_response(sys: &LtiModel, u: &Signal, x0: &Vector) -> Result<Signal> {
    let sys = sys.to_standard()?;
    let (n, m, p) = (sys.order(), sys.n_in(), sys.n_out());
    if u.u.ncols() != m {
        return Err(FdiError::Dimension(format!("signal has {} channels, model has {m} inputs", u.u.ncols())));
    }
    if x0.len() != n {
        return Err(FdiError::Dimension("initial state length differs from model order".into()));
    }
    let nt = u.t.len();
    let (phi, gam) = if sys.is_discrete() || n == 0 {
        (sys.a.clone(), sys.b.clone())
    } else {
        if nt < 2 {
            (Mat::identity(n, n), Mat::zeros(n, m))
        } else {
            let h = u.t[1] - u.t[0];
            let uniform = u.t.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
            if !uniform {
                return Err(FdiError::InvalidOption("continuous simulation needs a uniform time grid".into()));
            }
            zoh(&sys.a, &sys.b, h)
        }
    };
    let mut y = Mat::zeros(nt, p);
    let mut x = x0.clone();
    for k in 0..nt {
        let uk = u.u.row(k).transpose();
        let yk = &sys.c * &x + &sys.d * &uk;
        y.set_row(k, &yk.transpose());
        x = &phi * &x + &gam * &uk;
    }
    Ok(Signal { t: u.t.clone(), u: y })
}

/// Zero-order-hold discretization via the exponential of the augmented matrix.
pub fn zoh(a: &Mat, b: &Mat, h: f64) -> (Mat, Mat) {
    let (n, m) = (a.nrows(), b.ncols());
    let mut aug = Mat::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * h));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * h));
    let ex = aug.exp();
    (ex.view((0, 0), (n, n)).into_owned(), ex.view((0, n), (n, m)).into_owned())
}

/// Unit step responses, one signal per input channel, on `0..=tf` with step `h`.
pub fn step(sys: &LtiModel, tf: f64, h: f64) -> Result<Vec<Signal>> {
    let h = if sys.is_discrete() { sys.ts } else { h };
    let t = Signal::grid(tf, h);
    let m = sys.n_in();
    let x0 = Vector::zeros(sys.order());
    (0..m)
        .map(|j| {
            let mut u = Mat::zeros(t.len(), m);
            u.column_mut(j).fill(1.0);
            time_response(sys, &Signal { t: t.clone(), u }, &x0)
        })
        .collect()
}
