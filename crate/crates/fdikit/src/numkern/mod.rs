//! Dense numerical kernels: rank decisions, ordered Schur forms, Lyapunov and Riccati solvers.

pub mod dense;
mod lyap;
mod riccati;
pub(crate) mod schur;

pub use lyap::solve_lyapunov;
pub use riccati::{riccati_residual, solve_care_ext, solve_riccati, RiccatiSolution};
pub use schur::{ordered_schur, real_schur, spectral_split, OrderedSchur, Region, SpectralSplit};

/// Continuous or discrete time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Continuous,
    Discrete,
}

impl Kind {
    pub fn from_ts(ts: f64) -> Kind {
        if ts > 0.0 {
            Kind::Discrete
        } else {
            Kind::Continuous
        }
    }
}
