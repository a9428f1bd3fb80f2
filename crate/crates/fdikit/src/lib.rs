//! Fault detection and isolation filter synthesis for linear time-invariant systems.
//!
//! The crate is organised in layers:
//!
//! - [`numkern`]: ordered Schur splits, Lyapunov and Riccati solvers;
//! - [`sslib`]: state-space models, channel groups, composition and responses;
//! - [`sysnorms`]: poles, zeros, gains and system norms;
//! - [`factor`]: nullspace bases, coprime and inner-outer factorizations;
//! - [`fdianalysis`], [`fdisyn`], [`fdiperf`]: fault detection analysis, synthesis and evaluation;
//! - [`mdetect`]: model detection;
//! - [`benchmarks`]: small reference systems used by the tests and the command line.
//!
//! Indices are 0-based throughout.

pub mod benchmarks;
pub mod error;
pub mod factor;
pub mod fdianalysis;
pub mod fdiperf;
pub mod fdisyn;
pub mod mdetect;
pub mod numkern;
pub mod poly;
pub mod rng;
pub mod sslib;
pub mod sysnorms;

pub use error::{FdiError, Result};
pub use sslib::{LtiModel, MultiModel, Signal};

pub type Mat = nalgebra::DMatrix<f64>;
pub type CMat = nalgebra::DMatrix<num_complex::Complex64>;
pub type Vector = nalgebra::DVector<f64>;
pub use num_complex::Complex64 as C64;
