use thiserror::Error;

/// Errors raised by the analysis and synthesis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdiError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("singular descriptor matrix E is not supported")]
    SingularE,
    #[error("sample time mismatch")]
    SampleTime,
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("system is unstable")]
    Unstable,
    #[error("pole on the stability boundary")]
    BoundaryPole,
    #[error("frequency {0} coincides with a pole")]
    PoleOnGrid(f64),
    #[error("nonzero feedthrough in continuous-time H2 norm")]
    NonzeroFeedthrough,
    #[error("no convergence in {0}")]
    NoConvergence(&'static str),
    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(&'static str),
    #[error("eigenvalues too close to swap in Schur reordering")]
    SwapFailed,
    #[error("rank decision failed: {0}")]
    Rank(String),
    #[error("zeros at infinity are not supported in continuous-time factorization")]
    InfiniteZeros,
    #[error("uncontrollable mode cannot be moved: {0}")]
    Uncontrollable(String),
    #[error("empty left nullspace: the disturbances cannot be decoupled")]
    EmptyNullspace,
    #[error("problem not solvable: fault columns {0:?} are not detectable")]
    NotDetectable(Vec<usize>),
    #[error("problem not solvable: {0}")]
    NotSolvable(String),
    #[error("models {0} and {1} are not distinguishable")]
    NotDistinguishable(usize, usize),
}

impl FdiError {
    /// True for failures caused by the problem data rather than by the caller.
    pub fn is_solvability(&self) -> bool {
        matches!(
            self,
            FdiError::EmptyNullspace
                | FdiError::NotDetectable(_)
                | FdiError::NotSolvable(_)
                | FdiError::NotDistinguishable(..)
                | FdiError::Unstable
                | FdiError::NoStabilizingSolution(_)
                | FdiError::InfiniteZeros
                | FdiError::Uncontrollable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FdiError>;
