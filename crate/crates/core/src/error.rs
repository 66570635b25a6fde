use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coherence amplitude r = {0} is outside [0, 1]")]
    InvalidCoherence(f64),

    #[error("radial derivative {dr} is not negligible at r = {r}; the radial term is singular")]
    DegenerateRadial { r: f64, dr: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("finite-difference step must be nonzero and finite")]
    ZeroStep,

    #[error("not a probability vector: {0}")]
    NotAProbabilityVector(String),

    #[error("outcome {index} has p = {p:e} but dp = {dp:e}; Fisher information diverges")]
    InformationSingular { index: usize, p: f64, dp: f64 },

    #[error("|2 g tau| = {0} reaches pi/2; the phase branch is ambiguous")]
    BranchOverflow(f64),

    #[error("Hilbert space too large: {requested} exceeds the limit {limit}")]
    DimensionTooLarge { requested: usize, limit: usize },

    #[error("spherical-harmonic index {0} outside [-2, 2]")]
    BadIndex(i32),

    #[error("no closed form available: {0}")]
    NoClosedForm(String),

    #[error("order-1 quadrature needs a radial cutoff")]
    CutoffRequired,

    #[error("finite-volume regime requested without a sample volume")]
    MissingVolume,

    #[error("Monte-Carlo region extent {extent} nm is below 10 d = {minimum} nm")]
    BoxTooSmall { extent: f64, minimum: f64 },

    #[error("strategy infeasible: {0}")]
    StrategyInfeasible(String),

    #[error("spectrum is not integrable: {0}")]
    NonIntegrableSpectrum(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
