use thiserror::Error;

/// Errors raised by every kernel in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the domain: {0}")]
    DomainViolation(String),
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("map is not adapted to the pair: {0}")]
    NotAdapted(String),
    #[error("function does not vanish on the submanifold (worst |f| = {0:e})")]
    NotVanishing(f64),
    #[error("point outside chart: {0}")]
    OutsideChart(String),
    #[error("point lies on the blow-up center")]
    CenterPoint,
    #[error("point not in the domain of the induced blow-up map: {0}")]
    OutsideBlupF(String),
    #[error("normal derivative has a kernel: {0}")]
    NotImmersive(String),
    #[error("not a polynomial: {0}")]
    NotPolynomial(String),
    #[error("curve polynomial is identically zero")]
    DegenerateCurve,
    #[error("sampling failed: {0}")]
    SamplingFailure(String),
    #[error("flow would cross the t = 0 slice (s = {s}, s + tau = {end})")]
    SliceCrossing { s: f64, end: f64 },
    #[error("extrapolation did not converge (successive difference {0:e})")]
    NonConvergence(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("internal invariant violated: {0}")]
    InvariantBreach(String),
}

pub type Result<T> = std::result::Result<T, Error>;
