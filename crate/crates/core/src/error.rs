use thiserror::Error;

/// Failure modes shared by every stage of the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("upstream state is not supersonic (M0^2 = {m0_sq})")]
    NotSupersonic { m0_sq: f64 },
    #[error("no subsonic root of the jump function in ({lo}, {hi})")]
    JumpRootNotFound { lo: f64, hi: f64 },
    #[error("downstream state violates the entropy condition (p1 = {p1} <= p0 = {p0})")]
    EntropyViolation { p0: f64, p1: f64 },
    #[error("jump condition {jump} does not apply to a {law} gas")]
    LawMismatch { jump: &'static str, law: &'static str },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("alpha = {alpha} lies outside the admissible domain ({lo}, {hi})")]
    AlphaOutOfDomain { alpha: f64, lo: f64, hi: f64 },
    #[error("weight A - 2p vanishes on the pressure range (A - 2p1 = {margin})")]
    DegenerateWeight { margin: f64 },
    #[error("reconstructed pressure is non-positive (p = {p})")]
    NonphysicalPressure { p: f64 },
    #[error("adaptive quadrature did not converge; worst subinterval [{a}, {b}] with error {error:e}")]
    QuadratureFailure { a: f64, b: f64, error: f64 },
    #[error("no solution of H(alpha) = 1 in the admissible domain")]
    NoRootInDomain,
    #[error("bracket expansion exhausted at |alpha| = {limit:e} without a sign change")]
    BracketExpansionExhausted { limit: f64 },
    #[error("reconstructed samples are not monotone at x = {x}")]
    NonMonotoneSamples { x: f64 },
    #[error("shooting iteration diverged: {0}")]
    ShootingDiverged(String),
    #[error("integrator step size underflow at x = {x}")]
    StepSizeUnderflow { x: f64 },
    #[error("X(w) is too close to 1 for the ratio X/(1-X)")]
    RatioOverflow,
    #[error("limit shock location {x} lies outside (0, 1]")]
    XOutOfUnitInterval { x: f64 },
}

impl Error {
    /// Stable identifier used on stderr by the command-line tools.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotSupersonic { .. } => "NotSupersonic",
            Error::JumpRootNotFound { .. } => "JumpRootNotFound",
            Error::EntropyViolation { .. } => "EntropyViolation",
            Error::LawMismatch { .. } => "LawMismatch",
            Error::InvalidInput(_) => "InvalidInput",
            Error::AlphaOutOfDomain { .. } => "AlphaOutOfDomain",
            Error::DegenerateWeight { .. } => "DegenerateWeight",
            Error::NonphysicalPressure { .. } => "NonphysicalPressure",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::NoRootInDomain => "NoRootInDomain",
            Error::BracketExpansionExhausted { .. } => "BracketExpansionExhausted",
            Error::NonMonotoneSamples { .. } => "NonMonotoneSamples",
            Error::ShootingDiverged(_) => "ShootingDiverged",
            Error::StepSizeUnderflow { .. } => "StepSizeUnderflow",
            Error::RatioOverflow => "RatioOverflow",
            Error::XOutOfUnitInterval { .. } => "XOutOfUnitInterval",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
