//! Crate-wide error type with stable machine-readable codes.

use thiserror::Error;

/// How a failure should be classified by front-ends (maps to exit codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// A structural invariant of the inputs is violated.
    Validation,
    /// The computation is undefined or unstable at these inputs.
    Numerical,
    /// The request itself is malformed (missing or unknown inputs).
    Usage,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{field} must be strictly positive and finite")]
    NonPositive { field: &'static str },
    #[error("capacity_n must be an integer >= 1")]
    CapacityTooSmall,
    #[error("mu1 must be strictly less than mu2")]
    Mu1NotLessThanMu2,
    #[error("k1 must be strictly less than k2")]
    K1NotLessThanK2,
    #[error("{field} must be a positive integer")]
    KNotInteger { field: &'static str },
    #[error("reward_r must exceed price_p")]
    RewardNotAboveFare,
    #[error("degenerate intensity: {which} = 1")]
    DegenerateIntensity { which: &'static str },
    #[error("unstable: passenger-side intensity {rho1} >= 1")]
    Unstable { rho1: f64 },
    #[error("state {state} is outside the state space")]
    StateOutOfRange { state: i64 },
    #[error("joining probability must lie in [0, 1], got {q}")]
    InvalidJoinProb { q: f64 },
    #[error("threshold must be an integer >= 1, got {n_s}")]
    InvalidThreshold { n_s: i64 },
    #[error("unknown parameter `{key}`")]
    UnknownParameter { key: String },
    #[error("missing parameter `{field}`")]
    MissingParameter { field: &'static str },
    #[error("config line {line}: {reason}")]
    ConfigParse { line: usize, reason: String },
    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),
    #[error("figure requires `--{0}` (no default)")]
    MissingOverride(&'static str),
    #[error("invalid sweep range: {0}")]
    InvalidSweep(String),
    #[error("simulation config: {0}")]
    BadSimConfig(&'static str),
    #[error("computation overflowed ({what}); inputs outside the representable range")]
    Overflow { what: &'static str },
}

impl Error {
    /// Stable identifier for programmatic matching.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonPositive { .. } => "non_positive",
            Error::CapacityTooSmall => "capacity_too_small",
            Error::Mu1NotLessThanMu2 => "mu1_not_less_than_mu2",
            Error::K1NotLessThanK2 => "k1_not_less_than_k2",
            Error::KNotInteger { .. } => "k_not_integer",
            Error::RewardNotAboveFare => "reward_not_above_fare",
            Error::DegenerateIntensity { .. } => "degenerate_intensity",
            Error::Unstable { .. } => "unstable",
            Error::StateOutOfRange { .. } => "state_out_of_range",
            Error::InvalidJoinProb { .. } => "invalid_join_prob",
            Error::InvalidThreshold { .. } => "invalid_threshold",
            Error::UnknownParameter { .. } => "unknown_parameter",
            Error::MissingParameter { .. } => "missing_parameter",
            Error::ConfigParse { .. } => "config_parse",
            Error::UnknownFigure(_) => "unknown_figure",
            Error::MissingOverride(_) => "missing_override",
            Error::InvalidSweep(_) => "invalid_sweep",
            Error::BadSimConfig(_) => "bad_sim_config",
            Error::Overflow { .. } => "overflow",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonPositive { .. }
            | Error::CapacityTooSmall
            | Error::Mu1NotLessThanMu2
            | Error::K1NotLessThanK2
            | Error::KNotInteger { .. }
            | Error::RewardNotAboveFare => ErrorClass::Validation,
            Error::DegenerateIntensity { .. }
            | Error::Unstable { .. }
            | Error::StateOutOfRange { .. }
            | Error::Overflow { .. } => ErrorClass::Numerical,
            Error::InvalidJoinProb { .. }
            | Error::InvalidThreshold { .. }
            | Error::UnknownParameter { .. }
            | Error::MissingParameter { .. }
            | Error::ConfigParse { .. }
            | Error::UnknownFigure(_)
            | Error::MissingOverride(_)
            | Error::InvalidSweep(_)
            | Error::BadSimConfig(_) => ErrorClass::Usage,
        }
    }
}
