use thiserror::Error;

/// Errors produced by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("layer {layer} is degenerate: {reason}")]
    DegenerateLayer { layer: usize, reason: String },

    /// The interference-limited model has no noise floor, so SIR is undefined
    /// without at least one interferer.
    #[error("interference is zero; resample the realization")]
    ZeroInterference,

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    /// The verbatim closed-form design produced a non-positive power base.
    #[error("closed-form power design is infeasible: inner sum = {inner_sum}")]
    InfeasibleClosedForm { inner_sum: f64 },

    #[error("infeasible design problem: {reason}")]
    Infeasible {
        reason: String,
        certificate: Option<InfeasibilityCertificate>,
    },

    #[error("simulation window radius {given} m is below the required {required} m")]
    WindowTooSmall { given: f64, required: f64 },

    #[error("could not bracket the maximum contention intensity below {cap}")]
    BracketNotFound { cap: f64 },
}

/// Evidence that a constraint set is empty.
#[derive(Debug, Clone, PartialEq)]
pub enum InfeasibilityCertificate {
    /// Summing `u_i >= rho0 * eta_i * sum(u)` over all `i` gives
    /// `sum(u) >= rho0 * sum(u)`, impossible for `sum(u) > 0` and `rho0 > 1`.
    SummedConstraints { rho0: f64, eta_sum: f64 },
    /// No positive power vector can satisfy `P_i >= rho0 * sum_j w_j P_j`
    /// for every `i` when `rho0 * sum_j w_j > 1`.
    WeightedSumExceedsOne { rho0: f64, weight_sum: f64 },
}

impl InfeasibilityCertificate {
    /// Re-checks the certificate arithmetic; `true` means the set is empty.
    pub fn verify(&self) -> bool {
        match *self {
            InfeasibilityCertificate::SummedConstraints { rho0, eta_sum } => {
                // sum(u) >= rho0 * eta_sum * sum(u) with sum(u) > 0
                rho0 * eta_sum > 1.0
            }
            InfeasibilityCertificate::WeightedSumExceedsOne { rho0, weight_sum } => {
                rho0 * weight_sum > 1.0
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {value}")))
    }
}

pub(crate) fn ensure_path_loss(alpha: f64) -> Result<()> {
    ensure_finite("alpha", alpha)?;
    if alpha > 2.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "path-loss exponent must exceed 2 (mean interference diverges), got {alpha}"
        )))
    }
}

pub(crate) fn ensure_probability_open(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {value}")))
    }
}
