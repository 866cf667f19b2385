use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("growth timescale undefined: component atom number {index} is zero")]
    ZeroPopulation { index: usize },

    #[error("detuning {detuning:e} rad/s sits on a pole of the two-photon Rabi frequency")]
    Pole { detuning: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    QuadratureNonConvergence { estimate: f64, error: f64 },

    #[error("integrator failed at t = {t:e} s: {reason}")]
    IntegratorFailure { t: f64, reason: String },

    #[error(
        "population {population:e} on the ladder edge |n| = {n_max} exceeds the cutoff guard at t = {t:e} s"
    )]
    CutoffOverflow {
        t: f64,
        population: f64,
        n_max: usize,
    },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("least squares did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("Jacobian is rank deficient; parameters are not identifiable from the data")]
    SingularJacobian,

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("data line {line}: {message}")]
    Data { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be non-negative and finite, got {value}"),
        })
    }
}
