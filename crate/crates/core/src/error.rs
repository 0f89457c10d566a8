use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("forcing was derived for mu = {snapshot_mu}, a = {snapshot_a} but evaluated with mu = {mu}, a = {a}")]
    ForcingMismatch {
        snapshot_mu: f64,
        snapshot_a: f64,
        mu: f64,
        a: f64,
    },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepBudgetExceeded { max_steps: usize, t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("singular Newton matrix M - I (|det| = {det:e}) at ({phi0}, {p0})")]
    SingularJacobian { det: f64, phi0: f64, p0: f64 },

    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Newton iterate ({phi0}, {p0}) left the search box")]
    LeftDomain { phi0: f64, p0: f64 },

    #[error("periodic solution through ({phi0}, {p0}) leaves the non-falling range")]
    FallingOrbit { phi0: f64, p0: f64 },

    #[error("invalid bracket [{a_lo}, {a_hi}]: {reason}")]
    InvalidBracket { a_lo: f64, a_hi: f64, reason: String },

    #[error("orbit lost while continuing to a = {a}")]
    LostOrbit { a: f64 },

    #[error("continuation broke down at A = {amplitude}")]
    ContinuationBreakdown { amplitude: f64 },
}

impl Error {
    /// Short machine-readable tag, used in JSON diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::ForcingMismatch { .. } => "forcing_mismatch",
            Error::StepBudgetExceeded { .. } => "step_budget_exceeded",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::NonFiniteState { .. } => "non_finite_state",
            Error::SingularJacobian { .. } => "singular_jacobian",
            Error::NoConvergence { .. } => "no_convergence",
            Error::LeftDomain { .. } => "left_domain",
            Error::FallingOrbit { .. } => "falling_orbit",
            Error::InvalidBracket { .. } => "invalid_bracket",
            Error::LostOrbit { .. } => "lost_orbit",
            Error::ContinuationBreakdown { .. } => "continuation_breakdown",
        }
    }

    /// True for failures of the time integrator itself.
    pub fn is_integration_failure(&self) -> bool {
        matches!(
            self,
            Error::StepBudgetExceeded { .. } | Error::StepUnderflow { .. } | Error::NonFiniteState { .. }
        )
    }
}
