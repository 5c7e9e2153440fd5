use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, Error)]
pub enum FpError {
    #[error("beta = {beta} is not admissible: {reason}")]
    InvalidBeta { beta: f64, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge for {what} (error estimate {estimate:.3e})")]
    Quadrature { what: String, estimate: f64 },

    #[error("step size underflow at x = {at}")]
    StepUnderflow { at: f64 },

    #[error("too many integration steps (limit {limit}) before reaching x = {to}")]
    TooManySteps { limit: usize, to: f64 },

    #[error("Frobenius recurrence is resonant at order {k} for gamma = {gamma}")]
    Resonance { k: usize, gamma: f64 },

    #[error("Frobenius series truncation term {term:.3e} exceeds its bound")]
    Truncation { term: f64 },

    #[error("solution vanishes or changes sign near v = {at}")]
    Vanishing { at: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("root search failed after {iterations} iterations (|B| = {residual:.3e})")]
    RootNotFound { iterations: usize, residual: f64 },

    #[error("root |lambda| = {modulus:.3e} left the admissible disc of radius {bound}")]
    RootEscaped { modulus: f64, bound: f64 },

    #[error("inverse iteration stagnated after {iterations} iterations")]
    Stagnation { iterations: usize },

    #[error("eigenvalue {first:.3e} is not separated from the next one ({second:.3e})")]
    Cluster { first: f64, second: f64 },

    #[error("source term decays like |v|^-{estimated:.2}, at least |v|^-{required:.2} is needed")]
    Decay { estimated: f64, required: f64 },

    #[error("fit rejected: {0}")]
    Fit(String),
}

impl FpError {
    /// True when the error comes from rejected input rather than a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(self, FpError::InvalidBeta { .. } | FpError::InvalidArgument(_))
    }
}

pub type Result<T> = std::result::Result<T, FpError>;
