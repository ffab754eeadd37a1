use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A spec or config field failed validation.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("pieces disagree at pin {pin} (index {index}): discrepancy {discrepancy:e}")]
    PinMismatch {
        index: usize,
        pin: f64,
        discrepancy: f64,
    },

    #[error("piece {piece} is not convex: second difference {second_difference:e} at p = {p}")]
    ConvexityViolation {
        piece: usize,
        p: f64,
        second_difference: f64,
    },

    #[error("hamiltonian is not pinned at index {0}")]
    NotPinned(usize),

    #[error("unknown medium reference `{0}`")]
    UnknownMedium(String),

    #[error("time step underflow: dt = {dt:e} at t = {t}")]
    CflFailure { dt: f64, t: f64 },

    #[error("boundary influence reached the evaluation region (margin {margin:.4}); enlarge the domain")]
    BoundaryInfluence { margin: f64 },

    #[error("domain check failed: doubling L moved u(t_final, 0) by {change:e} (limit {limit:e})")]
    DomainCheck { change: f64, limit: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("no bracket for the minimization: {0}")]
    Bracket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}
