use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {field} at row {row}")]
    NonFiniteValue { field: String, row: usize },

    #[error("unknown action {action} (action set has {m} actions)")]
    UnknownAction { action: i64, m: usize },

    #[error("action {action} is never observed")]
    EmptyActionCell { action: usize },

    #[error("action set must have at least 2 actions, got {0}")]
    InvalidActionSet(usize),

    #[error("action {action} has {size} observations, at least {required} required")]
    InsufficientCellSize {
        action: usize,
        size: usize,
        required: usize,
    },

    #[error("normal equations are singular for action {action}")]
    SingularDesign { action: usize },

    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("logistic fit did not converge (gradient norm {grad_norm:.3e} after {iterations} iterations)")]
    NonConvergence { grad_norm: f64, iterations: usize },

    #[error("action {action} at unit {unit} is not binary")]
    NonBinaryAction { unit: usize, action: usize },

    #[error("degenerate distribution: {distinct} distinct values for {bins} bins")]
    DegenerateDistribution { distinct: usize, bins: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
