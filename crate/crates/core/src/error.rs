use thiserror::Error;

use crate::expr::ExprError;

/// Errors raised across the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("assumption violated: {clause}: {detail}")]
    AssumptionViolation { clause: String, detail: String },

    #[error("window too small: x_max = {x_max} but theta_lower(0) = {theta_lower} (margin {margin})")]
    WindowTooSmall { x_max: f64, theta_lower: f64, margin: f64 },

    #[error("Newton iteration diverged at time index {time_index}: residual {residual:e}")]
    NewtonDivergence { time_index: usize, residual: f64 },

    #[error("projection fixed point stalled at time index {time_index} after {sweeps} sweeps (change {change:e})")]
    FixedPointStall { time_index: usize, sweeps: usize, change: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("boundary below domain at step {step}: f = {value}")]
    BoundaryBelowDomain { step: usize, value: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
