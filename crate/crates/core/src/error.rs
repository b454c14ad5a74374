use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("inverse transform has imaginary residue {residue:e} relative to scale (limit {limit:e})")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("invalid cutoff: {0}")]
    InvalidCutoff(String),

    #[error("cutoff transition under-resolved: {0}")]
    UnderResolved(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instability at t = {time}: sup|u| = {sup_norm:e} exceeds {limit:e}")]
    Instability { time: f64, sup_norm: f64, limit: f64 },

    #[error("adaptive integration step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("fit needs at least {needed} points in window, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("nonpositive value {value:e} at t = {time} in fit window")]
    NonPositive { time: f64, value: f64 },

    #[error("missing series: {0}")]
    MissingSeries(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
