use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,

    #[error("grid too small: need at least {min} cells per side, got {got}")]
    GridTooSmall { min: usize, got: usize },

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("region contains no grid points")]
    EmptyRegion,

    #[error("region exceeds the grid footprint")]
    OutsideFootprint,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("indefinite system: inf V = {inf_v:.6e} <= -mu1 = {neg_mu1:.6e}")]
    Indefinite { inf_v: f64, neg_mu1: f64 },

    #[error("no convergence after {iterations} iterations (last relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("krylov stagnation after {} restarts (residual history {history:?})", history.len())]
    Stagnation { history: Vec<f64> },

    #[error("hypothesis breach: {0}")]
    HypothesisBreach(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("inadmissible delta {delta}: nearest admissible values are {below} and {above}")]
    InadmissibleDelta { delta: f64, below: f64, above: f64 },

    #[error("contraction not certified: C1*delta*ln(1/delta)*M = {value:.4} > 1/3")]
    ContractionNotCertified { value: f64 },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
