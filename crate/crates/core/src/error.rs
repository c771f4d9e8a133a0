use thiserror::Error;

/// Errors surfaced by kernel construction and the operator calculus.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kernel entry at ({x},{y}) is negative or non-finite: {value}")]
    InvalidEntry { x: usize, y: usize, value: f64 },

    #[error("zero row at state {state}: m_{{0,1}}({state}) = 0 breaks positivity of the mass function")]
    ZeroRow { state: usize },

    #[error("mass annihilated at step {step}: the pushed measure vanished")]
    MassAnnihilated { step: usize },

    #[error("scripted environment exhausted after {len} kernels")]
    EndOfScript { len: usize },

    #[error("degenerate product: |||M_{{1,n}}||| = 0 at n = {n}")]
    DegenerateProduct { n: usize },

    #[error("no coupling observed: all gamma coefficients were 0 up to n = {n_max}")]
    NoCoupling { n_max: usize },

    #[error("stationary sampling requires an i.i.d. environment; time reversal is exact only there")]
    NonIidSampling,

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("dense storage is limited to p <= {max}, got p = {p}; use Leslie-sparse storage")]
    DenseTooLarge { p: usize, max: usize },

    #[error("index out of range: {0}")]
    IndexRange(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
