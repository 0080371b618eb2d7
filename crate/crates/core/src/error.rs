use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain length {0}: must be even and >= 2")]
    InvalidN(usize),
    #[error("{what} = {value} outside {range}")]
    OutOfRange { what: &'static str, value: f64, range: &'static str },
    #[error("degenerate Bogoliubov normalization at g = {g}, ka = {ka}")]
    DegenerateNormalization { g: f64, ka: f64 },
    #[error("integration step too large: endpoint changed by {change:e} under halving")]
    StepTooLarge { change: f64 },
    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence { what: String, residual: f64 },
    #[error("marked state has {got} bits, expected {expected}")]
    MissingMarkedState { expected: usize, got: usize },
    #[error("Hamiltonian does not commute with global bit flip")]
    NotParitySymmetric,
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("fit failed: {0}")]
    FitFailure(String),
    #[error("spectral function diverges at omega = 0 (eta = {eta}, finite temperature)")]
    DivergentAtZero { eta: f64 },
    #[error("invalid samples: {0}")]
    InvalidSamples(String),
    #[error("no real stationary point for omega = {omega} (sub-gap)")]
    ComplexSaddle { omega: f64 },
    #[error("stationary points coalesce for omega = {omega}")]
    SaddleCollision { omega: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
