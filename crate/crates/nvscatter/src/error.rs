use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("solver did not converge at {param}: {iterations} iterations, residual {residual:e}")]
    NonConvergence {
        param: Complex64,
        iterations: usize,
        residual: f64,
    },
    #[error("|t(k)/conj(k)| = {value:e} at k = {k} exceeds the small-k bound; data is not of conductivity type")]
    SingularSmallK { k: Complex64, value: f64 },
    #[error("phase under-resolved at t = {t}: h_k*|grad phase| = {ratio:.3} > pi/4, need n_k >= {required_nk}")]
    PhaseUnderresolved { t: f64, ratio: f64, required_nk: usize },
    #[error("conductivity not positive: min gamma = {min:e}")]
    NotPositive { min: f64 },
    #[error("conductivity differs from 1 inside the boundary margin by {defect:e}")]
    NotUnitAtBoundary { defect: f64 },
    #[error("stepper unstable at t = {t}: L2 norm grew by {growth:.2}x")]
    Unstable { t: f64, growth: f64 },
    #[error("time step {dt:e} violates dt*max|k|^3 <= 1 (max|k| = {kmax:.3})")]
    StepTooLarge { dt: f64, kmax: f64 },
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
