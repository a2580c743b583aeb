use thiserror::Error;

/// Errors raised by the kinetic cascade core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("vector is not unit length (|n| = {norm})")]
    NonUnitVector { norm: f64 },

    #[error("cell {cell} carries zero mass")]
    EmptyCell { cell: usize },

    #[error("initial datum is not mean free (integral = {mean:e})")]
    NotMeanFree { mean: f64 },

    #[error("right-hand side has a kernel component of size {size:e}")]
    KernelComponent { size: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("time step {dt:e} exceeds the stability bound {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("rejection sampling exhausted {attempts} attempts: packing too dense")]
    PackingTooDense { attempts: usize },

    #[error("overlap drift {overlap:e} between particles {i} and {j} at t = {time}")]
    OverlapDrift { i: usize, j: usize, overlap: f64, time: f64 },

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("combinatorial guard exceeded: {0}")]
    GuardViolation(String),

    #[error("input is not symmetric (max deviation {deviation:e})")]
    Asymmetric { deviation: f64 },

    #[error("angular mode {mode} is not assembled in this operator (max {max_mode})")]
    ModeNotAssembled { mode: usize, max_mode: usize },

    #[error("boundary data mismatch: {0}")]
    BoundaryMismatch(String),

    #[error("no admissible samples")]
    NoAdmissibleSamples,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, got })
    }
}
