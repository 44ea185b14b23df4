use alloc::boxed::Box;
use alloc::string::String;

use crate::mesh::Face;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("grid needs at least 2 interior nodes per axis, got {0}")]
    GridTooSmall(usize),

    #[error("invalid boundary condition on {face:?}: {reason}")]
    Boundary { face: Face, reason: &'static str },

    #[error("dense backend is limited to {cap} unknowns, got {n}")]
    DenseTooLarge { n: usize, cap: usize },

    #[error("Krylov approximation did not converge (error estimate {estimate:e})")]
    KrylovNotConverged { estimate: f64 },

    #[error("non-finite input to a matrix function")]
    NonFinite,

    #[error("quadratic reaction flow blows up at node {node} (denominator {denominator:e})")]
    BlowUp { node: usize, denominator: f64 },

    #[error("time step must be positive")]
    ZeroStep,

    #[error("corrector trace mismatch on {face:?} node {index}: discrepancy {discrepancy:e}")]
    TraceMismatch {
        face: Face,
        index: usize,
        discrepancy: f64,
    },

    #[error("smoother did not converge, relative residual {residual:e}")]
    SmootherNotConverged { residual: f64 },

    #[error("corrector sup-norm {norm:e} exceeds cap {cap:e}")]
    CorrectorTooLarge { norm: f64, cap: f64 },

    #[error("final time / step = {ratio} is not a positive integer")]
    StepCount { ratio: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reference solution became unstable at step {step}")]
    Unstable { step: usize },

    #[error("step {step} failed: {source}")]
    Step { step: usize, source: Box<Error> },
}

impl Error {
    /// Wraps an error with the index of the integration step that produced it.
    pub fn at_step(self, step: usize) -> Error {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                step,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error, skipping step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            e => e,
        }
    }
}
