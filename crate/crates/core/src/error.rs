use thiserror::Error;

/// Failures raised by the numerical kernels, the policy layer and the run engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular to working precision (|det| = {det:e}, threshold {threshold:e})")]
    SingularMatrix { det: f64, threshold: f64 },
    #[error("matrix is defective: repeated eigenvalue without two independent eigenvectors")]
    DefectiveMatrix,
    #[error("vector norm below 1e-12")]
    ZeroVector,
    #[error("invalid scenario: {0}")]
    Config(&'static str),
    #[error("index {index} out of range for {what} (limit {limit})")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("reward {0} outside [0, 1]")]
    Range(f64),
    #[error("arm {0} has never been pulled")]
    UninitializedArm(usize),
    #[error("argument outside the function domain: {0}")]
    Domain(&'static str),
    #[error("trace and true means come from different scenarios")]
    ScenarioMismatch,
    #[error("every arm has the same mean; the instance has no suboptimal arm")]
    DegenerateInstance,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
