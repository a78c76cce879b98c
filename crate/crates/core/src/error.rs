//! Error type shared by all analysis modules.

use alloc::string::String;

/// Errors produced while building operators or computing spectra and reports.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent input data (shape mismatch, non-finite
    /// entries, invalid field values).
    #[error("input: {0}")]
    Input(String),
    /// An operator on a zero-dimensional object space.
    #[error("empty operator: object-space dimension is zero")]
    EmptyOperator,
    /// Invalid algorithm parameter (e.g. requested rank exceeds dimension).
    #[error("parameter: {0}")]
    Parameter(String),
    /// Stage kind has no closed-form spectrum; caller should fall back to
    /// the dense route.
    #[error("no closed-form spectrum for stage kind `{0}`")]
    UnsupportedAnalytic(&'static str),
    /// Operation not supported for this operator or grid.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Stages with mismatched object-space dimensions cannot be composed.
    #[error("composition: {0}")]
    Composition(String),
    /// Recoverability threshold resolved below the numerical tolerance.
    #[error("threshold policy: epsilon {epsilon:e} < delta {delta:e}; recoverability threshold must not sit below the numerical tolerance")]
    ThresholdOrder {
        /// Resolved operating threshold.
        epsilon: f64,
        /// Resolved numerical tolerance.
        delta: f64,
    },
    /// A truncated spectrum whose tail bound cannot certify exact mode
    /// counts at the requested thresholds.
    #[error("insufficient spectrum: tail bound {tail_bound:e} cannot certify counts at threshold {threshold:e}")]
    InsufficientSpectrum {
        /// Upper bound on every unresolved singular value.
        tail_bound: f64,
        /// Threshold the count was requested at.
        threshold: f64,
    },
    /// A nonlinear stage evaluation failed while probing one basis direction.
    #[error("nonlinear stage evaluation failed at basis index {index}: {reason}")]
    StageEval {
        /// Probed basis index.
        index: usize,
        /// What went wrong.
        reason: String,
    },
    /// A reconstruction strategy returned non-finite values.
    #[error("reconstruction strategy produced non-finite output")]
    NonFiniteStrategy,
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
