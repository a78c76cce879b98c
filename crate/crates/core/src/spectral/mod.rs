//! Singular spectra and the three routes for computing them.
//!
//! The dense route (one-sided Jacobi) is the reference; the analytic route
//! evaluates closed forms for diagonalisable stages; the randomized route
//! approximates the top of the spectrum for matrix-free operators. The
//! analytic and randomized routes are validated against the dense route in
//! the test suites rather than trusted blindly.

mod analytic;
mod jacobi;
mod randomized;

pub use analytic::analytic_spectrum;
pub use jacobi::dense_svd;
pub use randomized::randomized_svd;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How a spectrum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SpectrumMethod {
    /// Full SVD of a materialised matrix.
    Dense,
    /// Closed-form evaluation for a diagonalisable stage.
    Analytic,
    /// Seeded randomized truncation to the top `k` values.
    Randomized {
        /// Number of resolved leading values.
        k: usize,
    },
}

/// Sorted singular values of an operator on an N-dimensional object space.
///
/// Dense and analytic spectra carry all N values. Randomized spectra carry
/// the top `k` together with a tail bound: every unresolved value is known
/// to be at most the smallest resolved one.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
    n_object: usize,
    method: SpectrumMethod,
    hs_norm_sq: f64,
    tail_bound: Option<f64>,
}

impl SingularSpectrum {
    /// Full spectrum: one value per object-space mode. Values are sorted
    /// nonincreasing here; they may arrive in frequency or probe order.
    pub fn full(mut values: Vec<f64>, method: SpectrumMethod) -> Result<Self> {
        let n_object = values.len();
        if n_object == 0 {
            return Err(Error::EmptyOperator);
        }
        validate_values(&values)?;
        sort_desc(&mut values);
        let hs_norm_sq = values.iter().map(|v| v * v).sum();
        Ok(Self {
            values,
            n_object,
            method,
            hs_norm_sq,
            tail_bound: None,
        })
    }

    /// Truncated spectrum from a randomized run: top `k` values on an
    /// `n_object`-dimensional space.
    pub fn truncated(mut values: Vec<f64>, n_object: usize) -> Result<Self> {
        let k = values.len();
        if n_object == 0 {
            return Err(Error::EmptyOperator);
        }
        if k == 0 || k > n_object {
            return Err(Error::Parameter(format!(
                "truncated spectrum length {k} must be in 1..={n_object}"
            )));
        }
        validate_values(&values)?;
        sort_desc(&mut values);
        let hs_norm_sq = values.iter().map(|v| v * v).sum();
        let tail_bound = (k < n_object).then(|| values[k - 1]);
        Ok(Self {
            values,
            n_object,
            method: SpectrumMethod::Randomized { k },
            hs_norm_sq,
            tail_bound,
        })
    }

    /// Resolved singular values, sorted nonincreasing.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Object-space dimension N.
    pub fn n_object(&self) -> usize {
        self.n_object
    }

    /// Route that produced the spectrum.
    pub fn method(&self) -> SpectrumMethod {
        self.method
    }

    /// Squared Hilbert-Schmidt norm of the resolved values.
    pub fn hs_norm_sq(&self) -> f64 {
        self.hs_norm_sq
    }

    /// Largest singular value (0 for an all-zero spectrum).
    pub fn sigma_max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Upper bound on every unresolved value, when the spectrum is truncated.
    pub fn tail_bound(&self) -> Option<f64> {
        self.tail_bound
    }

    /// True when a value is resolved for every object-space mode.
    pub fn is_complete(&self) -> bool {
        self.values.len() == self.n_object
    }

    /// Exact count of modes with `sigma >= threshold`, certified against the
    /// tail bound for truncated spectra.
    pub(crate) fn count_at_least(&self, threshold: f64) -> Result<usize> {
        if let Some(bound) = self.tail_bound {
            if bound >= threshold {
                return Err(Error::InsufficientSpectrum {
                    tail_bound: bound,
                    threshold,
                });
            }
        }
        Ok(self.values.iter().filter(|&&v| v >= threshold).count())
    }

    /// Exact count of modes with `sigma <= threshold`, certified against the
    /// tail bound for truncated spectra.
    pub(crate) fn count_at_most(&self, threshold: f64) -> Result<usize> {
        let resolved = self.values.iter().filter(|&&v| v <= threshold).count();
        match self.tail_bound {
            Some(bound) if bound > threshold => Err(Error::InsufficientSpectrum {
                tail_bound: bound,
                threshold,
            }),
            _ => Ok(resolved + (self.n_object - self.values.len())),
        }
    }
}

fn validate_values(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Input(format!(
            "singular values must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

fn sort_desc(values: &mut [f64]) {
    // Finite nonnegative by validation, so total ordering is safe.
    values.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
}

/// SVD factors with orthonormal column sets.
///
/// Dense factorisations carry N columns; randomized ones carry the leading
/// `k`. `accuracy_warning` is set when an internal iteration hit its sweep
/// cap before reaching the orthogonality tolerance — never silently.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    left: Matrix,
    values: Vec<f64>,
    right: Matrix,
    accuracy_warning: bool,
}

impl SvdFactors {
    pub(crate) fn new(left: Matrix, values: Vec<f64>, right: Matrix, accuracy_warning: bool) -> Self {
        debug_assert_eq!(left.cols(), values.len());
        debug_assert_eq!(right.cols(), values.len());
        Self {
            left,
            values,
            right,
            accuracy_warning,
        }
    }

    /// Left singular vectors (columns of U).
    pub fn left_vectors(&self) -> &Matrix {
        &self.left
    }

    /// Singular values, nonincreasing.
    pub fn singular_values(&self) -> &[f64] {
        &self.values
    }

    /// Right singular vectors (columns of V).
    pub fn right_vectors(&self) -> &Matrix {
        &self.right
    }

    /// True when the factorisation stopped at its iteration cap.
    pub fn accuracy_warning(&self) -> bool {
        self.accuracy_warning
    }

    /// Spectrum view of a full (square) factorisation.
    pub fn spectrum(&self) -> Result<SingularSpectrum> {
        SingularSpectrum::full(self.values.clone(), SpectrumMethod::Dense)
    }

    /// Spectrum view of a truncated factorisation on an `n_object` space.
    pub fn truncated_spectrum(&self, n_object: usize) -> Result<SingularSpectrum> {
        SingularSpectrum::truncated(self.values.clone(), n_object)
    }

    /// `U diag(sigma) V^T`, mostly for residual checks.
    pub fn reconstruct(&self) -> Matrix {
        let m = self.left.rows();
        let n = self.right.rows();
        let mut scaled = Matrix::zeros(m, self.values.len());
        for j in 0..self.values.len() {
            for i in 0..m {
                scaled[(i, j)] = self.left[(i, j)] * self.values[j];
            }
        }
        let mut out = Matrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                let mut sum = 0.0;
                for (k, _) in self.values.iter().enumerate() {
                    sum += scaled[(i, k)] * self.right[(j, k)];
                }
                out[(i, j)] = sum;
            }
        }
        out
    }
}

/// How the numerical tolerance delta is obtained for a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DeltaPolicy {
    /// Fixed delta.
    Absolute(f64),
    /// `delta = coeff * N * sigma_max`, recomputed per spectrum.
    Relative(f64),
}

/// Numerical tolerance below which singular values count as zero.
///
/// The default is the standard numerical-rank convention
/// `delta = N * eps_machine * sigma_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NumericalTolerance {
    policy: DeltaPolicy,
}

impl NumericalTolerance {
    /// Fixed tolerance; must be finite and nonnegative.
    pub fn absolute(delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::Parameter(format!(
                "absolute delta must be finite and >= 0, got {delta}"
            )));
        }
        Ok(Self {
            policy: DeltaPolicy::Absolute(delta),
        })
    }

    /// Spectrum-relative tolerance with the given coefficient.
    pub fn relative(coeff: f64) -> Result<Self> {
        if !coeff.is_finite() || coeff < 0.0 {
            return Err(Error::Parameter(format!(
                "relative delta coefficient must be finite and >= 0, got {coeff}"
            )));
        }
        Ok(Self {
            policy: DeltaPolicy::Relative(coeff),
        })
    }

    /// The policy in force.
    pub fn policy(&self) -> DeltaPolicy {
        self.policy
    }

    /// Delta for a concrete spectrum.
    pub fn resolve(&self, spectrum: &SingularSpectrum) -> f64 {
        match self.policy {
            DeltaPolicy::Absolute(delta) => delta,
            DeltaPolicy::Relative(coeff) => {
                coeff * spectrum.n_object() as f64 * spectrum.sigma_max()
            }
        }
    }

    /// Delta evaluated at unit operator norm, used to validate threshold
    /// policies before any spectrum exists.
    pub fn floor_at_unit_norm(&self, n_object: usize) -> f64 {
        match self.policy {
            DeltaPolicy::Absolute(delta) => delta,
            DeltaPolicy::Relative(coeff) => coeff * n_object as f64,
        }
    }
}

impl Default for NumericalTolerance {
    fn default() -> Self {
        Self {
            policy: DeltaPolicy::Relative(f64::EPSILON),
        }
    }
}

/// Count of singular values strictly above the numerical tolerance.
///
/// Complements the hard-loss count (`sigma <= delta`) so the two partitions
/// are exhaustive and disjoint. For truncated spectra only resolved values
/// are counted.
pub fn numerical_rank(spectrum: &SingularSpectrum, tol: &NumericalTolerance) -> usize {
    let delta = tol.resolve(spectrum);
    spectrum.values().iter().filter(|&&v| v > delta).count()
}
