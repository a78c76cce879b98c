//! Measurement model `y = Ox + n`, per-mode recoverability, and
//! reconstruction experiments that demonstrate which modes are stably
//! estimable.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::dot;
use crate::measures::ThresholdPolicy;
use crate::operator::RealizedOperator;
use crate::rng::{seeded_stream, standard_normal};
use crate::spectral::SvdFactors;

/// Additive detector noise: i.i.d. Gaussian per component with scale
/// `sigma_n` (so the expected squared norm is `sigma_n^2 N`). Per-trial
/// streams are derived from `(seed, trial index)`, making results
/// independent of evaluation order.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseModel {
    /// Per-component noise scale.
    pub sigma_n: f64,
    /// Base seed for all streams.
    pub seed: u64,
    /// Noise distribution.
    pub distribution: NoiseDistribution,
}

/// Supported noise distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NoiseDistribution {
    /// Independent Gaussian per measurement component.
    #[default]
    GaussianIid,
}

impl NoiseModel {
    /// Gaussian noise model; `sigma_n` must be finite and nonnegative.
    pub fn gaussian(sigma_n: f64, seed: u64) -> Result<Self> {
        if !sigma_n.is_finite() || sigma_n < 0.0 {
            return Err(Error::Parameter(format!(
                "sigma_n must be finite and >= 0, got {sigma_n}"
            )));
        }
        Ok(Self {
            sigma_n,
            seed,
            distribution: NoiseDistribution::GaussianIid,
        })
    }

    fn draw(&self, stream: u64, n: usize) -> Vec<f64> {
        let mut rng = seeded_stream(self.seed, stream);
        (0..n)
            .map(|_| self.sigma_n * standard_normal(&mut rng))
            .collect()
    }
}

/// One measurement `y = Ox + n` on noise stream 0.
pub fn measure(op: &RealizedOperator, x: &[f64], noise: &NoiseModel) -> Result<Vec<f64>> {
    if x.len() != op.n_object() {
        return Err(Error::Input(format!(
            "object vector has {} samples for an operator on {}",
            x.len(),
            op.n_object()
        )));
    }
    let mut y = op.apply(x);
    if noise.sigma_n > 0.0 {
        let draw = noise.draw(0, y.len());
        for (yi, ni) in y.iter_mut().zip(draw) {
            *yi += ni;
        }
    }
    Ok(y)
}

/// Truncated-SVD pseudo-inverse: inverts only the modes with
/// `sigma >= epsilon`; components along all other modes are exactly zero.
pub fn truncated_pinv_reconstruct(
    op: &RealizedOperator,
    y: &[f64],
    policy: &ThresholdPolicy,
) -> Result<Vec<f64>> {
    if y.len() != op.n_object() {
        return Err(Error::Input(format!(
            "measurement has {} samples for an operator on {}",
            y.len(),
            op.n_object()
        )));
    }
    let factors = op.svd()?;
    let epsilon = policy.resolve(&factors.spectrum()?)?.epsilon;
    Ok(pinv_apply(&factors, y, epsilon))
}

fn pinv_apply(factors: &SvdFactors, y: &[f64], epsilon: f64) -> Vec<f64> {
    let n = factors.right_vectors().rows();
    let mut x_hat = vec![0.0; n];
    for (i, &sigma) in factors.singular_values().iter().enumerate() {
        if sigma < epsilon {
            break; // values are sorted; everything after is truncated too
        }
        let u_i = factors.left_vectors().col(i);
        let coeff = dot(&u_i, y) / sigma;
        for r in 0..n {
            x_hat[r] += coeff * factors.right_vectors()[(r, i)];
        }
    }
    x_hat
}

fn ridge_apply(factors: &SvdFactors, y: &[f64], alpha: f64) -> Vec<f64> {
    let n = factors.right_vectors().rows();
    let mut x_hat = vec![0.0; n];
    for (i, &sigma) in factors.singular_values().iter().enumerate() {
        if sigma == 0.0 {
            break;
        }
        let u_i = factors.left_vectors().col(i);
        let coeff = dot(&u_i, y) * sigma / (sigma * sigma + alpha);
        for r in 0..n {
            x_hat[r] += coeff * factors.right_vectors()[(r, i)];
        }
    }
    x_hat
}

/// Per-mode outcome of a recoverability experiment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeRecovery {
    /// Mode index in spectrum order.
    pub index: usize,
    /// Singular value of the mode.
    pub sigma: f64,
    /// Input coefficient `x_i = <v_i, x>`.
    pub input_coeff: f64,
    /// Whether `sigma |x_i| >= kappa sigma_n`.
    pub criterion_pass: bool,
    /// Root-mean-square relative error of the mode estimate over trials;
    /// `None` when the mode has no usable scale (`x_i = 0`) or no stable
    /// estimator (`sigma = 0`).
    pub mean_relative_error: Option<f64>,
}

/// Result of a Monte-Carlo recoverability experiment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecoverabilityResult {
    /// One entry per object-space mode.
    pub per_mode: Vec<ModeRecovery>,
    /// Number of noise draws.
    pub trials: usize,
    /// Number of modes passing the criterion.
    pub truncation_rank: usize,
}

/// Estimate every mode coefficient as `<u_i, y> / sigma_i` over repeated
/// noisy measurements and compare the empirical error with the criterion
/// `sigma_i |x_i| >= kappa sigma_n`. The expected relative error is
/// `sigma_n / (sigma_i |x_i|)`, so criterion failures sit above `1/kappa`.
pub fn recoverability_experiment(
    op: &RealizedOperator,
    x: &[f64],
    noise: &NoiseModel,
    kappa: f64,
    trials: usize,
) -> Result<RecoverabilityResult> {
    if trials < 100 {
        return Err(Error::Parameter(format!(
            "recoverability experiment needs at least 100 trials, got {trials}"
        )));
    }
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::Parameter(format!(
            "kappa must be finite and > 0, got {kappa}"
        )));
    }
    if x.len() != op.n_object() {
        return Err(Error::Input(format!(
            "object vector has {} samples for an operator on {}",
            x.len(),
            op.n_object()
        )));
    }
    let factors = op.svd()?;
    let n = op.n_object();
    let clean = op.apply(x);
    let input_coeffs: Vec<f64> = (0..n)
        .map(|i| dot(&factors.right_vectors().col(i), x))
        .collect();
    let clean_proj: Vec<f64> = (0..n)
        .map(|i| dot(&factors.left_vectors().col(i), &clean))
        .collect();

    let mut err_sq = vec![0.0; n];
    for trial in 0..trials {
        let noise_vec = noise.draw(trial as u64 + 1, n);
        for i in 0..n {
            let sigma = factors.singular_values()[i];
            if sigma == 0.0 {
                continue;
            }
            let u_i = factors.left_vectors().col(i);
            let estimate = (clean_proj[i] + dot(&u_i, &noise_vec)) / sigma;
            let err = estimate - input_coeffs[i];
            err_sq[i] += err * err;
        }
    }

    let per_mode: Vec<ModeRecovery> = (0..n)
        .map(|i| {
            let sigma = factors.singular_values()[i];
            let x_i = input_coeffs[i];
            let criterion_pass = sigma * libm::fabs(x_i) >= kappa * noise.sigma_n;
            let mean_relative_error = (sigma > 0.0 && x_i != 0.0).then(|| {
                libm::sqrt(err_sq[i] / trials as f64) / libm::fabs(x_i)
            });
            ModeRecovery {
                index: i,
                sigma,
                input_coeff: x_i,
                criterion_pass,
                mean_relative_error,
            }
        })
        .collect();
    let truncation_rank = per_mode.iter().filter(|m| m.criterion_pass).count();
    Ok(RecoverabilityResult {
        per_mode,
        trials,
        truncation_rank,
    })
}

/// A reconstruction strategy for the invariance check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Reconstructor {
    /// Truncated pseudo-inverse at the given threshold.
    TruncatedPinv {
        /// Truncation threshold on singular values.
        epsilon: f64,
    },
    /// Ridge-regularised inverse `sigma / (sigma^2 + alpha)`.
    Ridge {
        /// Regularisation strength.
        alpha: f64,
    },
}

/// Default strategy set for [`invariance_check`]: two truncation levels
/// plus a ridge inverse with `alpha = epsilon^2`, tying the regularisation
/// strength to the truncation scale.
pub fn default_reconstructors(epsilon: f64) -> Vec<Reconstructor> {
    vec![
        Reconstructor::TruncatedPinv { epsilon },
        Reconstructor::TruncatedPinv {
            epsilon: 10.0 * epsilon,
        },
        Reconstructor::Ridge {
            alpha: epsilon * epsilon,
        },
    ]
}

/// Verify that nullspace modes are invisible to every reconstruction
/// strategy: two inputs differing only along modes with `sigma <= delta`
/// produce the same noiseless measurement and the same reconstruction.
///
/// Requires at least two distinct truncation levels and one ridge strategy.
/// Returns `true` when every strategy confirms (vacuously for full-rank
/// operators) and `false` when any reconstruction distinguishes the inputs.
pub fn invariance_check(
    op: &RealizedOperator,
    policy: &ThresholdPolicy,
    reconstructors: &[Reconstructor],
) -> Result<bool> {
    let mut pinv_levels: Vec<f64> = reconstructors
        .iter()
        .filter_map(|r| match r {
            Reconstructor::TruncatedPinv { epsilon } => Some(*epsilon),
            _ => None,
        })
        .collect();
    pinv_levels.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    pinv_levels.dedup();
    let has_ridge = reconstructors
        .iter()
        .any(|r| matches!(r, Reconstructor::Ridge { .. }));
    if pinv_levels.len() < 2 || !has_ridge {
        return Err(Error::Parameter(
            "invariance check needs two distinct truncation levels and a ridge strategy".into(),
        ));
    }

    let factors = op.svd()?;
    let delta = policy.resolve(&factors.spectrum()?)?.delta;
    let n = op.n_object();
    let null_modes: Vec<usize> = factors
        .singular_values()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= delta)
        .map(|(i, _)| i)
        .collect();
    if null_modes.is_empty() {
        return Ok(true); // no nullspace: nothing to distinguish
    }

    // Deterministic probe input and a second input differing only along
    // nullspace right singular vectors.
    let x: Vec<f64> = (0..n).map(|j| 1.0 + 0.5 * libm::sin(j as f64)).collect();
    let mut x_prime = x.clone();
    for (offset, &mode) in null_modes.iter().enumerate() {
        let weight = 1.0 + (offset % 3) as f64;
        for r in 0..n {
            x_prime[r] += weight * factors.right_vectors()[(r, mode)];
        }
    }

    let y = op.apply(&x);
    let y_prime = op.apply(&x_prime);
    let scale = x.iter().fold(1.0f64, |m, v| m.max(libm::fabs(*v)));
    let y_gap = y
        .iter()
        .zip(&y_prime)
        .fold(0.0f64, |m, (a, b)| m.max(libm::fabs(a - b)));
    if y_gap > 1e-12 * scale {
        return Ok(false);
    }

    for strategy in reconstructors {
        let xa = reconstruct_with(strategy, &factors, &y);
        let xb = reconstruct_with(strategy, &factors, &y_prime);
        if xa.iter().chain(&xb).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStrategy);
        }
        let gap = xa
            .iter()
            .zip(&xb)
            .fold(0.0f64, |m, (a, b)| m.max(libm::fabs(a - b)));
        if gap > 1e-12 * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

fn reconstruct_with(strategy: &Reconstructor, factors: &SvdFactors, y: &[f64]) -> Vec<f64> {
    match strategy {
        Reconstructor::TruncatedPinv { epsilon } => pinv_apply(factors, y, *epsilon),
        Reconstructor::Ridge { alpha } => ridge_apply(factors, y, *alpha),
    }
}
