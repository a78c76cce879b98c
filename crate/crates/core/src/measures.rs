//! Entropy, capacity, and irreversibility of a singular spectrum.
//!
//! All logarithms are natural; reported quantities are in nats and
//! `r_eff = exp(H)` is base-consistent. Thresholds split the spectrum into
//! three disjoint bins: hard loss (`sigma <= delta`), soft loss
//! (`delta < sigma < epsilon`), and recoverable (`sigma >= epsilon`), with
//! the boundary inequalities exactly as stated.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::operator::{linearize, GridSpec, NonlinearStage};
use crate::spectral::{NumericalTolerance, SingularSpectrum};

/// Normalised squared singular values: `lambda_i = sigma_i^2 / sum sigma^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeWeights {
    lambdas: Vec<f64>,
}

impl ModeWeights {
    /// The weights, sorted nonincreasing, summing to 1.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }
}

/// Mode weights of a spectrum, or `None` for an all-zero (degenerate)
/// operator, whose entropy is undefined rather than NaN.
///
/// For truncated spectra the weights cover the resolved values only.
pub fn mode_weights(spectrum: &SingularSpectrum) -> Option<ModeWeights> {
    let hs = spectrum.hs_norm_sq();
    if hs <= 0.0 {
        return None;
    }
    let lambdas = spectrum
        .values()
        .iter()
        .map(|v| (v * v / hs).min(1.0))
        .collect();
    Some(ModeWeights { lambdas })
}

/// Spectral entropy `H = -sum lambda ln lambda` in nats, with
/// `0 ln 0 := 0`. Lies in `[0, ln N]` and is invariant under global
/// scaling of the operator.
pub fn operator_entropy(weights: &ModeWeights) -> f64 {
    let h: f64 = weights
        .lambdas
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * libm::log(l))
        .sum();
    h.max(0.0)
}

/// How a recoverability threshold is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EpsilonSpec {
    /// Fixed operating threshold.
    Explicit(f64),
    /// Noise-derived threshold `epsilon = kappa sigma_n / amplitude`: a mode
    /// is recoverable when its measured coefficient clears the noise floor
    /// by factor kappa at the given typical object amplitude.
    Derived {
        /// Safety factor on the noise floor.
        kappa: f64,
        /// Per-component noise scale.
        sigma_n: f64,
        /// Typical object coefficient amplitude.
        amplitude: f64,
    },
}

/// Operating thresholds: numerical tolerance delta plus recoverability
/// threshold epsilon, with `epsilon >= delta` enforced at resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdPolicy {
    delta: NumericalTolerance,
    epsilon: EpsilonSpec,
}

/// Thresholds resolved against a concrete spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResolvedThresholds {
    /// Numerical tolerance below which modes count as eliminated.
    pub delta: f64,
    /// Recoverability threshold.
    pub epsilon: f64,
}

impl ThresholdPolicy {
    /// Explicit epsilon with the given delta policy.
    pub fn explicit(epsilon: f64, delta: NumericalTolerance) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::Parameter(format!(
                "explicit epsilon must be finite and > 0, got {epsilon}"
            )));
        }
        Ok(Self {
            delta,
            epsilon: EpsilonSpec::Explicit(epsilon),
        })
    }

    /// Noise-derived epsilon with the given delta policy.
    pub fn derived(
        kappa: f64,
        sigma_n: f64,
        amplitude: f64,
        delta: NumericalTolerance,
    ) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::Parameter(format!(
                "kappa must be finite and > 0, got {kappa}"
            )));
        }
        if !sigma_n.is_finite() || sigma_n < 0.0 {
            return Err(Error::Parameter(format!(
                "sigma_n must be finite and >= 0, got {sigma_n}"
            )));
        }
        if !amplitude.is_finite() || amplitude <= 0.0 {
            return Err(Error::Parameter(format!(
                "amplitude must be finite and > 0, got {amplitude}"
            )));
        }
        Ok(Self {
            delta,
            epsilon: EpsilonSpec::Derived {
                kappa,
                sigma_n,
                amplitude,
            },
        })
    }

    /// The delta policy.
    pub fn delta(&self) -> &NumericalTolerance {
        &self.delta
    }

    /// The epsilon specification.
    pub fn epsilon_spec(&self) -> &EpsilonSpec {
        &self.epsilon
    }

    /// Epsilon value (spectrum-independent).
    pub fn epsilon_value(&self) -> f64 {
        match self.epsilon {
            EpsilonSpec::Explicit(e) => e,
            EpsilonSpec::Derived {
                kappa,
                sigma_n,
                amplitude,
            } => kappa * sigma_n / amplitude,
        }
    }

    /// Resolve both thresholds against a spectrum, rejecting
    /// `epsilon < delta`.
    pub fn resolve(&self, spectrum: &SingularSpectrum) -> Result<ResolvedThresholds> {
        let delta = self.delta.resolve(spectrum);
        let epsilon = self.epsilon_value();
        if epsilon < delta {
            return Err(Error::ThresholdOrder { epsilon, delta });
        }
        Ok(ResolvedThresholds { delta, epsilon })
    }

    /// Validate the epsilon against the delta floor evaluated at unit
    /// operator norm, for checks before any spectrum exists (chain-file
    /// validation). Exact enforcement recurs at analysis time.
    pub fn validate_at_unit_norm(&self, n_object: usize) -> Result<()> {
        let delta = self.delta.floor_at_unit_norm(n_object);
        let epsilon = self.epsilon_value();
        if epsilon < delta {
            return Err(Error::ThresholdOrder { epsilon, delta });
        }
        Ok(())
    }
}

impl Default for ThresholdPolicy {
    /// Epsilon 0.5 with the default relative delta; a neutral operating
    /// point for unit-normalised operators.
    fn default() -> Self {
        Self {
            delta: NumericalTolerance::default(),
            epsilon: EpsilonSpec::Explicit(0.5),
        }
    }
}

/// Count of modes with `sigma >= epsilon` (inclusive, as defined).
pub fn effective_rank(spectrum: &SingularSpectrum, policy: &ThresholdPolicy) -> Result<usize> {
    let thresholds = policy.resolve(spectrum)?;
    spectrum.count_at_least(thresholds.epsilon)
}

/// Capacity `C = ln(rank_eps)` in nats; `None` at rank zero, preserving the
/// distinction from rank one (where `C = ln 1 = 0`).
pub fn capacity(rank_eps: usize) -> Option<f64> {
    (rank_eps > 0).then(|| libm::log(rank_eps as f64))
}

/// How rank-zero capacity is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CapacityConvention {
    /// Null capacity plus a `no recoverable modes` flag at rank zero.
    #[default]
    NullAtRankZero,
    /// Compatibility mode: report capacity 0 at rank zero, collapsing the
    /// rank-0 / rank-1 distinction.
    PaperZero,
}

/// Loss decomposition at the operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossBreakdown {
    /// Modes with `sigma <= delta`: the numerical nullspace, unrecoverable
    /// at every threshold.
    pub hard_loss: usize,
    /// Modes with `delta < sigma < epsilon`: present but below the
    /// operating threshold.
    pub soft_loss: usize,
    /// Modes with `sigma >= epsilon`.
    pub recoverable: usize,
}

/// Hard/soft/recoverable decomposition and the irreversibility fraction.
///
/// Truncated spectra must certify their tail below both thresholds or this
/// errors with [`Error::InsufficientSpectrum`].
pub fn irreversibility(
    spectrum: &SingularSpectrum,
    policy: &ThresholdPolicy,
) -> Result<(LossBreakdown, f64)> {
    let thresholds = policy.resolve(spectrum)?;
    let recoverable = spectrum.count_at_least(thresholds.epsilon)?;
    let hard_loss = spectrum.count_at_most(thresholds.delta)?;
    let n = spectrum.n_object();
    let soft_loss = n - hard_loss - recoverable;
    let irr = (hard_loss + soft_loss) as f64 / n as f64;
    Ok((
        LossBreakdown {
            hard_loss,
            soft_loss,
            recoverable,
        },
        irr,
    ))
}

/// Full measurement report for one operator at one operating point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InfoReport {
    /// Spectral entropy in nats; `None` for an all-zero operator.
    pub entropy: Option<f64>,
    /// `exp(entropy)`, the effective mode count.
    pub r_eff: Option<f64>,
    /// Modes at or above epsilon.
    pub rank_eps: usize,
    /// `ln(rank_eps)` in nats; `None` at rank zero under the default
    /// convention, 0 under [`CapacityConvention::PaperZero`].
    pub capacity: Option<f64>,
    /// Set when no mode clears the operating threshold.
    pub no_recoverable_modes: bool,
    /// Fraction of object-space modes lost: `(hard + soft) / N`.
    pub irreversibility: f64,
    /// Modes with `sigma <= delta`.
    pub hard_loss: usize,
    /// Modes with `delta < sigma < epsilon`.
    pub soft_loss: usize,
    /// Modes with `sigma >= epsilon`.
    pub recoverable: usize,
    /// Object-space dimension.
    pub n_object: usize,
    /// Thresholds the report was computed at.
    pub thresholds: ResolvedThresholds,
}

impl InfoReport {
    /// Compute the full report for a spectrum.
    pub fn from_spectrum(
        spectrum: &SingularSpectrum,
        policy: &ThresholdPolicy,
        convention: CapacityConvention,
    ) -> Result<Self> {
        let thresholds = policy.resolve(spectrum)?;
        let (loss, irr) = irreversibility(spectrum, policy)?;
        let entropy = mode_weights(spectrum).map(|w| operator_entropy(&w));
        let r_eff = entropy.map(libm::exp);
        let rank_eps = loss.recoverable;
        let capacity = match (capacity(rank_eps), convention) {
            (Some(c), _) => Some(c),
            (None, CapacityConvention::NullAtRankZero) => None,
            (None, CapacityConvention::PaperZero) => Some(0.0),
        };
        Ok(Self {
            entropy,
            r_eff,
            rank_eps,
            capacity,
            no_recoverable_modes: rank_eps == 0,
            irreversibility: irr,
            hard_loss: loss.hard_loss,
            soft_loss: loss.soft_loss,
            recoverable: loss.recoverable,
            n_object: spectrum.n_object(),
            thresholds,
        })
    }
}

/// Local capacity of a nonlinear stage: the full report of its
/// finite-difference Jacobian at the operating point.
pub fn local_capacity(
    stage: &NonlinearStage,
    grid: &GridSpec,
    policy: &ThresholdPolicy,
) -> Result<InfoReport> {
    let jacobian = linearize(stage, grid)?;
    let spectrum = jacobian.spectrum()?;
    InfoReport::from_spectrum(&spectrum, policy, CapacityConvention::default())
}
