//! Declarative descriptions of physical imaging stages.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Attenuation coefficient field: one value everywhere or one per sample.
#[derive(Debug, Clone, PartialEq)]
pub enum MuField {
    /// Spatially constant coefficient.
    Constant(f64),
    /// Per-sample coefficients, length N.
    PerSample(Vec<f64>),
}

/// Stage payloads. See [`OperatorStage`] for the validated wrapper.
#[derive(Debug, Clone, PartialEq)]
pub enum StageKind {
    /// Pointwise contraction `x -> exp(-mu d) x`.
    Attenuation {
        /// Attenuation coefficient(s), nonnegative.
        mu: MuField,
        /// Propagation distance, nonnegative.
        distance: f64,
    },
    /// Periodic convolution with a Gaussian of the given width.
    GaussianBlur {
        /// Kernel width in grid length units.
        width: f64,
    },
    /// Periodic convolution with an explicit kernel (length N).
    KernelConvolution {
        /// Real-space kernel, flattened row-major.
        kernel: Vec<f64>,
    },
    /// Projection onto the masked sample positions.
    Sampling {
        /// Per-sample keep flags with at least one `true`.
        mask: Vec<bool>,
    },
    /// Arbitrary dense N x N stage.
    Matrix {
        /// The stage matrix.
        matrix: Matrix,
    },
    /// Transfer-magnitude curve sampled radially in frequency.
    Mtf {
        /// `(frequency, magnitude)` knots; frequencies strictly increasing
        /// from 0, magnitudes in [0, 1]. Frequencies are angular, matching
        /// the grid convention `k = 2 pi m / (n spacing)`.
        curve: Vec<(f64, f64)>,
    },
    /// Nonlinear pointwise map, analysed through local linearisation at the
    /// stored operating point.
    Nonlinear {
        /// Which map.
        map: NonlinearMap,
        /// Operating point X, length N.
        operating_point: Vec<f64>,
    },
}

impl StageKind {
    /// Stable kind name used for labels, diagnostics, and the chain format.
    pub fn name(&self) -> &'static str {
        match self {
            StageKind::Attenuation { .. } => "attenuation",
            StageKind::GaussianBlur { .. } => "gaussian_blur",
            StageKind::KernelConvolution { .. } => "kernel",
            StageKind::Sampling { .. } => "sampling",
            StageKind::Matrix { .. } => "matrix",
            StageKind::Mtf { .. } => "mtf",
            StageKind::Nonlinear { .. } => "nonlinear",
        }
    }
}

/// One validated stage of an imaging chain.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorStage {
    kind: StageKind,
    label: String,
}

impl OperatorStage {
    /// Attenuation stage; coefficients and distance must be nonnegative.
    pub fn attenuation(mu: MuField, distance: f64) -> Result<Self> {
        if !distance.is_finite() || distance < 0.0 {
            return Err(Error::Input(format!(
                "attenuation distance must be finite and >= 0, got {distance}"
            )));
        }
        let ok = match &mu {
            MuField::Constant(c) => c.is_finite() && *c >= 0.0,
            MuField::PerSample(v) => {
                !v.is_empty() && v.iter().all(|c| c.is_finite() && *c >= 0.0)
            }
        };
        if !ok {
            return Err(Error::Input(
                "attenuation coefficients must be finite and >= 0".into(),
            ));
        }
        Ok(Self::of(StageKind::Attenuation { mu, distance }))
    }

    /// Gaussian blur of the given positive width.
    pub fn gaussian_blur(width: f64) -> Result<Self> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::Input(format!(
                "blur width must be finite and > 0, got {width}"
            )));
        }
        Ok(Self::of(StageKind::GaussianBlur { width }))
    }

    /// Explicit periodic convolution kernel.
    pub fn kernel_convolution(kernel: Vec<f64>) -> Result<Self> {
        if kernel.is_empty() || kernel.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(
                "convolution kernel must be nonempty and finite".into(),
            ));
        }
        Ok(Self::of(StageKind::KernelConvolution { kernel }))
    }

    /// Sampling projection; the mask needs at least one kept position.
    pub fn sampling(mask: Vec<bool>) -> Result<Self> {
        if mask.is_empty() || !mask.iter().any(|&b| b) {
            return Err(Error::Input(
                "sampling mask must keep at least one position".into(),
            ));
        }
        Ok(Self::of(StageKind::Sampling { mask }))
    }

    /// Sampling projection that keeps the first `m` of `n` positions.
    pub fn sampling_first_m(m: usize, n: usize) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::Input(format!(
                "sampling count m = {m} must be in 1..={n}"
            )));
        }
        Self::sampling((0..n).map(|i| i < m).collect())
    }

    /// Sampling projection keeping every `stride`-th position of `n`.
    pub fn sampling_decimate(stride: usize, n: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Input("sampling stride must be >= 1".into()));
        }
        Self::sampling((0..n).map(|i| i % stride == 0).collect())
    }

    /// Dense matrix stage; must be square and finite.
    pub fn matrix(matrix: Matrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::Input(format!(
                "matrix stage must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix.rows() == 0 {
            return Err(Error::EmptyOperator);
        }
        if !matrix.is_finite() {
            return Err(Error::Input("matrix stage has non-finite entries".into()));
        }
        Ok(Self::of(StageKind::Matrix { matrix }))
    }

    /// MTF curve stage; frequencies strictly increasing from 0, magnitudes
    /// in [0, 1].
    pub fn mtf(curve: Vec<(f64, f64)>) -> Result<Self> {
        if curve.is_empty() {
            return Err(Error::Input("mtf curve must be nonempty".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, &(f, m)) in curve.iter().enumerate() {
            if !f.is_finite() || f < 0.0 || f <= prev {
                return Err(Error::Input(format!(
                    "mtf curve frequency at knot {i} must be nonnegative and strictly increasing, got {f}"
                )));
            }
            if !m.is_finite() || !(0.0..=1.0).contains(&m) {
                return Err(Error::Input(format!(
                    "mtf curve magnitude at knot {i} must lie in [0, 1], got {m}"
                )));
            }
            prev = f;
        }
        Ok(Self::of(StageKind::Mtf { curve }))
    }

    /// Nonlinear stage analysed at the given operating point.
    pub fn nonlinear(map: NonlinearMap, operating_point: Vec<f64>) -> Result<Self> {
        if operating_point.is_empty() || operating_point.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(
                "operating point must be nonempty and finite".into(),
            ));
        }
        Ok(Self::of(StageKind::Nonlinear {
            map,
            operating_point,
        }))
    }

    fn of(kind: StageKind) -> Self {
        let label = String::from(kind.name());
        Self { kind, label }
    }

    /// Replace the display label.
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Stage payload.
    pub fn kind(&self) -> &StageKind {
        &self.kind
    }

    /// Display label (defaults to the kind name).
    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Built-in pointwise nonlinear maps, addressable by id from chain files.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearMap {
    /// `x -> x`.
    Identity,
    /// `x -> x + gain * x^2`, elementwise.
    Quadratic {
        /// Quadratic gain.
        gain: f64,
    },
    /// `x -> tanh(x)`, elementwise.
    Tanh,
}

impl NonlinearMap {
    /// Evaluate the map elementwise.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            NonlinearMap::Identity => x.to_vec(),
            NonlinearMap::Quadratic { gain } => {
                x.iter().map(|&v| v + gain * v * v).collect()
            }
            NonlinearMap::Tanh => x.iter().map(|&v| libm::tanh(v)).collect(),
        }
    }

    /// Map id used in chain files.
    pub fn id(&self) -> &'static str {
        match self {
            NonlinearMap::Identity => "identity",
            NonlinearMap::Quadratic { .. } => "quadratic",
            NonlinearMap::Tanh => "tanh",
        }
    }
}

/// A nonlinear map frozen at an operating point, ready for finite-difference
/// linearisation.
#[derive(Clone)]
pub struct NonlinearStage {
    map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    operating_point: Vec<f64>,
    fd_step: f64,
}

impl core::fmt::Debug for NonlinearStage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("NonlinearStage")
            .field("n", &self.operating_point.len())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl NonlinearStage {
    /// Wrap an arbitrary map. The default step balances truncation against
    /// rounding for double precision: `h = 1e-5 * (1 + max|X|)`.
    pub fn new(
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        operating_point: Vec<f64>,
    ) -> Self {
        let scale = operating_point
            .iter()
            .fold(0.0f64, |m, &v| m.max(libm::fabs(v)));
        Self {
            map: Arc::new(map),
            operating_point,
            fd_step: 1e-5 * (1.0 + scale),
        }
    }

    /// Wrap a built-in map.
    pub fn from_map(map: &NonlinearMap, operating_point: Vec<f64>) -> Self {
        let map = map.clone();
        Self::new(move |x| map.eval(x), operating_point)
    }

    /// Override the finite-difference step; must be positive.
    pub fn with_fd_step(mut self, fd_step: f64) -> Result<Self> {
        if !fd_step.is_finite() || fd_step <= 0.0 {
            return Err(Error::Input(format!(
                "fd_step must be finite and > 0, got {fd_step}"
            )));
        }
        self.fd_step = fd_step;
        Ok(self)
    }

    /// The operating point X.
    pub fn operating_point(&self) -> &[f64] {
        &self.operating_point
    }

    /// Finite-difference step in force.
    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    /// Evaluate the wrapped map.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.map)(x)
    }
}
