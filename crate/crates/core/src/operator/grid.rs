//! Discretisation of the object space.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Uniform 1-D or 2-D sample grid for the object space.
///
/// `periodic` declares that convolution stages may be diagonalised in the
/// discrete Fourier basis; non-periodic grids only admit stages with no
/// frequency-domain structure.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    periodic: bool,
}

impl GridSpec {
    /// Validated grid; 1 or 2 axes, positive sample counts and spacings.
    pub fn new(dims: Vec<usize>, spacing: Vec<f64>, periodic: bool) -> Result<Self> {
        if dims.is_empty() || dims.len() > 2 {
            return Err(Error::Input(format!(
                "grid must have 1 or 2 axes, got {}",
                dims.len()
            )));
        }
        if dims.len() != spacing.len() {
            return Err(Error::Input(format!(
                "grid has {} dims but {} spacing entries",
                dims.len(),
                spacing.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Input("grid axis with zero samples".into()));
        }
        if spacing.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::Input("grid spacing must be finite and > 0".into()));
        }
        Ok(Self {
            dims,
            spacing,
            periodic,
        })
    }

    /// 1-D convenience constructor.
    pub fn line(n: usize, spacing: f64, periodic: bool) -> Result<Self> {
        Self::new(alloc::vec![n], alloc::vec![spacing], periodic)
    }

    /// Object-space dimension N (product of the axis sample counts).
    pub fn n(&self) -> usize {
        self.dims.iter().product()
    }

    /// Per-axis sample counts.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Per-axis sample spacings.
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Whether frequency-domain diagonalisation is valid.
    pub fn periodic(&self) -> bool {
        self.periodic
    }

    /// Angular frequency magnitude `|k|` for every flattened grid index,
    /// with `k_axis = 2 pi m / (n * spacing)` and the signed mode `m`
    /// running over `0, 1, .., n/2, -(n/2 - 1), .., -1`.
    pub fn frequency_magnitudes(&self) -> Vec<f64> {
        match (self.dims.as_slice(), self.spacing.as_slice()) {
            ([n], [dx]) => (0..*n).map(|j| libm::fabs(axis_frequency(j, *n, *dx))).collect(),
            ([n1, n2], [d1, d2]) => {
                let mut out = Vec::with_capacity(n1 * n2);
                for j1 in 0..*n1 {
                    let k1 = axis_frequency(j1, *n1, *d1);
                    for j2 in 0..*n2 {
                        let k2 = axis_frequency(j2, *n2, *d2);
                        out.push(libm::hypot(k1, k2));
                    }
                }
                out
            }
            _ => unreachable!("validated to 1 or 2 axes"),
        }
    }

    /// Largest frequency magnitude present on the grid.
    pub fn max_frequency(&self) -> f64 {
        self.frequency_magnitudes()
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Signed angular frequency for flattened index `j` on one axis.
pub(crate) fn axis_frequency(j: usize, n: usize, spacing: f64) -> f64 {
    let m = if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    };
    core::f64::consts::TAU * m / (n as f64 * spacing)
}
