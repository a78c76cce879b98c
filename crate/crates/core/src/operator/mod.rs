//! Declare, realize, linearise, and compose imaging stages.
//!
//! Stage order follows the physical chain: the first stage in a list acts
//! on the object first. Convolution stages are periodic (circular) so their
//! Fourier diagonalisation is exact; non-periodic blur has to be supplied
//! as an explicit matrix stage.

pub mod formats;

mod grid;
mod realized;
mod stage;

pub use grid::GridSpec;
pub use realized::{compose, RealizedOperator, Structure};
pub use stage::{MuField, NonlinearMap, NonlinearStage, OperatorStage, StageKind};

use alloc::format;
use alloc::vec::Vec;

use crate::dft::kernel_from_even_transfer;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectral::{SingularSpectrum, SpectrumMethod};

/// Realize a declared stage as a concrete operator on the grid.
///
/// Structure tags: attenuation is diagonal, blur / kernel / mtf are
/// circulant, sampling is a projection, matrix stages are dense, and
/// nonlinear stages come back as the dense finite-difference Jacobian at
/// their operating point.
pub fn realize(stage: &OperatorStage, grid: &GridSpec) -> Result<RealizedOperator> {
    let n = grid.n();
    match stage.kind() {
        StageKind::Attenuation { mu, distance } => {
            let factors: Vec<f64> = match mu {
                MuField::Constant(c) => alloc::vec![libm::exp(-c * distance); n],
                MuField::PerSample(vals) => {
                    if vals.len() != n {
                        return Err(Error::Input(format!(
                            "attenuation field has {} samples for a grid of {n}",
                            vals.len()
                        )));
                    }
                    vals.iter().map(|c| libm::exp(-c * distance)).collect()
                }
            };
            RealizedOperator::diagonal(factors)
        }
        StageKind::GaussianBlur { width } => {
            require_periodic(grid, "gaussian_blur")?;
            let transfer: Vec<f64> = grid
                .frequency_magnitudes()
                .iter()
                .map(|k| libm::exp(-0.5 * width * width * k * k))
                .collect();
            Ok(RealizedOperator::circulant(
                kernel_from_even_transfer(&transfer, grid.dims()),
                grid.dims().to_vec(),
            ))
        }
        StageKind::KernelConvolution { kernel } => {
            require_periodic(grid, "kernel")?;
            if kernel.len() != n {
                return Err(Error::Input(format!(
                    "convolution kernel has {} samples for a grid of {n}",
                    kernel.len()
                )));
            }
            Ok(RealizedOperator::circulant(
                kernel.clone(),
                grid.dims().to_vec(),
            ))
        }
        StageKind::Sampling { mask } => {
            if mask.len() != n {
                return Err(Error::Input(format!(
                    "sampling mask has {} entries for a grid of {n}",
                    mask.len()
                )));
            }
            Ok(RealizedOperator::projection(mask.clone()))
        }
        StageKind::Matrix { matrix } => {
            if matrix.rows() != n {
                return Err(Error::Input(format!(
                    "matrix stage is {}x{} for a grid of {n}",
                    matrix.rows(),
                    matrix.cols()
                )));
            }
            RealizedOperator::from_matrix(matrix.clone())
        }
        StageKind::Mtf { curve } => {
            require_periodic(grid, "mtf")?;
            let transfer = sample_curve_on_grid(curve, grid)?;
            Ok(RealizedOperator::circulant(
                kernel_from_even_transfer(&transfer, grid.dims()),
                grid.dims().to_vec(),
            ))
        }
        StageKind::Nonlinear {
            map,
            operating_point,
        } => {
            if operating_point.len() != n {
                return Err(Error::Input(format!(
                    "operating point has {} samples for a grid of {n}",
                    operating_point.len()
                )));
            }
            linearize(
                &NonlinearStage::from_map(map, operating_point.clone()),
                grid,
            )
        }
    }
}

fn require_periodic(grid: &GridSpec, kind: &str) -> Result<()> {
    if !grid.periodic() {
        return Err(Error::Unsupported(format!(
            "{kind} stage needs a periodic grid; supply a matrix stage for non-periodic boundaries"
        )));
    }
    Ok(())
}

/// Central finite-difference Jacobian of a nonlinear stage at its operating
/// point: column i is `(f(X + h e_i) - f(X - h e_i)) / 2h`.
pub fn linearize(stage: &NonlinearStage, grid: &GridSpec) -> Result<RealizedOperator> {
    let n = grid.n();
    if stage.operating_point().len() != n {
        return Err(Error::Input(format!(
            "operating point has {} samples for a grid of {n}",
            stage.operating_point().len()
        )));
    }
    let h = stage.fd_step();
    let mut jacobian = Matrix::zeros(n, n);
    let mut probe = stage.operating_point().to_vec();
    for i in 0..n {
        let x0 = probe[i];
        probe[i] = x0 + h;
        let plus = eval_checked(stage, &probe, n, i)?;
        probe[i] = x0 - h;
        let minus = eval_checked(stage, &probe, n, i)?;
        probe[i] = x0;
        for r in 0..n {
            jacobian[(r, i)] = (plus[r] - minus[r]) / (2.0 * h);
        }
    }
    RealizedOperator::from_matrix(jacobian)
}

fn eval_checked(stage: &NonlinearStage, x: &[f64], n: usize, index: usize) -> Result<Vec<f64>> {
    let out = stage.eval(x);
    if out.len() != n {
        return Err(Error::StageEval {
            index,
            reason: format!("map returned {} samples, expected {n}", out.len()),
        });
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::StageEval {
            index,
            reason: "map returned non-finite values".into(),
        });
    }
    Ok(out)
}

/// Spectrum of an MTF stage: the curve magnitude interpolated at every grid
/// frequency magnitude, sorted nonincreasing.
pub fn mtf_to_spectrum(stage: &OperatorStage, grid: &GridSpec) -> Result<SingularSpectrum> {
    let StageKind::Mtf { curve } = stage.kind() else {
        return Err(Error::Input(format!(
            "mtf_to_spectrum needs an mtf stage, got `{}`",
            stage.kind().name()
        )));
    };
    let transfer = sample_curve_on_grid(curve, grid)?;
    SingularSpectrum::full(transfer, SpectrumMethod::Analytic)
}

fn sample_curve_on_grid(curve: &[(f64, f64)], grid: &GridSpec) -> Result<Vec<f64>> {
    grid.frequency_magnitudes()
        .iter()
        .map(|&k| interpolate_curve(curve, k))
        .collect()
}

/// Linear interpolation on a validated (strictly increasing) curve. The
/// curve must cover the queried frequency; there is no extrapolation rule.
pub(crate) fn interpolate_curve(curve: &[(f64, f64)], f: f64) -> Result<f64> {
    let (first_f, first_m) = curve[0];
    let (last_f, last_m) = curve[curve.len() - 1];
    if f < first_f {
        return Err(Error::Input(format!(
            "mtf curve starts at frequency {first_f} but the grid needs {f}; curves must start at 0"
        )));
    }
    // Tolerate the exact upper boundary up to roundoff.
    if f > last_f {
        if f <= last_f * (1.0 + 1e-12) {
            return Ok(last_m);
        }
        return Err(Error::Input(format!(
            "mtf curve ends at frequency {last_f} but the grid needs {f}; extend the curve to the grid's maximum frequency"
        )));
    }
    let hi = curve.partition_point(|&(cf, _)| cf < f);
    if hi == 0 {
        return Ok(first_m);
    }
    let (f0, m0) = curve[hi - 1];
    let (f1, m1) = curve[hi];
    if f == f0 {
        return Ok(m0);
    }
    let t = (f - f0) / (f1 - f0);
    Ok(m0 + t * (m1 - m0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::analytic_spectrum;
    use alloc::vec;

    #[test]
    fn constant_attenuation_is_uniform_contraction() {
        // mu d = ln 2 halves every sample.
        let grid = GridSpec::line(4, 1.0, true).unwrap();
        let stage =
            OperatorStage::attenuation(MuField::Constant(core::f64::consts::LN_2), 1.0).unwrap();
        let op = realize(&stage, &grid).unwrap();
        assert!(matches!(op.structure(), Structure::Diagonal));
        for v in op.apply(&[1.0, 2.0, 3.0, 4.0]) {
            assert!((v * 2.0).round() - v * 2.0 == 0.0);
        }
        let y = op.apply(&[1.0, 1.0, 1.0, 1.0]);
        for v in y {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_projects_onto_mask() {
        let grid = GridSpec::line(4, 1.0, false).unwrap();
        let stage = OperatorStage::sampling(vec![true, true, false, false]).unwrap();
        let op = realize(&stage, &grid).unwrap();
        assert!(matches!(op.structure(), Structure::Projection));
        assert_eq!(op.apply(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn blur_kernel_dft_matches_closed_form() {
        let grid = GridSpec::line(4, 1.0, true).unwrap();
        let stage = OperatorStage::gaussian_blur(1.0).unwrap();
        let op = realize(&stage, &grid).unwrap();
        // Apply to a delta: the result is the kernel itself; its DFT
        // magnitudes must match the analytic spectrum values.
        let mut delta = vec![0.0; 4];
        delta[0] = 1.0;
        let kernel = op.apply(&delta);
        let mags = crate::dft::dft_magnitudes(&kernel, &[4]);
        let mut expected = analytic_spectrum(&stage, &grid).unwrap().values().to_vec();
        let mut got = mags;
        got.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        expected.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12, "kernel dft {g} vs analytic {e}");
        }
    }

    #[test]
    fn blur_needs_periodic_grid() {
        let grid = GridSpec::line(4, 1.0, false).unwrap();
        let stage = OperatorStage::gaussian_blur(1.0).unwrap();
        assert!(matches!(realize(&stage, &grid), Err(Error::Unsupported(_))));
    }

    #[test]
    fn shape_mismatches_are_input_errors() {
        let grid = GridSpec::line(4, 1.0, true).unwrap();
        let stage = OperatorStage::sampling(vec![true, false]).unwrap();
        assert!(matches!(realize(&stage, &grid), Err(Error::Input(_))));
        let stage = OperatorStage::matrix(Matrix::identity(3)).unwrap();
        assert!(matches!(realize(&stage, &grid), Err(Error::Input(_))));
    }

    #[test]
    fn linearize_identity_map_gives_identity() {
        let grid = GridSpec::line(5, 1.0, false).unwrap();
        let stage = NonlinearStage::from_map(&NonlinearMap::Identity, vec![0.3; 5]);
        let op = linearize(&stage, &grid).unwrap();
        let resid = op.materialize().unwrap().max_abs_diff(&Matrix::identity(5));
        assert!(resid < 1e-10, "residual {resid}");
    }

    #[test]
    fn linearize_quadratic_at_zero_is_identity() {
        let grid = GridSpec::line(4, 1.0, false).unwrap();
        let stage =
            NonlinearStage::from_map(&NonlinearMap::Quadratic { gain: 0.1 }, vec![0.0; 4]);
        let op = linearize(&stage, &grid).unwrap();
        let resid = op.materialize().unwrap().max_abs_diff(&Matrix::identity(4));
        assert!(resid < 1e-9, "residual {resid}");
    }

    #[test]
    fn linearize_quadratic_at_ones_is_scaled_identity() {
        // d/dx (x + 0.1 x^2) = 1 + 0.2 x = 1.2 at x = 1.
        let grid = GridSpec::line(4, 1.0, false).unwrap();
        let stage =
            NonlinearStage::from_map(&NonlinearMap::Quadratic { gain: 0.1 }, vec![1.0; 4]);
        let op = linearize(&stage, &grid).unwrap();
        let mut expect = Matrix::identity(4);
        expect.scale(1.2);
        let resid = op.materialize().unwrap().max_abs_diff(&expect);
        assert!(resid < 1e-8, "residual {resid}");
    }

    #[test]
    fn linearize_reports_failing_index() {
        let grid = GridSpec::line(3, 1.0, false).unwrap();
        // Map blows up whenever coordinate 1 leaves the operating point.
        let stage = NonlinearStage::new(
            |x: &[f64]| {
                if x[1] != 0.0 {
                    vec![f64::NAN; 3]
                } else {
                    x.to_vec()
                }
            },
            vec![0.0; 3],
        );
        match linearize(&stage, &grid) {
            Err(Error::StageEval { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected StageEval at index 1, got {other:?}"),
        }
    }

    #[test]
    fn flat_mtf_is_identity_spectrum() {
        let grid = GridSpec::line(4, 1.0, true).unwrap();
        let nyq = grid.max_frequency();
        let stage = OperatorStage::mtf(vec![(0.0, 1.0), (nyq, 1.0)]).unwrap();
        let s = mtf_to_spectrum(&stage, &grid).unwrap();
        for &v in s.values() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_falloff_mtf_interpolates() {
        // N = 4 unit spacing: |k| in {0, pi/2, pi/2, pi}; falloff 1 -> 0
        // over [0, pi] hits (1, 0.5, 0.5, 0).
        let grid = GridSpec::line(4, 1.0, true).unwrap();
        let nyq = grid.max_frequency();
        let stage = OperatorStage::mtf(vec![(0.0, 1.0), (nyq, 0.0)]).unwrap();
        let s = mtf_to_spectrum(&stage, &grid).unwrap();
        let expect = [1.0, 0.5, 0.5, 0.0];
        for (v, e) in s.values().iter().zip(&expect) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
    }

    #[test]
    fn mtf_coverage_gap_is_input_error() {
        let grid = GridSpec::line(8, 1.0, true).unwrap();
        let stage = OperatorStage::mtf(vec![(0.0, 1.0), (1.0, 0.5)]).unwrap();
        assert!(matches!(
            mtf_to_spectrum(&stage, &grid),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn gaussian_mtf_matches_blur_spectrum() {
        let grid = GridSpec::line(16, 1.0, true).unwrap();
        let s_width = 1.0f64;
        let blur = OperatorStage::gaussian_blur(s_width).unwrap();
        let expected = analytic_spectrum(&blur, &grid).unwrap();
        // Sample the closed form densely enough for linear interpolation to
        // stay within 1e-3.
        let nyq = grid.max_frequency();
        let knots = 400;
        let curve: Vec<(f64, f64)> = (0..=knots)
            .map(|i| {
                let f = nyq * i as f64 / knots as f64;
                (f, libm::exp(-0.5 * s_width * s_width * f * f))
            })
            .collect();
        let stage = OperatorStage::mtf(curve).unwrap();
        let got = mtf_to_spectrum(&stage, &grid).unwrap();
        for (g, e) in got.values().iter().zip(expected.values()) {
            assert!((g - e).abs() < 1e-3, "{g} vs {e}");
        }
    }
}
