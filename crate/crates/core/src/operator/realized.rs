//! Concrete linear maps on the discretised object space.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::dft::dft_magnitudes;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectral::{dense_svd, SingularSpectrum, SpectrumMethod, SvdFactors};

/// Structural tag of a realized operator; compositions record the tags of
/// their factors in application order.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Structure {
    /// Pointwise multiplication.
    Diagonal,
    /// Periodic convolution.
    Circulant,
    /// 0/1 coordinate projection.
    Projection,
    /// General dense matrix.
    Dense,
    /// Ordered composition of the tagged factors.
    Composed(Vec<Structure>),
    /// Caller-supplied apply/adjoint callables with no materialisation.
    MatrixFree,
}

#[derive(Clone)]
enum OpImpl {
    Diagonal(Vec<f64>),
    Circulant { kernel: Vec<f64>, dims: Vec<usize> },
    Projection(Vec<bool>),
    Dense(Matrix),
    Composed(Vec<RealizedOperator>),
    MatrixFree {
        apply: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
        adjoint: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    },
}

/// A concrete linear map `x -> Ox` on the N-dimensional object space, with
/// adjoint, optional materialisation, and a route to its singular spectrum.
///
/// Operators are immutable after construction; `apply`/`apply_adjoint` are
/// pure and safe to call from any thread.
#[derive(Clone)]
pub struct RealizedOperator {
    n: usize,
    structure: Structure,
    imp: OpImpl,
}

impl core::fmt::Debug for RealizedOperator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RealizedOperator")
            .field("n", &self.n)
            .field("structure", &self.structure)
            .finish()
    }
}

impl RealizedOperator {
    /// Identity on an `n`-dimensional space.
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            structure: Structure::Diagonal,
            imp: OpImpl::Diagonal(vec![1.0; n]),
        }
    }

    /// Pointwise multiplication by `values`.
    pub fn diagonal(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyOperator);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("diagonal entries must be finite".into()));
        }
        Ok(Self {
            n: values.len(),
            structure: Structure::Diagonal,
            imp: OpImpl::Diagonal(values),
        })
    }

    /// Dense operator from a square matrix.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        if matrix.rows() == 0 {
            return Err(Error::EmptyOperator);
        }
        if matrix.rows() != matrix.cols() {
            return Err(Error::Input(format!(
                "operator matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::Input("operator matrix has non-finite entries".into()));
        }
        Ok(Self {
            n: matrix.rows(),
            structure: Structure::Dense,
            imp: OpImpl::Dense(matrix),
        })
    }

    /// Matrix-free operator from apply/adjoint callables. Has no
    /// materialisation, so only the randomized spectrum route applies.
    pub fn from_fns(
        n: usize,
        apply: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        adjoint: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyOperator);
        }
        Ok(Self {
            n,
            structure: Structure::MatrixFree,
            imp: OpImpl::MatrixFree {
                apply: Arc::new(apply),
                adjoint: Arc::new(adjoint),
            },
        })
    }

    pub(crate) fn circulant(kernel: Vec<f64>, dims: Vec<usize>) -> Self {
        Self {
            n: kernel.len(),
            structure: Structure::Circulant,
            imp: OpImpl::Circulant { kernel, dims },
        }
    }

    pub(crate) fn projection(mask: Vec<bool>) -> Self {
        Self {
            n: mask.len(),
            structure: Structure::Projection,
            imp: OpImpl::Projection(mask),
        }
    }

    pub(crate) fn composed(stages: Vec<RealizedOperator>) -> Self {
        let n = stages[0].n;
        let structure = Structure::Composed(stages.iter().map(|s| s.structure.clone()).collect());
        Self {
            n,
            structure,
            imp: OpImpl::Composed(stages),
        }
    }

    /// Object-space dimension N.
    pub fn n_object(&self) -> usize {
        self.n
    }

    /// Structural tag.
    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Apply the operator. Panics if `x` has the wrong length.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "apply: vector length mismatch");
        match &self.imp {
            OpImpl::Diagonal(d) => x.iter().zip(d).map(|(xi, di)| xi * di).collect(),
            OpImpl::Circulant { kernel, dims } => convolve(kernel, dims, x, false),
            OpImpl::Projection(mask) => x
                .iter()
                .zip(mask)
                .map(|(xi, &keep)| if keep { *xi } else { 0.0 })
                .collect(),
            OpImpl::Dense(m) => m.apply(x),
            OpImpl::Composed(stages) => stages.iter().fold(x.to_vec(), |v, s| s.apply(&v)),
            OpImpl::MatrixFree { apply, .. } => {
                let out = apply(x);
                assert_eq!(out.len(), self.n, "matrix-free apply length mismatch");
                out
            }
        }
    }

    /// Apply the adjoint (transpose on these real discretisations).
    pub fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n, "apply_adjoint: vector length mismatch");
        match &self.imp {
            OpImpl::Diagonal(d) => y.iter().zip(d).map(|(yi, di)| yi * di).collect(),
            OpImpl::Circulant { kernel, dims } => convolve(kernel, dims, y, true),
            OpImpl::Projection(mask) => y
                .iter()
                .zip(mask)
                .map(|(yi, &keep)| if keep { *yi } else { 0.0 })
                .collect(),
            OpImpl::Dense(m) => m.apply_transpose(y),
            OpImpl::Composed(stages) => stages
                .iter()
                .rev()
                .fold(y.to_vec(), |v, s| s.apply_adjoint(&v)),
            OpImpl::MatrixFree { adjoint, .. } => {
                let out = adjoint(y);
                assert_eq!(out.len(), self.n, "matrix-free adjoint length mismatch");
                out
            }
        }
    }

    /// Dense N x N materialisation, when one exists.
    pub fn materialize(&self) -> Option<Matrix> {
        match &self.imp {
            OpImpl::Diagonal(d) => Some(Matrix::from_diagonal(d)),
            OpImpl::Circulant { kernel, dims } => Some(circulant_matrix(kernel, dims)),
            OpImpl::Projection(mask) => Some(Matrix::from_diagonal(
                &mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect::<Vec<_>>(),
            )),
            OpImpl::Dense(m) => Some(m.clone()),
            OpImpl::Composed(stages) => {
                let mut product: Option<Matrix> = None;
                for stage in stages {
                    let m = stage.materialize()?;
                    product = Some(match product {
                        None => m,
                        Some(p) => m.matmul(&p),
                    });
                }
                product
            }
            OpImpl::MatrixFree { .. } => None,
        }
    }

    /// Singular spectrum by the cheapest exact route: closed form for
    /// diagonal / circulant / projection structure, dense SVD otherwise.
    pub fn spectrum(&self) -> Result<SingularSpectrum> {
        match &self.imp {
            OpImpl::Diagonal(d) => SingularSpectrum::full(
                d.iter().map(|v| libm::fabs(*v)).collect(),
                SpectrumMethod::Analytic,
            ),
            OpImpl::Circulant { kernel, dims } => {
                SingularSpectrum::full(dft_magnitudes(kernel, dims), SpectrumMethod::Analytic)
            }
            OpImpl::Projection(mask) => SingularSpectrum::full(
                mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
                SpectrumMethod::Analytic,
            ),
            _ => self.svd()?.spectrum(),
        }
    }

    /// Dense SVD of the materialisation.
    ///
    /// Errors with [`Error::Unsupported`] for matrix-free operators.
    pub fn svd(&self) -> Result<SvdFactors> {
        let m = self.materialize().ok_or_else(|| {
            Error::Unsupported("operator is matrix-free and cannot be materialised".into())
        })?;
        dense_svd(&m)
    }

    /// Largest singular value (the spectral norm).
    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(self.spectrum()?.sigma_max())
    }
}

/// Ordered composition: the first element acts first, so the composed map
/// is `stages[k-1] o .. o stages[0]`.
pub fn compose(stages: Vec<RealizedOperator>) -> Result<RealizedOperator> {
    if stages.is_empty() {
        return Err(Error::Composition("cannot compose an empty chain".into()));
    }
    let n = stages[0].n_object();
    for (i, s) in stages.iter().enumerate() {
        if s.n_object() != n {
            return Err(Error::Composition(format!(
                "stage {i} acts on dimension {} but the chain is on {n}",
                s.n_object()
            )));
        }
    }
    if stages.len() == 1 {
        return Ok(stages.into_iter().next().unwrap());
    }
    Ok(RealizedOperator::composed(stages))
}

fn convolve(kernel: &[f64], dims: &[usize], x: &[f64], adjoint: bool) -> Vec<f64> {
    match dims {
        [n] => {
            let n = *n;
            let mut out = vec![0.0; n];
            for (i, o) in out.iter_mut().enumerate() {
                let mut sum = 0.0;
                for (j, &xj) in x.iter().enumerate() {
                    // Adjoint of circular convolution flips the kernel index.
                    let idx = if adjoint { (j + n - i) % n } else { (i + n - j) % n };
                    sum += kernel[idx] * xj;
                }
                *o = sum;
            }
            out
        }
        [n1, n2] => {
            let (n1, n2) = (*n1, *n2);
            let mut out = vec![0.0; n1 * n2];
            for i1 in 0..n1 {
                for i2 in 0..n2 {
                    let mut sum = 0.0;
                    for j1 in 0..n1 {
                        for j2 in 0..n2 {
                            let (k1, k2) = if adjoint {
                                ((j1 + n1 - i1) % n1, (j2 + n2 - i2) % n2)
                            } else {
                                ((i1 + n1 - j1) % n1, (i2 + n2 - j2) % n2)
                            };
                            sum += kernel[k1 * n2 + k2] * x[j1 * n2 + j2];
                        }
                    }
                    out[i1 * n2 + i2] = sum;
                }
            }
            out
        }
        _ => unreachable!("grids are validated to 1 or 2 axes"),
    }
}

fn circulant_matrix(kernel: &[f64], dims: &[usize]) -> Matrix {
    let n = kernel.len();
    match dims {
        [n1] => {
            debug_assert_eq!(*n1, n);
            Matrix::from_fn(n, n, |i, j| kernel[(i + n - j) % n])
        }
        [n1, n2] => Matrix::from_fn(n, n, |r, c| {
            let (i1, i2) = (r / n2, r % n2);
            let (j1, j2) = (c / n2, c % n2);
            kernel[((i1 + n1 - j1) % n1) * n2 + ((i2 + n2 - j2) % n2)]
        }),
        _ => unreachable!("grids are validated to 1 or 2 axes"),
    }
}
