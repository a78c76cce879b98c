//! Small direct DFT helpers for circulant stages.
//!
//! Grids are desk-scale (N up to a few hundred), so the O(N^2) sums here
//! are cheap and keep the crate free of an FFT dependency. Arguments are
//! reduced modulo the period before calling `cos`/`sin` so the phase stays
//! in one turn.

use alloc::vec;
use alloc::vec::Vec;

const TWO_PI: f64 = core::f64::consts::TAU;

fn cos_turn(num: usize, den: usize) -> f64 {
    libm::cos(TWO_PI * ((num % den) as f64) / den as f64)
}

fn sin_turn(num: usize, den: usize) -> f64 {
    libm::sin(TWO_PI * ((num % den) as f64) / den as f64)
}

/// Magnitudes of the DFT of `kernel` over a 1-D or 2-D periodic grid.
///
/// `dims` gives the per-axis sample counts; `kernel` is flattened row-major
/// and its length must equal the product of `dims`.
pub fn dft_magnitudes(kernel: &[f64], dims: &[usize]) -> Vec<f64> {
    match dims {
        [n] => {
            debug_assert_eq!(kernel.len(), *n);
            (0..*n)
                .map(|m| {
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for (j, &v) in kernel.iter().enumerate() {
                        re += v * cos_turn(m * j, *n);
                        im -= v * sin_turn(m * j, *n);
                    }
                    libm::hypot(re, im)
                })
                .collect()
        }
        [n1, n2] => {
            debug_assert_eq!(kernel.len(), n1 * n2);
            // Row-column pass: DFT along axis 1, then axis 0.
            let mut re = kernel.to_vec();
            let mut im = vec![0.0; kernel.len()];
            for i1 in 0..*n1 {
                let offs = i1 * n2;
                let (row_re, row_im) = dft_line(&re[offs..offs + n2], &im[offs..offs + n2]);
                re[offs..offs + n2].copy_from_slice(&row_re);
                im[offs..offs + n2].copy_from_slice(&row_im);
            }
            let mut out = vec![0.0; kernel.len()];
            for i2 in 0..*n2 {
                let col_re: Vec<f64> = (0..*n1).map(|i1| re[i1 * n2 + i2]).collect();
                let col_im: Vec<f64> = (0..*n1).map(|i1| im[i1 * n2 + i2]).collect();
                let (tr, ti) = dft_line(&col_re, &col_im);
                for i1 in 0..*n1 {
                    out[i1 * n2 + i2] = libm::hypot(tr[i1], ti[i1]);
                }
            }
            out
        }
        _ => unreachable!("grids are validated to 1 or 2 axes"),
    }
}

fn dft_line(re: &[f64], im: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = re.len();
    let mut out_re = vec![0.0; n];
    let mut out_im = vec![0.0; n];
    for m in 0..n {
        let mut r = 0.0;
        let mut i = 0.0;
        for j in 0..n {
            let c = cos_turn(m * j, n);
            let s = sin_turn(m * j, n);
            r += re[j] * c + im[j] * s;
            i += im[j] * c - re[j] * s;
        }
        out_re[m] = r;
        out_im[m] = i;
    }
    (out_re, out_im)
}

/// Real-space kernel whose DFT equals the given real transfer values.
///
/// `transfer` is indexed like the DFT output (flattened row-major over
/// `dims`) and must be even in every axis index (`T[n-m] == T[m]`), which
/// holds for any transfer that is a function of the frequency magnitude.
/// Under that symmetry the inverse DFT is the plain cosine sum evaluated
/// here and the result is real.
pub fn kernel_from_even_transfer(transfer: &[f64], dims: &[usize]) -> Vec<f64> {
    match dims {
        [n] => {
            debug_assert_eq!(transfer.len(), *n);
            (0..*n)
                .map(|j| {
                    let sum: f64 = transfer
                        .iter()
                        .enumerate()
                        .map(|(m, &t)| t * cos_turn(m * j, *n))
                        .sum();
                    sum / *n as f64
                })
                .collect()
        }
        [n1, n2] => {
            debug_assert_eq!(transfer.len(), n1 * n2);
            // partial[m1][j2] = sum_m2 T[m1, m2] cos(2 pi m2 j2 / n2)
            let mut partial = vec![0.0; n1 * n2];
            for m1 in 0..*n1 {
                for j2 in 0..*n2 {
                    let mut sum = 0.0;
                    for m2 in 0..*n2 {
                        sum += transfer[m1 * n2 + m2] * cos_turn(m2 * j2, *n2);
                    }
                    partial[m1 * n2 + j2] = sum;
                }
            }
            let scale = 1.0 / (n1 * n2) as f64;
            let mut kernel = vec![0.0; n1 * n2];
            for j1 in 0..*n1 {
                for j2 in 0..*n2 {
                    let mut sum = 0.0;
                    for m1 in 0..*n1 {
                        sum += partial[m1 * n2 + j2] * cos_turn(m1 * j1, *n1);
                    }
                    kernel[j1 * n2 + j2] = sum * scale;
                }
            }
            kernel
        }
        _ => unreachable!("grids are validated to 1 or 2 axes"),
    }
}
