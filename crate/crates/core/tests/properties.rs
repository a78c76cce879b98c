//! Property suites for the spectral measures and operator algebra.

use opgauge_core::measures::{
    effective_rank, irreversibility, mode_weights, operator_entropy, ThresholdPolicy,
};
use opgauge_core::operator::{
    compose, linearize, realize, GridSpec, MuField, NonlinearStage, OperatorStage,
};
use opgauge_core::spectral::{dense_svd, NumericalTolerance, SingularSpectrum, SpectrumMethod};
use opgauge_core::Matrix;
use proptest::prelude::*;

fn abs_policy(epsilon: f64, delta: f64) -> ThresholdPolicy {
    ThresholdPolicy::explicit(epsilon, NumericalTolerance::absolute(delta).unwrap()).unwrap()
}

fn spectrum_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..10.0, 1..40)
}

proptest! {
    /// Entropy bounds, nonnegativity, and r_eff consistency on random spectra.
    #[test]
    fn entropy_within_bounds(values in spectrum_strategy()) {
        let n = values.len();
        let s = SingularSpectrum::full(values, SpectrumMethod::Dense).unwrap();
        if let Some(w) = mode_weights(&s) {
            let h = operator_entropy(&w);
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (n as f64).ln() + 1e-12, "H = {h} above ln {n}");
            let r_eff = h.exp();
            prop_assert!(r_eff >= 1.0 - 1e-12);
            prop_assert!(r_eff <= n as f64 + 1e-9);
        }
    }

    /// A single surviving mode always has zero entropy.
    #[test]
    fn single_mode_spectra_have_zero_entropy(sigma in 1e-6f64..1e6, zeros in 0usize..20) {
        let mut values = vec![0.0; zeros + 1];
        values[0] = sigma;
        let s = SingularSpectrum::full(values, SpectrumMethod::Dense).unwrap();
        let h = operator_entropy(&mode_weights(&s).unwrap());
        prop_assert_eq!(h, 0.0);
    }

    /// Scaling the spectrum by powers of two leaves the entropy bit-identical;
    /// arbitrary positive scales agree to roundoff.
    #[test]
    fn entropy_is_scale_invariant(values in spectrum_strategy(), pow in -24i32..24, c in 1e-6f64..1e6) {
        let base = SingularSpectrum::full(values.clone(), SpectrumMethod::Dense).unwrap();
        let Some(w) = mode_weights(&base) else { return Ok(()); };
        let h = operator_entropy(&w);

        let factor = 2.0f64.powi(pow);
        let scaled: Vec<f64> = values.iter().map(|v| v * factor).collect();
        let s2 = SingularSpectrum::full(scaled, SpectrumMethod::Dense).unwrap();
        let h2 = operator_entropy(&mode_weights(&s2).unwrap());
        prop_assert_eq!(h, h2, "power-of-two scaling must be exact");

        let scaled_c: Vec<f64> = values.iter().map(|v| v * c).collect();
        let s3 = SingularSpectrum::full(scaled_c, SpectrumMethod::Dense).unwrap();
        let h3 = operator_entropy(&mode_weights(&s3).unwrap());
        prop_assert!((h - h3).abs() <= 1e-12, "general scaling drifted: {h} vs {h3}");
    }

    /// rank is antitone and irreversibility monotone in the threshold.
    #[test]
    fn threshold_monotonicity(values in spectrum_strategy(), e1 in 1e-6f64..5.0, e2 in 1e-6f64..5.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let s = SingularSpectrum::full(values, SpectrumMethod::Dense).unwrap();
        let p_lo = abs_policy(lo, 1e-12);
        let p_hi = abs_policy(hi, 1e-12);
        let r_lo = effective_rank(&s, &p_lo).unwrap();
        let r_hi = effective_rank(&s, &p_hi).unwrap();
        prop_assert!(r_lo >= r_hi);
        let (_, i_lo) = irreversibility(&s, &p_lo).unwrap();
        let (_, i_hi) = irreversibility(&s, &p_hi).unwrap();
        prop_assert!(i_lo <= i_hi);
    }

    /// The hard/soft/recoverable partition is exhaustive and disjoint.
    #[test]
    fn loss_partition_is_exact(values in spectrum_strategy(), eps in 1e-6f64..5.0, delta_exp in -14i32..-2) {
        let delta = 10f64.powi(delta_exp);
        prop_assume!(eps >= delta);
        let n = values.len();
        let s = SingularSpectrum::full(values, SpectrumMethod::Dense).unwrap();
        let (loss, irr) = irreversibility(&s, &abs_policy(eps, delta)).unwrap();
        prop_assert_eq!(loss.hard_loss + loss.soft_loss + loss.recoverable, n);
        prop_assert_eq!(irr, (loss.hard_loss + loss.soft_loss) as f64 / n as f64);
    }

    /// Equal nonzero values on every mode maximise entropy at exactly ln N;
    /// any genuinely uneven spectrum sits strictly below.
    #[test]
    fn entropy_is_maximal_iff_uniform(n in 2usize..64, sigma in 1e-3f64..1e3) {
        let uniform = SingularSpectrum::full(vec![sigma; n], SpectrumMethod::Dense).unwrap();
        let h = operator_entropy(&mode_weights(&uniform).unwrap());
        prop_assert!((h - (n as f64).ln()).abs() <= 1e-12);

        let mut uneven = vec![sigma; n];
        uneven[0] = sigma * 2.0;
        let s = SingularSpectrum::full(uneven, SpectrumMethod::Dense).unwrap();
        let h_uneven = operator_entropy(&mode_weights(&s).unwrap());
        prop_assert!(h_uneven < h - 1e-6);
    }

    /// Dense SVD round-trip on small random matrices.
    #[test]
    fn svd_round_trip(n in 1usize..12, seed in 0u64..500) {
        let m = seeded_matrix(n, seed);
        let f = dense_svd(&m).unwrap();
        let resid = f.reconstruct().max_abs_diff(&m);
        let bound = 1e-8 * f.singular_values()[0].max(1.0);
        prop_assert!(resid <= bound, "residual {resid} > {bound}");
    }

    /// Permuting rows and columns leaves singular values unchanged.
    #[test]
    fn svd_permutation_invariance(n in 2usize..10, seed in 0u64..200, rot in 0usize..10) {
        let m = seeded_matrix(n, seed);
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let permuted = Matrix::from_fn(n, n, |i, j| m[(perm[i], perm[(j + 1) % n])]);
        let a = dense_svd(&m).unwrap();
        let b = dense_svd(&permuted).unwrap();
        let scale = a.singular_values()[0].max(1.0);
        for (x, y) in a.singular_values().iter().zip(b.singular_values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale, "{x} vs {y}");
        }
    }

    /// Scaling the matrix scales the singular values.
    #[test]
    fn svd_scale_equivariance(n in 1usize..10, seed in 0u64..200, c in 1e-3f64..1e3) {
        let m = seeded_matrix(n, seed);
        let mut scaled = m.clone();
        scaled.scale(c);
        let a = dense_svd(&m).unwrap();
        let b = dense_svd(&scaled).unwrap();
        for (x, y) in a.singular_values().iter().zip(b.singular_values()) {
            let expect = c * x;
            prop_assert!((expect - y).abs() <= 1e-12 * expect.max(1e-300), "{expect} vs {y}");
        }
    }

    /// Composition is associative on probe vectors.
    #[test]
    fn composition_associativity(seed in 0u64..200) {
        let n = 6;
        let a = op_from_seed(n, seed);
        let b = op_from_seed(n, seed.wrapping_add(1));
        let c = op_from_seed(n, seed.wrapping_add(2));
        let left = compose(vec![compose(vec![a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let right = compose(vec![a, compose(vec![b, c]).unwrap()]).unwrap();
        let probe: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let l = left.apply(&probe);
        let r = right.apply(&probe);
        for (x, y) in l.iter().zip(&r) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    /// Materialisation agrees with direct application on random probes.
    #[test]
    fn materialize_apply_consistency(seed in 0u64..200) {
        let n = 8;
        let op = op_from_seed(n, seed);
        let m = op.materialize().unwrap();
        let probe: Vec<f64> = (0..n).map(|i| ((i * 37 + seed as usize) % 11) as f64 - 5.0).collect();
        let direct = op.apply(&probe);
        let via = m.apply(&probe);
        for (x, y) in direct.iter().zip(&via) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    /// Constant attenuation is a scalar multiple of the identity and
    /// commutes with every other stage.
    #[test]
    fn constant_attenuation_commutes(seed in 0u64..200, mu in 0.0f64..3.0) {
        let n = 8;
        let grid = GridSpec::line(n, 1.0, true).unwrap();
        let att = realize(
            &OperatorStage::attenuation(MuField::Constant(mu), 1.0).unwrap(),
            &grid,
        )
        .unwrap();
        let other = op_from_seed(n, seed);
        let ab = compose(vec![att.clone(), other.clone()]).unwrap();
        let ba = compose(vec![other, att]).unwrap();
        let probe: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        let x = ab.apply(&probe);
        let y = ba.apply(&probe);
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}

fn seeded_matrix(n: usize, seed: u64) -> Matrix {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state as f64 / u64::MAX as f64 - 0.5
    };
    Matrix::from_fn(n, n, |_, _| next())
}

/// A realized operator of rotating structure: diagonal, circulant,
/// projection, or dense, depending on the seed.
fn op_from_seed(n: usize, seed: u64) -> opgauge_core::operator::RealizedOperator {
    use opgauge_core::operator::RealizedOperator;
    let grid = GridSpec::line(n, 1.0, true).unwrap();
    match seed % 4 {
        0 => {
            let d: Vec<f64> = (0..n).map(|i| ((seed + i as u64) % 7) as f64 / 7.0).collect();
            RealizedOperator::diagonal(d).unwrap()
        }
        1 => {
            let kernel: Vec<f64> = (0..n)
                .map(|i| if i == 0 { 0.6 } else { 0.4 / n as f64 })
                .collect();
            realize(&OperatorStage::kernel_convolution(kernel).unwrap(), &grid).unwrap()
        }
        2 => {
            let mask: Vec<bool> = (0..n).map(|i| (seed + i as u64) % 3 != 0).collect();
            if mask.iter().any(|&b| b) {
                realize(&OperatorStage::sampling(mask).unwrap(), &grid).unwrap()
            } else {
                RealizedOperator::identity(n)
            }
        }
        _ => RealizedOperator::from_matrix(seeded_matrix(n, seed)).unwrap(),
    }
}

#[test]
fn linearize_halving_step_improves_by_second_order() {
    // Smooth map with a third derivative: x -> sin(x) elementwise.
    let n = 6;
    let grid = GridSpec::line(n, 1.0, false).unwrap();
    let point = vec![0.9; n];
    let analytic = Matrix::from_fn(n, n, |i, j| if i == j { 0.9f64.cos() } else { 0.0 });
    let err_at = |h: f64| {
        let stage = NonlinearStage::new(
            |x: &[f64]| x.iter().map(|v| v.sin()).collect(),
            point.clone(),
        )
        .with_fd_step(h)
        .unwrap();
        linearize(&stage, &grid)
            .unwrap()
            .materialize()
            .unwrap()
            .max_abs_diff(&analytic)
    };
    let coarse = err_at(1e-3);
    let fine = err_at(5e-4);
    assert!(
        coarse / fine >= 3.5,
        "halving the step improved only {:.2}x (coarse {coarse:e}, fine {fine:e})",
        coarse / fine
    );
}

#[test]
fn blur_entropy_monotone_over_width_sweep() {
    let grid = GridSpec::line(64, 1.0, true).unwrap();
    let mut last = f64::INFINITY;
    for width in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let stage = OperatorStage::gaussian_blur(width).unwrap();
        let op = realize(&stage, &grid).unwrap();
        let h = operator_entropy(&mode_weights(&op.spectrum().unwrap()).unwrap());
        assert!(h <= last, "H({width}) = {h} exceeded previous {last}");
        last = h;
    }
}

#[test]
fn attenuation_paradox_entropy_full_rank_zero() {
    // A contraction preserves maximal entropy while losing every
    // recoverable mode once the factor crosses the threshold.
    let n = 64;
    let grid = GridSpec::line(n, 1.0, true).unwrap();
    let stage =
        OperatorStage::attenuation(MuField::Constant(std::f64::consts::LN_2), 1.0).unwrap();
    let s = realize(&stage, &grid).unwrap().spectrum().unwrap();
    let h = operator_entropy(&mode_weights(&s).unwrap());
    assert!((h - (n as f64).ln()).abs() <= 1e-12);
    for (eps, expect) in [(0.6, 0usize), (0.4, n)] {
        let rank = effective_rank(&s, &abs_policy(eps, 1e-12)).unwrap();
        assert_eq!(rank, expect, "epsilon {eps}");
    }
}
