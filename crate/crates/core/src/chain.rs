//! Analysis of composed chains: composition bounds, per-stage loss
//! attribution, parameter sweeps, and the matched-metric comparison of two
//! systems.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dft::dft_magnitudes;
use crate::error::{Error, Result};
use crate::measures::{CapacityConvention, EpsilonSpec, InfoReport, ThresholdPolicy};
use crate::operator::{
    compose, interpolate_curve, realize, GridSpec, MuField, OperatorStage, RealizedOperator,
    StageKind,
};
use crate::spectral::{dense_svd, NumericalTolerance, SingularSpectrum};

/// A full system description: grid, ordered stages (first acts first), and
/// the operating thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    /// Object-space discretisation.
    pub grid: GridSpec,
    /// Physical stages in application order.
    pub stages: Vec<OperatorStage>,
    /// Operating thresholds for reports on this chain.
    pub thresholds: ThresholdPolicy,
    /// Display label.
    pub label: String,
}

impl ChainSpec {
    /// Validated chain: stages nonempty and structurally compatible with
    /// the grid, thresholds consistent at unit norm.
    pub fn new(
        grid: GridSpec,
        stages: Vec<OperatorStage>,
        thresholds: ThresholdPolicy,
        label: impl Into<String>,
    ) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Input("chain must have at least one stage".into()));
        }
        for (i, stage) in stages.iter().enumerate() {
            stage_compatible(stage, &grid).map_err(|e| match e {
                Error::Input(msg) => Error::Input(format!("stage {i}: {msg}")),
                Error::Unsupported(msg) => Error::Unsupported(format!("stage {i}: {msg}")),
                other => other,
            })?;
        }
        thresholds.validate_at_unit_norm(grid.n())?;
        Ok(Self {
            grid,
            stages,
            thresholds,
            label: label.into(),
        })
    }

    /// Realize every stage on the grid.
    pub fn realize_stages(&self) -> Result<Vec<RealizedOperator>> {
        self.stages.iter().map(|s| realize(s, &self.grid)).collect()
    }

    /// Realize and compose the whole chain.
    pub fn realize_composed(&self) -> Result<RealizedOperator> {
        compose(self.realize_stages()?)
    }
}

/// Cheap structural stage/grid compatibility checks (shapes, periodicity);
/// `realize` re-validates on the way to a concrete operator.
fn stage_compatible(stage: &OperatorStage, grid: &GridSpec) -> Result<()> {
    let n = grid.n();
    let needs_periodic = matches!(
        stage.kind(),
        StageKind::GaussianBlur { .. } | StageKind::KernelConvolution { .. } | StageKind::Mtf { .. }
    );
    if needs_periodic && !grid.periodic() {
        return Err(Error::Unsupported(format!(
            "{} stage needs a periodic grid",
            stage.kind().name()
        )));
    }
    let len_ok = match stage.kind() {
        StageKind::Attenuation {
            mu: MuField::PerSample(v),
            ..
        } => v.len() == n,
        StageKind::KernelConvolution { kernel } => kernel.len() == n,
        StageKind::Sampling { mask } => mask.len() == n,
        StageKind::Matrix { matrix } => matrix.rows() == n,
        StageKind::Nonlinear {
            operating_point, ..
        } => operating_point.len() == n,
        _ => true,
    };
    if !len_ok {
        return Err(Error::Input(format!(
            "{} stage does not match the grid dimension {n}",
            stage.kind().name()
        )));
    }
    Ok(())
}

/// Verification data for the singular-value composition bounds of one pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompositionDiagnostics {
    /// `||B|| sigma_k(A) - sigma_k(BA)` per k; nonnegative up to roundoff.
    pub slack_norm_b: Vec<f64>,
    /// `||A|| sigma_k(B) - sigma_k(BA)` per k.
    pub slack_norm_a: Vec<f64>,
    /// Whether `rank_eps(BA) <= min(rank_{eps/||B||}(A), rank_{eps/||A||}(B))`.
    pub rank_inequality_ok: bool,
    /// True when both factors are non-expansive (`sigma_max <= 1 + 1e-12`),
    /// the regime where irreversibility is monotone at fixed epsilon.
    pub monotonicity_applicable: bool,
    /// `I(BA) - max(I(A), I(B))` at the fixed operating point.
    pub irreversibility_delta: f64,
}

const NON_EXPANSIVE_TOL: f64 = 1.0 + 1e-12;

/// Check the composition bounds for the pair (a acts first, then b).
///
/// Uses materialised dense SVDs only; randomized spectra are excluded so
/// approximation error cannot masquerade as a bound violation.
pub fn composition_diagnostics(
    a: &RealizedOperator,
    b: &RealizedOperator,
    policy: &ThresholdPolicy,
) -> Result<CompositionDiagnostics> {
    if a.n_object() != b.n_object() {
        return Err(Error::Input(format!(
            "operators act on different dimensions {} and {}",
            a.n_object(),
            b.n_object()
        )));
    }
    let ma = a.materialize().ok_or_else(non_materializable)?;
    let mb = b.materialize().ok_or_else(non_materializable)?;
    let sa = dense_svd(&ma)?.spectrum()?;
    let sb = dense_svd(&mb)?.spectrum()?;
    let sba = dense_svd(&mb.matmul(&ma))?.spectrum()?;
    let norm_a = sa.sigma_max();
    let norm_b = sb.sigma_max();

    let slack_norm_b: Vec<f64> = sba
        .values()
        .iter()
        .zip(sa.values())
        .map(|(c, s)| norm_b * s - c)
        .collect();
    let slack_norm_a: Vec<f64> = sba
        .values()
        .iter()
        .zip(sb.values())
        .map(|(c, s)| norm_a * s - c)
        .collect();

    let epsilon = policy.epsilon_value();
    let rank_ba = count_at_least(&sba, epsilon);
    let bound_a = count_at_least(&sa, scaled_threshold(epsilon, norm_b));
    let bound_b = count_at_least(&sb, scaled_threshold(epsilon, norm_a));
    let rank_inequality_ok = rank_ba <= bound_a.min(bound_b);

    let monotonicity_applicable = norm_a <= NON_EXPANSIVE_TOL && norm_b <= NON_EXPANSIVE_TOL;
    let irr_a = crate::measures::irreversibility(&sa, policy)?.1;
    let irr_b = crate::measures::irreversibility(&sb, policy)?.1;
    let irr_ba = crate::measures::irreversibility(&sba, policy)?.1;
    let irreversibility_delta = irr_ba - irr_a.max(irr_b);

    Ok(CompositionDiagnostics {
        slack_norm_b,
        slack_norm_a,
        rank_inequality_ok,
        monotonicity_applicable,
        irreversibility_delta,
    })
}

fn non_materializable() -> Error {
    Error::Unsupported("composition diagnostics need materialisable factors".into())
}

fn scaled_threshold(epsilon: f64, norm: f64) -> f64 {
    if norm > 0.0 {
        epsilon / norm
    } else {
        f64::INFINITY
    }
}

fn count_at_least(spectrum: &SingularSpectrum, threshold: f64) -> usize {
    spectrum.values().iter().filter(|&&v| v >= threshold).count()
}

/// One report per prefix composition (stage 1, stages 1-2, ...); report
/// differences attribute marginal loss to each stage at the operating point.
pub fn stage_attribution(
    chain: &[RealizedOperator],
    policy: &ThresholdPolicy,
    convention: CapacityConvention,
) -> Result<Vec<InfoReport>> {
    if chain.is_empty() {
        return Err(Error::Input("attribution needs a nonempty chain".into()));
    }
    let mut prefix = None;
    let mut reports = Vec::with_capacity(chain.len());
    for op in chain {
        let m = op.materialize().ok_or_else(non_materializable)?;
        let product = match prefix {
            None => m,
            Some(p) => m.matmul(&p),
        };
        let spectrum = dense_svd(&product)?.spectrum()?;
        reports.push(InfoReport::from_spectrum(&spectrum, policy, convention)?);
        prefix = Some(product);
    }
    Ok(reports)
}

/// Which system a metric favours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MetricOrder {
    /// System A has the larger value.
    AGreater,
    /// System B has the larger value.
    BGreater,
    /// Equal (within 1e-12 for real-valued metrics).
    Equal,
}

/// Conventional figures of merit for one system.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemMetrics {
    /// Operating signal-to-noise proxy `kappa / epsilon`; equal for both
    /// systems by construction since they share one threshold policy.
    pub snr: f64,
    /// First grid frequency where the effective transfer drops below
    /// [`MTF_CUTOFF_MAGNITUDE`].
    pub mtf_cutoff_frequency: f64,
}

/// Orderings derived solely from the two reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verdicts {
    /// Capacity ordering (compared through the integer ranks).
    pub capacity_order: MetricOrder,
    /// Irreversibility ordering (compared through the loss counts).
    pub irreversibility_order: MetricOrder,
    /// Entropy ordering; an undefined (degenerate) entropy counts as lowest.
    pub entropy_order: MetricOrder,
}

/// Parameters found by the bundled comparison search.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchRecord {
    /// Mild blur width of system A.
    pub blur_width_a: f64,
    /// Kept samples of system A.
    pub sampling_m_a: usize,
    /// Strong blur width of system B.
    pub blur_width_b: f64,
    /// Kept samples of system B.
    pub sampling_m_b: usize,
    /// Matched cutoff of system A.
    pub mtf_cutoff_a: f64,
    /// Matched cutoff of system B.
    pub mtf_cutoff_b: f64,
    /// `|c_A - c_B| / max(c_A, c_B)`.
    pub cutoff_relative_gap: f64,
}

/// Side-by-side comparison of two systems on the same grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonReport {
    /// Report for system A.
    pub report_a: InfoReport,
    /// Report for system B.
    pub report_b: InfoReport,
    /// Conventional metrics of system A.
    pub metrics_a: SystemMetrics,
    /// Conventional metrics of system B.
    pub metrics_b: SystemMetrics,
    /// Metric orderings.
    pub verdicts: Verdicts,
    /// Present when the comparison came from the bundled parameter search.
    pub search: Option<SearchRecord>,
}

/// Magnitude at which the effective-transfer cutoff is read.
pub const MTF_CUTOFF_MAGNITUDE: f64 = 0.1;

/// Compare two systems at one shared operating policy.
pub fn comparative_experiment(
    system_a: &ChainSpec,
    system_b: &ChainSpec,
    policy: &ThresholdPolicy,
    convention: CapacityConvention,
) -> Result<ComparisonReport> {
    if system_a.grid != system_b.grid {
        return Err(Error::Input(
            "comparison requires both systems on the same grid".into(),
        ));
    }
    let spec_a = system_a.realize_composed()?.spectrum()?;
    let spec_b = system_b.realize_composed()?.spectrum()?;
    let report_a = InfoReport::from_spectrum(&spec_a, policy, convention)?;
    let report_b = InfoReport::from_spectrum(&spec_b, policy, convention)?;

    let snr = match policy.epsilon_spec() {
        EpsilonSpec::Derived { kappa, .. } => kappa / policy.epsilon_value(),
        EpsilonSpec::Explicit(e) => 1.0 / e,
    };
    let metrics_a = SystemMetrics {
        snr,
        mtf_cutoff_frequency: mtf_cutoff(system_a)?,
    };
    let metrics_b = SystemMetrics {
        snr,
        mtf_cutoff_frequency: mtf_cutoff(system_b)?,
    };

    let verdicts = Verdicts {
        capacity_order: order_usize(report_a.rank_eps, report_b.rank_eps),
        irreversibility_order: order_usize(
            report_a.hard_loss + report_a.soft_loss,
            report_b.hard_loss + report_b.soft_loss,
        ),
        entropy_order: order_entropy(report_a.entropy, report_b.entropy),
    };

    Ok(ComparisonReport {
        report_a,
        report_b,
        metrics_a,
        metrics_b,
        verdicts,
        search: None,
    })
}

fn order_usize(a: usize, b: usize) -> MetricOrder {
    match a.cmp(&b) {
        core::cmp::Ordering::Greater => MetricOrder::AGreater,
        core::cmp::Ordering::Less => MetricOrder::BGreater,
        core::cmp::Ordering::Equal => MetricOrder::Equal,
    }
}

fn order_entropy(a: Option<f64>, b: Option<f64>) -> MetricOrder {
    match (a, b) {
        (None, None) => MetricOrder::Equal,
        (Some(_), None) => MetricOrder::AGreater,
        (None, Some(_)) => MetricOrder::BGreater,
        (Some(x), Some(y)) if (x - y).abs() <= 1e-12 => MetricOrder::Equal,
        (Some(x), Some(y)) if x > y => MetricOrder::AGreater,
        _ => MetricOrder::BGreater,
    }
}

/// Effective-transfer cutoff of a chain: scanning grid frequencies in
/// ascending order, the first one where the product of the LSI stage
/// responses (times the sampling band indicator) drops below
/// [`MTF_CUTOFF_MAGNITUDE`]. Returns the grid's maximum frequency when the
/// transfer never drops in band.
///
/// Conventions: a sampling stage keeping M of N samples contributes a band
/// limit at `pi M / (N spacing)` on 1-D grids (and is skipped on 2-D
/// grids); spatially varying attenuation, matrix, and nonlinear stages have
/// no frequency response and are skipped.
pub fn mtf_cutoff(chain: &ChainSpec) -> Result<f64> {
    let grid = &chain.grid;
    let n = grid.n();
    let freqs = grid.frequency_magnitudes();
    let mut transfer = alloc::vec![1.0; n];
    for stage in &chain.stages {
        match stage.kind() {
            StageKind::GaussianBlur { width } => {
                for (t, k) in transfer.iter_mut().zip(&freqs) {
                    *t *= libm::exp(-0.5 * width * width * k * k);
                }
            }
            StageKind::Mtf { curve } => {
                for (t, k) in transfer.iter_mut().zip(&freqs) {
                    *t *= interpolate_curve(curve, *k)?;
                }
            }
            StageKind::KernelConvolution { kernel } => {
                if kernel.len() != n {
                    return Err(Error::Input(
                        "convolution kernel does not match the grid".into(),
                    ));
                }
                for (t, m) in transfer.iter_mut().zip(dft_magnitudes(kernel, grid.dims())) {
                    *t *= m;
                }
            }
            StageKind::Attenuation {
                mu: MuField::Constant(c),
                distance,
            } => {
                let f = libm::exp(-c * distance);
                for t in transfer.iter_mut() {
                    *t *= f;
                }
            }
            StageKind::Sampling { mask } => {
                if grid.dims().len() == 1 {
                    let m = mask.iter().filter(|&&b| b).count();
                    let band = core::f64::consts::PI * m as f64
                        / (n as f64 * grid.spacing()[0]);
                    for (t, k) in transfer.iter_mut().zip(&freqs) {
                        if *k > band + 1e-12 {
                            *t = 0.0;
                        }
                    }
                }
            }
            // No frequency response: spatially varying attenuation, matrix,
            // nonlinear.
            _ => {}
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| freqs[i].partial_cmp(&freqs[j]).unwrap().then(i.cmp(&j)));
    for idx in order {
        if transfer[idx] < MTF_CUTOFF_MAGNITUDE {
            return Ok(freqs[idx]);
        }
    }
    Ok(grid.max_frequency())
}

/// Reports for one stage field swept over a list of values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepResult {
    /// The swept parameter path.
    pub parameter: String,
    /// Values in input order.
    pub values: Vec<f64>,
    /// One report per value, in value order.
    pub reports: Vec<InfoReport>,
}

/// Sweep one numeric stage field of a chain template.
///
/// Parameter paths have the form `stages[i].field` with fields `mu` and
/// `distance` (constant attenuation), `width` (gaussian blur), and `m`
/// (sampling; rebuilds the mask keeping the first m positions).
pub fn sweep(
    template: &ChainSpec,
    parameter: &str,
    values: &[f64],
    policy: &ThresholdPolicy,
) -> Result<SweepResult> {
    let (index, field) = parse_parameter_path(parameter)?;
    if index >= template.stages.len() {
        return Err(Error::Input(format!(
            "parameter path `{parameter}`: chain has {} stages",
            template.stages.len()
        )));
    }
    let mut reports = Vec::with_capacity(values.len());
    for &value in values {
        let mut chain = template.clone();
        chain.stages[index] = set_stage_field(&chain.stages[index], field, value)
            .map_err(|e| match e {
                Error::Input(msg) => Error::Input(format!("parameter path `{parameter}`: {msg}")),
                other => other,
            })?;
        let spectrum = chain.realize_composed()?.spectrum()?;
        reports.push(InfoReport::from_spectrum(
            &spectrum,
            policy,
            CapacityConvention::default(),
        )?);
    }
    Ok(SweepResult {
        parameter: String::from(parameter),
        values: values.to_vec(),
        reports,
    })
}

fn parse_parameter_path(path: &str) -> Result<(usize, &str)> {
    let bad = || {
        Error::Input(format!(
            "parameter path `{path}` must have the form stages[i].field"
        ))
    };
    let rest = path.strip_prefix("stages[").ok_or_else(bad)?;
    let close = rest.find(']').ok_or_else(bad)?;
    let index: usize = rest[..close].parse().map_err(|_| bad())?;
    let field = rest[close + 1..].strip_prefix('.').ok_or_else(bad)?;
    if field.is_empty() {
        return Err(bad());
    }
    Ok((index, field))
}

fn set_stage_field(stage: &OperatorStage, field: &str, value: f64) -> Result<OperatorStage> {
    let label = stage.label();
    let updated = match (stage.kind(), field) {
        (StageKind::Attenuation { distance, .. }, "mu") => {
            OperatorStage::attenuation(MuField::Constant(value), *distance)?
        }
        (StageKind::Attenuation { mu, .. }, "distance") => {
            OperatorStage::attenuation(mu.clone(), value)?
        }
        (StageKind::GaussianBlur { .. }, "width") => OperatorStage::gaussian_blur(value)?,
        (StageKind::Sampling { mask }, "m") => {
            let m = value as usize;
            if value != m as f64 {
                return Err(Error::Input(format!(
                    "sampling count must be a nonnegative integer, got {value}"
                )));
            }
            OperatorStage::sampling_first_m(m, mask.len())?
        }
        (kind, _) => {
            return Err(Error::Input(format!(
                "no sweepable field `{field}` on a {} stage",
                kind.name()
            )))
        }
    };
    Ok(updated.with_label(label))
}

// Candidate grids for the bundled comparison search. System A is a mild
// blur into coarse decimation, system B a strong blur into dense
// decimation; the search keeps pairs whose cutoffs match within 5% and
// picks the tightest match.
const BUNDLED_N: usize = 256;
const WIDTHS_A: [f64; 5] = [0.4, 0.5, 0.6, 0.75, 1.0];
const STRIDES_A: [usize; 2] = [4, 8];
const WIDTHS_B: [f64; 11] = [1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 3.75, 4.0];
const STRIDES_B: [usize; 1] = [2];
const CUTOFF_MATCH_TOL: f64 = 0.05;
const BUNDLED_EPSILON: f64 = 0.01;

/// Operating policy of the bundled comparison.
pub fn bundled_policy() -> ThresholdPolicy {
    ThresholdPolicy::explicit(BUNDLED_EPSILON, NumericalTolerance::default())
        .expect("bundled epsilon is valid")
}

fn bundled_chain(width: f64, stride: usize, label: &str) -> Result<ChainSpec> {
    let grid = GridSpec::line(BUNDLED_N, 1.0, true)?;
    let blur = OperatorStage::gaussian_blur(width)?;
    let sampling = OperatorStage::sampling_decimate(stride, BUNDLED_N)?;
    ChainSpec::new(grid, alloc::vec![blur, sampling], bundled_policy(), label)
}

/// Deterministic grid search for the bundled mild-blur/coarse-sampling vs
/// strong-blur/dense-sampling pair with matched cutoffs.
pub fn bundled_chain_pair() -> Result<(ChainSpec, ChainSpec, SearchRecord)> {
    let mut best: Option<(f64, ChainSpec, ChainSpec, SearchRecord)> = None;
    for &width_a in &WIDTHS_A {
        for &stride_a in &STRIDES_A {
            let chain_a = bundled_chain(width_a, stride_a, "system_a")?;
            let cutoff_a = mtf_cutoff(&chain_a)?;
            for &width_b in &WIDTHS_B {
                if width_b < 2.0 * width_a {
                    continue; // not meaningfully "stronger" blur
                }
                for &stride_b in &STRIDES_B {
                    if stride_b >= stride_a {
                        continue; // not denser sampling
                    }
                    let chain_b = bundled_chain(width_b, stride_b, "system_b")?;
                    let cutoff_b = mtf_cutoff(&chain_b)?;
                    let gap = (cutoff_a - cutoff_b).abs() / cutoff_a.max(cutoff_b);
                    if gap > CUTOFF_MATCH_TOL {
                        continue;
                    }
                    if best.as_ref().map(|(g, ..)| gap < *g).unwrap_or(true) {
                        let record = SearchRecord {
                            blur_width_a: width_a,
                            sampling_m_a: BUNDLED_N / stride_a,
                            blur_width_b: width_b,
                            sampling_m_b: BUNDLED_N / stride_b,
                            mtf_cutoff_a: cutoff_a,
                            mtf_cutoff_b: cutoff_b,
                            cutoff_relative_gap: gap,
                        };
                        best = Some((gap, chain_a.clone(), chain_b, record));
                    }
                }
            }
        }
    }
    let (_, a, b, record) = best.ok_or_else(|| {
        Error::Parameter("bundled search found no matched-cutoff pair".into())
    })?;
    Ok((a, b, record))
}

/// Run the bundled comparison end to end: search, certify the matched
/// cutoffs, then compare the two systems at the bundled policy.
pub fn bundled_comparative_experiment() -> Result<ComparisonReport> {
    let (a, b, record) = bundled_chain_pair()?;
    let mut report = comparative_experiment(&a, &b, &bundled_policy(), CapacityConvention::default())?;
    report.search = Some(record);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::spectral::NumericalTolerance;
    use alloc::vec;

    fn abs_policy(epsilon: f64, delta: f64) -> ThresholdPolicy {
        ThresholdPolicy::explicit(epsilon, NumericalTolerance::absolute(delta).unwrap()).unwrap()
    }

    #[test]
    fn diagonal_pair_slacks() {
        let a = RealizedOperator::diagonal(vec![1.0, 0.5]).unwrap();
        let b = RealizedOperator::diagonal(vec![0.5, 1.0]).unwrap();
        let d = composition_diagnostics(&a, &b, &abs_policy(0.3, 1e-12)).unwrap();
        // sigma(BA) = (0.5, 0.5); ||B|| sigma(A) = (1.0, 0.5).
        assert!((d.slack_norm_b[0] - 0.5).abs() < 1e-14);
        assert!(d.slack_norm_b[1].abs() < 1e-14);
        assert!(d.rank_inequality_ok);
        assert!(d.monotonicity_applicable);
        assert!(d.irreversibility_delta >= -1e-12);
    }

    #[test]
    fn identity_pair_has_zero_slack() {
        let a = RealizedOperator::identity(4);
        let b = RealizedOperator::identity(4);
        let d = composition_diagnostics(&a, &b, &abs_policy(0.5, 1e-12)).unwrap();
        for s in d.slack_norm_b.iter().chain(&d.slack_norm_a) {
            assert!(s.abs() < 1e-12);
        }
        assert!(d.monotonicity_applicable);
        assert!((d.irreversibility_delta - 0.0).abs() < 1e-15);
    }

    #[test]
    fn diagnostics_reject_matrix_free_factors() {
        let a = RealizedOperator::from_fns(3, |x| x.to_vec(), |y| y.to_vec()).unwrap();
        let b = RealizedOperator::identity(3);
        assert!(matches!(
            composition_diagnostics(&a, &b, &ThresholdPolicy::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn diagnostics_reject_dimension_mismatch() {
        let a = RealizedOperator::identity(3);
        let b = RealizedOperator::identity(4);
        assert!(matches!(
            composition_diagnostics(&a, &b, &ThresholdPolicy::default()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn attribution_of_identity_chain_is_flat() {
        let chain = vec![RealizedOperator::identity(4), RealizedOperator::identity(4)];
        let reports = stage_attribution(
            &chain,
            &abs_policy(0.5, 1e-12),
            CapacityConvention::default(),
        )
        .unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0], reports[1]);
        assert_eq!(reports[0].irreversibility, 0.0);
    }

    #[test]
    fn attribution_sampling_chain_reaches_half_loss() {
        let grid = GridSpec::line(16, 1.0, true).unwrap();
        let chain = ChainSpec::new(
            grid,
            vec![OperatorStage::sampling_first_m(8, 16).unwrap()],
            abs_policy(0.5, 1e-12),
            "half",
        )
        .unwrap();
        let ops = chain.realize_stages().unwrap();
        let reports =
            stage_attribution(&ops, &chain.thresholds, CapacityConvention::default()).unwrap();
        assert_eq!(reports.last().unwrap().irreversibility, 0.5);
    }

    #[test]
    fn attribution_is_monotone_for_non_expansive_chain() {
        let grid = GridSpec::line(16, 1.0, true).unwrap();
        let chain = ChainSpec::new(
            grid,
            vec![
                OperatorStage::gaussian_blur(1.0).unwrap(),
                OperatorStage::sampling_first_m(8, 16).unwrap(),
            ],
            abs_policy(0.2, 1e-12),
            "blur+sample",
        )
        .unwrap();
        let ops = chain.realize_stages().unwrap();
        let reports =
            stage_attribution(&ops, &chain.thresholds, CapacityConvention::default()).unwrap();
        for pair in reports.windows(2) {
            assert!(pair[1].irreversibility >= pair[0].irreversibility - 1e-12);
        }
    }

    #[test]
    fn identical_chains_compare_equal() {
        let grid = GridSpec::line(8, 1.0, true).unwrap();
        let chain = ChainSpec::new(
            grid,
            vec![OperatorStage::sampling_first_m(4, 8).unwrap()],
            abs_policy(0.5, 1e-12),
            "x",
        )
        .unwrap();
        let r = comparative_experiment(
            &chain,
            &chain,
            &abs_policy(0.5, 1e-12),
            CapacityConvention::default(),
        )
        .unwrap();
        assert_eq!(r.verdicts.capacity_order, MetricOrder::Equal);
        assert_eq!(r.verdicts.irreversibility_order, MetricOrder::Equal);
        assert_eq!(r.verdicts.entropy_order, MetricOrder::Equal);
    }

    #[test]
    fn denser_sampling_wins_capacity() {
        let grid = GridSpec::line(16, 1.0, true).unwrap();
        let policy = abs_policy(0.5, 1e-12);
        let a = ChainSpec::new(
            grid.clone(),
            vec![OperatorStage::sampling_first_m(4, 16).unwrap()],
            policy,
            "coarse",
        )
        .unwrap();
        let b = ChainSpec::new(
            grid,
            vec![OperatorStage::sampling_first_m(8, 16).unwrap()],
            policy,
            "dense",
        )
        .unwrap();
        let r = comparative_experiment(&a, &b, &policy, CapacityConvention::default()).unwrap();
        assert_eq!(r.verdicts.capacity_order, MetricOrder::BGreater);
        assert_eq!(r.verdicts.irreversibility_order, MetricOrder::AGreater);
    }

    #[test]
    fn sweep_attenuation_ranks() {
        // exp(-mu d) in {1, 0.5, 0.1} against epsilon 0.2: ranks N, N, 0.
        let grid = GridSpec::line(8, 1.0, true).unwrap();
        let policy = abs_policy(0.2, 1e-12);
        let chain = ChainSpec::new(
            grid,
            vec![OperatorStage::attenuation(MuField::Constant(0.0), 1.0).unwrap()],
            policy,
            "att",
        )
        .unwrap();
        let result = sweep(
            &chain,
            "stages[0].mu",
            &[0.0, core::f64::consts::LN_2, libm::log(10.0)],
            &policy,
        )
        .unwrap();
        let ranks: Vec<usize> = result.reports.iter().map(|r| r.rank_eps).collect();
        assert_eq!(ranks, vec![8, 8, 0]);
    }

    #[test]
    fn sweep_sampling_marks_irreversibility() {
        let grid = GridSpec::line(16, 1.0, true).unwrap();
        let policy = abs_policy(0.5, 1e-12);
        let chain = ChainSpec::new(
            grid,
            vec![OperatorStage::sampling_first_m(16, 16).unwrap()],
            policy,
            "s",
        )
        .unwrap();
        let result = sweep(&chain, "stages[0].m", &[16.0, 8.0, 4.0], &policy).unwrap();
        let irr: Vec<f64> = result.reports.iter().map(|r| r.irreversibility).collect();
        assert_eq!(irr, vec![0.0, 0.5, 0.75]);
    }

    #[test]
    fn sweep_blur_width_is_monotone_in_rank() {
        let grid = GridSpec::line(64, 1.0, true).unwrap();
        let policy = abs_policy(0.5, 1e-12);
        let chain = ChainSpec::new(
            grid,
            vec![OperatorStage::gaussian_blur(1.0).unwrap()],
            policy,
            "blur",
        )
        .unwrap();
        let result = sweep(&chain, "stages[0].width", &[0.5, 1.0, 2.0], &policy).unwrap();
        let ranks: Vec<usize> = result.reports.iter().map(|r| r.rank_eps).collect();
        assert!(ranks[0] >= ranks[1] && ranks[1] >= ranks[2], "{ranks:?}");
    }

    #[test]
    fn bad_parameter_paths_are_input_errors() {
        let grid = GridSpec::line(4, 1.0, true).unwrap();
        let policy = ThresholdPolicy::default();
        let chain = ChainSpec::new(
            grid,
            vec![OperatorStage::sampling_first_m(2, 4).unwrap()],
            policy,
            "s",
        )
        .unwrap();
        for path in ["stages[0].nope", "stages[5].m", "stage[0].m", "stages[x].m"] {
            assert!(
                matches!(sweep(&chain, path, &[1.0], &policy), Err(Error::Input(_))),
                "{path}"
            );
        }
    }

    #[test]
    fn chain_rejects_incompatible_stage_shapes() {
        let grid = GridSpec::line(4, 1.0, true).unwrap();
        let err = ChainSpec::new(
            grid,
            vec![OperatorStage::matrix(Matrix::identity(3)).unwrap()],
            ThresholdPolicy::default(),
            "bad",
        );
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn cutoff_of_pure_blur_matches_closed_form() {
        let grid = GridSpec::line(256, 1.0, true).unwrap();
        let width = 2.0f64;
        let chain = ChainSpec::new(
            grid,
            vec![OperatorStage::gaussian_blur(width).unwrap()],
            bundled_policy(),
            "b",
        )
        .unwrap();
        let cutoff = mtf_cutoff(&chain).unwrap();
        // First grid frequency beyond sqrt(2 ln 10) / width.
        let k_star = libm::sqrt(2.0 * libm::log(10.0)) / width;
        assert!(cutoff >= k_star);
        assert!(cutoff <= k_star + 2.0 * core::f64::consts::TAU / 256.0);
    }

    #[test]
    fn cutoff_of_sampling_is_band_edge() {
        let grid = GridSpec::line(64, 1.0, true).unwrap();
        let chain = ChainSpec::new(
            grid,
            vec![OperatorStage::sampling_decimate(4, 64).unwrap()],
            bundled_policy(),
            "s",
        )
        .unwrap();
        let cutoff = mtf_cutoff(&chain).unwrap();
        let band = core::f64::consts::PI * 16.0 / 64.0;
        assert!(cutoff > band && cutoff < band + 0.2, "cutoff {cutoff}");
    }
}
