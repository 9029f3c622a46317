//! Renormalization, composed layers `RN o A`, and ensemble trajectories.
//!
//! The renormalization operator re-whitens an ensemble to a target mean and
//! covariance:
//!
//! ```text
//! RN(eta) = eta0 + Lambda0^(1/2) Sbar^(-1/2) (eta - etabar)
//! ```
//!
//! where `(etabar, Sbar)` are the empirical mean and centered covariance
//! (divisor `N`). Composing it with the attention update under a Gaussian
//! carrier `N(mu, S)` leaves `N(S^-1 mu, S^-1)` invariant; see
//! [`equilibrium_affine_check`].

use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};

use crate::attention::{attention_update, AttentionConfig, ParamEnsemble};
use crate::error::{Error, Result};
use crate::expfam::{DiscretePoints, IntrinsicMeasure};
use crate::linalg::{check_dim, check_finite, sym_fn, PsdMatrix, EIGEN_FLOOR};
use crate::stats::{kendall_trend_resolved, skewness, KendallTrend};

/// Default ridge added to a rank-deficient ensemble covariance.
pub const DEFAULT_RIDGE: f64 = 1e-8;
/// Smallest eigenvalue accepted for a renormalization target covariance.
pub const MIN_TARGET_EIGENVALUE: f64 = 1e-12;
/// Eigenvalues below this fraction of the largest count as rank deficiency.
pub const RELATIVE_RANK_TOL: f64 = 1e-12;
/// Pass threshold of [`equilibrium_affine_check`].
pub const EQUILIBRIUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMoments {
    pub mean: DVector<f64>,
    pub cov: PsdMatrix,
}

/// Empirical mean and centered covariance (divisor `N`), accumulated in
/// member order.
pub fn moments(ensemble: &ParamEnsemble) -> Result<EnsembleMoments> {
    let n = ensemble.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let dim = ensemble.dim();
    let mut mean = DVector::zeros(dim);
    for m in ensemble.members() {
        for (a, v) in mean.iter_mut().zip(m) {
            *a += v;
        }
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    let mut c = DVector::zeros(dim);
    for m in ensemble.members() {
        for i in 0..dim {
            c[i] = m[i] - mean[i];
        }
        cov.ger(1.0, &c, &c, 1.0);
    }
    cov /= n as f64;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(EnsembleMoments {
        mean,
        cov: PsdMatrix::new(cov)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenormSpec {
    target_mean: DVector<f64>,
    target_cov: PsdMatrix,
    ridge: f64,
}

impl RenormSpec {
    pub fn new(target_mean: DVector<f64>, target_cov: PsdMatrix, ridge: f64) -> Result<Self> {
        check_dim(target_mean.len(), target_cov.dim())?;
        check_finite(target_mean.as_slice(), "renormalization target mean")?;
        let min = target_cov.eigenvalues().min();
        if min < MIN_TARGET_EIGENVALUE {
            return Err(Error::ContractViolation(format!(
                "renormalization target covariance must be positive definite (smallest eigenvalue {min:e})"
            )));
        }
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(Error::ContractViolation(format!(
                "ridge must be non-negative, got {ridge}"
            )));
        }
        Ok(Self {
            target_mean,
            target_cov,
            ridge,
        })
    }

    /// Target `(0, I)` with the default ridge.
    pub fn standard(dim: usize) -> Self {
        Self::new(DVector::zeros(dim), PsdMatrix::identity(dim), DEFAULT_RIDGE)
            .expect("identity target is valid")
    }

    pub fn with_ridge(self, ridge: f64) -> Result<Self> {
        Self::new(self.target_mean, self.target_cov, ridge)
    }

    pub fn target_mean(&self) -> &DVector<f64> {
        &self.target_mean
    }

    pub fn target_cov(&self) -> &PsdMatrix {
        &self.target_cov
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn dim(&self) -> usize {
        self.target_mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenormReport {
    /// Numerical rank of the input covariance.
    pub rank: usize,
    pub ridge_applied: bool,
}

pub fn renormalize(ensemble: &ParamEnsemble, spec: &RenormSpec) -> Result<ParamEnsemble> {
    renormalize_with_report(ensemble, spec).map(|(e, _)| e)
}

/// Like [`renormalize`], also reporting whether the ridge was needed.
///
/// The ridge is added only when `N <= D` or the covariance is numerically
/// rank deficient; a full-rank ensemble is whitened exactly.
pub fn renormalize_with_report(
    ensemble: &ParamEnsemble,
    spec: &RenormSpec,
) -> Result<(ParamEnsemble, RenormReport)> {
    check_dim(spec.dim(), ensemble.dim())?;
    let m = moments(ensemble)?;
    let dim = ensemble.dim();
    let eig = m.cov.eigenvalues();
    let max = eig.max().max(0.0);
    let rank = eig
        .iter()
        .filter(|&&v| max > 0.0 && v > RELATIVE_RANK_TOL * max)
        .count();
    let deficient = rank < dim || ensemble.len() <= dim;
    let mut cov = m.cov.matrix().clone();
    if deficient {
        if spec.ridge == 0.0 {
            return Err(Error::SingularCovariance { rank, dim });
        }
        cov += DMatrix::identity(dim, dim) * spec.ridge;
    }
    let whiten = sym_fn(&cov, |v| 1.0 / v.max(EIGEN_FLOOR).sqrt());
    let transform = spec.target_cov.sqrt() * whiten;
    let out = ensemble.map_members(|eta, out| {
        let centered = DVector::from_iterator(dim, eta.iter().zip(&m.mean).map(|(e, c)| e - c));
        let y = &spec.target_mean + &transform * centered;
        out.copy_from_slice(y.as_slice());
    })?;
    Ok((
        out,
        RenormReport {
            rank,
            ridge_applied: deficient,
        },
    ))
}

/// How the carrier measure of each layer is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurePolicy {
    /// A fixed set of patterns, as in a Hopfield layer.
    FixedMeasure(IntrinsicMeasure),
    /// The current members are the keys, as in transformer self-attention.
    SelfPatterns,
    /// The carrier is the image of the current members under `x = S eta`.
    PointwiseMap {
        cov: PsdMatrix,
        image: PushforwardImage,
    },
}

/// How the pushforward `{S eta_i}` is turned into a carrier measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PushforwardImage {
    /// The Gaussian with the empirical mean and covariance of the image,
    /// `N(S etabar, S Sbar S)`. Exact when the ensemble is Gaussian.
    #[default]
    Gaussian,
    /// The uniform point measure on the images themselves.
    Discrete,
}

impl MeasurePolicy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FixedMeasure(_) => "fixed_measure",
            Self::SelfPatterns => "self_patterns",
            Self::PointwiseMap {
                image: PushforwardImage::Gaussian,
                ..
            } => "pointwise_map",
            Self::PointwiseMap {
                image: PushforwardImage::Discrete,
                ..
            } => "pointwise_map_discrete",
        }
    }

    /// Pointwise map with the Gaussian image.
    pub fn pointwise_map(cov: PsdMatrix) -> Self {
        Self::PointwiseMap {
            cov,
            image: PushforwardImage::Gaussian,
        }
    }

    /// The carrier measure seen by `ensemble` under this policy.
    pub fn materialize<'a>(
        &'a self,
        ensemble: &ParamEnsemble,
    ) -> Result<Cow<'a, IntrinsicMeasure>> {
        match self {
            Self::FixedMeasure(h) => {
                check_dim(h.dim(), ensemble.dim())?;
                Ok(Cow::Borrowed(h))
            }
            Self::SelfPatterns => Ok(Cow::Owned(ensemble.as_measure())),
            Self::PointwiseMap {
                cov: s,
                image: PushforwardImage::Gaussian,
            } => {
                check_dim(s.dim(), ensemble.dim())?;
                let m = moments(ensemble)?;
                let mean = s.matrix() * &m.mean;
                let cov = s.matrix() * m.cov.matrix() * s.matrix();
                let cov = PsdMatrix::new((&cov + cov.transpose()) * 0.5)?;
                Ok(Cow::Owned(IntrinsicMeasure::gaussian(mean, cov)?))
            }
            Self::PointwiseMap {
                cov: s,
                image: PushforwardImage::Discrete,
            } => {
                check_dim(s.dim(), ensemble.dim())?;
                let dim = ensemble.dim();
                let mut keys = Vec::with_capacity(ensemble.as_flat().len());
                for m in ensemble.members() {
                    let x = s.matrix() * DVector::from_column_slice(m);
                    keys.extend_from_slice(x.as_slice());
                }
                let points = DiscretePoints::from_flat(dim, keys, vec![0.0; ensemble.len()])?;
                Ok(Cow::Owned(IntrinsicMeasure::DiscretePoints(points)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    AfterAttention,
    AfterRenorm,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AfterAttention => "after_attention",
            Self::AfterRenorm => "after_renorm",
        }
    }
}

/// Ensemble statistics at one phase of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub phase: Phase,
    pub mean_norm: f64,
    pub cov_trace: f64,
    pub cov_logdet: f64,
    /// `|etabar - eta0|`.
    pub mean_dist_to_target: f64,
    /// Frobenius norm of `Sbar - Lambda0`.
    pub cov_dist_to_target: f64,
    pub max_marginal_skewness: f64,
}

impl TrajectoryRecord {
    pub fn measure(
        step: usize,
        phase: Phase,
        ensemble: &ParamEnsemble,
        target_mean: &DVector<f64>,
        target_cov: &PsdMatrix,
    ) -> Result<Self> {
        let m = moments(ensemble)?;
        let max_marginal_skewness = (0..ensemble.dim())
            .map(|j| {
                let column: Vec<f64> = ensemble.members().map(|x| x[j]).collect();
                skewness(&column).abs()
            })
            .fold(0.0, f64::max);
        Ok(Self {
            step,
            phase,
            mean_norm: m.mean.norm(),
            cov_trace: m.cov.matrix().trace(),
            cov_logdet: m.cov.logdet(),
            mean_dist_to_target: (&m.mean - target_mean).norm(),
            cov_dist_to_target: (m.cov.matrix() - target_cov.matrix()).norm(),
            max_marginal_skewness,
        })
    }
}

/// Output of one composed layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutput {
    pub after_attention: ParamEnsemble,
    pub ensemble: ParamEnsemble,
    pub records: [TrajectoryRecord; 2],
    pub renorm: Option<RenormReport>,
}

/// One layer `RN o A` with statistics recorded after each operator.
///
/// With `spec = None` the renormalization is the identity (its target is the
/// ensemble's own moments) and distances are measured against the moments
/// of the layer input.
pub fn layer_step(
    step: usize,
    ensemble: &ParamEnsemble,
    policy: &MeasurePolicy,
    cfg: &AttentionConfig,
    spec: Option<&RenormSpec>,
) -> Result<LayerOutput> {
    let h = policy.materialize(ensemble)?;
    let attended = attention_update(ensemble, &h, cfg)?;
    let reference = match spec {
        Some(s) => EnsembleMoments {
            mean: s.target_mean.clone(),
            cov: s.target_cov.clone(),
        },
        None => moments(ensemble)?,
    };
    let first = TrajectoryRecord::measure(
        step,
        Phase::AfterAttention,
        &attended,
        &reference.mean,
        &reference.cov,
    )?;
    let (renormed, report) = match spec {
        Some(s) => {
            let (e, r) = renormalize_with_report(&attended, s)?;
            (e, Some(r))
        }
        None => (attended.clone(), None),
    };
    let second = TrajectoryRecord::measure(
        step,
        Phase::AfterRenorm,
        &renormed,
        &reference.mean,
        &reference.cov,
    )?;
    Ok(LayerOutput {
        after_attention: attended,
        ensemble: renormed,
        records: [first, second],
        renorm: report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub final_ensemble: ParamEnsemble,
    /// Number of layers whose renormalization needed the ridge.
    pub ridge_steps: usize,
}

/// Runs `steps` layers; `2 * steps` records in step order.
pub fn simulate(
    initial: &ParamEnsemble,
    policy: &MeasurePolicy,
    cfg: &AttentionConfig,
    spec: Option<&RenormSpec>,
    steps: usize,
) -> Result<Trajectory> {
    simulate_observed(initial, policy, cfg, spec, steps, |_| {})
}

/// [`simulate`] with a callback invoked on every layer output.
pub fn simulate_observed(
    initial: &ParamEnsemble,
    policy: &MeasurePolicy,
    cfg: &AttentionConfig,
    spec: Option<&RenormSpec>,
    steps: usize,
    mut observe: impl FnMut(&LayerOutput),
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::ContractViolation("steps must be >= 1".into()));
    }
    let mut records = Vec::with_capacity(2 * steps);
    let mut ensemble = initial.clone();
    let mut ridge_steps = 0;
    for step in 1..=steps {
        let out = layer_step(step, &ensemble, policy, cfg, spec).map_err(|e| Error::AtStep {
            step,
            source: Box::new(e),
        })?;
        observe(&out);
        if out.renorm.is_some_and(|r| r.ridge_applied) {
            ridge_steps += 1;
        }
        records.extend(out.records.iter().cloned());
        ensemble = out.ensemble;
    }
    Ok(Trajectory {
        records,
        final_ensemble: ensemble,
        ridge_steps,
    })
}

/// Moments pushed through the Gaussian-carrier attention map and then RN.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    /// `(S^-1 mu, S^-1)`.
    pub equilibrium_mean: DVector<f64>,
    pub equilibrium_cov: DMatrix<f64>,
    /// After `eta -> mu + (I + S) eta`.
    pub intermediate_mean: DVector<f64>,
    pub intermediate_cov: DMatrix<f64>,
    pub final_mean: DVector<f64>,
    pub final_cov: DMatrix<f64>,
    /// Distances of the intermediate moments from equilibrium.
    pub intermediate_mean_shift: f64,
    pub intermediate_cov_shift: f64,
    /// Max-abs errors of the final moments, relative to `max(1, max-abs of target)`.
    pub final_mean_error: f64,
    pub final_cov_error: f64,
}

impl EquilibriumReport {
    pub fn max_error(&self) -> f64 {
        self.final_mean_error.max(self.final_cov_error)
    }

    pub fn passed(&self) -> bool {
        self.max_error() <= EQUILIBRIUM_TOL
    }
}

fn push_affine(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    linear: &DMatrix<f64>,
    offset: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let m = offset + linear * mean;
    let c = linear * cov * linear.transpose();
    let c = (&c + c.transpose()) * 0.5;
    (m, c)
}

/// Sample-free check that `N(S^-1 mu, S^-1)` is fixed by `RN o A` when the
/// carrier is `N(mu, S)`.
pub fn equilibrium_affine_check(mu: &DVector<f64>, sigma: &PsdMatrix) -> Result<EquilibriumReport> {
    check_dim(mu.len(), sigma.dim())?;
    check_finite(mu.as_slice(), "carrier mean")?;
    let dim = mu.len();
    let precision = sigma.inverse()?;
    let precision = (&precision + precision.transpose()) * 0.5;
    let eq_mean = &precision * mu;

    let expand = DMatrix::identity(dim, dim) + sigma.matrix();
    let (mid_mean, mid_cov) = push_affine(&eq_mean, &precision, &expand, mu);

    let target_root = sym_fn(&precision, |v| v.max(0.0).sqrt());
    let whiten = sym_fn(&mid_cov, |v| 1.0 / v.max(EIGEN_FLOOR).sqrt());
    let rn = target_root * whiten;
    let rn_offset = &eq_mean - &rn * &mid_mean;
    let (final_mean, final_cov) = push_affine(&mid_mean, &mid_cov, &rn, &rn_offset);

    let scale_m = eq_mean.amax().max(1.0);
    let scale_c = precision.amax().max(1.0);
    Ok(EquilibriumReport {
        intermediate_mean_shift: (&mid_mean - &eq_mean).norm(),
        intermediate_cov_shift: (&mid_cov - &precision).norm(),
        final_mean_error: (&final_mean - &eq_mean).amax() / scale_m,
        final_cov_error: (&final_cov - &precision).amax() / scale_c,
        equilibrium_mean: eq_mean,
        equilibrium_cov: precision,
        intermediate_mean: mid_mean,
        intermediate_cov: mid_cov,
        final_mean,
        final_cov,
    })
}

/// Tracks how far a simulated trajectory strays from the equilibrium of a
/// Gaussian carrier `N(mu, S)`.
///
/// After-attention moments are compared with the exact pushforward of the
/// equilibrium through `eta -> mu + (I + S) eta`; after-renorm moments with the
/// equilibrium itself. Distances are whitened by the reference covariance
/// (`|C^-1/2 (m - m*)|` and `|C^-1/2 C' C^-1/2 - I|_F`), so their sampling
/// scale depends only on `D` and `N`.
#[derive(Debug, Clone)]
pub struct EquilibriumMonitor {
    reference: EquilibriumReport,
    mid_whiten: DMatrix<f64>,
    eq_whiten: DMatrix<f64>,
    pub steps: Vec<StepDrift>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDrift {
    pub step: usize,
    pub attention_mean: f64,
    pub attention_cov: f64,
    pub renorm_mean: f64,
    pub renorm_cov: f64,
    /// `tr(Sbar) / tr(S^-1)` after renormalization.
    pub renorm_trace_ratio: f64,
    pub renorm_max_skewness: f64,
    pub attention_trace: f64,
    pub renorm_trace: f64,
}

impl StepDrift {
    pub fn max_mean(&self) -> f64 {
        self.attention_mean.max(self.renorm_mean)
    }

    pub fn max_cov(&self) -> f64 {
        self.attention_cov.max(self.renorm_cov)
    }
}

impl EquilibriumMonitor {
    pub fn new(mu: &DVector<f64>, sigma: &PsdMatrix) -> Result<Self> {
        let reference = equilibrium_affine_check(mu, sigma)?;
        let whiten = |c: &DMatrix<f64>| sym_fn(c, |v| 1.0 / v.max(EIGEN_FLOOR).sqrt());
        Ok(Self {
            mid_whiten: whiten(&reference.intermediate_cov),
            eq_whiten: whiten(&reference.equilibrium_cov),
            reference,
            steps: Vec::new(),
        })
    }

    pub fn reference(&self) -> &EquilibriumReport {
        &self.reference
    }

    pub fn observe(&mut self, out: &LayerOutput) -> Result<()> {
        let dim = self.reference.equilibrium_mean.len();
        let eye = DMatrix::<f64>::identity(dim, dim);
        let distances = |e: &ParamEnsemble, m: &DVector<f64>, w: &DMatrix<f64>| -> Result<_> {
            let mo = moments(e)?;
            let dm = (w * (&mo.mean - m)).norm();
            let dc = (w * mo.cov.matrix() * w - &eye).norm();
            Ok((dm, dc, mo))
        };
        let (am, ac, _) = distances(
            &out.after_attention,
            &self.reference.intermediate_mean,
            &self.mid_whiten,
        )?;
        let (rm, rc, mo) = distances(
            &out.ensemble,
            &self.reference.equilibrium_mean,
            &self.eq_whiten,
        )?;
        self.steps.push(StepDrift {
            step: out.records[1].step,
            attention_mean: am,
            attention_cov: ac,
            renorm_mean: rm,
            renorm_cov: rc,
            renorm_trace_ratio: mo.cov.matrix().trace() / self.reference.equilibrium_cov.trace(),
            renorm_max_skewness: out.records[1].max_marginal_skewness,
            attention_trace: out.records[0].cov_trace,
            renorm_trace: out.records[1].cov_trace,
        });
        Ok(())
    }

    pub fn max_mean_drift(&self) -> f64 {
        self.steps
            .iter()
            .map(StepDrift::max_mean)
            .fold(0.0, f64::max)
    }

    pub fn max_cov_drift(&self) -> f64 {
        self.steps
            .iter()
            .map(StepDrift::max_cov)
            .fold(0.0, f64::max)
    }

    pub fn max_skewness(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.renorm_max_skewness)
            .fold(0.0, f64::max)
    }

    pub fn skewness_series(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.renorm_max_skewness).collect()
    }

    /// Judges the recorded trajectory against the default bands for an
    /// ensemble of `n` members.
    pub fn verdict(&self, n: usize) -> EquilibriumVerdict {
        let dim = self.reference.equilibrium_mean.len();
        self.verdict_with(n, DriftBands::for_ensemble(dim, n))
    }

    pub fn verdict_with(&self, n: usize, bands: DriftBands) -> EquilibriumVerdict {
        let trend = kendall_trend_resolved(&self.skewness_series(), TREND_RESOLUTION);
        let expansion_violations = self
            .steps
            .iter()
            .filter(|s| s.attention_trace <= s.renorm_trace)
            .count();
        let max_mean_drift = self.max_mean_drift();
        let max_cov_drift = self.max_cov_drift();
        let max_skewness = self.max_skewness();
        let status = if n < MIN_BAND_ENSEMBLE || self.steps.is_empty() {
            BandStatus::Inconclusive
        } else if max_mean_drift <= bands.mean
            && max_cov_drift <= bands.cov
            && max_skewness <= bands.skewness
            && trend.p_value > TREND_MIN_P
        {
            BandStatus::Within
        } else {
            BandStatus::Outside
        };
        EquilibriumVerdict {
            bands,
            max_mean_drift,
            max_cov_drift,
            max_skewness,
            skewness_trend: trend,
            expansion_violations,
            status,
        }
    }
}

/// Band multiplier, frozen from 30 seeds of the `D = 4`, `N = 4096`, 50-layer
/// run (scaled drifts: mean 1.45 +- 0.61, covariance 1.91 +- 0.48, skewness
/// 1.46 +- 0.56, all maxima below 4).
pub const BAND_MULTIPLIER: f64 = 6.0;
/// Skewness series values closer than this count as tied in the trend test;
/// far above rounding noise, far below the `sqrt(6 / N)` sampling scale.
pub const TREND_RESOLUTION: f64 = 1e-9;
pub const TREND_MIN_P: f64 = 0.01;
/// Below this ensemble size the bands are too wide to mean anything.
pub const MIN_BAND_ENSEMBLE: usize = 64;

/// Allowed drift: `6 sqrt(D / N)` for the whitened mean, `6 sqrt(D (D + 1) / N)`
/// for the whitened covariance and `6 sqrt(6 / N)` for the marginal skewness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftBands {
    pub mean: f64,
    pub cov: f64,
    pub skewness: f64,
}

impl DriftBands {
    pub fn for_ensemble(dim: usize, n: usize) -> Self {
        Self::scaled(dim, n, BAND_MULTIPLIER)
    }

    /// The same shapes with `multiplier` in place of 6.
    pub fn scaled(dim: usize, n: usize, multiplier: f64) -> Self {
        let (d, n) = (dim as f64, n.max(1) as f64);
        Self {
            mean: multiplier * (d / n).sqrt(),
            cov: multiplier * (d * (d + 1.0) / n).sqrt(),
            skewness: multiplier * (6.0 / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandStatus {
    Within,
    Outside,
    Inconclusive,
}

impl BandStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BandStatus::Within => "within_band",
            BandStatus::Outside => "outside_band",
            BandStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumVerdict {
    pub bands: DriftBands,
    pub max_mean_drift: f64,
    pub max_cov_drift: f64,
    pub max_skewness: f64,
    pub skewness_trend: KendallTrend,
    /// Steps where attention failed to widen the ensemble beyond its
    /// renormalized spread.
    pub expansion_violations: usize,
    pub status: BandStatus,
}
