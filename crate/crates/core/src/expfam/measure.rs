use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, check_finite, PsdMatrix};

/// A weighted sum of point masses, `h(x) = sum_n w_n delta(x = x_n)`.
///
/// Points are stored row-major in one buffer so key scans stay contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePoints {
    dim: usize,
    points: Vec<f64>,
    log_weights: Vec<f64>,
}

impl DiscretePoints {
    /// Counting measure on `points` (all log-weights zero).
    pub fn new(points: &[DVector<f64>]) -> Result<Self> {
        Self::with_log_weights(points, vec![0.0; points.len()])
    }

    pub fn with_log_weights(points: &[DVector<f64>], log_weights: Vec<f64>) -> Result<Self> {
        let first = points.first().ok_or_else(|| {
            Error::ContractViolation("discrete measure needs at least one point".into())
        })?;
        let dim = first.len();
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in points {
            check_dim(dim, p.len())?;
            flat.extend_from_slice(p.as_slice());
        }
        Self::from_flat(dim, flat, log_weights)
    }

    /// Builds from a row-major `n x dim` buffer.
    pub fn from_flat(dim: usize, points: Vec<f64>, log_weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ContractViolation("dimension must be >= 1".into()));
        }
        if points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::ContractViolation(format!(
                "point buffer of length {} is not a non-empty multiple of dimension {dim}",
                points.len()
            )));
        }
        let n = points.len() / dim;
        if log_weights.len() != n {
            return Err(Error::ContractViolation(format!(
                "{} log-weights for {n} points",
                log_weights.len()
            )));
        }
        check_finite(&points, "discrete points")?;
        check_finite(&log_weights, "log-weights")?;
        Ok(Self {
            dim,
            points,
            log_weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Fills `out` with `x_n . theta + log w_n`.
    pub(crate) fn logits_into(&self, theta: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.points()
                .zip(&self.log_weights)
                .map(|(x, lw)| dot(x, theta) + lw),
        );
    }
}

/// A single Gaussian `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mean: DVector<f64>,
    cov: PsdMatrix,
}

impl GaussianMeasure {
    pub fn new(mean: DVector<f64>, cov: PsdMatrix) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::ContractViolation("dimension must be >= 1".into()));
        }
        check_dim(mean.len(), cov.dim())?;
        check_finite(mean.as_slice(), "gaussian mean")?;
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &PsdMatrix {
        &self.cov
    }
}

/// `sum_n pi_n N(mu_n, cov)` with one covariance shared by all components.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedCovMixture {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    cov: PsdMatrix,
}

impl SharedCovMixture {
    pub fn new(weights: Vec<f64>, means: Vec<DVector<f64>>, cov: PsdMatrix) -> Result<Self> {
        let dim = validate_components(&weights, &means)?;
        check_dim(dim, cov.dim())?;
        Ok(Self {
            weights,
            means,
            cov,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn cov(&self) -> &PsdMatrix {
        &self.cov
    }
}

/// `sum_n pi_n N(mu_n, cov_n)` with per-component covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralMixture {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covs: Vec<PsdMatrix>,
}

impl GeneralMixture {
    pub fn new(weights: Vec<f64>, means: Vec<DVector<f64>>, covs: Vec<PsdMatrix>) -> Result<Self> {
        let dim = validate_components(&weights, &means)?;
        if covs.len() != means.len() {
            return Err(Error::ContractViolation(format!(
                "{} covariances for {} components",
                covs.len(),
                means.len()
            )));
        }
        for c in &covs {
            check_dim(dim, c.dim())?;
        }
        Ok(Self {
            weights,
            means,
            covs,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covs(&self) -> &[PsdMatrix] {
        &self.covs
    }
}

fn validate_components(weights: &[f64], means: &[DVector<f64>]) -> Result<usize> {
    if means.is_empty() {
        return Err(Error::ContractViolation(
            "mixture needs at least one component".into(),
        ));
    }
    if weights.len() != means.len() {
        return Err(Error::ContractViolation(format!(
            "{} weights for {} components",
            weights.len(),
            means.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::ContractViolation(format!(
            "mixture weights must be finite and strictly positive, got {w}"
        )));
    }
    let dim = means[0].len();
    if dim == 0 {
        return Err(Error::ContractViolation("dimension must be >= 1".into()));
    }
    for m in means {
        check_dim(dim, m.len())?;
        check_finite(m.as_slice(), "mixture mean")?;
    }
    Ok(dim)
}

/// The carrier measure `h(x)` whose Laplace transform defines the log normalizer.
#[derive(Debug, Clone, PartialEq)]
pub enum IntrinsicMeasure {
    DiscretePoints(DiscretePoints),
    Gaussian(GaussianMeasure),
    SharedCovMixture(SharedCovMixture),
    GeneralMixture(GeneralMixture),
}

impl IntrinsicMeasure {
    /// Uniform counting measure on `points`.
    pub fn discrete(points: &[DVector<f64>]) -> Result<Self> {
        DiscretePoints::new(points).map(Self::DiscretePoints)
    }

    pub fn gaussian(mean: DVector<f64>, cov: PsdMatrix) -> Result<Self> {
        GaussianMeasure::new(mean, cov).map(Self::Gaussian)
    }

    pub fn shared_cov_mixture(
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        cov: PsdMatrix,
    ) -> Result<Self> {
        SharedCovMixture::new(weights, means, cov).map(Self::SharedCovMixture)
    }

    pub fn general_mixture(
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covs: Vec<PsdMatrix>,
    ) -> Result<Self> {
        GeneralMixture::new(weights, means, covs).map(Self::GeneralMixture)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::DiscretePoints(d) => d.dim(),
            Self::Gaussian(g) => g.mean.len(),
            Self::SharedCovMixture(m) => m.cov.dim(),
            Self::GeneralMixture(m) => m.means[0].len(),
        }
    }

    /// Number of atoms or components.
    pub fn len(&self) -> usize {
        match self {
            Self::DiscretePoints(d) => d.len(),
            Self::Gaussian(_) => 1,
            Self::SharedCovMixture(m) => m.weights.len(),
            Self::GeneralMixture(m) => m.weights.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::DiscretePoints(_) => "discrete_points",
            Self::Gaussian(_) => "gaussian",
            Self::SharedCovMixture(_) => "shared_cov_mixture",
            Self::GeneralMixture(_) => "general_mixture",
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
