//! TOML experiment descriptions.
//!
//! Unknown keys are rejected everywhere. Matrices are written as
//! `"identity"`, `{ scaled_identity = c }`, nested rows, or a flat row-major
//! list.

use std::path::Path;

use expattn::dynamics::BAND_MULTIPLIER;
use expattn::expfam::DiscretePoints;
use expattn::{
    AttentionConfig, BilinearForm, DMatrix, DVector, IntrinsicMeasure, MeasurePolicy, PsdMatrix,
    PushforwardImage, RenormSpec,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    /// Only `"identity"` is accepted.
    Keyword(String),
    Scaled {
        scaled_identity: f64,
    },
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixSpec {
    pub fn to_matrix(&self, dim: usize, what: &str) -> Result<DMatrix<f64>, CliError> {
        match self {
            MatrixSpec::Keyword(k) if k == "identity" => Ok(DMatrix::identity(dim, dim)),
            MatrixSpec::Keyword(k) => Err(CliError::config(format!(
                "{what}: unknown matrix keyword {k:?} (expected \"identity\")"
            ))),
            MatrixSpec::Scaled { scaled_identity } => {
                Ok(DMatrix::identity(dim, dim) * *scaled_identity)
            }
            MatrixSpec::Rows(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(CliError::config(format!(
                        "{what}: expected {dim}x{dim} rows"
                    )));
                }
                Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
            }
            MatrixSpec::Flat(xs) => {
                if xs.len() != dim * dim {
                    return Err(CliError::config(format!(
                        "{what}: expected {} entries, got {}",
                        dim * dim,
                        xs.len()
                    )));
                }
                Ok(DMatrix::from_row_slice(dim, dim, xs))
            }
        }
    }

    pub fn to_psd(&self, dim: usize, what: &str) -> Result<PsdMatrix, CliError> {
        PsdMatrix::new(self.to_matrix(dim, what)?)
            .map_err(|e| CliError::config(format!("{what}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    DiscretePoints {
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log_weights: Option<Vec<f64>>,
    },
    Gaussian {
        mean: Vec<f64>,
        cov: MatrixSpec,
    },
    SharedCovMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        cov: MatrixSpec,
    },
    GeneralMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covs: Vec<MatrixSpec>,
    },
}

fn vector(xs: &[f64], dim: usize, what: &str) -> Result<DVector<f64>, CliError> {
    if xs.len() != dim {
        return Err(CliError::config(format!(
            "{what}: expected {dim} coordinates, got {}",
            xs.len()
        )));
    }
    Ok(DVector::from_column_slice(xs))
}

impl MeasureSpec {
    pub fn dim(&self) -> Option<usize> {
        match self {
            MeasureSpec::DiscretePoints { points, .. } => points.first().map(Vec::len),
            MeasureSpec::Gaussian { mean, .. } => Some(mean.len()),
            MeasureSpec::SharedCovMixture { means, .. }
            | MeasureSpec::GeneralMixture { means, .. } => means.first().map(Vec::len),
        }
    }

    pub fn build(&self, dim: usize) -> Result<IntrinsicMeasure, CliError> {
        let vectors = |xs: &[Vec<f64>], what: &str| -> Result<Vec<DVector<f64>>, CliError> {
            xs.iter().map(|x| vector(x, dim, what)).collect()
        };
        let built = match self {
            MeasureSpec::DiscretePoints {
                points,
                log_weights,
            } => {
                let pts = vectors(points, "measure.points")?;
                match log_weights {
                    Some(w) => DiscretePoints::with_log_weights(&pts, w.clone())
                        .map(IntrinsicMeasure::DiscretePoints),
                    None => IntrinsicMeasure::discrete(&pts),
                }
            }
            MeasureSpec::Gaussian { mean, cov } => IntrinsicMeasure::gaussian(
                vector(mean, dim, "measure.mean")?,
                cov.to_psd(dim, "measure.cov")?,
            ),
            MeasureSpec::SharedCovMixture {
                weights,
                means,
                cov,
            } => IntrinsicMeasure::shared_cov_mixture(
                weights.clone(),
                vectors(means, "measure.means")?,
                cov.to_psd(dim, "measure.cov")?,
            ),
            MeasureSpec::GeneralMixture {
                weights,
                means,
                covs,
            } => {
                let covs = covs
                    .iter()
                    .map(|c| c.to_psd(dim, "measure.covs"))
                    .collect::<Result<_, _>>()?;
                IntrinsicMeasure::general_mixture(
                    weights.clone(),
                    vectors(means, "measure.means")?,
                    covs,
                )
            }
        };
        built.map_err(|e| CliError::config(format!("measure: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyTag {
    FixedMeasure,
    SelfPatterns,
    PointwiseMap,
    /// Pointwise map with point masses at `S eta_i` instead of their
    /// moment-matched Gaussian.
    PointwiseMapDiscrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttentionSection {
    #[serde(default = "one")]
    pub step_size: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bilinear: Option<MatrixSpec>,
    #[serde(default = "yes")]
    pub residual: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl Default for AttentionSection {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            scale: 1.0,
            bilinear: None,
            residual: true,
        }
    }
}

impl AttentionSection {
    pub fn build(&self, dim: usize) -> Result<AttentionConfig, CliError> {
        let bilinear = match &self.bilinear {
            Some(b) => Some(
                BilinearForm::new(b.to_matrix(dim, "attention.bilinear")?)
                    .map_err(|e| CliError::config(format!("attention.bilinear: {e}")))?,
            ),
            None => None,
        };
        let cfg = AttentionConfig {
            step_size: self.step_size,
            scale: self.scale,
            bilinear,
            residual: self.residual,
        };
        cfg.validate(dim)
            .map_err(|e| CliError::config(format!("attention: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormSection {
    pub target_mean: Vec<f64>,
    pub target_cov: MatrixSpec,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

fn default_ridge() -> f64 {
    expattn::dynamics::DEFAULT_RIDGE
}

impl RenormSection {
    pub fn build(&self, dim: usize) -> Result<RenormSpec, CliError> {
        RenormSpec::new(
            vector(&self.target_mean, dim, "renorm.target_mean")?,
            self.target_cov.to_psd(dim, "renorm.target_cov")?,
            self.ridge,
        )
        .map_err(|e| CliError::config(format!("renorm: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSection {
    pub mean: Vec<f64>,
    pub cov: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDistribution {
    pub gaussian: GaussianSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub n_points: usize,
    pub seed: u64,
    pub steps: usize,
    pub policy: PolicyTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_multiplier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub attention: AttentionSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renorm: Option<RenormSection>,
    pub initial_distribution: InitialDistribution,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are always representable")
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.dim == 0 {
            return Err(CliError::config("dim must be >= 1"));
        }
        if self.steps == 0 {
            return Err(CliError::config("steps must be >= 1"));
        }
        if self.n_points < 2 {
            return Err(CliError::config("n_points must be >= 2"));
        }
        if let Some(m) = self.band_multiplier {
            if !(m.is_finite() && m > 0.0) {
                return Err(CliError::config("band_multiplier must be positive"));
            }
        }
        if let Some(d) = self.measure.as_ref().and_then(MeasureSpec::dim) {
            if d != self.dim {
                return Err(CliError::config(format!(
                    "measure has dimension {d}, config says {}",
                    self.dim
                )));
            }
        }
        Ok(())
    }

    pub fn band_multiplier(&self) -> f64 {
        self.band_multiplier.unwrap_or(BAND_MULTIPLIER)
    }

    pub fn measure(&self) -> Result<IntrinsicMeasure, CliError> {
        self.measure
            .as_ref()
            .ok_or_else(|| CliError::config("this policy needs a [measure] section"))?
            .build(self.dim)
    }

    /// The carrier `N(mu, S)` of the pointwise-map setting.
    pub fn carrier(&self) -> Result<(DVector<f64>, PsdMatrix), CliError> {
        match self.measure()? {
            IntrinsicMeasure::Gaussian(g) => Ok((g.mean().clone(), g.cov().clone())),
            other => Err(CliError::config(format!(
                "the pointwise map needs a gaussian measure, got {}",
                other.variant_name()
            ))),
        }
    }

    pub fn policy(&self) -> Result<MeasurePolicy, CliError> {
        Ok(match self.policy {
            PolicyTag::FixedMeasure => MeasurePolicy::FixedMeasure(self.measure()?),
            PolicyTag::SelfPatterns => MeasurePolicy::SelfPatterns,
            PolicyTag::PointwiseMap => MeasurePolicy::pointwise_map(self.carrier()?.1),
            PolicyTag::PointwiseMapDiscrete => MeasurePolicy::PointwiseMap {
                cov: self.carrier()?.1,
                image: PushforwardImage::Discrete,
            },
        })
    }

    pub fn attention(&self) -> Result<AttentionConfig, CliError> {
        self.attention.build(self.dim)
    }

    pub fn renorm(&self) -> Result<Option<RenormSpec>, CliError> {
        self.renorm.as_ref().map(|r| r.build(self.dim)).transpose()
    }

    pub fn initial(&self) -> Result<(DVector<f64>, PsdMatrix), CliError> {
        let g = &self.initial_distribution.gaussian;
        Ok((
            vector(&g.mean, self.dim, "initial_distribution.gaussian.mean")?,
            g.cov
                .to_psd(self.dim, "initial_distribution.gaussian.cov")?,
        ))
    }
}

/// Input of the `conjugate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateConfig {
    pub measure: MeasureSpec,
    pub eta_star: Vec<f64>,
}

impl ConjugateConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}
