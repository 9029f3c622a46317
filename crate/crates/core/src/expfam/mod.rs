//! Log normalizers of exponential families built by the Laplace-transform
//! construction `p(x | eta) = h(x) exp(x . eta) / Z(eta)`.
//!
//! For each supported carrier measure `h` this module evaluates, in closed
//! form, `G(eta) = log Z(eta)`, its gradient (the mean of `x` under
//! `p(x | eta)`) and its Hessian (the covariance of `x`). For a discrete `h`
//! the gradient is exactly the softmax attention average of the points.
//!
//! | measure              | `G(eta)`                                           |
//! |----------------------|----------------------------------------------------|
//! | discrete points      | `lse_n(x_n . eta + log w_n)`                       |
//! | Gaussian             | `mu . eta + eta^T S eta / 2`                       |
//! | shared-cov mixture   | `eta^T S eta / 2 + lse_n(log pi_n + mu_n . eta)`   |
//! | general mixture      | `lse_n(log pi_n + mu_n . eta + eta^T S_n eta / 2)` |
//!
//! The general mixture additionally has a Jensen lower bound, see
//! [`lower_bound_log_partition`].

mod conjugate;
mod measure;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, check_finite, softmax_in_place, PsdMatrix};

pub use conjugate::{fenchel_conjugate, ConjugateSolution, MAX_ITERATIONS};
pub(crate) use measure::dot;
pub use measure::{
    DiscretePoints, GaussianMeasure, GeneralMixture, IntrinsicMeasure, SharedCovMixture,
};

/// Tolerance on `|sum(pi) - 1|` required by the Jensen bound.
pub const WEIGHT_NORMALIZATION_TOL: f64 = 1e-9;

/// A natural parameter `eta`; doubles as a hidden state or query.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParam(DVector<f64>);

impl NaturalParam {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::ContractViolation("dimension must be >= 1".into()));
        }
        check_finite(v.as_slice(), "natural parameter")?;
        Ok(Self(v))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim.max(1)))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

/// A mean (dual) parameter `eta* = grad G(eta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualParam(DVector<f64>);

impl DualParam {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::ContractViolation("dimension must be >= 1".into()));
        }
        check_finite(v.as_slice(), "dual parameter")?;
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

/// `G(eta) = log int h(x) exp(x . eta) dx`.
pub fn log_partition(h: &IntrinsicMeasure, eta: &NaturalParam) -> Result<f64> {
    check_dim(h.dim(), eta.dim())?;
    Ok(log_partition_at(h, eta.vector()))
}

/// `grad G(eta)`, the mean of the sufficient statistic under `p(x | eta)`.
pub fn grad_log_partition(h: &IntrinsicMeasure, eta: &NaturalParam) -> Result<DualParam> {
    check_dim(h.dim(), eta.dim())?;
    Ok(DualParam(grad_at(h, eta.as_slice())))
}

/// `hess G(eta)`, the covariance of the sufficient statistic under `p(x | eta)`.
pub fn hessian_log_partition(h: &IntrinsicMeasure, eta: &NaturalParam) -> Result<PsdMatrix> {
    check_dim(h.dim(), eta.dim())?;
    PsdMatrix::new(hessian_at(h, eta.vector()))
}

/// Softmax over `scale * x_n . eta + log w_n`.
pub fn attention_weights(h: &IntrinsicMeasure, eta: &NaturalParam, scale: f64) -> Result<Vec<f64>> {
    let IntrinsicMeasure::DiscretePoints(d) = h else {
        return Err(Error::UnsupportedMeasure {
            op: "attention_weights",
            variant: h.variant_name(),
        });
    };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::ContractViolation(format!(
            "scale must be positive, got {scale}"
        )));
    }
    check_dim(d.dim(), eta.dim())?;
    let theta: Vec<f64> = eta.as_slice().iter().map(|v| v * scale).collect();
    let mut w = Vec::with_capacity(d.len());
    d.logits_into(&theta, &mut w);
    softmax_in_place(&mut w);
    Ok(w)
}

/// Jensen lower bound `sum_n pi_n (eta^T S_n eta / 2 + mu_n . eta)` for a
/// normalized general mixture.
pub fn lower_bound_log_partition(h: &IntrinsicMeasure, eta: &NaturalParam) -> Result<f64> {
    let m = normalized_mixture(h, "lower_bound_log_partition", eta)?;
    let v = eta.vector();
    Ok(m.weights()
        .iter()
        .zip(m.means())
        .zip(m.covs())
        .map(|((pi, mu), cov)| pi * (0.5 * cov.quad(v) + mu.dot(v)))
        .sum())
}

/// `sum_n pi_n (mu_n + S_n eta)`, the gradient of [`lower_bound_log_partition`].
pub fn grad_lower_bound(h: &IntrinsicMeasure, eta: &NaturalParam) -> Result<DualParam> {
    let m = normalized_mixture(h, "grad_lower_bound", eta)?;
    let v = eta.vector();
    let mut out = DVector::zeros(v.len());
    for ((pi, mu), cov) in m.weights().iter().zip(m.means()).zip(m.covs()) {
        out += (mu + cov.matrix() * v) * *pi;
    }
    Ok(DualParam(out))
}

fn normalized_mixture<'a>(
    h: &'a IntrinsicMeasure,
    op: &'static str,
    eta: &NaturalParam,
) -> Result<&'a GeneralMixture> {
    let IntrinsicMeasure::GeneralMixture(m) = h else {
        return Err(Error::UnsupportedMeasure {
            op,
            variant: h.variant_name(),
        });
    };
    check_dim(h.dim(), eta.dim())?;
    let total: f64 = m.weights().iter().sum();
    if (total - 1.0).abs() > WEIGHT_NORMALIZATION_TOL {
        return Err(Error::ContractViolation(format!(
            "Jensen bound needs weights summing to 1, got {total}"
        )));
    }
    Ok(m)
}

pub(crate) fn log_partition_at(h: &IntrinsicMeasure, eta: &DVector<f64>) -> f64 {
    match h {
        IntrinsicMeasure::DiscretePoints(d) => {
            let mut logits = Vec::with_capacity(d.len());
            d.logits_into(eta.as_slice(), &mut logits);
            crate::linalg::logsumexp(&logits)
        }
        IntrinsicMeasure::Gaussian(g) => g.mean().dot(eta) + 0.5 * g.cov().quad(eta),
        IntrinsicMeasure::SharedCovMixture(m) => {
            let logits: Vec<f64> = m
                .weights()
                .iter()
                .zip(m.means())
                .map(|(pi, mu)| pi.ln() + mu.dot(eta))
                .collect();
            0.5 * m.cov().quad(eta) + crate::linalg::logsumexp(&logits)
        }
        IntrinsicMeasure::GeneralMixture(m) => {
            let logits: Vec<f64> = general_terms(m, eta).map(|(a, _)| a).collect();
            crate::linalg::logsumexp(&logits)
        }
    }
}

/// Per-component `(log pi_n + mu_n . eta + eta^T S_n eta / 2, mu_n + S_n eta)`.
fn general_terms<'a>(
    m: &'a GeneralMixture,
    eta: &'a DVector<f64>,
) -> impl Iterator<Item = (f64, DVector<f64>)> + 'a {
    m.weights()
        .iter()
        .zip(m.means())
        .zip(m.covs())
        .map(move |((pi, mu), cov)| {
            let s_eta = cov.matrix() * eta;
            let a = pi.ln() + mu.dot(eta) + 0.5 * eta.dot(&s_eta);
            (a, mu + s_eta)
        })
}

/// Softmax-weighted average of `rows` under `logits`; returns the weights too.
fn softmax_average<'a>(
    dim: usize,
    rows: impl Iterator<Item = &'a [f64]>,
    mut logits: Vec<f64>,
) -> (Vec<f64>, DVector<f64>) {
    softmax_in_place(&mut logits);
    let mut mean = DVector::zeros(dim);
    for (p, x) in logits.iter().zip(rows) {
        for (m, xi) in mean.iter_mut().zip(x) {
            *m += p * xi;
        }
    }
    (logits, mean)
}

fn discrete_softmax(d: &DiscretePoints, theta: &[f64]) -> (Vec<f64>, DVector<f64>) {
    let mut logits = Vec::with_capacity(d.len());
    d.logits_into(theta, &mut logits);
    softmax_average(d.dim(), d.points(), logits)
}

fn shared_softmax(m: &SharedCovMixture, eta: &[f64]) -> (Vec<f64>, DVector<f64>) {
    let logits = m
        .weights()
        .iter()
        .zip(m.means())
        .map(|(pi, mu)| pi.ln() + dot(mu.as_slice(), eta))
        .collect();
    softmax_average(eta.len(), m.means().iter().map(|v| v.as_slice()), logits)
}

pub(crate) fn grad_at(h: &IntrinsicMeasure, eta: &[f64]) -> DVector<f64> {
    match h {
        IntrinsicMeasure::DiscretePoints(d) => discrete_softmax(d, eta).1,
        IntrinsicMeasure::Gaussian(g) => {
            g.mean() + g.cov().matrix() * DVector::from_column_slice(eta)
        }
        IntrinsicMeasure::SharedCovMixture(m) => {
            let (_, avg) = shared_softmax(m, eta);
            avg + m.cov().matrix() * DVector::from_column_slice(eta)
        }
        IntrinsicMeasure::GeneralMixture(m) => {
            let eta = DVector::from_column_slice(eta);
            let (logits, moments): (Vec<f64>, Vec<DVector<f64>>) = general_terms(m, &eta).unzip();
            softmax_average(eta.len(), moments.iter().map(|v| v.as_slice()), logits).1
        }
    }
}

/// Weighted covariance `sum_n p_n (x_n - mean)(x_n - mean)^T`.
fn weighted_scatter<'a>(
    dim: usize,
    probs: &[f64],
    rows: impl Iterator<Item = &'a [f64]>,
    mean: &DVector<f64>,
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(dim, dim);
    let mut centered = DVector::zeros(dim);
    for (p, x) in probs.iter().zip(rows) {
        for i in 0..dim {
            centered[i] = x[i] - mean[i];
        }
        out.ger(*p, &centered, &centered, 1.0);
    }
    out
}

pub(crate) fn hessian_at(h: &IntrinsicMeasure, eta: &DVector<f64>) -> DMatrix<f64> {
    let dim = eta.len();
    match h {
        IntrinsicMeasure::DiscretePoints(d) => {
            let (probs, mean) = discrete_softmax(d, eta.as_slice());
            weighted_scatter(dim, &probs, d.points(), &mean)
        }
        IntrinsicMeasure::Gaussian(g) => g.cov().matrix().clone(),
        IntrinsicMeasure::SharedCovMixture(m) => {
            let (probs, mean) = shared_softmax(m, eta.as_slice());
            let between =
                weighted_scatter(dim, &probs, m.means().iter().map(|v| v.as_slice()), &mean);
            m.cov().matrix() + between
        }
        IntrinsicMeasure::GeneralMixture(m) => {
            let (logits, moments): (Vec<f64>, Vec<DVector<f64>>) = general_terms(m, eta).unzip();
            let (probs, mean) = softmax_average(dim, moments.iter().map(|v| v.as_slice()), logits);
            let mut out =
                weighted_scatter(dim, &probs, moments.iter().map(|v| v.as_slice()), &mean);
            for (p, cov) in probs.iter().zip(m.covs()) {
                out += cov.matrix() * *p;
            }
            out
        }
    }
}
