//! The attention update operator `A: eta -> eta + grad G(eta)`.
//!
//! With a discrete carrier measure over the keys, `grad G` is the softmax
//! average of the keys, so `A` is a dot-product attention sublayer with tied
//! values and a residual connection. [`softmax_attention_layer`] is the
//! conventional formulation written without reference to log normalizers;
//! the two agree member-wise.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expfam::{dot, grad_at, DiscretePoints, IntrinsicMeasure, NaturalParam};
use crate::linalg::{check_dim, check_finite};

/// An ordered set of natural parameters sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEnsemble {
    dim: usize,
    data: Vec<f64>,
}

impl ParamEnsemble {
    pub fn new(params: &[NaturalParam]) -> Result<Self> {
        let first = params
            .first()
            .ok_or(Error::InsufficientSamples { needed: 1, got: 0 })?;
        let dim = first.dim();
        let mut data = Vec::with_capacity(params.len() * dim);
        for p in params {
            check_dim(dim, p.dim())?;
            data.extend_from_slice(p.as_slice());
        }
        Ok(Self { dim, data })
    }

    pub fn from_vectors(vs: &[DVector<f64>]) -> Result<Self> {
        let first = vs
            .first()
            .ok_or(Error::InsufficientSamples { needed: 1, got: 0 })?;
        let dim = first.len();
        let mut data = Vec::with_capacity(vs.len() * dim);
        for v in vs {
            check_dim(dim, v.len())?;
            data.extend_from_slice(v.as_slice());
        }
        Self::from_flat(dim, data)
    }

    /// Builds from a row-major `n x dim` buffer.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ContractViolation("dimension must be >= 1".into()));
        }
        if data.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::ContractViolation(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        check_finite(&data, "ensemble")?;
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn member(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn members(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_params(&self) -> Vec<NaturalParam> {
        self.members()
            .map(|m| NaturalParam::new(m.to_vec()).expect("ensemble members are finite"))
            .collect()
    }

    /// Members selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::ContractViolation(format!(
                    "member index {i} out of range for ensemble of {}",
                    self.len()
                )));
            }
            data.extend_from_slice(self.member(i));
        }
        Self::from_flat(self.dim, data)
    }

    /// The uniform counting measure on the members.
    pub fn as_measure(&self) -> IntrinsicMeasure {
        IntrinsicMeasure::DiscretePoints(
            DiscretePoints::from_flat(self.dim, self.data.clone(), vec![0.0; self.len()])
                .expect("ensemble is a valid point set"),
        )
    }

    /// Applies `f` to every member, in parallel, preserving order.
    pub(crate) fn map_members(&self, f: impl Fn(&[f64], &mut [f64]) + Sync) -> Result<Self> {
        let mut out = vec![0.0; self.data.len()];
        out.par_chunks_exact_mut(self.dim)
            .zip(self.data.par_chunks_exact(self.dim))
            .for_each(|(o, m)| f(m, o));
        Self::from_flat(self.dim, out)
    }
}

/// The key-query bilinear form `x^T B eta` standing in for `W_q^T W_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm(DMatrix<f64>);

impl BilinearForm {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::ContractViolation(format!(
                "bilinear form must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        check_finite(m.as_slice(), "bilinear form")?;
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionConfig {
    pub step_size: f64,
    /// Multiplies every logit; `1/sqrt(D)` gives the usual scaled dot product.
    pub scale: f64,
    /// `None` means the identity.
    pub bilinear: Option<BilinearForm>,
    /// When false the update replaces `eta` instead of adding to it.
    pub residual: bool,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            scale: 1.0,
            bilinear: None,
            residual: true,
        }
    }
}

impl AttentionConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !self.step_size.is_finite() {
            return Err(Error::ContractViolation(format!(
                "step size must be finite, got {}",
                self.step_size
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::ContractViolation(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        if let Some(b) = &self.bilinear {
            check_dim(dim, b.dim())?;
        }
        Ok(())
    }
}

/// Applies `eta -> eta + step * B^T grad G(scale * B eta)` to every member.
///
/// Members are updated independently against the fixed measure `h`.
pub fn attention_update(
    ensemble: &ParamEnsemble,
    h: &IntrinsicMeasure,
    cfg: &AttentionConfig,
) -> Result<ParamEnsemble> {
    check_dim(h.dim(), ensemble.dim())?;
    cfg.validate(ensemble.dim())?;
    let b = cfg.bilinear.as_ref().map(BilinearForm::matrix);
    ensemble.map_members(|eta, out| {
        let theta: Vec<f64> = match b {
            Some(b) => (b * DVector::from_column_slice(eta) * cfg.scale)
                .as_slice()
                .to_vec(),
            None => eta.iter().map(|v| v * cfg.scale).collect(),
        };
        let grad = grad_at(h, &theta);
        let delta = match b {
            Some(b) => b.tr_mul(&grad),
            None => grad,
        };
        for ((o, e), d) in out.iter_mut().zip(eta).zip(delta.iter()) {
            *o = if cfg.residual {
                e + cfg.step_size * d
            } else {
                cfg.step_size * d
            };
        }
    })
}

/// Conventional dot-product attention with values tied to keys:
/// `q_i + step * sum_j softmax_j(scale * k_j^T B q_i) k_j`.
pub fn softmax_attention_layer(
    queries: &ParamEnsemble,
    keys: &ParamEnsemble,
    cfg: &AttentionConfig,
) -> Result<ParamEnsemble> {
    check_dim(keys.dim(), queries.dim())?;
    cfg.validate(queries.dim())?;
    let b = cfg.bilinear.as_ref().map(BilinearForm::matrix);
    queries.map_members(|q, out| {
        let bq: Vec<f64> = match b {
            Some(b) => (b * DVector::from_column_slice(q)).as_slice().to_vec(),
            None => q.to_vec(),
        };
        let scores: Vec<f64> = keys.members().map(|k| cfg.scale * dot(k, &bq)).collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let mut context = vec![0.0; q.len()];
        for (e, k) in exps.iter().zip(keys.members()) {
            let a = e / total;
            for (c, kv) in context.iter_mut().zip(k) {
                *c += a * kv;
            }
        }
        for ((o, qv), c) in out.iter_mut().zip(q).zip(&context) {
            *o = if cfg.residual {
                qv + cfg.step_size * c
            } else {
                cfg.step_size * c
            };
        }
    })
}

/// Self-attention: the keys are the current members themselves, and all
/// members are updated simultaneously against the pre-update ensemble.
pub fn self_attention_update(
    ensemble: &ParamEnsemble,
    cfg: &AttentionConfig,
) -> Result<ParamEnsemble> {
    attention_update(ensemble, &ensemble.as_measure(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::log_partition;
    use crate::linalg::PsdMatrix;

    fn ens(rows: &[&[f64]]) -> ParamEnsemble {
        let dim = rows[0].len();
        ParamEnsemble::from_flat(dim, rows.iter().flat_map(|r| r.iter().copied()).collect())
            .unwrap()
    }

    #[test]
    fn single_key_adds_the_key() {
        let h = IntrinsicMeasure::discrete(&[DVector::from_vec(vec![0.5, -2.0])]).unwrap();
        let e = ens(&[&[1.0, 1.0], &[-3.0, 0.25]]);
        let out = attention_update(&e, &h, &AttentionConfig::default()).unwrap();
        assert_eq!(out.as_flat(), &[1.5, -1.0, -2.5, -1.75]);
        let keys = ens(&[&[0.5, -2.0]]);
        let out2 = softmax_attention_layer(&e, &keys, &AttentionConfig::default()).unwrap();
        assert_eq!(out, out2);
    }

    #[test]
    fn gaussian_measure_gives_affine_update() {
        let mu = DVector::from_vec(vec![0.5, -1.0]);
        let cov = PsdMatrix::from_row_major(2, &[1.5, 0.25, 0.25, 0.5]).unwrap();
        let h = IntrinsicMeasure::gaussian(mu.clone(), cov.clone()).unwrap();
        let e = ens(&[&[0.3, 0.9]]);
        let out = attention_update(&e, &h, &AttentionConfig::default()).unwrap();
        let eta = DVector::from_column_slice(e.member(0));
        let expected = &mu + (DMatrix::identity(2, 2) + cov.matrix()) * eta;
        assert!((DVector::from_column_slice(out.member(0)) - expected).amax() < 1e-15);
    }

    #[test]
    fn self_attention_of_single_member_doubles_it() {
        let e = ens(&[&[0.7, -0.2, 3.0]]);
        let out = self_attention_update(&e, &AttentionConfig::default()).unwrap();
        assert_eq!(out.as_flat(), &[1.4, -0.4, 6.0]);
    }

    #[test]
    fn identical_members_get_identical_updates() {
        let e = ens(&[&[0.1, 0.2], &[0.1, 0.2], &[0.1, 0.2]]);
        let out = self_attention_update(&e, &AttentionConfig::default()).unwrap();
        assert_eq!(out.member(0), out.member(1));
        assert_eq!(out.member(1), out.member(2));
    }

    #[test]
    fn zero_step_is_identity() {
        let h = IntrinsicMeasure::discrete(&[DVector::from_vec(vec![2.0])]).unwrap();
        let e = ens(&[&[1.0], &[-1.0]]);
        let cfg = AttentionConfig {
            step_size: 0.0,
            ..Default::default()
        };
        assert_eq!(attention_update(&e, &h, &cfg).unwrap(), e);
    }

    #[test]
    fn bilinear_pulls_back_the_layer_increment() {
        let keys = ens(&[&[1.0, 0.0], &[0.3, -0.8], &[-0.5, 0.5]]);
        let queries = ens(&[&[0.2, 0.4], &[-1.0, 1.5]]);
        let b = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, -0.4, 1.3]);
        let cfg = AttentionConfig {
            scale: 0.7,
            bilinear: Some(BilinearForm::new(b.clone()).unwrap()),
            ..Default::default()
        };
        let a = attention_update(&queries, &keys.as_measure(), &cfg).unwrap();
        let layer = softmax_attention_layer(&queries, &keys, &cfg).unwrap();
        for i in 0..queries.len() {
            let q = DVector::from_column_slice(queries.member(i));
            let inc = DVector::from_column_slice(layer.member(i)) - &q;
            let expected = &q + b.tr_mul(&inc);
            assert!((DVector::from_column_slice(a.member(i)) - expected).amax() < 1e-14);
        }
    }

    #[test]
    fn ascent_increases_log_partition() {
        let keys = [vec![1.0, 0.5], vec![-0.3, 0.2], vec![0.0, -1.0]].map(DVector::from_vec);
        let h = IntrinsicMeasure::discrete(&keys).unwrap();
        let e = ens(&[&[0.4, -0.6]]);
        let before = log_partition(&h, &e.to_params()[0]).unwrap();
        for step in [1e-3, 1.0] {
            let cfg = AttentionConfig {
                step_size: step,
                ..Default::default()
            };
            let out = attention_update(&e, &h, &cfg).unwrap();
            assert!(log_partition(&h, &out.to_params()[0]).unwrap() > before);
        }
    }

    #[test]
    fn rejects_bad_config_and_dims() {
        let h = IntrinsicMeasure::discrete(&[DVector::from_vec(vec![2.0])]).unwrap();
        let e = ens(&[&[1.0, 0.0]]);
        assert!(matches!(
            attention_update(&e, &h, &AttentionConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let cfg = AttentionConfig {
            scale: -1.0,
            ..Default::default()
        };
        assert!(self_attention_update(&e, &cfg).is_err());
    }
}
