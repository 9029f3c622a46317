//! Random problem instances for the randomized checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::expfam::IntrinsicMeasure;
use crate::linalg::PsdMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Discrete,
    Gaussian,
    SharedCov,
    General,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Discrete,
        Variant::Gaussian,
        Variant::SharedCov,
        Variant::General,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Discrete => "discrete_points",
            Variant::Gaussian => "gaussian",
            Variant::SharedCov => "shared_cov_mixture",
            Variant::General => "general_mixture",
        }
    }

    /// Components in an instance of this variant; always 1 for a Gaussian.
    pub fn components(self, n: usize) -> usize {
        match self {
            Variant::Gaussian => 1,
            _ => n,
        }
    }
}

pub fn uniform_vector(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.random_range(lo..=hi))
}

/// Haar-ish orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal(rng: &mut impl Rng, dim: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `Q diag(lambda) Q^T` with eigenvalues log-uniform in `[lo, hi]`.
pub fn random_psd(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> PsdMatrix {
    let q = random_orthogonal(rng, dim);
    let (a, b) = (lo.ln(), hi.ln());
    let lambda = DVector::from_fn(dim, |_, _| rng.random_range(a..=b).exp());
    let m = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    PsdMatrix::new((&m + m.transpose()) * 0.5).expect("eigenvalues are positive by construction")
}

/// Positive definite with condition number exactly `cond` (smallest
/// eigenvalue `scale`, largest `scale * cond`).
pub fn psd_with_condition(rng: &mut impl Rng, dim: usize, scale: f64, cond: f64) -> PsdMatrix {
    let q = random_orthogonal(rng, dim);
    let lambda = DVector::from_fn(dim, |i, _| {
        if i == 0 {
            scale
        } else if i == dim - 1 {
            scale * cond
        } else {
            scale * cond.powf(rng.random_range(0.0..=1.0))
        }
    });
    let m = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    PsdMatrix::new((&m + m.transpose()) * 0.5).expect("eigenvalues are positive by construction")
}

/// Weights in `(0.1, 1]`, rescaled to sum to one when `normalized`.
pub fn random_weights(rng: &mut impl Rng, n: usize, normalized: bool) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..=1.0)).collect();
    if normalized {
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
    }
    w
}

/// A measure with `n` components (points for the discrete variant) whose
/// locations lie in `[-2, 2]^dim` and whose covariances have eigenvalues in
/// `[0.05, 1]`. Discrete log-weights lie in `[-1, 1]`.
pub fn random_measure(
    rng: &mut impl Rng,
    variant: Variant,
    dim: usize,
    n: usize,
    normalized: bool,
) -> Result<IntrinsicMeasure> {
    let n = variant.components(n);
    let means: Vec<DVector<f64>> = (0..n)
        .map(|_| uniform_vector(rng, dim, -2.0, 2.0))
        .collect();
    match variant {
        Variant::Discrete => {
            let log_w = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            Ok(IntrinsicMeasure::DiscretePoints(
                crate::expfam::DiscretePoints::with_log_weights(&means, log_w)?,
            ))
        }
        Variant::Gaussian => {
            IntrinsicMeasure::gaussian(means[0].clone(), random_psd(rng, dim, 0.05, 1.0))
        }
        Variant::SharedCov => IntrinsicMeasure::shared_cov_mixture(
            random_weights(rng, n, normalized),
            means,
            random_psd(rng, dim, 0.05, 1.0),
        ),
        Variant::General => {
            let covs = (0..n).map(|_| random_psd(rng, dim, 0.05, 1.0)).collect();
            IntrinsicMeasure::general_mixture(random_weights(rng, n, normalized), means, covs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::block_rng;

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = block_rng(1, 0);
        let q = random_orthogonal(&mut rng, 5);
        assert!((q.transpose() * &q - DMatrix::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn condition_number_is_exact() {
        let mut rng = block_rng(2, 0);
        let s = psd_with_condition(&mut rng, 4, 0.5, 1e4);
        let ev = s.eigenvalues();
        let (lo, hi) = (ev.min(), ev.max());
        assert!((hi / lo / 1e4 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn normalized_weights_sum_to_one() {
        let mut rng = block_rng(3, 0);
        let w = random_weights(&mut rng, 7, true);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
