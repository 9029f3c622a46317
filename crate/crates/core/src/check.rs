//! Closed forms against the independent oracles.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::expfam::{
    grad_log_partition, hessian_log_partition, log_partition, IntrinsicMeasure, NaturalParam,
};
use crate::oracle::{fd_gradient, fd_hessian, fd_jacobian, FiniteDiffSpec};

/// `max |a - b| / max(1, max |b|)`, with `b` the reference.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
    diff / scale
}

/// Errors of the analytic derivatives of `G` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// Gradient vs central differences of `G`.
    pub gradient: f64,
    /// Hessian vs central differences of the analytic gradient.
    pub hessian: f64,
    /// Hessian vs second differences of `G`, absolute.
    pub hessian_second_difference: f64,
    /// Smallest eigenvalue of the analytic Hessian.
    pub hessian_min_eigenvalue: f64,
}

/// Step for second differences of `G`: at the default first-difference step,
/// rounding in `G` is amplified by `1 / h^2` to around 1e-5.
pub const SECOND_DIFFERENCE_STEP: f64 = 1e-4;

pub fn gradient_check(
    h: &IntrinsicMeasure,
    eta: &DVector<f64>,
    spec: FiniteDiffSpec,
) -> Result<GradientCheck> {
    let at = |x: &DVector<f64>| NaturalParam::from_vector(x.clone());
    let g = |x: &DVector<f64>| at(x).and_then(|p| log_partition(h, &p)).unwrap_or(f64::NAN);
    let grad = |x: &DVector<f64>| {
        at(x)
            .and_then(|p| grad_log_partition(h, &p))
            .map(|d| d.into_vector())
            .unwrap_or_else(|_| DVector::from_element(x.len(), f64::NAN))
    };
    let p = at(eta)?;
    let analytic = grad_log_partition(h, &p)?;
    let hess = hessian_log_partition(h, &p)?;
    let fd = fd_gradient(g, eta, spec)?;
    let jac = fd_jacobian(grad, eta, spec)?;
    let second = fd_hessian(g, eta, FiniteDiffSpec::new(SECOND_DIFFERENCE_STEP)?)?;
    let abs_diff = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).amax();
    Ok(GradientCheck {
        gradient: relative_error(analytic.as_slice(), fd.as_slice()),
        hessian: relative_error(hess.matrix().as_slice(), jac.as_slice()),
        hessian_second_difference: abs_diff(hess.matrix(), &second),
        hessian_min_eigenvalue: hess.eigenvalues().min(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::PsdMatrix;

    #[test]
    fn relative_error_floors_scale_at_one() {
        assert_eq!(relative_error(&[0.1], &[0.0]), 0.1);
        assert_eq!(relative_error(&[11.0, 0.0], &[10.0, 0.0]), 0.1);
    }

    #[test]
    fn gaussian_passes() {
        let h = IntrinsicMeasure::gaussian(
            DVector::from_vec(vec![1.0, -0.5]),
            PsdMatrix::from_row_major(2, &[1.0, 0.3, 0.3, 0.5]).unwrap(),
        )
        .unwrap();
        let c = gradient_check(
            &h,
            &DVector::from_vec(vec![0.4, 1.2]),
            FiniteDiffSpec::default(),
        )
        .unwrap();
        assert!(c.gradient < 1e-9, "{c:?}");
        assert!(c.hessian < 1e-9, "{c:?}");
        assert!(c.hessian_second_difference < 1e-4, "{c:?}");
    }
}
