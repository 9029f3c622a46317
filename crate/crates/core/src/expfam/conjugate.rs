use nalgebra::{DVector, SymmetricEigen};

use super::{grad_at, hessian_at, log_partition_at, DualParam, IntrinsicMeasure, NaturalParam};
use crate::error::{Error, Result};
use crate::linalg::check_dim;

pub const MAX_ITERATIONS: usize = 10_000;
const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
/// Eigenvalues of the Hessian at or below this are treated as flat directions.
const NULL_CURVATURE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateSolution {
    /// `G*(eta*)`.
    pub value: f64,
    pub argmax: NaturalParam,
    /// `|eta* - grad G(argmax)|`.
    pub residual: f64,
    pub iterations: usize,
}

/// `G*(eta*) = sup_eta (eta . eta* - G(eta))` by gradient ascent with Armijo
/// backtracking, starting from `eta = 0`. Each line search starts from the
/// Barzilai-Borwein step of the previous iteration.
///
/// Convergence requires `|grad| <= solver_tol` and a pseudo-Newton step no
/// larger than `sqrt(solver_tol)`. The second test rejects dual points on the
/// boundary of the mean range, where the gradient vanishes only as the
/// iterate runs off to infinity.
pub fn fenchel_conjugate(
    h: &IntrinsicMeasure,
    eta_star: &DualParam,
    solver_tol: f64,
) -> Result<ConjugateSolution> {
    check_dim(h.dim(), eta_star.dim())?;
    if !(solver_tol.is_finite() && solver_tol > 0.0) {
        return Err(Error::ContractViolation(format!(
            "solver tolerance must be positive, got {solver_tol}"
        )));
    }
    let target = eta_star.vector();
    let objective = |eta: &DVector<f64>| eta.dot(target) - log_partition_at(h, eta);
    let ascent = |eta: &DVector<f64>| target - grad_at(h, eta.as_slice());

    let mut eta = DVector::zeros(h.dim());
    let mut value = objective(&eta);
    let mut grad = ascent(&eta);
    let mut step = 1.0;

    for iteration in 0..=MAX_ITERATIONS {
        let residual = grad.norm();
        if residual <= solver_tol {
            let newton_step = pseudo_newton_norm(h, &eta, &grad);
            if newton_step <= solver_tol.sqrt() {
                return Ok(ConjugateSolution {
                    value,
                    argmax: NaturalParam::from_vector(eta)?,
                    residual,
                    iterations: iteration,
                });
            }
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual,
                newton_step,
            });
        }
        if iteration == MAX_ITERATIONS {
            break;
        }
        // roundoff in the objective dominates the Armijo gain near the optimum
        let slack = 8.0 * f64::EPSILON * (1.0 + value.abs());
        let sq = residual * residual;
        let mut t = step;
        let (candidate, candidate_value) = loop {
            let candidate = &eta + &grad * t;
            let v = objective(&candidate);
            if v.is_finite() && v >= value + ARMIJO * t * sq - slack {
                break (candidate, v);
            }
            t *= SHRINK;
            if t < 1e-300 {
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    residual,
                    newton_step: pseudo_newton_norm(h, &eta, &grad),
                });
            }
        };
        let next_grad = ascent(&candidate);
        let s = &candidate - &eta;
        let y = &next_grad - &grad;
        let sy = s.dot(&y);
        // concave objective: s . y < 0 along an ascent step
        step = if sy < 0.0 {
            (-s.norm_squared() / sy).clamp(1e-10, 1e10)
        } else {
            (2.0 * t).min(1e10)
        };
        eta = candidate;
        value = candidate_value;
        grad = next_grad;
    }
    let residual = grad.norm();
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual,
        newton_step: pseudo_newton_norm(h, &eta, &grad),
    })
}

fn pseudo_newton_norm(h: &IntrinsicMeasure, eta: &DVector<f64>, grad: &DVector<f64>) -> f64 {
    let eig = SymmetricEigen::new(hessian_at(h, eta));
    let mut sq = 0.0;
    for (i, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda > NULL_CURVATURE {
            let c = eig.eigenvectors.column(i).dot(grad) / lambda;
            sq += c * c;
        }
    }
    sq.sqrt()
}
