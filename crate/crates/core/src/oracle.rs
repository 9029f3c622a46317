//! Independent numerical oracles: finite differences, Monte Carlo estimates
//! of the partition integral, and exhaustive grid maximization.
//!
//! Nothing here calls the closed forms in [`crate::expfam`]; the oracles only
//! read the raw parameters of a measure and do their own arithmetic.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expfam::IntrinsicMeasure;
use crate::linalg::{check_dim, sym_fn};
use crate::sampling::{block_rng, BLOCK};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDiffSpec {
    step: f64,
}

impl FiniteDiffSpec {
    pub const DEFAULT_STEP: f64 = 1e-5;

    pub fn new(step: f64) -> Result<Self> {
        if !(1e-9..=1e-2).contains(&step) {
            return Err(Error::ContractViolation(format!(
                "finite-difference step must lie in [1e-9, 1e-2], got {step}"
            )));
        }
        Ok(Self { step })
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

impl Default for FiniteDiffSpec {
    fn default() -> Self {
        Self {
            step: Self::DEFAULT_STEP,
        }
    }
}

fn eval(f: &impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::OracleDomain(format!(
            "function is not finite at {:?}",
            x.as_slice()
        )))
    }
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn fd_gradient(
    f: impl Fn(&DVector<f64>) -> f64,
    eta: &DVector<f64>,
    spec: FiniteDiffSpec,
) -> Result<DVector<f64>> {
    let h = spec.step;
    let mut out = DVector::zeros(eta.len());
    let mut x = eta.clone();
    for i in 0..eta.len() {
        x[i] = eta[i] + h;
        let plus = eval(&f, &x)?;
        x[i] = eta[i] - h;
        let minus = eval(&f, &x)?;
        x[i] = eta[i];
        out[i] = (plus - minus) / (2.0 * h);
    }
    Ok(out)
}

/// Second-order central differences of a scalar function; symmetric by
/// construction.
pub fn fd_hessian(
    f: impl Fn(&DVector<f64>) -> f64,
    eta: &DVector<f64>,
    spec: FiniteDiffSpec,
) -> Result<DMatrix<f64>> {
    let h = spec.step;
    let d = eta.len();
    let mut out = DMatrix::zeros(d, d);
    let mut x = eta.clone();
    let centre = eval(&f, eta)?;
    for i in 0..d {
        x[i] = eta[i] + h;
        let plus = eval(&f, &x)?;
        x[i] = eta[i] - h;
        let minus = eval(&f, &x)?;
        x[i] = eta[i];
        out[(i, i)] = (plus - 2.0 * centre + minus) / (h * h);
        for j in i + 1..d {
            let mut corner = |si: f64, sj: f64| {
                x[i] = eta[i] + si * h;
                x[j] = eta[j] + sj * h;
                let v = eval(&f, &x);
                x[i] = eta[i];
                x[j] = eta[j];
                v
            };
            let pp = corner(1.0, 1.0)?;
            let pm = corner(1.0, -1.0)?;
            let mp = corner(-1.0, 1.0)?;
            let mm = corner(-1.0, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Central-difference Jacobian of a vector function, symmetrized; the
/// Hessian when `g` is a gradient.
pub fn fd_jacobian(
    g: impl Fn(&DVector<f64>) -> DVector<f64>,
    eta: &DVector<f64>,
    spec: FiniteDiffSpec,
) -> Result<DMatrix<f64>> {
    let h = spec.step;
    let d = eta.len();
    let mut out = DMatrix::zeros(d, d);
    let mut x = eta.clone();
    for j in 0..d {
        x[j] = eta[j] + h;
        let plus = g(&x);
        x[j] = eta[j] - h;
        let minus = g(&x);
        x[j] = eta[j];
        if plus.len() != d || minus.len() != d {
            return Err(Error::OracleDomain("jacobian of a non-square map".into()));
        }
        if plus.iter().chain(minus.iter()).any(|v| !v.is_finite()) {
            return Err(Error::OracleDomain(format!(
                "function is not finite near {:?}",
                eta.as_slice()
            )));
        }
        out.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    Ok(symmetrize(out))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSpec {
    n_samples: usize,
    seed: u64,
}

impl McSpec {
    pub const MIN_SAMPLES: usize = 1000;

    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples < Self::MIN_SAMPLES {
            return Err(Error::ContractViolation(format!(
                "Monte Carlo needs at least {} samples, got {n_samples}",
                Self::MIN_SAMPLES
            )));
        }
        Ok(Self { n_samples, seed })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// Delta-method standard error of `estimate`.
    pub std_error: f64,
}

struct Component {
    mean: DVector<f64>,
    root: DMatrix<f64>,
}

/// Monte Carlo estimate of `log Z(eta)` for Gaussian and mixture measures.
///
/// Draws `x ~ h / W` with `W` the total mass, then returns
/// `log W + log mean exp(x . eta)`.
pub fn mc_log_partition(
    h: &IntrinsicMeasure,
    eta: &DVector<f64>,
    spec: McSpec,
) -> Result<McEstimate> {
    check_dim(h.dim(), eta.len())?;
    let root = |m: &DMatrix<f64>| sym_fn(m, |v| v.max(0.0).sqrt());
    let (weights, components): (Vec<f64>, Vec<Component>) = match h {
        IntrinsicMeasure::DiscretePoints(_) => {
            return Err(Error::UnsupportedMeasure {
                op: "mc_log_partition",
                variant: h.variant_name(),
            })
        }
        IntrinsicMeasure::Gaussian(g) => (
            vec![1.0],
            vec![Component {
                mean: g.mean().clone(),
                root: root(g.cov().matrix()),
            }],
        ),
        IntrinsicMeasure::SharedCovMixture(m) => {
            let r = root(m.cov().matrix());
            (
                m.weights().to_vec(),
                m.means()
                    .iter()
                    .map(|mu| Component {
                        mean: mu.clone(),
                        root: r.clone(),
                    })
                    .collect(),
            )
        }
        IntrinsicMeasure::GeneralMixture(m) => (
            m.weights().to_vec(),
            m.means()
                .iter()
                .zip(m.covs())
                .map(|(mu, c)| Component {
                    mean: mu.clone(),
                    root: root(c.matrix()),
                })
                .collect(),
        ),
    };
    let mass: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / mass;
        cumulative.push(acc);
    }
    // projections a_k = root_k^T eta, so x . eta = mu_k . eta + z . a_k
    let projected: Vec<(f64, DVector<f64>)> = components
        .iter()
        .map(|c| (c.mean.dot(eta), c.root.tr_mul(eta)))
        .collect();

    let dim = eta.len();
    let n = spec.n_samples;
    let mut exponents = vec![0.0; n];
    exponents
        .par_chunks_mut(BLOCK)
        .enumerate()
        .for_each(|(b, chunk)| {
            let mut rng = block_rng(spec.seed, b as u64);
            for s in chunk.iter_mut() {
                let u: f64 = rng.random();
                let k = cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(cumulative.len() - 1);
                let (offset, a) = &projected[k];
                let mut v = *offset;
                for i in 0..dim {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    v += z * a[i];
                }
                *s = v;
            }
        });

    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let nf = n as f64;
    let mean = exponents.iter().map(|s| (s - max).exp()).sum::<f64>() / nf;
    let var = exponents
        .iter()
        .map(|s| {
            let d = (s - max).exp() - mean;
            d * d
        })
        .sum::<f64>()
        / (nf - 1.0);
    Ok(McEstimate {
        estimate: mass.ln() + max + mean.ln(),
        std_error: var.sqrt() / (nf.sqrt() * mean),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMax {
    pub argmax: DVector<f64>,
    pub value: f64,
}

/// Exhaustive maximization over a grid of spacing `resolution` covering
/// `bounds` (one `(lo, hi)` per coordinate, at most two coordinates).
///
/// Ties resolve to the first grid point in row-major order.
pub fn grid_sup(
    f: impl Fn(&DVector<f64>) -> f64 + Sync,
    bounds: &[(f64, f64)],
    resolution: f64,
) -> Result<GridMax> {
    let dim = bounds.len();
    if dim > 2 {
        return Err(Error::OracleScale { dim });
    }
    if dim == 0 {
        return Err(Error::OracleDomain("empty box".into()));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::OracleDomain(format!("bad resolution {resolution}")));
    }
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::OracleDomain(format!("bad interval [{lo}, {hi}]")));
            }
            let count = ((hi - lo) / resolution + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| lo + k as f64 * resolution).collect())
        })
        .collect::<Result<_>>()?;
    let inner: &[f64] = axes.get(1).map(|v| v.as_slice()).unwrap_or(&[0.0]);
    let best = axes[0]
        .par_iter()
        .map(|&x0| {
            let mut best: Option<(f64, DVector<f64>)> = None;
            for &x1 in inner {
                let p = if dim == 1 {
                    DVector::from_vec(vec![x0])
                } else {
                    DVector::from_vec(vec![x0, x1])
                };
                let v = f(&p);
                if v.is_finite() && best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, p));
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .fold(None::<(f64, DVector<f64>)>, |acc, (v, p)| match acc {
            Some((b, q)) if b >= v => Some((b, q)),
            _ => Some((v, p)),
        });
    let (value, argmax) =
        best.ok_or_else(|| Error::OracleDomain("function not finite anywhere on grid".into()))?;
    Ok(GridMax { argmax, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::PsdMatrix;

    #[test]
    fn gradient_of_constant_and_linear() {
        let eta = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let g = fd_gradient(|_| 4.0, &eta, FiniteDiffSpec::default()).unwrap();
        assert_eq!(g.amax(), 0.0);
        let a = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let g = fd_gradient(|x| a.dot(x), &eta, FiniteDiffSpec::default()).unwrap();
        assert!((g - &a).amax() < 1e-9);
    }

    #[test]
    fn hessian_of_quadratic() {
        let s = DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8]);
        let eta = DVector::from_vec(vec![0.7, -0.1]);
        let h = fd_hessian(|x| 0.5 * x.dot(&(&s * x)), &eta, FiniteDiffSpec::default()).unwrap();
        assert!((&h - &s).amax() < 1e-5, "{}", (&h - &s).amax());
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn rejects_non_finite_values() {
        let eta = DVector::from_vec(vec![0.0]);
        let r = fd_gradient(|x| x[0].ln(), &eta, FiniteDiffSpec::default());
        assert!(matches!(r, Err(Error::OracleDomain(_))));
        assert!(FiniteDiffSpec::new(0.1).is_err());
        assert!(FiniteDiffSpec::new(1e-10).is_err());
    }

    #[test]
    fn grid_finds_peak_of_parabola() {
        let g = grid_sup(|x| -x[0] * x[0], &[(-1.0, 1.0)], 1e-3).unwrap();
        assert!(g.argmax[0].abs() <= 1e-3);
        assert!(g.value.abs() <= 1e-6);
    }

    #[test]
    fn grid_refuses_three_dimensions() {
        let r = grid_sup(|_| 0.0, &[(0.0, 1.0); 3], 0.1);
        assert_eq!(r.unwrap_err(), Error::OracleScale { dim: 3 });
    }

    #[test]
    fn mc_rejects_discrete_and_small_budgets() {
        let h = IntrinsicMeasure::discrete(&[DVector::from_vec(vec![1.0])]).unwrap();
        let eta = DVector::from_vec(vec![0.0]);
        assert!(mc_log_partition(&h, &eta, McSpec::new(1000, 1).unwrap()).is_err());
        assert!(McSpec::new(999, 1).is_err());
    }

    #[test]
    fn mc_is_seed_deterministic() {
        let h = IntrinsicMeasure::gaussian(DVector::zeros(2), PsdMatrix::identity(2)).unwrap();
        let eta = DVector::from_vec(vec![0.5, 0.5]);
        let spec = McSpec::new(20_000, 9).unwrap();
        let a = mc_log_partition(&h, &eta, spec).unwrap();
        let b = mc_log_partition(&h, &eta, spec).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }
}
