//! Dense linear-algebra helpers: validated PSD matrices, symmetric matrix
//! functions, and overflow-safe log-sum-exp / softmax.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance on `|A - A^T|` accepted by [`PsdMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_CLAMP_TOL, 0)` are clamped to zero; anything lower is rejected.
pub const PSD_CLAMP_TOL: f64 = 1e-10;
/// Floor applied to eigenvalues before taking square roots or inverses.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// A real symmetric positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix(DMatrix<f64>);

impl PsdMatrix {
    /// Validates symmetry and semidefiniteness.
    ///
    /// The input is symmetrized as `(A + A^T) / 2`. If any eigenvalue falls in
    /// `[-1e-10, 0)` the matrix is rebuilt from its clamped eigendecomposition;
    /// otherwise the entries are kept as given.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::ContractViolation(format!(
                "matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::ContractViolation(
                "matrix dimension must be >= 1".into(),
            ));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        let asymmetry = (&m - m.transpose()).amax();
        if asymmetry > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let sym = if asymmetry == 0.0 {
            m
        } else {
            (&m + m.transpose()) * 0.5
        };
        let eig = SymmetricEigen::new(sym.clone());
        let min_eigenvalue = eig.eigenvalues.min();
        if min_eigenvalue < -PSD_CLAMP_TOL {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
        }
        if min_eigenvalue < 0.0 {
            let clamped = eig.eigenvalues.map(|v| v.max(0.0));
            return Ok(Self(reconstruct(&eig.eigenvectors, &clamped)));
        }
        Ok(Self(sym))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim) * c)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Builds from a row-major list of `dim * dim` entries.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::ContractViolation(format!(
                "expected {} matrix entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        SymmetricEigen::new(self.0.clone()).eigenvalues
    }

    /// Symmetric PSD square root.
    pub fn sqrt(&self) -> DMatrix<f64> {
        sym_fn(&self.0, |v| v.max(0.0).sqrt())
    }

    /// Symmetric inverse square root, with eigenvalues floored at [`EIGEN_FLOOR`].
    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        sym_fn(&self.0, |v| 1.0 / v.max(EIGEN_FLOOR).sqrt())
    }

    /// Inverse via Cholesky; fails if the matrix is not strictly positive definite.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let chol = self.0.clone().cholesky().ok_or(Error::SingularCovariance {
            rank: self.rank(EIGEN_FLOOR),
            dim: self.dim(),
        })?;
        Ok(chol.inverse())
    }

    /// Log-determinant with eigenvalues floored at the smallest positive double.
    pub fn logdet(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|v| v.max(f64::MIN_POSITIVE).ln())
            .sum()
    }

    /// Number of eigenvalues strictly above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&v| v > tol).count()
    }

    /// Quadratic form `v^T A v`.
    pub fn quad(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.0 * v))
    }
}

fn reconstruct(vectors: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let scaled = vectors * DMatrix::from_diagonal(values);
    let out = scaled * vectors.transpose();
    (&out + out.transpose()) * 0.5
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let values = eig.eigenvalues.map(f);
    reconstruct(&eig.eigenvectors, &values)
}

/// `log(sum(exp(xs)))` with max subtraction. Returns `-inf` for an empty slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Overwrites `logits` with their softmax and returns the log normalizer.
pub fn softmax_in_place(logits: &mut [f64]) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - m).exp();
        s += *l;
    }
    for l in logits.iter_mut() {
        *l /= s;
    }
    m + s.ln()
}

pub(crate) fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(PsdMatrix::new(m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            PsdMatrix::new(m),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn clamps_tiny_negative_eigenvalues() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -5e-11]));
        let p = PsdMatrix::new(m).unwrap();
        assert!(p.eigenvalues().min() >= 0.0);
        assert!((p.matrix()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn keeps_valid_entries_exactly() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.7]);
        let p = PsdMatrix::new(m.clone()).unwrap();
        assert_eq!(p.matrix(), &m);
    }

    #[test]
    fn sqrt_squares_back() {
        let p = PsdMatrix::from_row_major(2, &[2.0, 0.3, 0.3, 0.7]).unwrap();
        let r = p.sqrt();
        assert!((&r * &r - p.matrix()).amax() < 1e-14);
        let ri = p.inv_sqrt();
        assert!((&ri * p.matrix() * &ri - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn logsumexp_survives_large_inputs() {
        let v = logsumexp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut l = vec![-800.0, 3.0, 0.5, 3.0];
        softmax_in_place(&mut l);
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(l[1], l[3]);
    }
}
