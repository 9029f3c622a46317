//! Seeded Gaussian sampling with a splittable generator.
//!
//! Samples are drawn in fixed-size blocks; block `b` uses the ChaCha stream
//! `b` of the seed, so the sample at a given index does not depend on how
//! blocks are scheduled across threads.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::attention::ParamEnsemble;
use crate::error::Result;
use crate::linalg::{check_dim, PsdMatrix};

pub const BLOCK: usize = 4096;

/// Generator for block `block` of the sample stream identified by `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// `n * dim` standard normal draws, row-major.
pub fn standard_normal(n: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; n * dim];
    out.par_chunks_mut(BLOCK * dim.max(1))
        .enumerate()
        .for_each(|(b, chunk)| {
            let mut rng = block_rng(seed, b as u64);
            for v in chunk.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        });
    out
}

/// `n` draws of `mean + cov^(1/2) z`, using the symmetric square root so
/// singular covariances are allowed.
pub fn gaussian_ensemble(
    mean: &DVector<f64>,
    cov: &PsdMatrix,
    n: usize,
    seed: u64,
) -> Result<ParamEnsemble> {
    check_dim(mean.len(), cov.dim())?;
    let dim = mean.len();
    let root: DMatrix<f64> = cov.sqrt();
    let mut data = standard_normal(n, dim, seed);
    data.par_chunks_mut(dim).for_each(|row| {
        let z = DVector::from_column_slice(row);
        let x = mean + &root * z;
        row.copy_from_slice(x.as_slice());
    });
    ParamEnsemble::from_flat(dim, data)
}
