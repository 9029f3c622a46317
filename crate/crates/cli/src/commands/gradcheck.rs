//! Randomized gradient and Hessian suite.
//!
//! Each measure variant draws its instances from its own RNG stream, so adding
//! trials never changes the earlier rows.

use std::path::Path;

use expattn::check::gradient_check;
use expattn::instances::{random_measure, uniform_vector, Variant};
use expattn::oracle::FiniteDiffSpec;
use expattn::sampling::block_rng;
use rand::Rng;

use crate::output::{float, write_csv, Summary};
use crate::{CliError, Outcome};

pub const DEFAULT_TOL: f64 = 1e-6;
/// Hessians are differences of gradients, so they get one more decade.
pub const HESSIAN_TOL_FACTOR: f64 = 10.0;
pub const MAX_POINTS: usize = 16;
pub const PSD_SLACK: f64 = 1e-9;

pub const HEADER: [&str; 6] = ["variant", "D", "N", "max_rel_err", "pass", "quantity"];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub variant: &'static str,
    pub dim: usize,
    pub n: usize,
    pub max_rel_err: f64,
    pub pass: bool,
    pub quantity: &'static str,
}

pub fn suite(dims: &[usize], trials: usize, seed: u64, tol: f64) -> Result<Vec<Row>, CliError> {
    if trials == 0 {
        return Err(CliError::config("trials must be >= 1"));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(CliError::config(
            "dims must be a non-empty list of positive integers",
        ));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CliError::config(format!("bad tolerance {tol}")));
    }
    let spec = FiniteDiffSpec::default();
    let mut rows = Vec::with_capacity(Variant::ALL.len() * trials * 2);
    for (stream, variant) in Variant::ALL.into_iter().enumerate() {
        let mut rng = block_rng(seed, stream as u64);
        for t in 0..trials {
            let dim = dims[t % dims.len()];
            let n = variant.components(rng.random_range(1..=MAX_POINTS));
            let h = random_measure(&mut rng, variant, dim, n, false)?;
            let eta = uniform_vector(&mut rng, dim, -2.0, 2.0);
            let c = gradient_check(&h, &eta, spec)?;
            rows.push(Row {
                variant: variant.name(),
                dim,
                n,
                max_rel_err: c.gradient,
                pass: c.gradient <= tol,
                quantity: "gradient",
            });
            rows.push(Row {
                variant: variant.name(),
                dim,
                n,
                max_rel_err: c.hessian,
                pass: c.hessian <= HESSIAN_TOL_FACTOR * tol
                    && c.hessian_min_eigenvalue >= -PSD_SLACK,
                quantity: "hessian",
            });
        }
    }
    Ok(rows)
}

pub fn write(path: &Path, rows: &[Row]) -> std::io::Result<()> {
    let records = rows.iter().map(|r| {
        [
            r.variant.to_string(),
            r.dim.to_string(),
            r.n.to_string(),
            float(r.max_rel_err),
            r.pass.to_string(),
            r.quantity.to_string(),
        ]
    });
    write_csv(path, &HEADER, records)
}

pub fn run(
    dims: &[usize],
    trials: usize,
    seed: u64,
    tol: f64,
    out: &Path,
) -> Result<Outcome, CliError> {
    let rows = suite(dims, trials, seed, tol)?;
    write(&out.join("gradcheck.csv"), &rows)?;
    let failures = rows.iter().filter(|r| !r.pass).count();
    let worst = |q: &str| {
        rows.iter()
            .filter(|r| r.quantity == q)
            .map(|r| r.max_rel_err)
            .fold(0.0, f64::max)
    };
    let mut summary = Summary::new();
    summary
        .put("command", "gradcheck")
        .put("seed", seed)
        .put("trials", trials)
        .num("tol", tol)
        .num("hessian_tol", HESSIAN_TOL_FACTOR * tol)
        .put("comparisons", rows.len())
        .put("failures", failures)
        .num("max_gradient_rel_err", worst("gradient"))
        .num("max_hessian_rel_err", worst("hessian"))
        .put("verdict", if failures == 0 { "pass" } else { "fail" });
    summary.write(&out.join("summary.txt"))?;
    print!("{}", summary.render());
    Ok(if failures == 0 {
        Outcome::Pass
    } else {
        Outcome::Fail(format!(
            "{failures} of {} comparisons over tolerance",
            rows.len()
        ))
    })
}
