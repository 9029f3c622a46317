//! Fenchel conjugate at a single dual point, with a grid cross-check in one
//! and two dimensions.

use std::path::Path;

use expattn::oracle::grid_sup;
use expattn::{fenchel_conjugate, log_partition, DualParam, Error, NaturalParam};

use crate::config::ConjugateConfig;
use crate::output::{float, write_csv, Summary};
use crate::{CliError, Outcome};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Grid boxes wider than this are skipped rather than searched.
const MAX_GRID_RADIUS: f64 = 50.0;

fn grid_resolution(dim: usize) -> f64 {
    if dim == 1 {
        1e-4
    } else {
        1e-2
    }
}

pub fn run(cfg: &ConjugateConfig, tol: f64, out: &Path) -> Result<Outcome, CliError> {
    let dim = cfg
        .measure
        .dim()
        .ok_or_else(|| CliError::config("measure has no components"))?;
    let h = cfg.measure.build(dim)?;
    if cfg.eta_star.len() != dim {
        return Err(CliError::config(format!(
            "eta_star has {} coordinates, measure has {dim}",
            cfg.eta_star.len()
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::config(format!(
            "solver tolerance must be positive, got {tol}"
        )));
    }
    let star = DualParam::new(cfg.eta_star.clone())
        .map_err(|e| CliError::config(format!("eta_star: {e}")))?;

    let mut s = Summary::new();
    s.put("command", "conjugate")
        .put("measure", h.variant_name())
        .put("dim", dim)
        .vector("eta_star", &cfg.eta_star)
        .num("tol", tol);
    let sol = match fenchel_conjugate(&h, &star, tol) {
        Ok(sol) => sol,
        Err(Error::NonConvergence {
            iterations,
            residual,
            newton_step,
        }) => {
            s.put("converged", false)
                .put("iterations", iterations)
                .num("residual", residual)
                .num("newton_step", newton_step)
                .put("verdict", "fail");
            s.write(&out.join("summary.txt"))?;
            write_rows(out, &[("residual", residual)])?;
            print!("{}", s.render());
            return Ok(Outcome::Fail(format!(
                "no maximizer after {iterations} iterations, gradient residual {residual:e}; eta_star is likely outside the interior of the mean range"
            )));
        }
        Err(e) => return Err(e.into()),
    };

    let argmax = sol.argmax.as_slice().to_vec();
    s.put("converged", true)
        .put("iterations", sol.iterations)
        .num("value", sol.value)
        .vector("argmax", &argmax)
        .num("residual", sol.residual);
    let mut rows = vec![("value", sol.value), ("residual", sol.residual)];
    if dim <= 2 {
        let radius = argmax
            .iter()
            .fold(3.0f64, |r, x| r.max((1.5 * x.abs()).ceil()));
        if radius <= MAX_GRID_RADIUS {
            let res = grid_resolution(dim);
            let objective = |x: &expattn::DVector<f64>| {
                let g = NaturalParam::from_vector(x.clone())
                    .and_then(|p| log_partition(&h, &p))
                    .unwrap_or(f64::INFINITY);
                x.dot(star.vector()) - g
            };
            let grid = grid_sup(objective, &vec![(-radius, radius); dim], res)?;
            let delta = (grid.value - sol.value).abs();
            s.num("grid_resolution", res)
                .num("grid_value", grid.value)
                .num("grid_delta", delta);
            rows.push(("grid_delta", delta));
        } else {
            s.put("grid_delta", "skipped (maximizer too far out)");
        }
    }
    s.put("verdict", "pass");
    s.write(&out.join("summary.txt"))?;
    for x in &argmax {
        rows.push(("argmax", *x));
    }
    write_rows(out, &rows)?;
    print!("{}", s.render());
    Ok(Outcome::Pass)
}

fn write_rows(out: &Path, rows: &[(&str, f64)]) -> std::io::Result<()> {
    let records = rows.iter().map(|(k, v)| [k.to_string(), float(*v)]);
    write_csv(&out.join("conjugate.csv"), &["quantity", "value"], records)
}
