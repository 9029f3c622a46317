//! Exploratory trajectories: no pass/fail beyond runtime errors.

use std::path::Path;

use expattn::sampling::gaussian_ensemble;
use expattn::simulate;

use crate::config::ExperimentConfig;
use crate::output::{write_trajectory, Summary};
use crate::{CliError, Outcome};

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let policy = cfg.policy()?;
    let attention = cfg.attention()?;
    let spec = cfg.renorm()?;
    let (m0, c0) = cfg.initial()?;
    let initial = gaussian_ensemble(&m0, &c0, cfg.n_points, cfg.seed)?;
    let traj = simulate(&initial, &policy, &attention, spec.as_ref(), cfg.steps)?;
    write_trajectory(&out.join("trajectory.csv"), &traj.records)?;
    let last = traj.records.last().expect("steps >= 1");
    let mut s = Summary::new();
    s.put("command", "dynamics")
        .put("seed", cfg.seed)
        .put("dim", cfg.dim)
        .put("n_points", cfg.n_points)
        .put("steps", cfg.steps)
        .put("policy", policy.name())
        .put("renorm", spec.is_some())
        .put("rows", traj.records.len())
        .put("ridge_steps", traj.ridge_steps)
        .num("final_mean_norm", last.mean_norm)
        .num("final_cov_trace", last.cov_trace)
        .num("final_max_marginal_skewness", last.max_marginal_skewness);
    s.write(&out.join("summary.txt"))?;
    print!("{}", s.render());
    Ok(Outcome::Pass)
}
