//! Exact and sampled check of the Gaussian equilibrium.

use std::path::Path;

use expattn::dynamics::{DriftBands, DEFAULT_RIDGE, EQUILIBRIUM_TOL, MIN_BAND_ENSEMBLE};
use expattn::sampling::gaussian_ensemble;
use expattn::{
    equilibrium_affine_check, moments, simulate_observed, BandStatus, DVector, EquilibriumMonitor,
    PsdMatrix, RenormSpec,
};

use crate::config::{ExperimentConfig, PolicyTag};
use crate::output::{write_trajectory, Summary};
use crate::{CliError, Outcome};

/// Target agreement for reporting whether RN aims at the equilibrium.
const TARGET_MATCH_TOL: f64 = 1e-10;

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    if !matches!(
        cfg.policy,
        PolicyTag::PointwiseMap | PolicyTag::PointwiseMapDiscrete
    ) {
        return Err(CliError::config(
            "equilibrium needs policy = \"pointwise_map\" or \"pointwise_map_discrete\"",
        ));
    }
    let (mu, sigma) = cfg.carrier()?;
    let policy = cfg.policy()?;
    let attention = cfg.attention()?;
    let exact = equilibrium_affine_check(&mu, &sigma)?;
    let spec = match cfg.renorm()? {
        Some(spec) => spec,
        None => RenormSpec::new(
            exact.equilibrium_mean.clone(),
            PsdMatrix::new(exact.equilibrium_cov.clone())?,
            DEFAULT_RIDGE,
        )?,
    };
    let targets_equilibrium = (spec.target_mean() - &exact.equilibrium_mean).amax()
        <= TARGET_MATCH_TOL
        && (spec.target_cov().matrix() - &exact.equilibrium_cov).amax() <= TARGET_MATCH_TOL;

    let (m0, c0) = cfg.initial()?;
    let initial = gaussian_ensemble(&m0, &c0, cfg.n_points, cfg.seed)?;
    let mut monitor = EquilibriumMonitor::new(&mu, &sigma)?;
    let mut observe_err = None;
    let traj = simulate_observed(
        &initial,
        &policy,
        &attention,
        Some(&spec),
        cfg.steps,
        |layer| {
            if observe_err.is_none() {
                observe_err = monitor.observe(layer).err();
            }
        },
    )?;
    if let Some(e) = observe_err {
        return Err(e.into());
    }
    write_trajectory(&out.join("trajectory.csv"), &traj.records)?;

    let bands = DriftBands::scaled(cfg.dim, cfg.n_points, cfg.band_multiplier());
    let verdict = monitor.verdict_with(cfg.n_points, bands);
    let last = monitor.steps.last().expect("steps >= 1");
    let final_moments = moments(&traj.final_ensemble)?;
    let mean_offset: DVector<f64> = &final_moments.mean - &exact.equilibrium_mean;
    let direction = if last.renorm_trace_ratio > 1.0 {
        "expanding"
    } else {
        "contracting"
    };

    let exact_ok = exact.passed();
    let gated = verdict.status != BandStatus::Inconclusive;
    let expansion_ok = !gated || verdict.expansion_violations == 0;
    let pass = exact_ok && verdict.status != BandStatus::Outside && expansion_ok;

    let mut s = Summary::new();
    s.put("command", "equilibrium")
        .put("seed", cfg.seed)
        .put("dim", cfg.dim)
        .put("n_points", cfg.n_points)
        .put("steps", cfg.steps)
        .put("policy", policy.name())
        .num("exact_max_error", exact.max_error())
        .num("exact_tol", EQUILIBRIUM_TOL)
        .put("exact_check", if exact_ok { "pass" } else { "fail" })
        .put("renorm_targets_equilibrium", targets_equilibrium)
        .num("band_multiplier", cfg.band_multiplier())
        .num("band_mean", verdict.bands.mean)
        .num("band_cov", verdict.bands.cov)
        .num("band_skewness", verdict.bands.skewness)
        .num("max_mean_drift", verdict.max_mean_drift)
        .num("max_cov_drift", verdict.max_cov_drift)
        .num("max_skewness", verdict.max_skewness)
        .num("skewness_kendall_tau", verdict.skewness_trend.tau)
        .num("skewness_kendall_p", verdict.skewness_trend.p_value)
        .put("expansion_violations", verdict.expansion_violations)
        .put("ridge_steps", traj.ridge_steps)
        .num("final_cov_trace_ratio", last.renorm_trace_ratio)
        .put("cov_drift_direction", direction)
        .vector("final_mean_offset", mean_offset.as_slice())
        .put("band_verdict", verdict.status.as_str());
    if verdict.status == BandStatus::Inconclusive {
        s.put(
            "band_note",
            format!("band test needs n_points >= {MIN_BAND_ENSEMBLE}"),
        );
    }
    s.put("verdict", if pass { "pass" } else { "fail" });
    s.write(&out.join("summary.txt"))?;
    print!("{}", s.render());

    Ok(if pass {
        Outcome::Pass
    } else if !exact_ok {
        Outcome::Fail(format!(
            "exact check error {:e} above {EQUILIBRIUM_TOL:e}",
            exact.max_error()
        ))
    } else if !expansion_ok {
        Outcome::Fail(format!(
            "{} steps where attention did not expand the covariance trace",
            verdict.expansion_violations
        ))
    } else {
        Outcome::Fail(format!(
            "drift outside band: mean {:.3} (band {:.3}), cov {:.3} (band {:.3}), skewness {:.3} (band {:.3}), trend p {:.3}; covariance {direction} (trace ratio {:.4}), mean offset norm {:.3e}",
            verdict.max_mean_drift,
            verdict.bands.mean,
            verdict.max_cov_drift,
            verdict.bands.cov,
            verdict.max_skewness,
            verdict.bands.skewness,
            verdict.skewness_trend.p_value,
            last.renorm_trace_ratio,
            mean_offset.norm(),
        ))
    })
}
