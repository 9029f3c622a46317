//! Runs the equilibrium setting (carrier N(0, I), D = 4, N = 4096, 50 layers)
//! over 30 seeds and prints the spread of the drift statistics, scaled to
//! the units used by the equilibrium bands.
//!
//! Pass `discrete` to use the point-mass image instead of the Gaussian one.

use expattn::dynamics::{
    simulate_observed, EquilibriumMonitor, MeasurePolicy, PushforwardImage, RenormSpec,
};
use expattn::sampling::gaussian_ensemble;
use expattn::stats::kendall_trend;
use expattn::{AttentionConfig, DVector, PsdMatrix};

fn main() {
    let image = match std::env::args().nth(1).as_deref() {
        Some("discrete") => PushforwardImage::Discrete,
        _ => PushforwardImage::Gaussian,
    };
    let seeds: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(30);
    let dim = 4;
    let n = 4096;
    let steps = 50;
    let sigma = PsdMatrix::identity(dim);
    let mu = DVector::zeros(dim);
    let spec = RenormSpec::standard(dim);
    let policy = MeasurePolicy::PointwiseMap {
        cov: sigma.clone(),
        image,
    };
    let cfg = AttentionConfig::default();
    let nf = n as f64;
    let d = dim as f64;

    let (mut mean_units, mut cov_units, mut skew_units, mut pvals) =
        (vec![], vec![], vec![], vec![]);
    for seed in 1..=seeds {
        let init = gaussian_ensemble(&mu, &sigma, n, seed).unwrap();
        let mut monitor = EquilibriumMonitor::new(&mu, &sigma).unwrap();
        simulate_observed(&init, &policy, &cfg, Some(&spec), steps, |out| {
            monitor.observe(out).unwrap()
        })
        .unwrap();
        let mu_ = monitor.max_mean_drift() / (d / nf).sqrt();
        let cu = monitor.max_cov_drift() / (d * (d + 1.0) / nf).sqrt();
        let su = monitor.max_skewness() / (6.0 / nf).sqrt();
        let p = kendall_trend(&monitor.skewness_series()).p_value;
        let verdict = monitor.verdict(n);
        println!(
            "  verdict {} (resolved trend p {:.3}, expansion violations {})",
            verdict.status.as_str(),
            verdict.skewness_trend.p_value,
            verdict.expansion_violations
        );
        let last = monitor.steps.last().unwrap();
        let series = monitor.skewness_series();
        let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("  skewness range {:.3e} ({lo:.6} .. {hi:.6})", hi - lo);
        println!(
            "seed {seed:2}: mean {mu_:.3} cov {cu:.3} skew {su:.3} p {p:.3} | step1 attn cov {:.3e} last renorm cov {:.3e} trace ratio {:.6}",
            monitor.steps[0].attention_cov, last.renorm_cov, last.renorm_trace_ratio
        );
        mean_units.push(mu_);
        cov_units.push(cu);
        skew_units.push(su);
        pvals.push(p);
    }
    let stats = |name: &str, xs: &[f64]| {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        println!(
            "{name}: mean {mean:.4} sd {sd:.4} min {min:.4} max {max:.4} mean+6sd {:.4}",
            mean + 6.0 * sd
        );
    };
    stats("mean drift / sqrt(D/N)", &mean_units);
    stats("cov drift / sqrt(D(D+1)/N)", &cov_units);
    stats("max skewness / sqrt(6/N)", &skew_units);
    stats("skewness trend p", &pvals);
}
