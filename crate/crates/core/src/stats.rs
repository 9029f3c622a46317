//! Small descriptive statistics used by the trajectory probes.

use statrs::function::erf::erfc;

/// Population skewness `m3 / m2^(3/2)`; zero when the variance vanishes.
pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let (m2, m3) = xs.iter().fold((0.0, 0.0), |(m2, m3), x| {
        let d = x - mean;
        (m2 + d * d, m3 + d * d * d)
    });
    let (m2, m3) = (m2 / n as f64, m3 / n as f64);
    if m2 <= f64::MIN_POSITIVE {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

/// Mann-Kendall trend test of a series against its index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KendallTrend {
    pub tau: f64,
    /// Two-sided p-value from the normal approximation with tie correction.
    pub p_value: f64,
}

pub fn kendall_trend(series: &[f64]) -> KendallTrend {
    kendall_trend_resolved(series, 0.0)
}

/// [`kendall_trend`] with values closer than `resolution` counted as ties, so
/// rounding noise on a flat series is not read as a trend.
pub fn kendall_trend_resolved(series: &[f64], resolution: f64) -> KendallTrend {
    let n = series.len();
    if n < 3 {
        return KendallTrend {
            tau: 0.0,
            p_value: 1.0,
        };
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let d = series[j] - series[i];
            s += if d > resolution {
                1
            } else if d < -resolution {
                -1
            } else {
                0
            };
        }
    }
    // tie groups: runs of sorted values whose consecutive gaps are within resolution
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted[j] - sorted[j - 1] <= resolution {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j;
    }
    let nf = n as f64;
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    let pairs = nf * (nf - 1.0) / 2.0;
    let tau = s as f64 / pairs;
    if var <= 0.0 {
        return KendallTrend { tau, p_value: 1.0 };
    }
    // continuity correction
    let adj = if s > 0 {
        s - 1
    } else if s < 0 {
        s + 1
    } else {
        0
    };
    let z = adj as f64 / var.sqrt();
    KendallTrend {
        tau,
        p_value: erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0),
    }
}
