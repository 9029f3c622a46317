//! CSV and summary writers. Floats use `{:.16e}`, 17 significant digits,
//! which round-trips every `f64`.

use std::fmt::Display;
use std::path::Path;

use expattn::TrajectoryRecord;

pub const TRAJECTORY_HEADER: [&str; 8] = [
    "step",
    "phase",
    "mean_norm",
    "cov_trace",
    "cov_logdet",
    "mean_dist_to_target",
    "cov_dist_to_target",
    "max_marginal_skewness",
];

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `header` and `rows` to `path`.
pub fn write_csv<R, I>(path: &Path, header: &[&str], rows: R) -> std::io::Result<()>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}

pub fn write_trajectory(path: &Path, records: &[TrajectoryRecord]) -> std::io::Result<()> {
    let rows = records.iter().map(|r| {
        [
            r.step.to_string(),
            r.phase.as_str().to_string(),
            float(r.mean_norm),
            float(r.cov_trace),
            float(r.cov_logdet),
            float(r.mean_dist_to_target),
            float(r.cov_dist_to_target),
            float(r.max_marginal_skewness),
        ]
    });
    write_csv(path, &TRAJECTORY_HEADER, rows)
}

/// Ordered `key: value` lines.
#[derive(Debug, Default)]
pub struct Summary(Vec<(String, String)>);

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.put(key, float(value))
    }

    pub fn vector(&mut self, key: &str, xs: &[f64]) -> &mut Self {
        let joined: Vec<String> = xs.iter().map(|x| float(*x)).collect();
        self.put(key, format!("[{}]", joined.join(", ")))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn summary_keeps_insertion_order() {
        let mut s = Summary::new();
        s.put("b", 1).put("a", "x");
        assert_eq!(s.render(), "b: 1\na: x\n");
        assert_eq!(s.get("a"), Some("x"));
    }
}
