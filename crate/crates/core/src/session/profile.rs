use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Timing summary of one module, in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub module: String,
    pub samples: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p99_ms: f64,
}

impl ProfileRow {
    /// Summarizes durations given in seconds. Percentiles use the nearest
    /// rank.
    pub fn from_seconds(module: impl Into<String>, seconds: &[f64]) -> Self {
        let mut ms: Vec<f64> = seconds.iter().map(|s| s.max(0.0) * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let rank = |p: f64| -> f64 {
            if ms.is_empty() {
                return 0.0;
            }
            let r = (p * ms.len() as f64).ceil() as usize;
            ms[r.clamp(1, ms.len()) - 1]
        };
        let mean = if ms.is_empty() {
            0.0
        } else {
            ms.iter().sum::<f64>() / ms.len() as f64
        };
        Self {
            module: module.into(),
            samples: ms.len(),
            mean_ms: mean,
            p50_ms: rank(0.5),
            p99_ms: rank(0.99),
        }
    }

    pub fn from_durations(module: impl Into<String>, durations: &[Duration]) -> Self {
        let s: Vec<f64> = durations.iter().map(Duration::as_secs_f64).collect();
        Self::from_seconds(module, &s)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfileReport {
    pub rows: Vec<ProfileRow>,
    /// Extra named figures such as speedup ratios.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<(String, f64)>,
}

impl ProfileReport {
    pub fn push(&mut self, row: ProfileRow) {
        self.rows.push(row);
    }

    pub fn row(&self, module: &str) -> Option<&ProfileRow> {
        self.rows.iter().find(|r| r.module == module)
    }

    pub fn note(&self, name: &str) -> Option<f64> {
        self.notes.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for ProfileReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.rows.iter().map(|r| r.module.len()).max().unwrap_or(6).max(6);
        writeln!(f, "{:<width$}  {:>8}  {:>10}  {:>10}  {:>10}", "module", "samples", "mean ms", "p50 ms", "p99 ms")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<width$}  {:>8}  {:>10.4}  {:>10.4}  {:>10.4}",
                r.module, r.samples, r.mean_ms, r.p50_ms, r.p99_ms
            )?;
        }
        for (name, value) in &self.notes {
            writeln!(f, "{name}: {value:.3}")?;
        }
        Ok(())
    }
}
