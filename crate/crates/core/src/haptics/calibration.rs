use serde::{Deserialize, Serialize};

use super::TactileFrame;
use crate::error::{Error, Result};

/// Baseline readings of every sensor at one recorded joint context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSample {
    pub joint_context: Vec<f64>,
    pub baseline: Vec<f64>,
}

/// Baselines recorded while sweeping the fingers through their range.
///
/// Sensor `i` drifts with joint axis `sensor_axes[i]`; its baseline at a
/// live joint context is interpolated linearly along that axis. Samples are
/// stored in sweep order and must be strictly increasing on every axis a
/// sensor refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTable {
    sensor_axes: Vec<usize>,
    grid: Vec<CalibrationSample>,
}

impl CalibrationTable {
    pub fn new(sensor_axes: Vec<usize>, grid: Vec<CalibrationSample>) -> Result<Self> {
        let table = Self { sensor_axes, grid };
        table.validate()?;
        Ok(table)
    }

    /// A table whose baselines do not depend on joint position.
    pub fn constant(baseline: Vec<f64>) -> Result<Self> {
        let s = baseline.len();
        Self::new(
            vec![0; s],
            vec![
                CalibrationSample {
                    joint_context: vec![0.0],
                    baseline: baseline.clone(),
                },
                CalibrationSample {
                    joint_context: vec![1.0],
                    baseline,
                },
            ],
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn sensor_count(&self) -> usize {
        self.sensor_axes.len()
    }

    pub fn sensor_axes(&self) -> &[usize] {
        &self.sensor_axes
    }

    pub fn grid(&self) -> &[CalibrationSample] {
        &self.grid
    }

    /// Number of joint axes every sample carries.
    pub fn axis_count(&self) -> usize {
        self.grid.first().map_or(0, |g| g.joint_context.len())
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::EmptyCalibration);
        }
        let bad = |m: String| Err(Error::InvalidCalibration(m));
        if self.grid.len() < 2 {
            return bad("at least two samples are required".into());
        }
        let s = self.sensor_axes.len();
        let axes = self.axis_count();
        for (i, g) in self.grid.iter().enumerate() {
            if g.baseline.len() != s {
                return bad(format!("sample {i} has {} baselines, expected {s}", g.baseline.len()));
            }
            if g.joint_context.len() != axes {
                return bad(format!("sample {i} has {} joint values, expected {axes}", g.joint_context.len()));
            }
            if g.baseline.iter().chain(&g.joint_context).any(|v| !v.is_finite()) {
                return bad(format!("sample {i} is not finite"));
            }
        }
        for &a in &self.sensor_axes {
            if a >= axes {
                return bad(format!("sensor axis {a} out of range ({axes} axes)"));
            }
            if self.grid.windows(2).any(|w| w[1].joint_context[a] <= w[0].joint_context[a]) {
                return bad(format!("samples are not strictly increasing along axis {a}"));
            }
        }
        Ok(())
    }

    /// Interpolated baseline of every sensor at `joint_context`, clamped to
    /// the end samples outside the recorded range.
    pub fn baseline_at(&self, joint_context: &[f64]) -> Result<Vec<f64>> {
        if self.grid.is_empty() {
            return Err(Error::EmptyCalibration);
        }
        if joint_context.len() < self.axis_count() {
            return Err(Error::DimensionMismatch {
                expected: self.axis_count(),
                got: joint_context.len(),
            });
        }
        Ok(self
            .sensor_axes
            .iter()
            .enumerate()
            .map(|(i, &a)| self.interpolate(i, a, joint_context[a]))
            .collect())
    }

    fn interpolate(&self, sensor: usize, axis: usize, x: f64) -> f64 {
        let coord = |j: usize| self.grid[j].joint_context[axis];
        let value = |j: usize| self.grid[j].baseline[sensor];
        let last = self.grid.len() - 1;
        if x <= coord(0) {
            return value(0);
        }
        if x >= coord(last) {
            return value(last);
        }
        let hi = self.grid.partition_point(|g| g.joint_context[axis] <= x).min(last);
        let lo = hi - 1;
        let w = (x - coord(lo)) / (coord(hi) - coord(lo));
        value(lo) + w * (value(hi) - value(lo))
    }
}

/// Drift-compensated readings: `values − baseline(joint_context)`.
pub fn calibrate(table: &CalibrationTable, frame: &TactileFrame) -> Result<Vec<f64>> {
    let baseline = table.baseline_at(&frame.joint_context)?;
    if frame.values.len() != baseline.len() {
        return Err(Error::DimensionMismatch {
            expected: baseline.len(),
            got: frame.values.len(),
        });
    }
    Ok(frame.values.iter().zip(&baseline).map(|(v, b)| v - b).collect())
}

fn per_sensor<F: Fn(&mut Vec<f64>) -> f64>(residuals: &[Vec<f64>], f: F) -> Result<Vec<f64>> {
    let Some(first) = residuals.first() else {
        return Err(Error::InvalidArgument("no residual frames".into()));
    };
    let s = first.len();
    if let Some(r) = residuals.iter().find(|r| r.len() != s) {
        return Err(Error::DimensionMismatch { expected: s, got: r.len() });
    }
    Ok((0..s)
        .map(|i| {
            let mut column: Vec<f64> = residuals.iter().map(|r| r[i]).collect();
            f(&mut column)
        })
        .collect())
}

/// Activation thresholds from a no-contact warmup window: five standard
/// deviations of each sensor's calibrated residual.
pub fn threshold_from_warmup(residuals: &[Vec<f64>]) -> Result<Vec<f64>> {
    per_sensor(residuals, |c| {
        let n = c.len() as f64;
        let mean = c.iter().sum::<f64>() / n;
        let var = c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        5.0 * var.sqrt()
    })
}

/// Full-scale readings from a squeeze routine: each sensor's 99th
/// percentile (nearest rank).
pub fn full_scale_from_squeeze(residuals: &[Vec<f64>]) -> Result<Vec<f64>> {
    per_sensor(residuals, |c| {
        c.sort_by(f64::total_cmp);
        let rank = (0.99 * c.len() as f64).ceil() as usize;
        c[rank.clamp(1, c.len()) - 1]
    })
}
