use serde::{Deserialize, Serialize};

use super::{calibrate, pwm_encode, CalibrationTable, LowPassFilter, PwmFrame, PwmScale, TactileFrame};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HapticsConfig {
    pub cutoff_hz: f64,
    /// Filter step for the first frame, which has no predecessor.
    pub initial_dt: f64,
}

impl Default for HapticsConfig {
    fn default() -> Self {
        Self {
            cutoff_hz: super::DEFAULT_CUTOFF_HZ,
            initial_dt: 0.01,
        }
    }
}

/// calibrate → low-pass → PWM encode, one instance per hand.
#[derive(Debug, Clone)]
pub struct HapticsPipeline {
    table: CalibrationTable,
    filter: LowPassFilter,
    scale: PwmScale,
    initial_dt: f64,
    last_timestamp: Option<f64>,
}

impl HapticsPipeline {
    pub fn new(table: CalibrationTable, scale: PwmScale, config: HapticsConfig) -> Result<Self> {
        if scale.len() != table.sensor_count() {
            return Err(Error::DimensionMismatch {
                expected: table.sensor_count(),
                got: scale.len(),
            });
        }
        if !(config.initial_dt > 0.0 && config.initial_dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "initial_dt must be positive, got {}",
                config.initial_dt
            )));
        }
        Ok(Self {
            filter: LowPassFilter::new(table.sensor_count(), config.cutoff_hz)?,
            table,
            scale,
            initial_dt: config.initial_dt,
            last_timestamp: None,
        })
    }

    pub fn sensor_count(&self) -> usize {
        self.table.sensor_count()
    }

    /// Processes one frame. A rejected frame leaves the filter untouched.
    pub fn process(&mut self, frame: &TactileFrame) -> Result<PwmFrame> {
        if !frame.timestamp.is_finite() || frame.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("tactile frame is not finite".into()));
        }
        let dt = match self.last_timestamp {
            None => self.initial_dt,
            Some(prev) if frame.timestamp > prev => frame.timestamp - prev,
            Some(prev) => {
                return Err(Error::InvalidArgument(format!(
                    "tactile timestamp {} does not follow {prev}",
                    frame.timestamp
                )))
            }
        };
        let residual = calibrate(&self.table, frame)?;
        let smoothed = self.filter.step(&residual, dt)?;
        let out = pwm_encode(smoothed, &self.scale)?;
        self.last_timestamp = Some(frame.timestamp);
        Ok(out)
    }

    /// Processes one frame and appends its serial bytes to `out`.
    pub fn process_into(&mut self, frame: &TactileFrame, out: &mut Vec<u8>) -> Result<()> {
        let pwm = self.process(frame)?;
        out.extend_from_slice(pwm.as_bytes());
        Ok(())
    }
}
