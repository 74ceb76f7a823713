use std::f64::consts::PI;

use crate::error::{Error, Result};

/// First-order IIR coefficient `a = dt / (dt + 1/(2π·cutoff))`.
pub fn smoothing_factor(dt: f64, cutoff_hz: f64) -> f64 {
    dt / (dt + 1.0 / (2.0 * PI * cutoff_hz))
}

/// Per-sensor first-order low-pass filter, `y ← y + a(x − y)`, starting
/// from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LowPassFilter {
    cutoff_hz: f64,
    state: Vec<f64>,
}

impl LowPassFilter {
    pub fn new(channels: usize, cutoff_hz: f64) -> Result<Self> {
        if !(cutoff_hz > 0.0 && cutoff_hz.is_finite()) {
            return Err(Error::InvalidArgument(format!("cutoff must be positive, got {cutoff_hz}")));
        }
        Ok(Self {
            cutoff_hz,
            state: vec![0.0; channels],
        })
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|y| *y = 0.0);
    }

    pub fn step(&mut self, x: &[f64], dt: f64) -> Result<&[f64]> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("filter step must be positive, got {dt}")));
        }
        if x.len() != self.state.len() {
            return Err(Error::DimensionMismatch {
                expected: self.state.len(),
                got: x.len(),
            });
        }
        let a = smoothing_factor(dt, self.cutoff_hz);
        for (y, v) in self.state.iter_mut().zip(x) {
            *y += a * (v - *y);
        }
        Ok(&self.state)
    }
}
