use crate::error::{Error, Result};

/// One duty byte per actuator.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PwmFrame {
    pub values: Vec<u8>,
}

impl PwmFrame {
    pub fn as_bytes(&self) -> &[u8] {
        &self.values
    }
}

/// `clip(⌊(v − T)·255 / (v_max − T)⌋, 0, 255)`.
///
/// Callers guarantee `v_max > threshold`; see [`PwmScale`].
pub fn pwm_value(v: f64, threshold: f64, full_scale: f64) -> u8 {
    let raw = ((v - threshold) * 255.0 / (full_scale - threshold)).floor();
    raw.clamp(0.0, 255.0) as u8
}

/// Per-sensor activation threshold `T` and full-scale reading `v_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwmScale {
    threshold: Vec<f64>,
    full_scale: Vec<f64>,
}

impl PwmScale {
    pub fn new(threshold: Vec<f64>, full_scale: Vec<f64>) -> Result<Self> {
        if threshold.len() != full_scale.len() {
            return Err(Error::DimensionMismatch {
                expected: threshold.len(),
                got: full_scale.len(),
            });
        }
        for (i, (t, m)) in threshold.iter().zip(&full_scale).enumerate() {
            if !(t.is_finite() && m.is_finite() && m > t) {
                return Err(Error::InvalidArgument(format!(
                    "sensor {i}: full scale {m} must exceed threshold {t}"
                )));
            }
        }
        Ok(Self { threshold, full_scale })
    }

    pub fn uniform(sensors: usize, threshold: f64, full_scale: f64) -> Result<Self> {
        Self::new(vec![threshold; sensors], vec![full_scale; sensors])
    }

    pub fn len(&self) -> usize {
        self.threshold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.threshold.is_empty()
    }

    pub fn threshold(&self) -> &[f64] {
        &self.threshold
    }

    pub fn full_scale(&self) -> &[f64] {
        &self.full_scale
    }
}

pub fn pwm_encode(v_hat: &[f64], scale: &PwmScale) -> Result<PwmFrame> {
    if v_hat.len() != scale.len() {
        return Err(Error::DimensionMismatch {
            expected: scale.len(),
            got: v_hat.len(),
        });
    }
    Ok(PwmFrame {
        values: v_hat
            .iter()
            .zip(scale.threshold.iter().zip(&scale.full_scale))
            .map(|(v, (t, m))| pwm_value(*v, *t, *m))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn end_points_and_midpoint() {
        assert_eq!(pwm_value(100.0, 100.0, 500.0), 0);
        assert_eq!(pwm_value(500.0, 100.0, 500.0), 255);
        assert_eq!(pwm_value(300.0, 100.0, 500.0), 127);
        assert_eq!(pwm_value(-1e9, 100.0, 500.0), 0);
        assert_eq!(pwm_value(1e9, 100.0, 500.0), 255);
    }

    #[test]
    fn scale_requires_full_scale_above_threshold() {
        assert!(PwmScale::uniform(3, 10.0, 10.0).is_err());
        assert!(PwmScale::uniform(3, 10.0, 5.0).is_err());
        assert!(PwmScale::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn encode_checks_length() {
        let scale = PwmScale::uniform(2, 0.0, 10.0).unwrap();
        assert!(pwm_encode(&[1.0], &scale).is_err());
        assert_eq!(pwm_encode(&[5.0, 20.0], &scale).unwrap().values, vec![127, 255]);
    }
}
