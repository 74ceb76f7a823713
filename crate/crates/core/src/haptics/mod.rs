//! Tactile feedback chain: baseline calibration, low-pass filtering, PWM
//! encoding, and a virtual actuator board that decodes the serial bytes.

mod board;
mod calibration;
mod filter;
pub mod io;
mod pipeline;
mod pwm;

pub use board::{BoardDecoder, MotorWrite};
pub use calibration::{
    calibrate, full_scale_from_squeeze, threshold_from_warmup, CalibrationSample, CalibrationTable,
};
pub use filter::{smoothing_factor, LowPassFilter};
pub use pipeline::{HapticsConfig, HapticsPipeline};
pub use pwm::{pwm_encode, pwm_value, PwmFrame, PwmScale};

/// Default number of tactile sensors on a hand.
pub const DEFAULT_SENSOR_COUNT: usize = 30;
/// Default low-pass cutoff, Hz.
pub const DEFAULT_CUTOFF_HZ: f64 = 5.0;

/// Raw sensor readings sampled together with the finger joint positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileFrame {
    pub timestamp: f64,
    pub values: Vec<f64>,
    pub joint_context: Vec<f64>,
}
