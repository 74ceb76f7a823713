//! Seeded tactile fixtures with drifting, joint-dependent baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::haptics::{CalibrationSample, CalibrationTable, TactileFrame, DEFAULT_SENSOR_COUNT};

/// Finger joints that tactile baselines depend on.
pub const DEFAULT_JOINT_COUNT: usize = 6;
/// Half-width of the uniform read noise, in raw sensor units.
pub const NOISE: f64 = 1.0;
/// Pulse height above baseline, in raw sensor units.
pub const PULSE_AMPLITUDE: f64 = 200.0;
/// Threshold and full scale suited to the fixtures: the threshold sits far
/// above the read noise and below the pulse.
pub const FIXTURE_THRESHOLD: f64 = 10.0;
pub const FIXTURE_FULL_SCALE: f64 = 210.0;

const GRID_SAMPLES: usize = 11;
const JOINT_SPAN: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TactileSpec {
    pub seed: u64,
    pub sensors: usize,
    pub joints: usize,
    pub frames: usize,
    pub rate_hz: f64,
}

impl TactileSpec {
    pub fn new(seed: u64, frames: usize) -> Self {
        Self {
            seed,
            sensors: DEFAULT_SENSOR_COUNT,
            joints: DEFAULT_JOINT_COUNT,
            frames,
            rate_hz: 100.0,
        }
    }
}

struct Baselines {
    offset: Vec<f64>,
    slope: Vec<f64>,
    joints: usize,
}

impl Baselines {
    fn new(rng: &mut ChaCha8Rng, sensors: usize, joints: usize) -> Self {
        Self {
            offset: (0..sensors).map(|_| rng.random_range(300.0..500.0)).collect(),
            slope: (0..sensors).map(|_| rng.random_range(-40.0..40.0)).collect(),
            joints,
        }
    }

    fn axis(&self, sensor: usize) -> usize {
        sensor % self.joints
    }

    fn at(&self, context: &[f64]) -> Vec<f64> {
        (0..self.offset.len())
            .map(|i| self.offset[i] + self.slope[i] * context[self.axis(i)])
            .collect()
    }
}

/// Calibration table whose baselines are exactly linear in each sensor's
/// joint, so interpolation is exact.
pub fn calibration_table(spec: &TactileSpec) -> CalibrationTable {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let b = Baselines::new(&mut rng, spec.sensors, spec.joints.max(1));
    let grid = (0..GRID_SAMPLES)
        .map(|m| {
            let c = vec![JOINT_SPAN * m as f64 / (GRID_SAMPLES - 1) as f64; b.joints];
            CalibrationSample {
                baseline: b.at(&c),
                joint_context: c,
            }
        })
        .collect();
    CalibrationTable::new((0..spec.sensors).map(|i| b.axis(i)).collect(), grid).expect("grid is increasing")
}

fn stream(spec: &TactileSpec, pulse: Option<(usize, usize, std::ops::Range<usize>)>) -> Vec<TactileFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let b = Baselines::new(&mut rng, spec.sensors, spec.joints.max(1));
    let phase: Vec<f64> = (0..b.joints).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    (0..spec.frames)
        .map(|i| {
            let t = i as f64 / spec.rate_hz;
            let context: Vec<f64> = phase
                .iter()
                .map(|p| 0.5 * JOINT_SPAN * (1.0 + 0.8 * (0.7 * t + p).sin()))
                .collect();
            let mut values = b.at(&context);
            for v in &mut values {
                *v += rng.random_range(-NOISE..NOISE);
            }
            if let Some((start, end, sensors)) = &pulse {
                if (*start..*end).contains(&i) {
                    for s in sensors.clone() {
                        values[s] += PULSE_AMPLITUDE;
                    }
                }
            }
            TactileFrame {
                timestamp: t,
                values,
                joint_context: context[..spec.joints].to_vec(),
            }
        })
        .collect()
}

/// Baseline readings plus read noise; no contact.
pub fn baseline_stream(spec: &TactileSpec) -> Vec<TactileFrame> {
    stream(spec, None)
}

/// Window of frames and sensors that [`pulse_stream`] presses.
pub fn pulse_window(spec: &TactileSpec) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let frames = 2 * spec.frames / 5..3 * spec.frames / 5;
    let first = spec.sensors / 3;
    (frames, first..(first + 4).min(spec.sensors))
}

/// [`baseline_stream`] with a rectangular press on a few sensors during the
/// middle fifth of the stream.
pub fn pulse_stream(spec: &TactileSpec) -> Vec<TactileFrame> {
    let (frames, sensors) = pulse_window(spec);
    stream(spec, Some((frames.start, frames.end, sensors)))
}
