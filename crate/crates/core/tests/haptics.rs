use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teleop_core::haptics::io::{parse_tactile, write_tactile};
use teleop_core::haptics::{
    calibrate, pwm_encode, pwm_value, smoothing_factor, BoardDecoder, CalibrationSample, CalibrationTable,
    HapticsConfig, HapticsPipeline, LowPassFilter, PwmFrame, PwmScale, TactileFrame,
};
use teleop_core::synth::tactile::{self, TactileSpec};

/// Integer reference for the encoder on integer inputs.
fn pwm_oracle(v: i64, t: i64, v_max: i64) -> u8 {
    ((v - t) * 255).div_euclid(v_max - t).clamp(0, 255) as u8
}

#[test]
fn encoder_matches_integer_oracle_exhaustively() {
    let mut count = 0u64;
    for t in -20..=40i64 {
        for v_max in t + 1..=t + 300 {
            for v in t - 5..=v_max + 5 {
                let got = pwm_value(v as f64, t as f64, v_max as f64);
                assert_eq!(got, pwm_oracle(v, t, v_max), "v={v} T={t} v_max={v_max}");
                count += 1;
            }
        }
    }
    assert!(count > 2_500_000);
    assert_eq!(pwm_value(10.0, 10.0, 265.0), 0);
    assert_eq!(pwm_value(265.0, 10.0, 265.0), 255);
    assert_eq!(pwm_value(300.0, 100.0, 500.0), 127);
}

#[test]
fn encoder_rejects_inverted_scale() {
    assert!(PwmScale::uniform(3, 5.0, 5.0).is_err());
    assert!(PwmScale::uniform(3, 5.0, 4.0).is_err());
    let scale = PwmScale::uniform(2, 0.0, 10.0).unwrap();
    assert!(pwm_encode(&[1.0], &scale).is_err());
}

#[test]
fn calibration_examples() {
    let table = CalibrationTable::constant(vec![100.0]).unwrap();
    let frame = |v: f64, ctx: f64| TactileFrame {
        timestamp: 0.0,
        values: vec![v],
        joint_context: vec![ctx],
    };
    assert_eq!(calibrate(&table, &frame(130.0, 0.3)).unwrap(), vec![30.0]);
    let linear = CalibrationTable::new(
        vec![0],
        vec![
            CalibrationSample {
                joint_context: vec![0.0],
                baseline: vec![100.0],
            },
            CalibrationSample {
                joint_context: vec![1.0],
                baseline: vec![200.0],
            },
        ],
    )
    .unwrap();
    assert!((calibrate(&linear, &frame(180.0, 0.5)).unwrap()[0] - 30.0).abs() < 1e-12);
    // outside the sweep the end samples hold
    assert_eq!(calibrate(&linear, &frame(250.0, 2.0)).unwrap(), vec![50.0]);
    assert!(CalibrationTable::new(vec![0], vec![]).is_err());
}

#[test]
fn baseline_stream_calibrates_to_zero_on_the_grid() {
    let spec = TactileSpec::new(3, 10);
    let table = tactile::calibration_table(&spec);
    for sample in table.grid() {
        let frame = TactileFrame {
            timestamp: 0.0,
            values: sample.baseline.clone(),
            joint_context: sample.joint_context.clone(),
        };
        assert!(calibrate(&table, &frame).unwrap().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn filter_examples() {
    let a = smoothing_factor(0.01, 10.0);
    assert!((a - 0.3859).abs() < 5e-5, "{a}");
    let mut f = LowPassFilter::new(1, 10.0).unwrap();
    assert!((f.step(&[1.0], 0.01).unwrap()[0] - a).abs() < 1e-15);

    // constant input converges monotonically
    let mut f = LowPassFilter::new(1, 5.0).unwrap();
    let mut last = 0.0;
    for _ in 0..500 {
        let y = f.step(&[3.0], 0.01).unwrap()[0];
        assert!(y >= last && y <= 3.0);
        last = y;
    }
    assert!((last - 3.0).abs() < 1e-9);

    // ten times the cutoff is strongly attenuated
    let (cutoff, dt) = (2.0, 1e-3);
    let mut f = LowPassFilter::new(1, cutoff).unwrap();
    let mut peak: f64 = 0.0;
    for i in 0..5000 {
        let x = (2.0 * PI * 10.0 * cutoff * i as f64 * dt).sin();
        let y = f.step(&[x], dt).unwrap()[0];
        if i >= 4000 {
            peak = peak.max(y.abs());
        }
    }
    assert!(peak < 0.2, "{peak}");
    assert!(LowPassFilter::new(1, 0.0).is_err());
    assert!(f.step(&[0.0], 0.0).is_err());
}

#[test]
fn board_availability_rule() {
    let mut b = BoardDecoder::new(5);
    assert!(b.feed(&[1, 2, 3]).is_empty());
    assert_eq!(b.buffered(), &[1, 2, 3]);
    let w = b.feed(&[4, 5, 6, 7]);
    assert_eq!(w.iter().map(|m| m.duty).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
    assert_eq!(b.buffered(), &[6, 7]);
    assert_eq!(b.frames_emitted(), 1);

    let mut b = BoardDecoder::new(5);
    let frames = b.feed_frames(&[0, 1, 2, 3, 4, 9, 8, 7, 6, 5]);
    assert_eq!(frames, vec![PwmFrame { values: vec![0, 1, 2, 3, 4] }, PwmFrame { values: vec![9, 8, 7, 6, 5] }]);
    assert!(b.buffered().is_empty());
}

fn fixture_pipeline(spec: &TactileSpec) -> HapticsPipeline {
    let table = tactile::calibration_table(spec);
    let scale = PwmScale::uniform(spec.sensors, tactile::FIXTURE_THRESHOLD, tactile::FIXTURE_FULL_SCALE).unwrap();
    HapticsPipeline::new(table, scale, HapticsConfig::default()).unwrap()
}

#[test]
fn pipeline_round_trips_through_the_board() {
    let spec = TactileSpec::new(7, 400);
    let mut pipeline = fixture_pipeline(&spec);
    let mut expected = Vec::new();
    let mut bytes = Vec::new();
    for f in tactile::pulse_stream(&spec) {
        let pwm = pipeline.process(&f).unwrap();
        bytes.extend_from_slice(pwm.as_bytes());
        expected.push(pwm);
    }
    // deliver in ragged chunks so frames straddle reads
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut board = BoardDecoder::new(spec.sensors);
    let mut decoded = Vec::new();
    let mut rest = bytes.as_slice();
    while !rest.is_empty() {
        let n = rng.random_range(1..=2 * spec.sensors).min(rest.len());
        decoded.extend(board.feed_frames(&rest[..n]));
        rest = &rest[n..];
    }
    assert_eq!(decoded, expected);
    assert!(board.buffered().is_empty());
}

#[test]
fn pulse_is_felt_only_while_pressed() {
    let spec = TactileSpec::new(9, 500);
    let (window, sensors) = tactile::pulse_window(&spec);
    let mut pipeline = fixture_pipeline(&spec);
    let lag = 30;
    let mut felt = 0;
    for (i, f) in tactile::pulse_stream(&spec).iter().enumerate() {
        let pwm = pipeline.process(f).unwrap();
        for (s, &v) in pwm.values.iter().enumerate() {
            if v > 0 {
                assert!(sensors.contains(&s), "sensor {s} fired at frame {i}");
                assert!(i >= window.start && i < window.end + lag, "frame {i} outside {window:?}");
                felt += 1;
            }
        }
    }
    assert!(felt > 0);

    let mut pipeline = fixture_pipeline(&spec);
    for f in tactile::baseline_stream(&spec) {
        assert!(pipeline.process(&f).unwrap().values.iter().all(|&v| v == 0));
    }
}

#[test]
fn pipeline_rejects_bad_frames_without_state_change() {
    let spec = TactileSpec::new(1, 5);
    let frames = tactile::pulse_stream(&spec);
    let mut pipeline = fixture_pipeline(&spec);
    pipeline.process(&frames[0]).unwrap();
    assert!(pipeline.process(&frames[0]).is_err());
    let mut bad = frames[1].clone();
    bad.values[0] = f64::NAN;
    assert!(pipeline.process(&bad).is_err());
    pipeline.process(&frames[1]).unwrap();
}

#[test]
fn tactile_text_round_trips() {
    let spec = TactileSpec::new(4, 20);
    let frames = tactile::pulse_stream(&spec);
    let mut text = Vec::new();
    write_tactile(&mut text, &frames).unwrap();
    let back = parse_tactile(std::str::from_utf8(&text).unwrap(), std::path::Path::new("mem")).unwrap();
    assert_eq!(back, frames);
}

proptest! {
    #[test]
    fn encoder_is_bounded_and_monotone(t in -100.0f64..100.0, span in 0.1f64..1000.0, a in -2000.0f64..2000.0, b in -2000.0f64..2000.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (pwm_value(lo, t, t + span), pwm_value(hi, t, t + span));
        prop_assert!(x <= y);
    }

    #[test]
    fn filter_output_stays_in_input_range(xs in prop::collection::vec(-50.0f64..50.0, 1..200), cutoff in 0.1f64..50.0) {
        let mut f = LowPassFilter::new(1, cutoff).unwrap();
        let (lo, hi) = xs.iter().fold((0.0f64, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        for x in &xs {
            let y = f.step(&[*x], 0.01).unwrap()[0];
            prop_assert!(y >= lo - 1e-12 && y <= hi + 1e-12);
        }
    }
}
