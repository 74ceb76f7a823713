use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::json;
use teleop_core::arm_control::{ArmControlProblem, ArmParams};
use teleop_core::haptics::io::{read_tactile, write_tactile};
use teleop_core::haptics::{BoardDecoder, CalibrationTable, HapticsConfig, HapticsPipeline, PwmScale};
use teleop_core::profiling::{self, LoopJoints, MotionVariant};
use teleop_core::retargeting::{RetargetProblem, Retargeter};
use teleop_core::session::{
    builtin_robot, load_robot, replay_load, run_session, write_recording, HandSide, ProfileReport, SessionConfig,
};
use teleop_core::synth::{robots, streams, tactile};
use teleop_core::Error;

use crate::{Failure, LoopJointsArg, ProfileModule, SynthKind};

type CmdResult = std::result::Result<(), Failure>;

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json value"));
}

pub fn fk(robot: &str, q: &[f64], frame: &str) -> CmdResult {
    let model = load_robot(robot)?;
    model.check_within_limits(q)?;
    let pose = model.forward_kinematics(q, frame)?;
    print_json(&json!({
        "frame": frame,
        "position": [pose.position.x, pose.position.y, pose.position.z],
        "quaternion": pose.wxyz(),
    }));
    Ok(())
}

pub fn retarget(robot: &str, frames: &Path, alpha: f64, beta: f64, tips: &[String], out: Option<&Path>) -> CmdResult {
    let model = Arc::new(load_robot(robot)?);
    let problem = if tips.is_empty() {
        RetargetProblem::fingertips(model.clone(), &robots::FINGERTIPS)?
    } else {
        let names: Vec<&str> = tips.iter().map(String::as_str).collect();
        RetargetProblem::fingertips(model.clone(), &names)?
    }
    .with_scaling(alpha)
    .map_err(|e| Failure::Usage(e.to_string()))?
    .with_smoothness(beta)
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let recording = replay_load(frames)?;
    let start = model.active_midpoint();
    let mut solvers = [
        Retargeter::new(problem.clone(), start.clone())?,
        Retargeter::new(problem, start)?,
    ];

    let mut w = output(out)?;
    let names: Vec<&str> = model.active_joint_names().collect();
    writeln!(w, "# joints {} {}", names.len(), names.join(" "))?;
    let (mut solved, mut skipped, mut failed, mut total_ms) = (0usize, 0usize, 0usize, 0.0);
    for frame in &recording.frames {
        for (i, side) in [HandSide::Left, HandSide::Right].into_iter().enumerate() {
            let Some(hand) = frame.hand(side) else { continue };
            let r = solvers[i].step(hand)?;
            if r.skipped {
                skipped += 1;
                log::warn!("t={} {side}: non-finite keypoints, frame skipped", frame.timestamp);
            } else {
                solved += 1;
                total_ms += r.solve_time * 1e3;
                if !r.converged {
                    failed += 1;
                }
            }
            let q: Vec<String> = r.active_q.iter().map(f64::to_string).collect();
            writeln!(w, "{} {} {}", frame.timestamp, side.tag(), q.join(" "))?;
        }
    }
    w.flush()?;
    drop(w);
    let summary = json!({
        "frames": recording.frames.len(),
        "solved": solved,
        "skipped": skipped,
        "not_converged": failed,
        "mean_solve_ms": if solved > 0 { total_ms / solved as f64 } else { 0.0 },
    });
    if out.is_some() {
        print_json(&summary);
    } else {
        eprintln!("{summary}");
    }
    if failed > 0 {
        return Err(Failure::NotConverged(format!("{failed} of {solved} hand frames hit the iteration budget")));
    }
    Ok(())
}

pub struct ProfileArgs {
    pub module: ProfileModule,
    pub robot: Option<String>,
    pub ee_frame: String,
    pub variants: Vec<String>,
    pub loop_joints: LoopJointsArg,
    pub frames: usize,
    pub sensors: usize,
    pub seed: u64,
    pub report: Option<PathBuf>,
}

fn parse_variants(names: &[String]) -> Result<Vec<MotionVariant>, Failure> {
    if names.iter().any(|n| n == "all") {
        return Ok(MotionVariant::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| n.parse().map_err(|e: Error| Failure::Usage(e.to_string())))
        .collect()
}

pub fn profile(a: ProfileArgs) -> CmdResult {
    if a.frames == 0 {
        return Err(Failure::Usage("--frames must be positive".into()));
    }
    let report: ProfileReport = match a.module {
        ProfileModule::MotionControl => {
            let variants = parse_variants(&a.variants)?;
            let robot = a.robot.as_deref().unwrap_or("builtin:arm7");
            let model = Arc::new(load_robot(robot)?);
            let start = if robot == "builtin:arm7" {
                robots::ARM7_HOME.to_vec()
            } else {
                model.active_midpoint()
            };
            let problem = ArmControlProblem::new(model, &a.ee_frame, ArmParams::default())?;
            profiling::profile_motion_control(&problem, &start, a.frames, a.seed, &variants)?
        }
        ProfileModule::Retargeting => {
            let model = Arc::new(load_robot(a.robot.as_deref().unwrap_or("builtin:hand"))?);
            let problem = RetargetProblem::fingertips(model, &robots::FINGERTIPS)?.with_smoothness(0.0)?;
            let which = match a.loop_joints {
                LoopJointsArg::Reduced => LoopJoints::Reduced,
                LoopJointsArg::Constrained => LoopJoints::Constrained,
                LoopJointsArg::Both => LoopJoints::Both,
            };
            profiling::profile_retargeting(&problem, a.frames, a.seed, which)?
        }
        ProfileModule::Haptics => {
            if a.sensors == 0 {
                return Err(Failure::Usage("--sensors must be positive".into()));
            }
            profiling::profile_haptics(a.sensors, a.frames, a.seed)?
        }
    };
    print!("{report}");
    if let Some(path) = &a.report {
        fs::write(path, report.to_json_pretty())?;
    }
    Ok(())
}

pub fn session(config: &Path, out: Option<&Path>, report: Option<&Path>) -> CmdResult {
    let config = SessionConfig::load(config).map_err(|e| Failure::Usage(e.to_string()))?;
    let outcome = run_session(&config)?;
    if let Some(path) = out {
        let mut w = output(Some(path))?;
        for c in &outcome.commands {
            serde_json::to_writer(&mut w, c).map_err(Error::from)?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    print_json(&json!({
        "frames_received": outcome.frames_received,
        "commands": outcome.commands.len(),
        "frames_before_engage": outcome.frames_before_engage,
        "malformed_frames": outcome.malformed_frames,
        "skipped_hand_frames": outcome.skipped_hand_frames,
        "dropped_frames": outcome.dropped_frames,
        "deadline_misses": outcome.deadline_misses,
        "total_joint_change": outcome.total_joint_change,
        "haptics_bytes": outcome.haptics_bytes.len(),
        "diagnostic": outcome.diagnostic,
    }));
    if let Some(r) = &outcome.report {
        print!("{r}");
        if let Some(path) = report {
            fs::write(path, r.to_json_pretty())?;
        }
    }
    Ok(())
}

pub fn haptics(
    calib: &Path,
    frames: &Path,
    cutoff: f64,
    threshold: f64,
    full_scale: f64,
    out: &Path,
    log_path: Option<&Path>,
) -> CmdResult {
    if !(full_scale > threshold) {
        return Err(Failure::Usage(format!("--full-scale {full_scale} must exceed --threshold {threshold}")));
    }
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Failure::Usage(format!("--cutoff must be positive, got {cutoff}")));
    }
    let table = CalibrationTable::from_json(&fs::read_to_string(calib)?)?;
    let stream = read_tactile(frames)?;
    let sensors = table.sensor_count();
    let scale = PwmScale::uniform(sensors, threshold, full_scale).map_err(|e| Failure::Usage(e.to_string()))?;
    let config = HapticsConfig {
        cutoff_hz: cutoff,
        ..HapticsConfig::default()
    };
    let mut pipeline = HapticsPipeline::new(table, scale, config)?;
    let mut board = BoardDecoder::new(sensors);
    let mut bytes = Vec::with_capacity(stream.len() * sensors);
    let mut log_out = log_path.map(|p| output(Some(p))).transpose()?;
    let (mut nonzero, mut first, mut last) = (0usize, None, None);
    for (i, f) in stream.iter().enumerate() {
        let pwm = pipeline.process(f)?;
        if pwm.values.iter().any(|&v| v > 0) {
            nonzero += 1;
            first.get_or_insert(i);
            last = Some(i);
        }
        bytes.extend_from_slice(pwm.as_bytes());
        for wr in board.feed(pwm.as_bytes()) {
            if let Some(w) = log_out.as_mut() {
                writeln!(w, "{} {} {}", f.timestamp, wr.motor, wr.duty)?;
            }
        }
    }
    if let Some(mut w) = log_out {
        w.flush()?;
    }
    fs::write(out, &bytes)?;
    print_json(&json!({
        "frames": stream.len(),
        "bytes": bytes.len(),
        "board_frames": board.frames_emitted(),
        "nonzero_frames": nonzero,
        "first_nonzero_frame": first,
        "last_nonzero_frame": last,
    }));
    Ok(())
}

pub fn synth(kind: SynthKind, seed: u64, frames: usize, rate: Option<f64>, out: Option<&Path>) -> CmdResult {
    if let Some(r) = rate {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Failure::Usage(format!("--rate must be positive, got {r}")));
        }
    }
    let pose_rate = rate.unwrap_or(streams::DEFAULT_RATE_HZ);
    let tactile_spec = tactile::TactileSpec {
        rate_hz: rate.unwrap_or(100.0),
        ..tactile::TactileSpec::new(seed, frames)
    };
    let mut w = output(out)?;
    let robot = |name: &str| {
        let doc = builtin_robot(name).expect("built-in robot").description();
        serde_json::to_string_pretty(&doc).expect("description serializes")
    };
    match kind {
        SynthKind::Reach => write_recording(&mut w, &streams::reach(seed, frames, pose_rate))?,
        SynthKind::Static => write_recording(&mut w, &streams::static_pose(seed, frames, pose_rate))?,
        SynthKind::Wander => write_recording(&mut w, &streams::wander(seed, frames, pose_rate))?,
        SynthKind::Pulse => write_tactile(&mut w, &tactile::pulse_stream(&tactile_spec))?,
        SynthKind::Baseline => write_tactile(&mut w, &tactile::baseline_stream(&tactile_spec))?,
        SynthKind::Calib => writeln!(w, "{}", tactile::calibration_table(&tactile_spec).to_json_pretty())?,
        SynthKind::Planar => writeln!(w, "{}", robot("planar"))?,
        SynthKind::Arm7 => writeln!(w, "{}", robot("arm7"))?,
        SynthKind::DualArm => writeln!(w, "{}", robot("dual_arm"))?,
        SynthKind::Hand => writeln!(w, "{}", robot("hand"))?,
    }
    w.flush()?;
    Ok(())
}
