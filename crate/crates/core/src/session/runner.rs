//! Session configuration and the concurrent per-frame pipeline.

use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::alignment::{AlignmentMode, EngagePair, FrameAlignment};
use super::profile::{ProfileReport, ProfileRow};
use super::recording::{replay_load, ReplayStream};
use super::wire::connect_stream;
use super::{BimanualFrame, HandFrame, HandSide, LatestSlot};
use crate::arm_control::{ArmCommand, ArmControlProblem, ArmController, ArmParams};
use crate::error::{Error, Result};
use crate::haptics::io::read_tactile;
use crate::haptics::{CalibrationTable, HapticsConfig, HapticsPipeline, PwmScale, TactileFrame};
use crate::kinematics::{KinematicModel, Pose, PoseDoc};
use crate::retargeting::{RetargetProblem, RetargetResult, Retargeter, VectorSpec, DEFAULT_SMOOTHNESS};
use crate::synth::robots;

/// Where frames come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    /// Recording file. `rate` scales playback speed; 0 replays as fast as
    /// the solvers allow.
    Replay {
        path: PathBuf,
        #[serde(default)]
        rate: f64,
        /// Engage at the first frame at or after this timestamp; defaults
        /// to the first frame.
        #[serde(default)]
        engage_at: Option<f64>,
    },
    /// Live stream; the sender's engage message starts control.
    Network {
        endpoint: String,
        #[serde(default)]
        keypoint_labels: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    /// Robot description path, or `builtin:<name>`.
    pub robot: String,
    #[serde(default = "default_ee_frame")]
    pub ee_frame: String,
    /// Mounting pose of the arm's root link in the session frame.
    #[serde(default)]
    pub base: PoseDoc,
    #[serde(default)]
    pub initial_q: Option<Vec<f64>>,
    #[serde(default)]
    pub params: ArmParams,
}

fn default_ee_frame() -> String {
    "tool".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandConfig {
    pub robot: String,
    /// Compared vectors; defaults to root-to-fingertip vectors labelled by
    /// the built-in fingertip names.
    #[serde(default)]
    pub vectors: Option<Vec<VectorSpec>>,
    #[serde(default = "one")]
    pub scaling: f64,
    #[serde(default = "default_smoothness")]
    pub smoothness: f64,
    #[serde(default)]
    pub initial_q: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

fn default_smoothness() -> f64 {
    DEFAULT_SMOOTHNESS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideConfig {
    pub arm: ArmConfig,
    #[serde(default)]
    pub hand: Option<HandConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionHapticsConfig {
    pub calibration: PathBuf,
    pub tactile: PathBuf,
    pub threshold: f64,
    pub full_scale: f64,
    #[serde(default)]
    pub filter: HapticsConfig,
    /// Artificial delay after every serial write, milliseconds.
    #[serde(default)]
    pub serial_write_delay_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    #[serde(default)]
    pub alignment_mode: AlignmentMode,
    pub target_rate_hz: f64,
    pub source: SourceConfig,
    #[serde(default)]
    pub left: Option<SideConfig>,
    #[serde(default)]
    pub right: Option<SideConfig>,
    #[serde(default)]
    pub profiling: bool,
    #[serde(default)]
    pub haptics: Option<SessionHapticsConfig>,
}

impl SessionConfig {
    /// Parses a configuration; relative paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        if let SourceConfig::Replay { path, .. } = &mut c.source {
            resolve(path);
        }
        if let Some(h) = &mut c.haptics {
            resolve(&mut h.calibration);
            resolve(&mut h.tactile);
        }
        for side in [&mut c.left, &mut c.right].into_iter().flatten() {
            resolve_robot(&mut side.arm.robot, base_dir);
            if let Some(h) = &mut side.hand {
                resolve_robot(&mut h.robot, base_dir);
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_rate_hz > 0.0 && self.target_rate_hz.is_finite()) {
            return Err(Error::Config(format!("target_rate_hz must be positive, got {}", self.target_rate_hz)));
        }
        if self.left.is_none() && self.right.is_none() {
            return Err(Error::Config("at least one of `left` and `right` is required".into()));
        }
        let need = |present: bool, side: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("{:?} needs the {side} side", self.alignment_mode)))
            }
        };
        match self.alignment_mode {
            AlignmentMode::AlignSeparately => {}
            AlignmentMode::AlignCenter => {
                need(self.left.is_some(), "left")?;
                need(self.right.is_some(), "right")?;
            }
            AlignmentMode::AlignLeft => need(self.left.is_some(), "left")?,
            AlignmentMode::AlignRight => need(self.right.is_some(), "right")?,
        }
        if let Some(h) = &self.haptics {
            if !(h.full_scale > h.threshold) {
                return Err(Error::Config(format!(
                    "haptics full_scale {} must exceed threshold {}",
                    h.full_scale, h.threshold
                )));
            }
            if !(h.serial_write_delay_ms >= 0.0) {
                return Err(Error::Config("serial_write_delay_ms must be nonnegative".into()));
            }
        }
        for side in [&self.left, &self.right].into_iter().flatten() {
            side.arm.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

const BUILTIN: &str = "builtin:";

fn resolve_robot(robot: &mut String, base_dir: &Path) {
    if !robot.starts_with(BUILTIN) && Path::new(robot.as_str()).is_relative() {
        *robot = base_dir.join(&*robot).to_string_lossy().into_owned();
    }
}

/// Loads a robot by description path or built-in name (`builtin:planar`,
/// `builtin:arm7`, `builtin:dual_arm`, `builtin:hand`,
/// `builtin:hand_uncoupled`).
pub fn load_robot(reference: &str) -> Result<KinematicModel> {
    match reference.strip_prefix(BUILTIN) {
        Some(name) => builtin_robot(name)
            .map(|b| b.build())
            .ok_or_else(|| Error::Config(format!("unknown built-in robot `{name}`"))),
        None => KinematicModel::load_file(reference),
    }
}

pub fn builtin_robot(name: &str) -> Option<robots::DescriptionBuilder> {
    Some(match name {
        "planar" => robots::planar_two_link(),
        "arm7" => robots::arm7(),
        "dual_arm" => robots::dual_arm(),
        "hand" => robots::hand(true),
        "hand_uncoupled" => robots::hand(false),
        _ => return None,
    })
}

/// Per-side solver output for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideCommand {
    pub arm_q: Vec<f64>,
    pub ik_error_pos: f64,
    pub ik_error_rot: f64,
    pub min_singular_value: f64,
    pub arm_converged: bool,
    pub arm_solve_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand_q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand_converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand_solve_ms: Option<f64>,
}

/// Commands for one source frame, tagged with its timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub timestamp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<SideCommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<SideCommand>,
    pub latency_ms: f64,
}

impl CommandRecord {
    pub fn side(&self, side: HandSide) -> Option<&SideCommand> {
        match side {
            HandSide::Left => self.left.as_ref(),
            HandSide::Right => self.right.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SessionOutcome {
    pub commands: Vec<CommandRecord>,
    pub frames_received: usize,
    /// Frames before engage, or frames lacking a hand required to engage.
    pub frames_before_engage: usize,
    /// Frames rejected by a solver (e.g. missing keypoints).
    pub malformed_frames: usize,
    /// Frames whose keypoints were not finite; the hand held its pose.
    pub skipped_hand_frames: usize,
    /// Frames dropped by the network receiver's freshest-frame policy.
    pub dropped_frames: u64,
    /// Frames whose end-to-end latency exceeded the target period.
    pub deadline_misses: usize,
    /// Σ‖q_t − q_{t−1}‖ over arms and hands.
    pub total_joint_change: f64,
    pub haptics_bytes: Vec<u8>,
    pub report: Option<ProfileReport>,
    pub diagnostic: Option<String>,
}

enum Job {
    Arm { target: Pose },
    Hand { frame: HandFrame },
}

enum Output {
    Arm(Result<ArmCommand>),
    Hand(Result<RetargetResult>),
}

struct Worker {
    slot: Arc<LatestSlot<Job>>,
    handle: Option<JoinHandle<()>>,
}

impl Worker {
    fn spawn(name: String, side: HandSide, mut solver: Solver, results: mpsc::Sender<(HandSide, Output)>) -> Result<Self> {
        let slot = Arc::new(LatestSlot::new());
        let inbox = slot.clone();
        let handle = thread::Builder::new().name(name).spawn(move || {
            while let Some(job) = inbox.take() {
                let out = match (&mut solver, job) {
                    (Solver::Arm(c), Job::Arm { target }) => Output::Arm(c.step(&target)),
                    (Solver::Hand(r), Job::Hand { frame }) => Output::Hand(r.step(&frame)),
                    _ => unreachable!("jobs are routed by kind"),
                };
                if results.send((side, out)).is_err() {
                    break;
                }
            }
        })?;
        Ok(Self {
            slot,
            handle: Some(handle),
        })
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        self.slot.close();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

enum Solver {
    Arm(ArmController),
    Hand(Retargeter),
}

struct ArmSide {
    side: HandSide,
    base: Pose,
    problem: ArmControlProblem,
    q: Vec<f64>,
    hand: Option<(Vec<f64>, usize)>,
    commanded: bool,
}

struct HapticsWorker {
    slot: Arc<LatestSlot<f64>>,
    handle: Option<JoinHandle<(Vec<u8>, Vec<f64>)>>,
}

impl HapticsWorker {
    fn spawn(config: &SessionHapticsConfig) -> Result<Self> {
        let table = CalibrationTable::from_json(&std::fs::read_to_string(&config.calibration)?)?;
        let frames: Vec<TactileFrame> = read_tactile(&config.tactile)?;
        let scale = PwmScale::uniform(table.sensor_count(), config.threshold, config.full_scale)?;
        let mut pipeline = HapticsPipeline::new(table, scale, config.filter)?;
        let delay = Duration::from_secs_f64(config.serial_write_delay_ms / 1e3);
        let slot = Arc::new(LatestSlot::new());
        let inbox = slot.clone();
        let handle = thread::Builder::new().name("haptics".into()).spawn(move || {
            let (mut bytes, mut times) = (Vec::new(), Vec::new());
            let mut next = 0;
            while let Some(now) = inbox.take() {
                while next < frames.len() && frames[next].timestamp <= now {
                    let start = Instant::now();
                    match pipeline.process(&frames[next]) {
                        Ok(pwm) => {
                            times.push(start.elapsed().as_secs_f64());
                            bytes.extend_from_slice(pwm.as_bytes());
                            if !delay.is_zero() {
                                thread::sleep(delay);
                            }
                        }
                        Err(e) => log::warn!("tactile frame {next} rejected: {e}"),
                    }
                    next += 1;
                }
            }
            (bytes, times)
        })?;
        Ok(Self {
            slot,
            handle: Some(handle),
        })
    }

    fn finish(mut self) -> (Vec<u8>, Vec<f64>) {
        self.slot.close();
        self.handle
            .take()
            .map(|h| h.join().unwrap_or_default())
            .unwrap_or_default()
    }
}

impl Drop for HapticsWorker {
    fn drop(&mut self) {
        self.slot.close();
    }
}

fn build_side(side: HandSide, c: &SideConfig) -> Result<(ArmSide, Solver, Option<Solver>)> {
    let arm_model = Arc::new(load_robot(&c.arm.robot)?);
    let problem = ArmControlProblem::new(arm_model.clone(), &c.arm.ee_frame, c.arm.params)?;
    let q = match &c.arm.initial_q {
        Some(q) => q.clone(),
        None if c.arm.robot == "builtin:arm7" => robots::ARM7_HOME.to_vec(),
        None => arm_model.active_midpoint(),
    };
    let controller = ArmController::new(problem.clone(), q.clone())?;
    let base = Pose::try_from(c.arm.base)?;
    let (hand_solver, hand_state) = match &c.hand {
        None => (None, None),
        Some(h) => {
            let model = Arc::new(load_robot(&h.robot)?);
            let problem = match &h.vectors {
                Some(v) => RetargetProblem::new(model.clone(), v.clone())?,
                None => RetargetProblem::fingertips(model.clone(), &robots::FINGERTIPS)?,
            }
            .with_scaling(h.scaling)?
            .with_smoothness(h.smoothness)?;
            let q0 = h.initial_q.clone().unwrap_or_else(|| model.active_midpoint());
            let dim = q0.len();
            (
                Some(Solver::Hand(Retargeter::new(problem, q0.clone())?)),
                Some((q0, dim)),
            )
        }
    };
    Ok((
        ArmSide {
            side,
            base,
            problem,
            q,
            hand: hand_state,
            commanded: false,
        },
        Solver::Arm(controller),
        hand_solver,
    ))
}

enum Source {
    Replay {
        frames: Vec<BimanualFrame>,
        rate: f64,
        engage_at: Option<f64>,
    },
    Network(super::wire::StreamReceiver),
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Runs a session to the end of its source.
///
/// Each configured arm and hand has its own solver thread fed through a
/// single-slot mailbox. A frame is dispatched to all solvers at once and the
/// next frame waits for every result, so replays are deterministic. The
/// haptics stage runs on its own thread and is never waited on.
pub fn run_session(config: &SessionConfig) -> Result<SessionOutcome> {
    config.validate()?;
    let (tx, rx) = mpsc::channel();
    let mut sides = Vec::new();
    let mut arm_workers = Vec::new();
    let mut hand_workers = Vec::new();
    for (side, c) in [(HandSide::Left, &config.left), (HandSide::Right, &config.right)] {
        let Some(c) = c else { continue };
        let (state, arm, hand) = build_side(side, c)?;
        arm_workers.push((side, Worker::spawn(format!("{side}-arm"), side, arm, tx.clone())?));
        if let Some(h) = hand {
            hand_workers.push((side, Worker::spawn(format!("{side}-hand"), side, h, tx.clone())?));
        }
        sides.push(state);
    }
    drop(tx);
    let haptics = config.haptics.as_ref().map(HapticsWorker::spawn).transpose()?;

    let labels: Arc<[String]> = robots::FINGERTIPS.iter().map(|s| s.to_string()).collect::<Vec<_>>().into();
    let mut source = match &config.source {
        SourceConfig::Replay { path, rate, engage_at } => Source::Replay {
            frames: replay_load(path)?.frames,
            rate: *rate,
            engage_at: *engage_at,
        },
        SourceConfig::Network { endpoint, keypoint_labels } => {
            let labels = keypoint_labels
                .as_ref()
                .map(|l| l.clone().into())
                .unwrap_or_else(|| labels.clone());
            Source::Network(connect_stream(endpoint.as_str(), labels)?)
        }
    };

    let mut out = SessionOutcome::default();
    let mut alignment: Option<FrameAlignment> = None;
    let (mut arm_times, mut hand_times, mut e2e) = (Vec::new(), Vec::new(), Vec::new());
    let period = 1.0 / config.target_rate_hz;

    let mut step = |frame: &BimanualFrame, engage_ok: bool, out: &mut SessionOutcome| -> Result<()> {
        out.frames_received += 1;
        if alignment.is_none() {
            if !engage_ok {
                out.frames_before_engage += 1;
                return Ok(());
            }
            let pair = |side: HandSide| -> Result<Option<EngagePair>> {
                let Some(s) = sides.iter().find(|s| s.side == side) else {
                    return Ok(None);
                };
                let Some(h) = frame.hand(side) else { return Ok(None) };
                let ee = s.problem.ee_pose(&s.q)?;
                Ok(Some(EngagePair {
                    human: h.wrist,
                    robot: s.base.compose(&ee),
                }))
            };
            let (l, r) = (pair(HandSide::Left)?, pair(HandSide::Right)?);
            let sides_ready = sides.iter().all(|s| frame.hand(s.side).is_some());
            match FrameAlignment::engage(config.alignment_mode, l, r) {
                Ok(a) if sides_ready => alignment = Some(a),
                _ => {
                    out.frames_before_engage += 1;
                    return Ok(());
                }
            }
        }
        let align = alignment.as_ref().expect("engaged");
        let start = Instant::now();
        let mut pending = 0;
        for s in &sides {
            let Some(h) = frame.hand(s.side) else { continue };
            let target = s.base.inverse().compose(&align.map(s.side, &h.wrist)?);
            let arm = &arm_workers.iter().find(|(side, _)| *side == s.side).expect("arm worker").1;
            arm.slot.put(Job::Arm { target });
            pending += 1;
            if let Some((_, w)) = hand_workers.iter().find(|(side, _)| *side == s.side) {
                w.slot.put(Job::Hand { frame: h.clone() });
                pending += 1;
            }
        }
        let mut record = CommandRecord {
            timestamp: frame.timestamp,
            left: None,
            right: None,
            latency_ms: 0.0,
        };
        let mut arms: Vec<(HandSide, ArmCommand)> = Vec::new();
        let mut hands: Vec<(HandSide, RetargetResult)> = Vec::new();
        let mut failed = false;
        for _ in 0..pending {
            let (side, result) = rx.recv().map_err(|_| Error::Config("solver thread stopped".into()))?;
            match result {
                Output::Arm(Ok(c)) => arms.push((side, c)),
                Output::Hand(Ok(r)) => hands.push((side, r)),
                Output::Arm(Err(e)) | Output::Hand(Err(e)) => {
                    log::warn!("frame {} ({side}) rejected: {e}", frame.timestamp);
                    failed = true;
                }
            }
        }
        let latency = start.elapsed().as_secs_f64();
        if failed {
            out.malformed_frames += 1;
        }
        e2e.push(latency);
        if latency > period {
            out.deadline_misses += 1;
        }
        record.latency_ms = latency * 1e3;
        for s in sides.iter_mut() {
            let Some((_, c)) = arms.iter().find(|(side, _)| *side == s.side) else { continue };
            arm_times.push(c.solve_time);
            let counted = std::mem::replace(&mut s.commanded, true);
            if counted {
                out.total_joint_change += distance(&c.active_q, &s.q);
            }
            s.q.clone_from(&c.active_q);
            let hand = hands.iter().find(|(side, _)| *side == s.side).map(|(_, r)| r);
            if let (Some(r), Some((prev, _))) = (hand, s.hand.as_mut()) {
                if r.skipped {
                    out.skipped_hand_frames += 1;
                } else {
                    hand_times.push(r.solve_time);
                }
                if counted {
                    out.total_joint_change += distance(&r.active_q, prev);
                }
                prev.clone_from(&r.active_q);
            }
            let cmd = SideCommand {
                arm_q: c.active_q.clone(),
                ik_error_pos: c.ik_error_pos,
                ik_error_rot: c.ik_error_rot,
                min_singular_value: c.min_singular_value,
                arm_converged: c.converged,
                arm_solve_ms: c.solve_time * 1e3,
                hand_q: hand.map(|r| r.active_q.clone()),
                hand_converged: hand.map(|r| r.converged),
                hand_solve_ms: hand.map(|r| r.solve_time * 1e3),
            };
            match s.side {
                HandSide::Left => record.left = Some(cmd),
                HandSide::Right => record.right = Some(cmd),
            }
        }
        if let Some(h) = &haptics {
            h.slot.put(frame.timestamp);
        }
        out.commands.push(record);
        Ok(())
    };

    match &mut source {
        Source::Replay { frames, rate, engage_at } => {
            let recording = super::Recording {
                keypoint_labels: labels.clone(),
                frames: std::mem::take(frames),
            };
            for f in ReplayStream::new(&recording, *rate) {
                let engage_ok = engage_at.is_none_or(|t| f.timestamp >= t);
                step(f, engage_ok, &mut out)?;
            }
        }
        Source::Network(receiver) => {
            while let Some(f) = receiver.recv() {
                let engage_ok = receiver.engage_requested().is_some();
                step(&f, engage_ok, &mut out)?;
            }
            receiver.join();
            out.dropped_frames = receiver.dropped();
            out.diagnostic = receiver.diagnostic();
        }
    }

    drop(arm_workers);
    drop(hand_workers);
    let haptic_times = match haptics {
        Some(h) => {
            let (bytes, times) = h.finish();
            out.haptics_bytes = bytes;
            Some(times)
        }
        None => None,
    };
    if config.profiling {
        let mut report = ProfileReport::default();
        report.push(ProfileRow::from_seconds("retargeting", &hand_times));
        report.push(ProfileRow::from_seconds("motion_control", &arm_times));
        report.push(ProfileRow::from_seconds("end_to_end", &e2e));
        if let Some(t) = haptic_times {
            report.push(ProfileRow::from_seconds("haptics_pwm", &t));
        }
        out.report = Some(report);
    }
    Ok(out)
}
