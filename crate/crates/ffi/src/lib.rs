//! C ABI over `teleop-core`.
//!
//! Objects are opaque handles created by `*_new`/`*_load_*` and released by
//! the matching `*_free`. Every fallible call returns a [`TeleopStatus`];
//! on failure a message is kept per thread and read back with
//! [`teleop_last_error_message`]. Arrays are passed as pointer plus length
//! and lengths are checked against the model. Panics never cross the
//! boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use teleop_core::arm_control::{ArmControlProblem, ArmController, ArmParams};
use teleop_core::haptics::{pwm_value, CalibrationTable, HapticsConfig, HapticsPipeline, PwmScale, TactileFrame};
use teleop_core::kinematics::{KinematicModel, Pose};
use teleop_core::retargeting::{RetargetProblem, Retargeter};
use teleop_core::session::{load_robot, HandFrame, HandSide};
use teleop_core::{Error, TaskSpace};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeleopStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    UnknownFrame = 4,
    OutOfLimits = 5,
    DimensionMismatch = 6,
    Solver = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for TeleopStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidModel(_)
            | Error::CycleInLinks(_)
            | Error::PassiveSource { .. }
            | Error::PassiveLimit { .. }
            | Error::InvalidCalibration(_)
            | Error::EmptyCalibration => TeleopStatus::InvalidModel,
            Error::UnknownFrame(_) | Error::MissingKeypoint(_) => TeleopStatus::UnknownFrame,
            Error::OutOfLimits { .. } => TeleopStatus::OutOfLimits,
            Error::DimensionMismatch { .. } => TeleopStatus::DimensionMismatch,
            Error::NonFiniteObjective => TeleopStatus::Solver,
            Error::Io(_) | Error::Recording { .. } => TeleopStatus::Io,
            _ => TeleopStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

struct Fail(TeleopStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(TeleopStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(TeleopStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TeleopStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TeleopStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            TeleopStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(TeleopStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn check_len(expected: usize, got: usize) -> Result<(), Fail> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got }.into())
    }
}

unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn teleop_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Duty byte for one calibrated, filtered reading.
#[no_mangle]
pub extern "C" fn teleop_pwm_value(value: f64, threshold: f64, full_scale: f64) -> u8 {
    pwm_value(value, threshold, full_scale)
}

/// Kinematic model of a robot.
pub struct TeleopModel {
    model: Arc<KinematicModel>,
}

/// Parses a JSON robot description.
#[no_mangle]
pub unsafe extern "C" fn teleop_model_from_json(json: *const c_char, out: *mut *mut TeleopModel) -> TeleopStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let model = KinematicModel::load_str(text)?;
        put_handle(out, TeleopModel { model: Arc::new(model) })
    })
}

/// Loads a description file path or a `builtin:<name>` robot.
#[no_mangle]
pub unsafe extern "C" fn teleop_model_load(reference: *const c_char, out: *mut *mut TeleopModel) -> TeleopStatus {
    guard(|| {
        let r = str_arg(reference, "reference")?;
        put_handle(out, TeleopModel { model: Arc::new(load_robot(r)?) })
    })
}

#[no_mangle]
pub unsafe extern "C" fn teleop_model_free(model: *mut TeleopModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of independently commanded joints, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn teleop_model_active_count(model: *const TeleopModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.active_count())
}

/// Pose of `frame` at `q`: position xyz and quaternion wxyz.
#[no_mangle]
pub unsafe extern "C" fn teleop_model_forward_kinematics(
    model: *const TeleopModel,
    q: *const f64,
    q_len: usize,
    frame: *const c_char,
    out_position: *mut f64,
    out_quaternion: *mut f64,
) -> TeleopStatus {
    guard(|| {
        let m = &handle(model, "model")?.model;
        let q = slice_arg(q, q_len, "q")?;
        let frame = str_arg(frame, "frame")?;
        let pos = slice_out(out_position, 3, "out_position")?;
        let quat = slice_out(out_quaternion, 4, "out_quaternion")?;
        let pose = m.forward_kinematics(q, frame)?;
        pos.copy_from_slice(pose.position.as_slice());
        quat.copy_from_slice(&pose.wxyz());
        Ok(())
    })
}

/// Smallest singular value and manipulability of the spatial Jacobian.
#[no_mangle]
pub unsafe extern "C" fn teleop_model_singular_measures(
    model: *const TeleopModel,
    q: *const f64,
    q_len: usize,
    frame: *const c_char,
    out_smallest: *mut f64,
    out_manipulability: *mut f64,
) -> TeleopStatus {
    guard(|| {
        let m = &handle(model, "model")?.model;
        let q = slice_arg(q, q_len, "q")?;
        let frame = str_arg(frame, "frame")?;
        let r = m.spatial_jacobian(q, frame)?;
        *handle_mut(out_smallest, "out_smallest")? = r.smallest_singular_value;
        *handle_mut(out_manipulability, "out_manipulability")? = r.manipulability;
        Ok(())
    })
}

/// Fingertip retargeter: compares root-to-tip vectors of the named links
/// with keypoints given in the same order.
pub struct TeleopRetargeter {
    solver: Retargeter,
    labels: Arc<[String]>,
    active: usize,
}

#[no_mangle]
pub unsafe extern "C" fn teleop_retargeter_new(
    model: *const TeleopModel,
    tips: *const *const c_char,
    tip_count: usize,
    scaling: f64,
    smoothness: f64,
    initial_q: *const f64,
    initial_q_len: usize,
    out: *mut *mut TeleopRetargeter,
) -> TeleopStatus {
    guard(|| {
        let m = handle(model, "model")?.model.clone();
        let tips = slice_arg(tips, tip_count, "tips")?
            .iter()
            .map(|&t| str_arg(t, "tips[i]"))
            .collect::<Result<Vec<&str>, Fail>>()?;
        let q0 = slice_arg(initial_q, initial_q_len, "initial_q")?.to_vec();
        let active = m.active_count();
        let problem = RetargetProblem::fingertips(m, &tips)?
            .with_scaling(scaling)?
            .with_smoothness(smoothness)?;
        let labels: Vec<String> = tips.iter().map(|t| t.to_string()).collect();
        put_handle(
            out,
            TeleopRetargeter {
                solver: Retargeter::new(problem, q0)?,
                labels: labels.into(),
                active,
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn teleop_retargeter_free(r: *mut TeleopRetargeter) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Solves one frame. `keypoints` holds `3 * tip_count` values in wrist
/// coordinates; a frame with a non-finite value is skipped and reported
/// through `out_skipped` with the previous command returned.
#[no_mangle]
pub unsafe extern "C" fn teleop_retargeter_step(
    r: *mut TeleopRetargeter,
    keypoints: *const f64,
    keypoint_values: usize,
    out_q: *mut f64,
    out_q_len: usize,
    out_converged: *mut bool,
    out_skipped: *mut bool,
) -> TeleopStatus {
    guard(|| {
        let r = handle_mut(r, "retargeter")?;
        check_len(3 * r.labels.len(), keypoint_values)?;
        check_len(r.active, out_q_len)?;
        let values = slice_arg(keypoints, keypoint_values, "keypoints")?;
        let out_q = slice_out(out_q, out_q_len, "out_q")?;
        let frame = HandFrame {
            timestamp: 0.0,
            side: HandSide::Right,
            wrist: Pose::identity(),
            keypoints: values.chunks(3).map(|c| [c[0], c[1], c[2]].into()).collect(),
            keypoint_labels: r.labels.clone(),
        };
        let result = r.solver.step(&frame)?;
        out_q.copy_from_slice(&result.active_q);
        if let Some(c) = out_converged.as_mut() {
            *c = result.converged;
        }
        if let Some(s) = out_skipped.as_mut() {
            *s = result.skipped;
        }
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TeleopArmParams {
    pub position_weight: f64,
    pub rotation_weight: f64,
    pub singularity_trigger: f64,
    pub singularity_temperature: f64,
    pub collision_epsilon: f64,
    pub enable_collision: bool,
    pub enable_singularity: bool,
    /// Restrict singularity measures to the linear Jacobian rows.
    pub position_task_space: bool,
    pub max_iterations: u32,
    pub convergence_tol: f64,
}

impl From<ArmParams> for TeleopArmParams {
    fn from(p: ArmParams) -> Self {
        Self {
            position_weight: p.position_weight,
            rotation_weight: p.rotation_weight,
            singularity_trigger: p.singularity_trigger,
            singularity_temperature: p.singularity_temperature,
            collision_epsilon: p.collision_epsilon,
            enable_collision: p.enable_collision,
            enable_singularity: p.enable_singularity,
            position_task_space: p.task_space == TaskSpace::Position,
            max_iterations: p.max_iterations as u32,
            convergence_tol: p.convergence_tol,
        }
    }
}

impl From<TeleopArmParams> for ArmParams {
    fn from(p: TeleopArmParams) -> Self {
        Self {
            position_weight: p.position_weight,
            rotation_weight: p.rotation_weight,
            singularity_trigger: p.singularity_trigger,
            singularity_temperature: p.singularity_temperature,
            collision_epsilon: p.collision_epsilon,
            enable_collision: p.enable_collision,
            enable_singularity: p.enable_singularity,
            task_space: if p.position_task_space {
                TaskSpace::Position
            } else {
                TaskSpace::Full
            },
            max_iterations: p.max_iterations as usize,
            convergence_tol: p.convergence_tol,
        }
    }
}

#[no_mangle]
pub extern "C" fn teleop_arm_params_default() -> TeleopArmParams {
    ArmParams::default().into()
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TeleopArmResult {
    pub ik_error_pos: f64,
    pub ik_error_rot: f64,
    pub min_singular_value: f64,
    pub objective_value: f64,
    pub solve_time: f64,
    pub iterations: u32,
    pub converged: bool,
}

/// Warm-started arm controller.
pub struct TeleopArm {
    controller: ArmController,
    active: usize,
}

/// `params` may be null for the defaults.
#[no_mangle]
pub unsafe extern "C" fn teleop_arm_new(
    model: *const TeleopModel,
    ee_frame: *const c_char,
    params: *const TeleopArmParams,
    initial_q: *const f64,
    initial_q_len: usize,
    out: *mut *mut TeleopArm,
) -> TeleopStatus {
    guard(|| {
        let m = handle(model, "model")?.model.clone();
        let ee = str_arg(ee_frame, "ee_frame")?;
        let params = params.as_ref().map_or_else(ArmParams::default, |p| (*p).into());
        let q0 = slice_arg(initial_q, initial_q_len, "initial_q")?.to_vec();
        let active = m.active_count();
        let problem = ArmControlProblem::new(m, ee, params)?;
        put_handle(
            out,
            TeleopArm {
                controller: ArmController::new(problem, q0)?,
                active,
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn teleop_arm_free(arm: *mut TeleopArm) {
    if !arm.is_null() {
        drop(Box::from_raw(arm));
    }
}

/// Solves toward a target pose (position xyz, quaternion wxyz) in the
/// model's root frame.
#[no_mangle]
pub unsafe extern "C" fn teleop_arm_step(
    arm: *mut TeleopArm,
    position: *const f64,
    quaternion: *const f64,
    out_q: *mut f64,
    out_q_len: usize,
    out_result: *mut TeleopArmResult,
) -> TeleopStatus {
    guard(|| {
        let arm = handle_mut(arm, "arm")?;
        check_len(arm.active, out_q_len)?;
        let p = slice_arg(position, 3, "position")?;
        let q = slice_arg(quaternion, 4, "quaternion")?;
        let out_q = slice_out(out_q, out_q_len, "out_q")?;
        let target = Pose::from_wxyz([p[0], p[1], p[2]], [q[0], q[1], q[2], q[3]])?;
        let cmd = arm.controller.step(&target)?;
        out_q.copy_from_slice(&cmd.active_q);
        if let Some(r) = out_result.as_mut() {
            *r = TeleopArmResult {
                ik_error_pos: cmd.ik_error_pos,
                ik_error_rot: cmd.ik_error_rot,
                min_singular_value: cmd.min_singular_value,
                objective_value: cmd.objective_value,
                solve_time: cmd.solve_time,
                iterations: cmd.iterations as u32,
                converged: cmd.converged,
            };
        }
        Ok(())
    })
}

/// Calibrate, filter and encode pipeline for one hand.
pub struct TeleopHaptics {
    pipeline: HapticsPipeline,
    joints: usize,
}

/// Builds a pipeline from a JSON calibration table with one threshold and
/// full-scale value shared by all sensors.
#[no_mangle]
pub unsafe extern "C" fn teleop_haptics_new(
    calibration_json: *const c_char,
    threshold: f64,
    full_scale: f64,
    cutoff_hz: f64,
    out: *mut *mut TeleopHaptics,
) -> TeleopStatus {
    guard(|| {
        let table = CalibrationTable::from_json(str_arg(calibration_json, "calibration_json")?)?;
        let joints = table.axis_count();
        let scale = PwmScale::uniform(table.sensor_count(), threshold, full_scale)?;
        let config = HapticsConfig {
            cutoff_hz,
            ..HapticsConfig::default()
        };
        put_handle(
            out,
            TeleopHaptics {
                pipeline: HapticsPipeline::new(table, scale, config)?,
                joints,
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn teleop_haptics_free(h: *mut TeleopHaptics) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[no_mangle]
pub unsafe extern "C" fn teleop_haptics_sensor_count(h: *const TeleopHaptics) -> usize {
    h.as_ref().map_or(0, |h| h.pipeline.sensor_count())
}

/// Processes one tactile frame into one duty byte per sensor.
#[no_mangle]
pub unsafe extern "C" fn teleop_haptics_process(
    h: *mut TeleopHaptics,
    timestamp: f64,
    values: *const f64,
    value_count: usize,
    joint_context: *const f64,
    joint_count: usize,
    out_duty: *mut u8,
    out_len: usize,
) -> TeleopStatus {
    guard(|| {
        let h = handle_mut(h, "haptics")?;
        let s = h.pipeline.sensor_count();
        check_len(s, value_count)?;
        check_len(s, out_len)?;
        check_len(h.joints, joint_count)?;
        let frame = TactileFrame {
            timestamp,
            values: slice_arg(values, value_count, "values")?.to_vec(),
            joint_context: slice_arg(joint_context, joint_count, "joint_context")?.to_vec(),
        };
        let out = slice_out(out_duty, out_len, "out_duty")?;
        let pwm = h.pipeline.process(&frame)?;
        out.copy_from_slice(pwm.as_bytes());
        Ok(())
    })
}
