use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use teleop_ffi::*;

fn last_error() -> String {
    let p = teleop_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn builtin(name: &str) -> *mut TeleopModel {
    let r = CString::new(format!("builtin:{name}")).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { teleop_model_load(r.as_ptr(), &mut m) }, TeleopStatus::Ok);
    m
}

#[test]
fn forward_kinematics_of_planar_arm() {
    let m = builtin("planar");
    assert_eq!(unsafe { teleop_model_active_count(m) }, 2);
    let frame = CString::new("tool").unwrap();
    let q = [std::f64::consts::FRAC_PI_2, 0.0];
    let (mut p, mut quat) = ([0.0; 3], [0.0; 4]);
    let s = unsafe { teleop_model_forward_kinematics(m, q.as_ptr(), 2, frame.as_ptr(), p.as_mut_ptr(), quat.as_mut_ptr()) };
    assert_eq!(s, TeleopStatus::Ok);
    assert!((p[0]).abs() < 1e-12 && (p[1] - 2.0).abs() < 1e-12);
    unsafe { teleop_model_free(m) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let m = builtin("planar");
    let frame = CString::new("nowhere").unwrap();
    let q = [0.0, 0.0];
    let (mut p, mut quat) = ([0.0; 3], [0.0; 4]);
    let s = unsafe { teleop_model_forward_kinematics(m, q.as_ptr(), 2, frame.as_ptr(), p.as_mut_ptr(), quat.as_mut_ptr()) };
    assert_eq!(s, TeleopStatus::UnknownFrame);
    assert!(last_error().contains("nowhere"));

    let tool = CString::new("tool").unwrap();
    let s = unsafe { teleop_model_forward_kinematics(m, q.as_ptr(), 1, tool.as_ptr(), p.as_mut_ptr(), quat.as_mut_ptr()) };
    assert_eq!(s, TeleopStatus::DimensionMismatch);

    let s = unsafe { teleop_model_forward_kinematics(ptr::null(), q.as_ptr(), 2, tool.as_ptr(), p.as_mut_ptr(), quat.as_mut_ptr()) };
    assert_eq!(s, TeleopStatus::NullPointer);

    let bad = CString::new("{\"links\": []}").unwrap();
    let mut out = ptr::null_mut();
    assert_ne!(unsafe { teleop_model_from_json(bad.as_ptr(), &mut out) }, TeleopStatus::Ok);
    assert!(out.is_null());

    // a success clears the message
    let s = unsafe { teleop_model_forward_kinematics(m, q.as_ptr(), 2, tool.as_ptr(), p.as_mut_ptr(), quat.as_mut_ptr()) };
    assert_eq!(s, TeleopStatus::Ok);
    assert!(teleop_last_error_message().is_null());
    unsafe { teleop_model_free(m) };
}

#[test]
fn arm_tracks_a_reachable_target() {
    let m = builtin("arm7");
    let home = [0.0, 0.4, 0.0, 1.2, 0.0, 0.8, 0.0];
    let goal = [0.2, 0.5, -0.1, 1.0, 0.1, 0.7, 0.2];
    let tool = CString::new("tool").unwrap();
    let (mut p, mut quat) = ([0.0; 3], [0.0; 4]);
    unsafe { teleop_model_forward_kinematics(m, goal.as_ptr(), 7, tool.as_ptr(), p.as_mut_ptr(), quat.as_mut_ptr()) };
    let mut params = teleop_arm_params_default();
    params.max_iterations = 200;
    let mut arm = ptr::null_mut();
    assert_eq!(
        unsafe { teleop_arm_new(m, tool.as_ptr(), &params, home.as_ptr(), 7, &mut arm) },
        TeleopStatus::Ok
    );
    let mut q = [0.0; 7];
    let mut result = TeleopArmResult::default();
    for _ in 0..5 {
        let s = unsafe { teleop_arm_step(arm, p.as_ptr(), quat.as_ptr(), q.as_mut_ptr(), 7, &mut result) };
        assert_eq!(s, TeleopStatus::Ok);
    }
    assert!(result.ik_error_pos < 1e-3, "{result:?}");
    assert!(result.min_singular_value > 0.0);
    unsafe {
        teleop_arm_free(arm);
        teleop_model_free(m);
    }
}

#[test]
fn retargeter_recovers_its_own_fingertips() {
    let m = builtin("hand");
    let names = ["thumb_tip", "index_tip", "middle_tip", "ring_tip", "pinky_tip"];
    let c: Vec<CString> = names.iter().map(|n| CString::new(*n).unwrap()).collect();
    let ptrs: Vec<*const i8> = c.iter().map(|s| s.as_ptr().cast()).collect();
    let truth = [-0.7, 0.8, 0.5, 1.0, 1.2, 0.3];
    let mut keypoints = Vec::new();
    for name in &c {
        let (mut p, mut quat) = ([0.0; 3], [0.0; 4]);
        let s = unsafe { teleop_model_forward_kinematics(m, truth.as_ptr(), 6, name.as_ptr(), p.as_mut_ptr(), quat.as_mut_ptr()) };
        assert_eq!(s, TeleopStatus::Ok);
        keypoints.extend_from_slice(&p);
    }
    let start = [-0.75, 0.7, 0.8, 0.8, 0.8, 0.8];
    let mut r = ptr::null_mut();
    let s = unsafe { teleop_retargeter_new(m, ptrs.as_ptr().cast(), 5, 1.0, 0.0, start.as_ptr(), 6, &mut r) };
    assert_eq!(s, TeleopStatus::Ok, "{}", last_error());
    let mut q = [0.0; 6];
    let (mut converged, mut skipped) = (false, true);
    let s = unsafe { teleop_retargeter_step(r, keypoints.as_ptr(), 15, q.as_mut_ptr(), 6, &mut converged, &mut skipped) };
    assert_eq!(s, TeleopStatus::Ok);
    assert!(!skipped);
    let err = q.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{q:?}");

    keypoints[4] = f64::NAN;
    let prev = q;
    let s = unsafe { teleop_retargeter_step(r, keypoints.as_ptr(), 15, q.as_mut_ptr(), 6, &mut converged, &mut skipped) };
    assert_eq!(s, TeleopStatus::Ok);
    assert!(skipped);
    assert_eq!(q, prev);
    unsafe {
        teleop_retargeter_free(r);
        teleop_model_free(m);
    }
}

#[test]
fn haptics_pipeline_and_pwm() {
    assert_eq!(teleop_pwm_value(10.0, 10.0, 265.0), 0);
    assert_eq!(teleop_pwm_value(265.0, 10.0, 265.0), 255);
    let table = CString::new(
        r#"{"sensor_axes": [0, 0], "grid": [
            {"joint_context": [0.0], "baseline": [100.0, 200.0]},
            {"joint_context": [1.0], "baseline": [100.0, 200.0]}]}"#,
    )
    .unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { teleop_haptics_new(table.as_ptr(), 0.0, 255.0, 1e6, &mut h) }, TeleopStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { teleop_haptics_sensor_count(h) }, 2);
    let mut duty = [0u8; 2];
    let values = [100.0, 400.0];
    let ctx = [0.5];
    let s = unsafe { teleop_haptics_process(h, 0.0, values.as_ptr(), 2, ctx.as_ptr(), 1, duty.as_mut_ptr(), 2) };
    assert_eq!(s, TeleopStatus::Ok);
    assert_eq!(duty[0], 0);
    assert!(duty[1] > 0);
    let s = unsafe { teleop_haptics_process(h, 0.0, values.as_ptr(), 2, ctx.as_ptr(), 1, duty.as_mut_ptr(), 2) };
    assert_eq!(s, TeleopStatus::InvalidArgument, "timestamps must increase");
    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { teleop_haptics_new(table.as_ptr(), 5.0, 5.0, 5.0, &mut bad) }, TeleopStatus::InvalidArgument);
    unsafe { teleop_haptics_free(h) };
}

#[test]
fn free_accepts_null() {
    unsafe {
        teleop_model_free(ptr::null_mut());
        teleop_arm_free(ptr::null_mut());
        teleop_retargeter_free(ptr::null_mut());
        teleop_haptics_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/teleop.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["teleop_model_load", "teleop_arm_step", "teleop_retargeter_step", "teleop_haptics_process"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"teleop.h\"\nint main(void) { TeleopArmParams p = teleop_arm_params_default(); return p.max_iterations > 0 ? 0 : 1; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => eprintln!("skipping C compile check: {e}"),
    }
}
