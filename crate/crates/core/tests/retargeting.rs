use std::sync::Arc;
use std::time::Instant;

use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teleop_core::kinematics::{KinematicModel, Pose};
use teleop_core::retargeting::{
    expanded_objective, hand_objective, retarget, retarget_constrained_vectors, retarget_vectors, RetargetProblem,
    Retargeter, VectorSpec,
};
use teleop_core::session::{HandFrame, HandSide};
use teleop_core::synth::robots;

fn hand_problem() -> (Arc<KinematicModel>, RetargetProblem) {
    let model = Arc::new(robots::hand(true).build());
    let problem = RetargetProblem::fingertips(model.clone(), &robots::FINGERTIPS).unwrap();
    (model, problem)
}

fn random_q(model: &KinematicModel, rng: &mut impl Rng) -> Vec<f64> {
    model
        .active_lower()
        .iter()
        .zip(model.active_upper())
        .map(|(&lo, &hi)| rng.random_range(lo..=hi))
        .collect()
}

fn perturbed(model: &KinematicModel, q: &[f64], rng: &mut impl Rng, amount: f64) -> Vec<f64> {
    let mut out: Vec<f64> = q.iter().map(|v| v + rng.random_range(-amount..amount)).collect();
    model.clamp_active(&mut out);
    out
}

fn frame(problem: &RetargetProblem, vectors: Vec<Vector3<f64>>) -> HandFrame {
    let labels: Vec<String> = problem.vector_specs().map(|v| v.keypoint_label.clone()).collect();
    HandFrame {
        timestamp: 0.0,
        side: HandSide::Right,
        wrist: Pose::identity(),
        keypoints: vectors,
        keypoint_labels: labels.into(),
    }
}

fn inf_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn recovers_generating_configuration() {
    let (model, problem) = hand_problem();
    let problem = problem.with_smoothness(0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut ok = 0;
    for _ in 0..200 {
        let truth = random_q(&model, &mut rng);
        let start = perturbed(&model, &truth, &mut rng, 0.3);
        let f = frame(&problem, problem.robot_vectors(&truth).unwrap());
        let r = retarget(&problem, &f, &start).unwrap();
        if inf_norm(&r.active_q, &truth) < 1e-3 {
            ok += 1;
        }
    }
    assert!(ok >= 190, "{ok}/200 recovered");
}

#[test]
fn reduced_matches_expanded_on_identity_mimic() {
    let coupled = Arc::new(robots::identity_mimic_pair(true).build());
    let problem = RetargetProblem::fingertips(coupled.clone(), &["tip", "l2"])
        .unwrap()
        .with_scaling(0.8)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let q = [rng.random_range(-1.4..1.4)];
        let prev = [rng.random_range(-1.4..1.4)];
        let human: Vec<Vector3<f64>> = (0..2)
            .map(|_| Vector3::new(rng.random_range(-0.5..0.5), 0.0, rng.random_range(0.0..0.8)))
            .collect();
        let (v_reduced, g_reduced) = hand_objective(&problem, &q, &prev, &human).unwrap();
        let full = coupled.full_config(&q).unwrap();
        let (v_expanded, g_expanded) = expanded_objective(&problem, &full, &prev, &human).unwrap();
        assert!((v_reduced - v_expanded).abs() < 1e-10);
        // chain rule through c(q) = q: the active entry collects both columns
        assert!((g_reduced[0] - (g_expanded[0] + g_expanded[1])).abs() < 1e-10);
    }
}

#[test]
fn constrained_reference_agrees_with_reduced() {
    let (model, problem) = hand_problem();
    let problem = problem.with_smoothness(0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let truth = random_q(&model, &mut rng);
        let start = perturbed(&model, &truth, &mut rng, 0.3);
        let human = problem.robot_vectors(&truth).unwrap();
        let a = retarget_vectors(&problem, &human, &start, Instant::now()).unwrap();
        let b = retarget_constrained_vectors(&problem, &human, &start, Instant::now()).unwrap();
        assert!((a.objective_value - b.objective_value).abs() < 1e-6, "{} vs {}", a.objective_value, b.objective_value);
        model.check_within_limits(&b.active_q).unwrap();
    }
}

#[test]
fn identical_frame_is_a_fixed_point() {
    let (model, problem) = hand_problem();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let truth = random_q(&model, &mut rng);
    let f = frame(&problem, problem.robot_vectors(&truth).unwrap());
    let r = retarget(&problem, &f, &truth).unwrap();
    assert!(inf_norm(&r.active_q, &truth) < 1e-6);
}

#[test]
fn smoothness_settles_a_repeated_frame() {
    let (model, problem) = hand_problem();
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let truth = random_q(&model, &mut rng);
    let f = frame(&problem, problem.robot_vectors(&truth).unwrap());
    let mut solver = Retargeter::new(problem, model.active_midpoint()).unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..20 {
        let before = solver.current().to_vec();
        let r = solver.step(&f).unwrap();
        last = inf_norm(&r.active_q, &before);
    }
    assert!(last < 1e-6, "{last}");
}

#[test]
fn non_finite_keypoints_skip_the_frame() {
    let (model, problem) = hand_problem();
    let q = model.active_midpoint();
    let mut v = problem.robot_vectors(&q).unwrap();
    v[2].y = f64::NAN;
    let prev: Vec<f64> = q.iter().map(|x| x + 0.01).collect();
    let r = retarget(&problem, &frame(&problem, v), &prev).unwrap();
    assert!(r.skipped && !r.converged);
    assert_eq!(r.active_q, prev);
}

#[test]
fn missing_label_is_an_error() {
    let (model, _) = hand_problem();
    let spec = VectorSpec {
        origin_frame: "palm".into(),
        tip_frame: "index_tip".into(),
        keypoint_label: "not_there".into(),
        origin_label: None,
    };
    let problem = RetargetProblem::new(model.clone(), vec![spec]).unwrap();
    let f = frame(&problem, vec![Vector3::zeros()]);
    let f = HandFrame {
        keypoint_labels: vec!["something_else".to_string()].into(),
        ..f
    };
    assert!(retarget(&problem, &f, &model.active_midpoint()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_stay_in_limits_and_descend(seed in 0u64..10_000, alpha in 0.5f64..2.0) {
        let (model, problem) = hand_problem();
        let problem = problem.with_scaling(alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // targets from an unconstrained hand are usually unreachable
        let free = RetargetProblem::fingertips(Arc::new(robots::hand(false).build()), &robots::FINGERTIPS).unwrap();
        let human = free.robot_vectors(&random_q(free.model(), &mut rng)).unwrap();
        let start = random_q(&model, &mut rng);
        let (v0, _) = hand_objective(&problem, &start, &start, &human).unwrap();
        let r = retarget_vectors(&problem, &human, &start, Instant::now()).unwrap();
        prop_assert!(r.objective_value <= v0 + 1e-12);
        let full = model.full_config(&r.active_q).unwrap();
        for (i, v) in full.iter().enumerate() {
            prop_assert!(*v >= model.lower_limits()[i] && *v <= model.upper_limits()[i]);
        }
    }
}
