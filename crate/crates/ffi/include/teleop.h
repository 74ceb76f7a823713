#ifndef TELEOP_H
#define TELEOP_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TeleopStatus {
  TELEOP_STATUS_OK = 0,
  TELEOP_STATUS_NULL_POINTER = 1,
  TELEOP_STATUS_INVALID_ARGUMENT = 2,
  TELEOP_STATUS_INVALID_MODEL = 3,
  TELEOP_STATUS_UNKNOWN_FRAME = 4,
  TELEOP_STATUS_OUT_OF_LIMITS = 5,
  TELEOP_STATUS_DIMENSION_MISMATCH = 6,
  TELEOP_STATUS_SOLVER = 7,
  TELEOP_STATUS_IO = 8,
  TELEOP_STATUS_PANIC = 9,
} TeleopStatus;

/**
 * Warm-started arm controller.
 */
typedef struct TeleopArm TeleopArm;

/**
 * Calibrate, filter and encode pipeline for one hand.
 */
typedef struct TeleopHaptics TeleopHaptics;

/**
 * Kinematic model of a robot.
 */
typedef struct TeleopModel TeleopModel;

/**
 * Fingertip retargeter: compares root-to-tip vectors of the named links
 * with keypoints given in the same order.
 */
typedef struct TeleopRetargeter TeleopRetargeter;

typedef struct TeleopArmParams {
  double position_weight;
  double rotation_weight;
  double singularity_trigger;
  double singularity_temperature;
  double collision_epsilon;
  bool enable_collision;
  bool enable_singularity;
  /**
   * Restrict singularity measures to the linear Jacobian rows.
   */
  bool position_task_space;
  uint32_t max_iterations;
  double convergence_tol;
} TeleopArmParams;

typedef struct TeleopArmResult {
  double ik_error_pos;
  double ik_error_rot;
  double min_singular_value;
  double objective_value;
  double solve_time;
  uint32_t iterations;
  bool converged;
} TeleopArmResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *teleop_last_error_message(void);

/**
 * Duty byte for one calibrated, filtered reading.
 */
uint8_t teleop_pwm_value(double value, double threshold, double full_scale);

/**
 * Parses a JSON robot description.
 */
enum TeleopStatus teleop_model_from_json(const char *json, struct TeleopModel **out);

/**
 * Loads a description file path or a `builtin:<name>` robot.
 */
enum TeleopStatus teleop_model_load(const char *reference, struct TeleopModel **out);

void teleop_model_free(struct TeleopModel *model);

/**
 * Number of independently commanded joints, or 0 for a null handle.
 */
size_t teleop_model_active_count(const struct TeleopModel *model);

/**
 * Pose of `frame` at `q`: position xyz and quaternion wxyz.
 */
enum TeleopStatus teleop_model_forward_kinematics(const struct TeleopModel *model,
                                                  const double *q,
                                                  size_t q_len,
                                                  const char *frame,
                                                  double *out_position,
                                                  double *out_quaternion);

/**
 * Smallest singular value and manipulability of the spatial Jacobian.
 */
enum TeleopStatus teleop_model_singular_measures(const struct TeleopModel *model,
                                                 const double *q,
                                                 size_t q_len,
                                                 const char *frame,
                                                 double *out_smallest,
                                                 double *out_manipulability);

enum TeleopStatus teleop_retargeter_new(const struct TeleopModel *model,
                                        const char *const *tips,
                                        size_t tip_count,
                                        double scaling,
                                        double smoothness,
                                        const double *initial_q,
                                        size_t initial_q_len,
                                        struct TeleopRetargeter **out);

void teleop_retargeter_free(struct TeleopRetargeter *r);

/**
 * Solves one frame. `keypoints` holds `3 * tip_count` values in wrist
 * coordinates; a frame with a non-finite value is skipped and reported
 * through `out_skipped` with the previous command returned.
 */
enum TeleopStatus teleop_retargeter_step(struct TeleopRetargeter *r,
                                         const double *keypoints,
                                         size_t keypoint_values,
                                         double *out_q,
                                         size_t out_q_len,
                                         bool *out_converged,
                                         bool *out_skipped);

struct TeleopArmParams teleop_arm_params_default(void);

/**
 * `params` may be null for the defaults.
 */
enum TeleopStatus teleop_arm_new(const struct TeleopModel *model,
                                 const char *ee_frame,
                                 const struct TeleopArmParams *params,
                                 const double *initial_q,
                                 size_t initial_q_len,
                                 struct TeleopArm **out);

void teleop_arm_free(struct TeleopArm *arm);

/**
 * Solves toward a target pose (position xyz, quaternion wxyz) in the
 * model's root frame.
 */
enum TeleopStatus teleop_arm_step(struct TeleopArm *arm,
                                  const double *position,
                                  const double *quaternion,
                                  double *out_q,
                                  size_t out_q_len,
                                  struct TeleopArmResult *out_result);

/**
 * Builds a pipeline from a JSON calibration table with one threshold and
 * full-scale value shared by all sensors.
 */
enum TeleopStatus teleop_haptics_new(const char *calibration_json,
                                     double threshold,
                                     double full_scale,
                                     double cutoff_hz,
                                     struct TeleopHaptics **out);

void teleop_haptics_free(struct TeleopHaptics *h);

size_t teleop_haptics_sensor_count(const struct TeleopHaptics *h);

/**
 * Processes one tactile frame into one duty byte per sensor.
 */
enum TeleopStatus teleop_haptics_process(struct TeleopHaptics *h,
                                         double timestamp,
                                         const double *values,
                                         size_t value_count,
                                         const double *joint_context,
                                         size_t joint_count,
                                         uint8_t *out_duty,
                                         size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TELEOP_H */
