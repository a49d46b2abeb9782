#ifndef TOOLTAMP_H
#define TOOLTAMP_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define TT_ARM_LEFT 0

#define TT_ARM_RIGHT 1

typedef enum TtStatus {
  TT_STATUS_OK = 0,
  TT_STATUS_NULL_ARGUMENT = 1,
  TT_STATUS_INVALID_ARGUMENT = 2,
  TT_STATUS_INPUT_ERROR = 3,
  TT_STATUS_PLANNING_FAILURE = 4,
  TT_STATUS_NO_SOLUTION = 5,
  TT_STATUS_LIMIT_VIOLATION = 6,
  TT_STATUS_PANIC = 7,
} TtStatus;

/**
 * Grasp and handover database of one tool.
 */
typedef struct TtDatabase TtDatabase;

/**
 * Scene with its database.
 */
typedef struct TtProblem TtProblem;

/**
 * Robot model.
 */
typedef struct TtRobot TtRobot;

/**
 * Timed dual-arm trajectory with events.
 */
typedef struct TtTrajectory TtTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next
 * call on the same thread; never null.
 */
const char *tt_last_error(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TtStatus tt_robot_default(struct TtRobot **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum TtStatus tt_robot_load(const char *path, struct TtRobot **out);

/**
 * # Safety
 * `robot` must come from a `tt_robot_*` constructor or be null.
 */
void tt_robot_free(struct TtRobot *robot);

/**
 * TCP pose of `arm` at joints `q[6]`: position `[3]` and quaternion `[4]` as w, x, y, z.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum TtStatus tt_robot_fk(const struct TtRobot *robot,
                          int arm,
                          const double *q,
                          double *out_position,
                          double *out_quaternion);

/**
 * Joints reaching the TCP pose (`position[3]`, quaternion `[4]` w, x, y, z)
 * from `restarts` seeded random starts.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum TtStatus tt_robot_ik(const struct TtRobot *robot,
                          int arm,
                          const double *position,
                          const double *quaternion,
                          uint64_t seed,
                          uint32_t restarts,
                          double *out_q);

/**
 * # Safety
 * `q` must hold 6 values; `out` must be valid for writes.
 */
enum TtStatus tt_robot_manipulability(const struct TtRobot *robot,
                                      int arm,
                                      const double *q,
                                      double *out);

/**
 * Generates the database of the tool file at `tool_path` with default parameters.
 *
 * # Safety
 * `tool_path` must be NUL-terminated; `out` must be valid for writes.
 */
enum TtStatus tt_database_generate(const struct TtRobot *robot,
                                   const char *tool_path,
                                   uint64_t seed,
                                   struct TtDatabase **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid for writes.
 */
enum TtStatus tt_database_load(const char *path, struct TtDatabase **out);

/**
 * # Safety
 * `path` must be NUL-terminated.
 */
enum TtStatus tt_database_save(const struct TtDatabase *db, const char *path);

/**
 * # Safety
 * `out_grasps` and `out_pairs` must be valid for writes.
 */
enum TtStatus tt_database_counts(const struct TtDatabase *db,
                                 size_t *out_grasps,
                                 size_t *out_pairs);

/**
 * # Safety
 * `db` must come from a `tt_database_*` constructor or be null.
 */
void tt_database_free(struct TtDatabase *db);

/**
 * Loads a scene file and a database file for its tool.
 *
 * # Safety
 * Paths must be NUL-terminated; `out` must be valid for writes.
 */
enum TtStatus tt_problem_load(const char *scene_path, const char *db_path, struct TtProblem **out);

/**
 * # Safety
 * `problem` must come from `tt_problem_load` or be null.
 */
void tt_problem_free(struct TtProblem *problem);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum TtStatus tt_plan(const struct TtProblem *problem, uint64_t seed, struct TtTrajectory **out);

/**
 * Replays `tr` against the problem's scene; `*out_valid` is 1 when the
 * trajectory is collision-free, within limits and leaves every object at its goal.
 *
 * # Safety
 * `out_valid` must be valid for writes.
 */
enum TtStatus tt_validate(const struct TtProblem *problem,
                          const struct TtTrajectory *tr,
                          double resolution,
                          int *out_valid);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid for writes.
 */
enum TtStatus tt_trajectory_read(const char *path, struct TtTrajectory **out);

/**
 * # Safety
 * `path` must be NUL-terminated.
 */
enum TtStatus tt_trajectory_write(const struct TtTrajectory *tr, const char *path);

/**
 * Duration in seconds and the sample and event counts.
 *
 * # Safety
 * Output pointers must be valid for writes.
 */
enum TtStatus tt_trajectory_info(const struct TtTrajectory *tr,
                                 double *out_duration,
                                 size_t *out_samples,
                                 size_t *out_events);

/**
 * Sample `index`: time, left joints `[6]`, right joints `[6]`, jaw widths `[2]`.
 * Any output pointer may be null to skip it.
 *
 * # Safety
 * Non-null output pointers must be valid for the stated lengths.
 */
enum TtStatus tt_trajectory_sample(const struct TtTrajectory *tr,
                                   size_t index,
                                   double *out_t,
                                   double *out_left,
                                   double *out_right,
                                   double *out_jaw);

/**
 * # Safety
 * `tr` must come from a `tt_*` constructor or be null.
 */
void tt_trajectory_free(struct TtTrajectory *tr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOOLTAMP_H */
