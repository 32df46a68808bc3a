#ifndef LIENF_H
#define LIENF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LienfStatus {
  LIENF_STATUS_OK = 0,
  LIENF_STATUS_NULL_POINTER = 1,
  LIENF_STATUS_INVALID_UTF8 = 2,
  LIENF_STATUS_INVALID_ARGUMENT = 3,
  LIENF_STATUS_UNKNOWN_NAME = 4,
  LIENF_STATUS_CONFIG_PARSE = 5,
  LIENF_STATUS_NOT_COMPOSABLE = 6,
  LIENF_STATUS_NUMERICAL = 7,
  LIENF_STATUS_IO = 8,
  LIENF_STATUS_PANIC = 9,
} LienfStatus;

// A Lie groupoid.
typedef struct LienfGroupoid LienfGroupoid;

// A verification report.
typedef struct LienfReport LienfReport;

// The result of a scenario run.
typedef struct LienfRun LienfRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *lienf_version(void);

// Copies the last error message of this thread into `buf`.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t lienf_last_error(char *buf, size_t len);

// Builds a named groupoid: `unit-plane`, `pair-plane`, `pair-sphere`,
// `pr-plane`, `cylinder`, `so2-plane`, `so3-sphere` or `z2-line`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum LienfStatus lienf_groupoid_new(const char *name, struct LienfGroupoid **out);

// # Safety
// `g` must be null or a handle from [`lienf_groupoid_new`] not yet freed.
void lienf_groupoid_free(struct LienfGroupoid *g);

// Ambient dimensions of objects and arrows; arrays passed to the structure
// maps have these lengths.
//
// # Safety
// All pointers must be valid.
enum LienfStatus lienf_groupoid_dims(const struct LienfGroupoid *g,
                                     size_t *objects,
                                     size_t *arrows);

// Source of an arrow.
//
// # Safety
// `arrow` must hold the arrow dimension and `out` the object dimension.
enum LienfStatus lienf_groupoid_source(const struct LienfGroupoid *g,
                                       const double *arrow,
                                       double *out);

// Target of an arrow.
//
// # Safety
// As for [`lienf_groupoid_source`].
enum LienfStatus lienf_groupoid_target(const struct LienfGroupoid *g,
                                       const double *arrow,
                                       double *out);

// `a·b`, defined when the source of `a` is the target of `b`.
//
// # Safety
// `a`, `b` and `out` must each hold the arrow dimension.
enum LienfStatus lienf_groupoid_multiply(const struct LienfGroupoid *g,
                                         const double *a,
                                         const double *b,
                                         double *out);

// Samples `samples` composable triples and checks the groupoid axioms.
//
// # Safety
// `g` must be a live handle and `out` a valid pointer.
enum LienfStatus lienf_check_axioms(const struct LienfGroupoid *g,
                                    size_t samples,
                                    double tol,
                                    uint64_t seed,
                                    struct LienfReport **out);

// # Safety
// `r` must be a live report handle.
bool lienf_report_pass(const struct LienfReport *r);

// Largest sampled defect; NaN for a null handle.
//
// # Safety
// `r` must be null or a live report handle.
double lienf_report_max_defect(const struct LienfReport *r);

// The report as JSON.
//
// # Safety
// `r` must be a live report handle; `buf` null or valid for `len` bytes.
size_t lienf_report_json(const struct LienfReport *r, char *buf, size_t len);

// # Safety
// `r` must be null or a report handle not yet freed.
void lienf_report_free(struct LienfReport *r);

// Runs a scenario file, or a built-in scenario when `config` names one.
// Outputs are written to `out_dir` unless it is null. A negative `tol`, zero
// `samples` or negative `seed` keeps the scenario's value.
//
// # Safety
// `config` must be a NUL-terminated string, `out_dir` null or one, and
// `out` a valid pointer.
enum LienfStatus lienf_run_scenario(const char *config,
                                    const char *out_dir,
                                    double tol,
                                    size_t samples,
                                    int64_t seed,
                                    struct LienfRun **out);

// # Safety
// `r` must be a live run handle.
bool lienf_run_pass(const struct LienfRun *r);

// Hex SHA-256 of the run, stable across runs with the same seed.
//
// # Safety
// `r` must be a live run handle; `buf` null or valid for `len` bytes.
size_t lienf_run_hash(const struct LienfRun *r, char *buf, size_t len);

// The run report as JSON, as written to `report.json`.
//
// # Safety
// `r` must be a live run handle; `buf` null or valid for `len` bytes.
size_t lienf_run_json(const struct LienfRun *r, char *buf, size_t len);

// # Safety
// `r` must be null or a run handle not yet freed.
void lienf_run_free(struct LienfRun *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIENF_H */
