#ifndef KACSTROOCK_H
#define KACSTROOCK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KsStatus {
  KS_STATUS_OK = 0,
  KS_STATUS_NULL_POINTER = 1,
  KS_STATUS_INVALID_UTF8 = 2,
  KS_STATUS_PARSE = 3,
  KS_STATUS_VALIDATION = 4,
  KS_STATUS_INVALID_TRIPLET = 5,
  KS_STATUS_DEGENERATE_THETA = 6,
  KS_STATUS_ADMISSIBILITY_FAILURE = 7,
  KS_STATUS_TOO_FEW_SAMPLES = 8,
  KS_STATUS_OUT_OF_RANGE = 9,
  KS_STATUS_IO = 10,
  KS_STATUS_NUMERICAL = 11,
  KS_STATUS_PANIC = 12,
} KsStatus;

typedef enum KsThetaClass {
  KS_THETA_CLASS_COMPLEX_ADMISSIBLE = 0,
  KS_THETA_CLASS_REAL_DEGENERATE = 1,
  KS_THETA_CLASS_NULL_DEGENERATE = 2,
  KS_THETA_CLASS_INADMISSIBLE = 3,
} KsThetaClass;

// An experiment configuration.
typedef struct KsConfig KsConfig;

// Simulated paths, indexed by component then replica on a shared time grid.
typedef struct KsPaths KsPaths;

// A verification report.
typedef struct KsReport KsReport;

// A Lévy triplet.
typedef struct KsTriplet KsTriplet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread. Empty if none.
// Valid until the next failing call on the same thread.
const char *ks_last_error(void);

// Library version as a static NUL-terminated string.
const char *ks_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` is NULL or was returned by this library and not yet freed.
void ks_string_free(char *s);

// Parses a triplet document.
//
// # Safety
// `json` is NULL or a NUL-terminated string; `out` is NULL or writable.
enum KsStatus ks_triplet_from_json(const char *json, struct KsTriplet **out);

// # Safety
// `t` is NULL or a live handle from [`ks_triplet_from_json`].
void ks_triplet_free(struct KsTriplet *t);

// Real and imaginary parts of ψ(u).
//
// # Safety
// `t` is a live handle; `a` and `b` are writable.
enum KsStatus ks_levy_exponent(const struct KsTriplet *t, double u, double *a, double *b);

// c(θ); fails with `KS_STATUS_DEGENERATE_THETA` when a(θ) vanishes.
//
// # Safety
// `t` is a live handle; `c` is writable.
enum KsStatus ks_normalization_constant(const struct KsTriplet *t, double theta, double *c);

// Classifies θ with the triplet's default tolerance.
//
// # Safety
// `t` is a live handle; `class` is writable.
enum KsStatus ks_classify_theta(const struct KsTriplet *t, double theta, enum KsThetaClass *class_);

// Parses a configuration document.
//
// # Safety
// `json` is NULL or a NUL-terminated string; `out` is NULL or writable.
enum KsStatus ks_config_from_json(const char *json, struct KsConfig **out);

// Loads a shipped preset by name, e.g. `poisson-pi-half`.
//
// # Safety
// `name` is NULL or a NUL-terminated string; `out` is NULL or writable.
enum KsStatus ks_config_from_preset(const char *name, struct KsConfig **out);

// # Safety
// `c` is NULL or a live config handle.
void ks_config_free(struct KsConfig *c);

// Overrides replica count and master seed.
//
// # Safety
// `c` is a live config handle not used concurrently.
enum KsStatus ks_config_set_run(struct KsConfig *c, uint64_t replicas, uint64_t master_seed);

// Simulates every replica of every component. `workers` = 0 uses all cores.
//
// # Safety
// `c` is a live config handle; `out` is writable.
enum KsStatus ks_simulate(const struct KsConfig *c, size_t workers_n, struct KsPaths **out);

// # Safety
// `p` is NULL or a live paths handle.
void ks_paths_free(struct KsPaths *p);

// Number of components, replicas and grid points.
//
// # Safety
// `p` is a live handle; the outputs are writable.
enum KsStatus ks_paths_shape(const struct KsPaths *p,
                             size_t *components,
                             size_t *replicas,
                             size_t *points);

// Copies the time grid into `times[0..len]`; `len` must equal the point count.
//
// # Safety
// `p` is a live handle; `times` holds `len` writable doubles.
enum KsStatus ks_paths_times(const struct KsPaths *p, double *times, size_t len);

// Copies one replica of one component into `re[0..len]` and `im[0..len]`.
//
// # Safety
// `p` is a live handle; `re` and `im` each hold `len` writable doubles.
enum KsStatus ks_paths_replica(const struct KsPaths *p,
                               size_t component,
                               size_t replica,
                               double *re,
                               double *im,
                               size_t len);

// Simulates and runs the statistical checks. `workers` = 0 uses all cores.
//
// # Safety
// `c` is a live config handle; `out` is writable.
enum KsStatus ks_verify(const struct KsConfig *c, size_t workers_n, struct KsReport **out);

// # Safety
// `r` is NULL or a live report handle.
void ks_report_free(struct KsReport *r);

// Whether every check passed.
//
// # Safety
// `r` is a live handle; `passed` is writable.
enum KsStatus ks_report_passed(const struct KsReport *r, bool *passed);

// The report as JSON, identical to `report.json`. Free with [`ks_string_free`].
//
// # Safety
// `r` is a live handle; `json` is writable.
enum KsStatus ks_report_json(const struct KsReport *r, char **json);

// Writes the report files and manifest into `out_dir`.
//
// # Safety
// `r` is a live handle; `out_dir` is a NUL-terminated string.
enum KsStatus ks_report_write(const struct KsReport *r, const char *out_dir, bool force);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KACSTROOCK_H */
