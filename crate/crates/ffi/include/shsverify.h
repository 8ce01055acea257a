#ifndef SHSVERIFY_H
#define SHSVERIFY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ShsStatus {
  SHS_STATUS_OK = 0,
  SHS_STATUS_NULL_POINTER = 1,
  SHS_STATUS_INVALID_ARGUMENT = 2,
  SHS_STATUS_COMPUTATION_FAILED = 3,
  SHS_STATUS_IO = 4,
  SHS_STATUS_PANIC = 5,
} ShsStatus;

typedef enum ShsSuite {
  SHS_SUITE_ORACLE = 0,
  SHS_SUITE_KOSZUL = 1,
  SHS_SUITE_PARITY = 2,
} ShsSuite;

/**
 * Opaque cone-contraction certificate.
 */
typedef struct ShsCertificate ShsCertificate;

/**
 * Opaque planar Hamiltonian.
 */
typedef struct ShsHamiltonian ShsHamiltonian;

/**
 * Opaque solid-torus stable Hamiltonian structure.
 */
typedef struct ShsTorus ShsTorus;

typedef struct ShsCertificateSummary {
  bool passed;
  bool all_returned;
  double min_margin;
  size_t samples;
} ShsCertificateSummary;

typedef struct ShsAxiomSummary {
  bool passed;
  size_t points;
  double d_omega_max;
  double kernel_residual_max;
  double reeb_kernel_max;
  double reeb_normalization_max;
  double lambda_dlambda_min;
  double omega_lambda_min;
} ShsAxiomSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *shs_version(void);

/**
 * Bytes needed for the last error message including the NUL, or 0.
 */
size_t shs_last_error_length(void);

/**
 * Copy the last error message into `buf`, truncating to `len - 1` bytes.
 * Returns the number of bytes written, excluding the NUL.
 */
size_t shs_last_error_message(char *buf, size_t len);

void shs_string_free(char *s);

/**
 * `(x^2 - y^2) / 2`.
 */
enum ShsStatus shs_hamiltonian_quad_saddle(struct ShsHamiltonian **dst);

/**
 * The blowup Hamiltonian with the default bump.
 */
enum ShsStatus shs_hamiltonian_blowup(double amplitude, double eps, struct ShsHamiltonian **dst);

enum ShsStatus shs_hamiltonian_monkey_saddle(uint32_t k,
                                             double delta,
                                             double cutoff_radius,
                                             struct ShsHamiltonian **dst);

/**
 * Any Hamiltonian in its JSON form, e.g. `{"kind": "quad_saddle"}`.
 */
enum ShsStatus shs_hamiltonian_from_json(const char *json, struct ShsHamiltonian **dst);

void shs_hamiltonian_free(struct ShsHamiltonian *h);

enum ShsStatus shs_hamiltonian_value(const struct ShsHamiltonian *h,
                                     double x,
                                     double y,
                                     double *value);

/**
 * Time-`t` flow from `(x, y)`. `point` receives 2 doubles; `jacobian`, if
 * not null, receives 4 in row-major order.
 */
enum ShsStatus shs_flow(const struct ShsHamiltonian *h,
                        double x,
                        double y,
                        double t,
                        double *point,
                        double *jacobian);

/**
 * Counts of hyperbolic, elliptic and degenerate zeros of the field in the
 * square of half-width `half_width`.
 */
enum ShsStatus shs_fixed_point_counts(const struct ShsHamiltonian *h,
                                      double half_width,
                                      size_t density,
                                      size_t *hyperbolic,
                                      size_t *elliptic,
                                      size_t *degenerate);

/**
 * Run the cone-contraction certificate on the circle of `radius`.
 * `max_time <= 0` keeps the default integration horizon.
 */
enum ShsStatus shs_certify(const struct ShsHamiltonian *h,
                           double radius,
                           size_t samples,
                           double max_time,
                           struct ShsCertificate **dst);

enum ShsStatus shs_certificate_summary(const struct ShsCertificate *c,
                                       struct ShsCertificateSummary *summary);

/**
 * Largest margin change when recomputed from the archived Jacobians.
 */
enum ShsStatus shs_certificate_recheck(const struct ShsCertificate *c, double *drift);

/**
 * The full certificate as JSON; free with `shs_string_free`.
 */
enum ShsStatus shs_certificate_to_json(const struct ShsCertificate *c, char **json);

void shs_certificate_free(struct ShsCertificate *c);

/**
 * Standard structure with boundary form `q dtheta + p dpsi` and Reeb slope
 * profile given by polynomial coefficients `s[0] + s[1] r + ...`.
 */
enum ShsStatus shs_torus_standard(int64_t p,
                                  int64_t q,
                                  const double *s,
                                  size_t s_len,
                                  struct ShsTorus **dst);

/**
 * Check the axioms on `radial x angular x angular` points.
 */
enum ShsStatus shs_torus_verify(const struct ShsTorus *t,
                                size_t radial,
                                size_t angular,
                                struct ShsAxiomSummary *summary);

/**
 * `(R_r, R_theta, R_psi)` at radius `r` into `reeb[3]`.
 */
enum ShsStatus shs_torus_reeb(const struct ShsTorus *t, double r, double *reeb);

void shs_torus_free(struct ShsTorus *t);

/**
 * `|a d - b c|` for the slopes `a/b` and `c/d`.
 */
enum ShsStatus shs_slope_intersection(int64_t a, int64_t b, int64_t c, int64_t d, uint64_t *iota);

enum ShsStatus shs_slope_in_v(int64_t p, int64_t q, bool *member);

/**
 * Run a seeded SFT suite; `failures` may be null.
 */
enum ShsStatus shs_sft_suite(enum ShsSuite suite,
                             uint64_t seed,
                             size_t cases,
                             bool *passed,
                             size_t *failures);

/**
 * Run an experiment config (the JSON accepted by `shsverify run`), writing
 * artifacts under `out_dir` with file stem `stem`. The report JSON is
 * returned in `report` (free with `shs_string_free`); a run whose checks
 * fail still returns `SHS_STATUS_OK` with `"pass": false`.
 */
enum ShsStatus shs_run_config(const char *config_json,
                              const char *out_dir,
                              const char *stem,
                              char **report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHSVERIFY_H */
