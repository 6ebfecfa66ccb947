#ifndef MOYAL_H
#define MOYAL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum MoyalStatus {
  MOYAL_STATUS_OK = 0,
  MOYAL_STATUS_NULL_POINTER = 1,
  MOYAL_STATUS_INVALID_ARGUMENT = 2,
  MOYAL_STATUS_INVALID_PAIR = 3,
  MOYAL_STATUS_TRUNCATION = 4,
  MOYAL_STATUS_OUT_OF_RANGE = 5,
  MOYAL_STATUS_INCONSISTENT = 6,
  MOYAL_STATUS_PRECONDITION_FAILED = 7,
  MOYAL_STATUS_NOT_IMPLEMENTED = 8,
  MOYAL_STATUS_IO = 9,
  MOYAL_STATUS_PANIC = 10,
} MoyalStatus;

/**
 * Opaque distance estimate.
 */
typedef struct MoyalEstimate MoyalEstimate;

/**
 * Opaque mixed state.
 */
typedef struct MoyalState MoyalState;

/**
 * Solver knobs; start from `moyal_solver_options_default`.
 */
typedef struct MoyalSolverOptions {
  size_t restarts;
  size_t max_iter;
  uint64_t seed;
  size_t pad;
  /**
   * 0 picks the working dimension from the states.
   */
  size_t solver_dim;
} MoyalSolverOptions;

typedef struct MoyalBetaThresholds {
  double beta0;
  double beta1;
  double beta2;
  double gamma;
  double lambert_residual;
} MoyalBetaThresholds;

typedef struct MoyalSchurCertificate {
  double beta;
  double row_sup;
  double col_sup;
  double schur_bound;
  double exact_norm;
  bool in_ball;
} MoyalSchurCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *moyal_last_error_message(void);

struct MoyalSolverOptions moyal_solver_options_default(void);

/**
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MoyalStatus moyal_ground_state(size_t dim, double theta, struct MoyalState **out);

/**
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MoyalStatus moyal_eigenstate(size_t n, size_t dim, double theta, struct MoyalState **out);

/**
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MoyalStatus moyal_coherent_state(double kappa_re,
                                      double kappa_im,
                                      size_t dim,
                                      double theta,
                                      struct MoyalState **out);

/**
 * Parses the JSON state format `{theta, components: [{weight, re, im}]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum MoyalStatus moyal_state_from_json(const char *json, struct MoyalState **out);

/**
 * # Safety
 * `state` must be a live handle; `out` a valid handle slot.
 */
enum MoyalStatus moyal_state_translate(const struct MoyalState *state,
                                       double kappa_re,
                                       double kappa_im,
                                       struct MoyalState **out);

/**
 * # Safety
 * `state` must be a live handle; `out` a valid handle slot.
 */
enum MoyalStatus moyal_state_rotate(const struct MoyalState *state,
                                    double t,
                                    struct MoyalState **out);

/**
 * Number of stored levels, 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t moyal_state_dim(const struct MoyalState *state);

/**
 * # Safety
 * `state` must be null or a handle not yet freed.
 */
void moyal_state_free(struct MoyalState *state);

/**
 * `d(phi, phi o alpha_kappa)` with upper bound `|kappa|`. `opts` may be null.
 *
 * # Safety
 * Handles must be live; `out` a valid handle slot.
 */
enum MoyalStatus moyal_translation_distance(const struct MoyalState *state,
                                            double kappa_re,
                                            double kappa_im,
                                            const struct MoyalSolverOptions *opts,
                                            struct MoyalEstimate **out);

/**
 * Certified lower bound between two states; upper is +inf. `opts` may be null.
 *
 * # Safety
 * Handles must be live; `out` a valid handle slot.
 */
enum MoyalStatus moyal_maximize_distance(const struct MoyalState *a,
                                         const struct MoyalState *b,
                                         const struct MoyalSolverOptions *opts,
                                         struct MoyalEstimate **out);

/**
 * Two-sheet distance between `a` on sheet `i` and `b` on sheet `j` (1 or 2).
 * When `has_hint` is set, `b` is taken as the translate of `a` by the hint.
 *
 * # Safety
 * Handles must be live; `out` a valid handle slot.
 */
enum MoyalStatus moyal_double_distance(const struct MoyalState *a,
                                       uint32_t i,
                                       const struct MoyalState *b,
                                       uint32_t j,
                                       double lambda,
                                       bool has_hint,
                                       double hint_re,
                                       double hint_im,
                                       const struct MoyalSolverOptions *opts,
                                       struct MoyalEstimate **out);

/**
 * NaN for a null handle.
 *
 * # Safety
 * `est` must be null or a live handle.
 */
double moyal_estimate_lower(const struct MoyalEstimate *est);

/**
 * +inf when no closed form applies; NaN for a null handle.
 *
 * # Safety
 * `est` must be null or a live handle.
 */
double moyal_estimate_upper(const struct MoyalEstimate *est);

/**
 * # Safety
 * `est` must be null or a live handle.
 */
size_t moyal_estimate_iterations(const struct MoyalEstimate *est);

/**
 * JSON record `{lower, upper, gap, beta, dim, iterations, witness_ref}`;
 * release it with `moyal_string_free`.
 *
 * # Safety
 * `est` must be a live handle; `out` a valid pointer.
 */
enum MoyalStatus moyal_estimate_to_json(const struct MoyalEstimate *est, char **out);

/**
 * # Safety
 * `est` must be null or a handle not yet freed.
 */
void moyal_estimate_free(struct MoyalEstimate *est);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void moyal_string_free(char *s);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum MoyalStatus moyal_beta_thresholds(struct MoyalBetaThresholds *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum MoyalStatus moyal_schur_certificate(double beta,
                                         size_t dim,
                                         struct MoyalSchurCertificate *out);

/**
 * # Safety
 * Handles must be live; `out` a valid pointer.
 */
enum MoyalStatus moyal_quantum_length_squared(const struct MoyalState *a,
                                              const struct MoyalState *b,
                                              double *out);

/**
 * # Safety
 * `state` must be a live handle; `out` a valid pointer.
 */
enum MoyalStatus moyal_lambda_from_state(const struct MoyalState *state, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOYAL_H */
