#ifndef MIBOUNDS_H
#define MIBOUNDS_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum MbStatus {
  MB_STATUS_OK = 0,
  MB_STATUS_NULL_POINTER = 1,
  MB_STATUS_INVALID_ARGUMENT = 2,
  MB_STATUS_DIMENSION_MISMATCH = 3,
  MB_STATUS_OUT_OF_DOMAIN = 4,
  MB_STATUS_CERTIFICATION_FAILED = 5,
  MB_STATUS_UNSUPPORTED = 6,
  MB_STATUS_UTF8 = 7,
  MB_STATUS_INTERNAL = 8,
} MbStatus;

/**
 * Opaque handle: Gaussian location model.
 */
typedef struct MbModel MbModel;

/**
 * Opaque handle: diagonal Gaussian prior.
 */
typedef struct MbPrior MbPrior;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the most recent error message on this thread into `buf`
 * (NUL-terminated, truncated to `len`). Returns the full message length.
 */
uintptr_t mb_last_error_message(char *buf, uintptr_t len);

/**
 * Frees a string returned by this library.
 */
void mb_string_free(char *s);

/**
 * Creates a Gaussian location model with isotropic noise.
 */
enum MbStatus mb_model_gaussian_new(uintptr_t dim, double noise_sd, struct MbModel **out);

void mb_model_free(struct MbModel *model);

/**
 * Creates a centered isotropic Gaussian prior.
 */
enum MbStatus mb_prior_isotropic_new(uintptr_t dim, double sigma, struct MbPrior **out);

void mb_prior_free(struct MbPrior *prior);

/**
 * RHS of the in-expectation mutual-information bound: mi / (n (1 - alpha)).
 */
enum MbStatus mb_bound_main(double mi, uintptr_t n, double alpha, double *out_rhs);

/**
 * General localized contraction bound at inverse temperature beta.
 * `out_valid` is 0 when beta violates the admissibility window (the RHS is
 * then +inf).
 */
enum MbStatus mb_bound_localized_general(double c,
                                         double d_pi,
                                         double kappa,
                                         double beta,
                                         double alpha,
                                         uintptr_t n,
                                         double *out_rhs,
                                         int32_t *out_valid);

/**
 * Optimized localized contraction bound: alpha (2c/(1-alpha))^(1+kappa)
 * d_pi / n^kappa.
 */
enum MbStatus mb_bound_localized_opt(double c,
                                     double d_pi,
                                     double kappa,
                                     double alpha,
                                     uintptr_t n,
                                     double *out_rhs);

/**
 * Squared-distance contraction bound for the Gaussian location model.
 */
enum MbStatus mb_bound_gaussian_l2(uintptr_t dim,
                                   double theta0_norm_sq,
                                   double sigma_sq,
                                   double v_sq,
                                   double alpha,
                                   uintptr_t n,
                                   double *out_rhs);

/**
 * High-probability contraction bound at confidence 1 - delta - eta.
 */
enum MbStatus mb_bound_highprob(double c,
                                double d_pi,
                                double d_pi_prime,
                                double kappa,
                                double alpha,
                                uintptr_t n,
                                double delta,
                                double eta,
                                double *out_rhs);

/**
 * PAC-Bayes style in-expectation bound from the empirical ingredients.
 */
enum MbStatus mb_bound_pacbayes(double alpha,
                                uintptr_t n,
                                double exp_rn,
                                double kl_rho_pi,
                                double *out_rhs);

/**
 * Covering-net risk bound for the box-constrained MLE.
 */
enum MbStatus mb_bound_mle(double m_lower,
                           double lipschitz,
                           double log_cover,
                           double alpha,
                           uintptr_t n,
                           double *out_rhs);

/**
 * Closed-form mutual information between the fractional posterior draw and
 * the sample, conjugate Gaussian case.
 */
enum MbStatus mb_mutual_information(const struct MbModel *model,
                                    const struct MbPrior *prior,
                                    double alpha,
                                    uintptr_t n,
                                    const double *theta0,
                                    uintptr_t theta0_len,
                                    double *out_mi);

/**
 * Dimension certificate for the Gaussian prior-model pair as a JSON string
 * (assumption = 2 for the KL moment, 3 to include the variance moment).
 */
enum MbStatus mb_certify_gaussian(const struct MbModel *model,
                                  const struct MbPrior *prior,
                                  const double *theta0,
                                  uintptr_t theta0_len,
                                  uint32_t assumption,
                                  char **out_json);

/**
 * Runs the Gaussian contraction experiment and returns the per-n results
 * plus metadata as a JSON string. `bound_id` selects the reference bound:
 * "thm31_opt" (KL loss) or "gaussian_l2" (squared-distance loss).
 */
enum MbStatus mb_run_contraction(const struct MbModel *model,
                                 const struct MbPrior *prior,
                                 const double *theta0,
                                 uintptr_t theta0_len,
                                 double alpha,
                                 const uintptr_t *n_grid,
                                 uintptr_t n_grid_len,
                                 uintptr_t replicates,
                                 uint64_t seed,
                                 const char *bound_id,
                                 char **out_json);

/**
 * Verifies the in-expectation mutual-information bound by Monte Carlo and
 * returns the report as a JSON string.
 */
enum MbStatus mb_verify_mi_bound(const struct MbModel *model,
                                 const struct MbPrior *prior,
                                 double alpha,
                                 uintptr_t n,
                                 const double *theta0,
                                 uintptr_t theta0_len,
                                 uintptr_t replicates,
                                 uint64_t seed,
                                 char **out_json);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MIBOUNDS_H */
