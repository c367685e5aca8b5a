#ifndef PDMPLAB_H
#define PDMPLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PdmplabStatus {
  PDMPLAB_STATUS_OK = 0,
  PDMPLAB_STATUS_NULL_POINTER = 1,
  PDMPLAB_STATUS_INVALID_ARGUMENT = 2,
  PDMPLAB_STATUS_CONFIG = 3,
  PDMPLAB_STATUS_NUMERICAL = 4,
  PDMPLAB_STATUS_PRECONDITION = 5,
  PDMPLAB_STATUS_MODEL_VIOLATION = 6,
  PDMPLAB_STATUS_OVERFLOW = 7,
  PDMPLAB_STATUS_IO = 8,
  PDMPLAB_STATUS_PANIC = 9,
} PdmplabStatus;

// Opaque gene expression parameter set.
typedef struct PdmplabGene PdmplabGene;

// Opaque generator of a continuous-time Markov chain.
typedef struct PdmplabRateMatrix PdmplabRateMatrix;

// Opaque recorded trajectory.
typedef struct PdmplabTrajectory PdmplabTrajectory;

// Lyapunov exponent estimate.
typedef struct PdmplabLyapunov {
  double chi;
  double ci_lo;
  double ci_hi;
  double se;
} PdmplabLyapunov;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL after a
// successful call. Valid until the next call into the library.
const char *pdmplab_last_error(void);

// Library version as a static NUL-terminated string.
const char *pdmplab_version(void);

// Build a generator from `n * n` row-major entries.
//
// # Safety
// `rows` must point to `n * n` doubles and `out` to writable storage.
enum PdmplabStatus pdmplab_rate_matrix_new(const double *rows,
                                           size_t n,
                                           struct PdmplabRateMatrix **out);

// # Safety
// `q` must be NULL or a handle from [`pdmplab_rate_matrix_new`] not yet freed.
void pdmplab_rate_matrix_free(struct PdmplabRateMatrix *q);

// # Safety
// `q` must be a live handle; `out` must hold `n` doubles.
enum PdmplabStatus pdmplab_rate_matrix_n_states(const struct PdmplabRateMatrix *q, size_t *out);

// Stationary distribution into `out[0..n]`; `n` must equal the number of states.
//
// # Safety
// `q` must be a live handle; `out` must hold `n` doubles.
enum PdmplabStatus pdmplab_stationary_distribution(const struct PdmplabRateMatrix *q,
                                                   double *out,
                                                   size_t n);

// Perron eigenvalue λ_p of `Q + p diag(a)`.
//
// # Safety
// `q` must be a live handle, `a` must hold `n` doubles, `out` must be writable.
enum PdmplabStatus pdmplab_moment_growth_rate(const struct PdmplabRateMatrix *q,
                                              const double *a,
                                              size_t n,
                                              double p,
                                              double *out);

// E[X_t^p] / E[X_0^p] with the environment started from `mu0`.
//
// # Safety
// `q` must be a live handle, `a` and `mu0` must hold `n` doubles, `out` must be writable.
enum PdmplabStatus pdmplab_moment_feynman_kac(const struct PdmplabRateMatrix *q,
                                              const double *a,
                                              const double *mu0,
                                              size_t n,
                                              double p,
                                              double t,
                                              double *out);

// π*(y) = π(y)α(y) / Σ π α into `out[0..n]`.
//
// # Safety
// `pi`, `alpha` and `out` must each hold `n` doubles.
enum PdmplabStatus pdmplab_pi_star(const double *pi, const double *alpha, size_t n, double *out);

// χ of the canonical planar pair switching at rate `lambda_switch`.
//
// # Safety
// `out` must be writable.
enum PdmplabStatus pdmplab_planar_lyapunov(double lambda_switch,
                                           double horizon,
                                           uint64_t n_rep,
                                           uint64_t seed,
                                           struct PdmplabLyapunov *out);

// Simulate the canonical planar pair from `(x0[0], x0[1])` in environment
// `y0`, recording every `grid` time units and at every switch.
//
// # Safety
// `x0` must hold 2 doubles and `out` must be writable.
enum PdmplabStatus pdmplab_planar_trajectory(double lambda_switch,
                                             const double *x0,
                                             size_t y0,
                                             double horizon,
                                             double grid,
                                             uint64_t seed,
                                             struct PdmplabTrajectory **out);

// # Safety
// `tr` must be NULL or a live trajectory handle.
void pdmplab_trajectory_free(struct PdmplabTrajectory *tr);

// Number of rows and state dimension.
//
// # Safety
// `tr` must be a live handle; `len` and `dim` must be writable.
enum PdmplabStatus pdmplab_trajectory_shape(const struct PdmplabTrajectory *tr,
                                            size_t *len,
                                            size_t *dim);

// Copy times (`len` doubles), row-major states (`len * dim` doubles) and
// environment labels (`len` entries). Any output pointer may be NULL to skip it.
//
// # Safety
// `tr` must be a live handle; non-NULL buffers must have the sizes above.
enum PdmplabStatus pdmplab_trajectory_copy(const struct PdmplabTrajectory *tr,
                                           double *times,
                                           double *states,
                                           size_t *env,
                                           size_t len);

// # Safety
// `out` must be writable.
enum PdmplabStatus pdmplab_gene_new(double lambda1,
                                    double sigma1,
                                    double lambda2,
                                    double tau_r,
                                    double tau_d,
                                    double v0,
                                    struct PdmplabGene **out);

// # Safety
// `g` must be NULL or a live gene handle.
void pdmplab_gene_free(struct PdmplabGene *g);

// Poisson parameter of the mRNA count at cycle phase `s`.
//
// # Safety
// `g` must be a live handle and `out` writable.
enum PdmplabStatus pdmplab_gene_mrna_mean(const struct PdmplabGene *g, double s, double *out);

// Equilibrium moments at phase `s` in the order
// (E M, E P, Var M, Var P, Cov(M, P)).
//
// # Safety
// `g` must be a live handle and `out` must hold 5 doubles.
enum PdmplabStatus pdmplab_gene_moments(const struct PdmplabGene *g, double s, double *out);

// Mean protein concentration and its squared coefficient of variation
// over the cycle, on `n_phases` phase points.
//
// # Safety
// `g` must be a live handle; `mean` and `cv2` must be writable.
enum PdmplabStatus pdmplab_gene_global_noise(const struct PdmplabGene *g,
                                             size_t n_phases,
                                             double *mean,
                                             double *cv2);

// Run a scenario from a configuration file into `out_dir`, as the CLI does.
//
// # Safety
// All strings must be NUL-terminated.
enum PdmplabStatus pdmplab_run_scenario(const char *scenario,
                                        const char *config_path,
                                        uint64_t seed,
                                        const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDMPLAB_H */
