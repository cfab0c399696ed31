/* C interface to the rsgda library: opaque handles plus status codes.
 *
 * Every function returning rsgda_status leaves a thread-local message in
 * rsgda_last_error() when it fails. Vectors are caller-owned arrays whose
 * lengths come from rsgda_problem_dims(). */
#ifndef RSGDA_H
#define RSGDA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RSGDA_API __declspec(dllexport)
#else
#define RSGDA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rsgda_status {
  RSGDA_OK = 0,
  RSGDA_E_DIMENSION = 1,
  RSGDA_E_PARAMETER = 2,
  RSGDA_E_CONSTRUCTION = 3,
  RSGDA_E_ORACLE = 4,
  RSGDA_E_CAPABILITY = 5,
  RSGDA_E_CONSTRAINT = 6,
  RSGDA_E_CONFIG = 7,
  RSGDA_E_DIAGNOSTIC = 8,
  RSGDA_E_UNDEFINED_RATIO = 9,
  RSGDA_E_INSUFFICIENT_DATA = 10,
  RSGDA_E_IO = 11,
  RSGDA_E_CHECK_FAILED = 12, /* a check command ran and found violations */
  RSGDA_E_NULL_ARGUMENT = 13,
  RSGDA_E_INTERNAL = 14
} rsgda_status;

RSGDA_API const char* rsgda_last_error(void);
RSGDA_API const char* rsgda_status_name(rsgda_status status);
RSGDA_API const char* rsgda_version(void);
/* Process exit code for a status: 0 ok, 2 config, 3 constraint, 4 check or
 * diagnostic failure, 1 otherwise. */
RSGDA_API int rsgda_exit_code(rsgda_status status);

/* ---- problems ---------------------------------------------------------- */

typedef struct rsgda_problem rsgda_problem;

typedef struct rsgda_constants {
  double l1;
  double mu;
  double sigma;
  double kappa;
  double l2;
} rsgda_constants;

/* Builds a problem from a {"name": ..., "params": {...}} JSON object. Relative
 * data paths resolve against base_dir (may be NULL for the working dir). */
RSGDA_API rsgda_status rsgda_problem_from_json(const char* json_text, const char* base_dir,
                                               rsgda_problem** out);
/* F = a/2 |x|^2 + x'By - a/2 |y|^2 with B given row-major, m x n. */
RSGDA_API rsgda_status rsgda_problem_scsc(double a, const double* b_row_major, size_t m,
                                          size_t n, double sigma, rsgda_problem** out);
RSGDA_API rsgda_status rsgda_problem_bilinear(size_t m, size_t n, double sigma,
                                              rsgda_problem** out);
RSGDA_API void rsgda_problem_free(rsgda_problem* problem);

RSGDA_API rsgda_status rsgda_problem_dims(const rsgda_problem* problem, size_t* m, size_t* n);
RSGDA_API rsgda_status rsgda_problem_constants(const rsgda_problem* problem,
                                               rsgda_constants* out);
RSGDA_API rsgda_status rsgda_problem_value(const rsgda_problem* problem, const double* x,
                                           const double* y, double* out);
RSGDA_API rsgda_status rsgda_problem_exact_grad(const rsgda_problem* problem, const double* x,
                                                const double* y, double* gx, double* gy);

/* ---- randomness --------------------------------------------------------- */

typedef struct rsgda_rng rsgda_rng;

RSGDA_API rsgda_status rsgda_rng_new(uint64_t seed, uint64_t stream, rsgda_rng** out);
RSGDA_API void rsgda_rng_free(rsgda_rng* rng);
RSGDA_API rsgda_status rsgda_rng_uniform(rsgda_rng* rng, double* out);
RSGDA_API rsgda_status rsgda_rng_normal(rsgda_rng* rng, double* out);

RSGDA_API rsgda_status rsgda_problem_stoch_grad(const rsgda_problem* problem, const double* x,
                                                const double* y, rsgda_rng* rng, double* gx,
                                                double* gy);

/* ---- diagnostics -------------------------------------------------------- */

RSGDA_API rsgda_status rsgda_h_metric(const rsgda_problem* problem, const double* x,
                                      const double* y, double* out);
RSGDA_API rsgda_status rsgda_lyapunov(const rsgda_problem* problem, const double* x,
                                      const double* y, double c, double* out);

typedef struct rsgda_contraction {
  double measured_ratio;
  double rho;
  double rho_printed;
  int holds;
} rsgda_contraction;

RSGDA_API rsgda_status rsgda_contraction_check(const rsgda_problem* problem, const double* x,
                                               const double* y, double alpha, double p,
                                               rsgda_contraction* out);

typedef struct rsgda_descent {
  double lhs;
  double rhs;
  double residual;
} rsgda_descent;

RSGDA_API rsgda_status rsgda_descent_check(const rsgda_problem* problem, const double* x,
                                           const double* y, double alpha, double eta, double p,
                                           double c, rsgda_descent* out);

/* ---- schedules ---------------------------------------------------------- */

typedef struct rsgda_step_bounds {
  double alpha_max;
  double eta_hi;
  double eta_lo_slope; /* eta_lo(alpha) = eta_lo_slope * alpha */
  int infeasible;
} rsgda_step_bounds;

RSGDA_API rsgda_status rsgda_step_constraints(double l1, double mu, double p,
                                              rsgda_step_bounds* out);
RSGDA_API rsgda_status rsgda_optimal_p(double l1, double mu, double sigma, double delta,
                                       double alpha, double n, double* out);
RSGDA_API rsgda_status rsgda_adaptive_p(double p0, int64_t n1, int64_t n2, int clamp_to_p0,
                                        int64_t n, double* out);

/* ---- stepping ----------------------------------------------------------- */

typedef struct rsgda_state rsgda_state;

typedef enum rsgda_branch { RSGDA_BRANCH_X = 0, RSGDA_BRANCH_Y = 1, RSGDA_BRANCH_BOTH = 2 } rsgda_branch;

typedef struct rsgda_counters {
  int64_t k;
  int64_t x_steps;
  int64_t y_steps;
  int64_t grad_evals;
} rsgda_counters;

/* The state keeps its own reference to the problem. */
RSGDA_API rsgda_status rsgda_state_new(const rsgda_problem* problem, const double* x,
                                       const double* y, uint64_t seed, uint64_t stream,
                                       rsgda_state** out);
RSGDA_API void rsgda_state_free(rsgda_state* state);
RSGDA_API rsgda_status rsgda_state_point(const rsgda_state* state, double* x, double* y);
RSGDA_API rsgda_status rsgda_state_counters(const rsgda_state* state, rsgda_counters* out);

RSGDA_API rsgda_status rsgda_sgda_step(rsgda_state* state, double alpha, double eta, int strict);
RSGDA_API rsgda_status rsgda_esgda_step(rsgda_state* state, double alpha, double eta, int m);
RSGDA_API rsgda_status rsgda_rsgda_step(rsgda_state* state, double alpha, double eta, double p,
                                        rsgda_branch* branch);
RSGDA_API rsgda_status rsgda_sgdmax_step(rsgda_state* state, double alpha, double delta,
                                         int inner_max_iters);

/* ---- commands ----------------------------------------------------------- */

typedef struct rsgda_cli_options {
  const char* out_dir;    /* NULL: config, then RSGDA_OUT_DIR, then ./rsgda_out */
  const uint64_t* seeds;  /* NULL: seeds from the config */
  size_t n_seeds;
  int waive_constraints;
} rsgda_cli_options;

RSGDA_API rsgda_status rsgda_cmd_run(const char* config_path, const rsgda_cli_options* options);
RSGDA_API rsgda_status rsgda_cmd_compare(const char* config_path,
                                         const rsgda_cli_options* options);
RSGDA_API rsgda_status rsgda_cmd_pselect(const char* config_path,
                                         const rsgda_cli_options* options);
RSGDA_API rsgda_status rsgda_cmd_check(const char* config_path, const rsgda_cli_options* options);

#ifdef __cplusplus
}
#endif

#endif /* RSGDA_H */
