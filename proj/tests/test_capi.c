/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "rsgda/rsgda.h"

static int failures = 0;

#define EXPECT(cond)                                               \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                  \
    }                                                              \
  } while (0)

#define NEAR(a, b, tol) EXPECT(fabs((a) - (b)) <= (tol))

static void test_problems(void) {
  const double b = 0.0;
  rsgda_problem* p = NULL;
  EXPECT(rsgda_problem_scsc(1.0, &b, 1, 1, 0.0, &p) == RSGDA_OK);
  size_t m = 0, n = 0;
  EXPECT(rsgda_problem_dims(p, &m, &n) == RSGDA_OK && m == 1 && n == 1);

  double x = 2.0, y = 1.0, gx = 0, gy = 0, v = 0;
  EXPECT(rsgda_problem_exact_grad(p, &x, &y, &gx, &gy) == RSGDA_OK);
  NEAR(gx, 2.0, 0.0);
  NEAR(gy, -1.0, 0.0);
  EXPECT(rsgda_problem_value(p, &x, &y, &v) == RSGDA_OK);
  NEAR(v, 1.5, 1e-15);

  double h = 0, V = 0;
  EXPECT(rsgda_h_metric(p, &x, &y, &h) == RSGDA_OK);
  NEAR(h, 2.15, 1e-12);
  EXPECT(rsgda_lyapunov(p, &x, &y, 0.1, &V) == RSGDA_OK);
  NEAR(V, 2.05, 1e-12);

  rsgda_contraction c;
  double one = 1.0;
  EXPECT(rsgda_contraction_check(p, &one, &one, 0.1, 0.5, &c) == RSGDA_OK);
  NEAR(c.measured_ratio, 0.905, 1e-14);
  EXPECT(c.holds == 1);
  double zero = 0.0;
  EXPECT(rsgda_contraction_check(p, &zero, &zero, 0.1, 0.5, &c) == RSGDA_E_UNDEFINED_RATIO);
  EXPECT(strlen(rsgda_last_error()) > 0);

  rsgda_constants k;
  EXPECT(rsgda_problem_constants(p, &k) == RSGDA_OK);
  NEAR(k.l1, 1.0, 0.0);
  NEAR(k.mu, 1.0, 0.0);

  rsgda_rng* r1 = NULL;
  rsgda_rng* r2 = NULL;
  rsgda_problem* noisy = NULL;
  EXPECT(rsgda_problem_scsc(1.0, &b, 1, 1, 1.0, &noisy) == RSGDA_OK);
  EXPECT(rsgda_rng_new(5, 1, &r1) == RSGDA_OK);
  EXPECT(rsgda_rng_new(5, 1, &r2) == RSGDA_OK);
  double a1, a2, b1, b2;
  EXPECT(rsgda_problem_stoch_grad(noisy, &x, &y, r1, &a1, &b1) == RSGDA_OK);
  EXPECT(rsgda_problem_stoch_grad(noisy, &x, &y, r2, &a2, &b2) == RSGDA_OK);
  EXPECT(a1 == a2 && b1 == b2);
  EXPECT(a1 != 2.0);
  rsgda_rng_free(r1);
  rsgda_rng_free(r2);
  rsgda_problem_free(noisy);
  rsgda_problem_free(p);

  EXPECT(rsgda_problem_scsc(-1.0, &b, 1, 1, 0.0, &p) == RSGDA_E_PARAMETER);
  EXPECT(rsgda_problem_bilinear(2, 3, 0.0, &p) == RSGDA_E_DIMENSION);
  EXPECT(rsgda_problem_from_json("{\"name\": \"nope\"}", NULL, &p) == RSGDA_E_CONFIG);
  EXPECT(rsgda_problem_from_json("not json", NULL, &p) == RSGDA_E_CONFIG);
  EXPECT(rsgda_problem_dims(NULL, &m, &n) == RSGDA_E_NULL_ARGUMENT);
}

static void test_schedules(void) {
  rsgda_step_bounds sb;
  EXPECT(rsgda_step_constraints(2.0, 1.0, 1.0 / 19.0, &sb) == RSGDA_OK);
  NEAR(sb.alpha_max, 0.125, 1e-15);
  NEAR(sb.eta_hi, 0.5, 1e-15);
  NEAR(sb.eta_lo_slope * 0.125, 0.5, 1e-12);
  EXPECT(rsgda_step_constraints(2.0, 1.0, 1.0, &sb) == RSGDA_E_PARAMETER);

  double p = 0;
  EXPECT(rsgda_optimal_p(2.0, 1.0, 1.0, 1.0, 0.125, 1e4, &p) == RSGDA_OK);
  NEAR(p, (sqrt(3240001.0) - 1.0) / 1620000.0, 1e-15);
  EXPECT(rsgda_adaptive_p(0.5, 300, 300, 1, 900, &p) == RSGDA_OK);
  NEAR(p, 1.0 / 3.0, 1e-15);
}

static void test_stepping(void) {
  rsgda_problem* bil = NULL;
  EXPECT(rsgda_problem_bilinear(1, 1, 0.0, &bil) == RSGDA_OK);
  double one = 1.0, x = 0, y = 0;
  rsgda_state* s = NULL;
  EXPECT(rsgda_state_new(bil, &one, &one, 0, 1, &s) == RSGDA_OK);
  /* The state keeps the problem alive. */
  rsgda_problem_free(bil);
  EXPECT(rsgda_sgda_step(s, 0.1, 0.1, 0) == RSGDA_OK);
  EXPECT(rsgda_state_point(s, &x, &y) == RSGDA_OK);
  NEAR(x, 0.89, 1e-15);
  NEAR(y, 1.1, 1e-15);
  EXPECT(rsgda_esgda_step(s, 0.1, 0.1, 0) == RSGDA_E_PARAMETER);
  rsgda_branch br;
  EXPECT(rsgda_rsgda_step(s, 0.1, 0.1, 1.0, &br) == RSGDA_OK);
  EXPECT(br == RSGDA_BRANCH_X);
  rsgda_counters c;
  EXPECT(rsgda_state_counters(s, &c) == RSGDA_OK);
  EXPECT(c.k == 2 && c.x_steps == 2 && c.y_steps == 1 && c.grad_evals == 3);
  rsgda_state_free(s);
}

static void test_misc(void) {
  EXPECT(strlen(rsgda_version()) > 0);
  EXPECT(rsgda_exit_code(RSGDA_OK) == 0);
  EXPECT(rsgda_exit_code(RSGDA_E_CONFIG) == 2);
  EXPECT(rsgda_exit_code(RSGDA_E_CONSTRAINT) == 3);
  EXPECT(rsgda_exit_code(RSGDA_E_CHECK_FAILED) == 4);
  EXPECT(rsgda_exit_code(RSGDA_E_IO) == 1);
  EXPECT(strcmp(rsgda_status_name(RSGDA_E_CONFIG), "config error") == 0);
  EXPECT(rsgda_cmd_run("/nonexistent/config.json", NULL) == RSGDA_E_IO);
}

int main(void) {
  test_problems();
  test_schedules();
  test_stepping();
  test_misc();
  if (failures) {
    fprintf(stderr, "%d C API expectation(s) failed\n", failures);
    return 1;
  }
  printf("C API tests passed\n");
  return 0;
}
