#include "rsgda/rsgda.h"

#include <string>

#include "rsgda/harness.hpp"

using namespace rsgda;

struct rsgda_problem {
  ProblemPtr impl;
};

struct rsgda_rng {
  RngStream impl;
};

struct rsgda_state {
  ProblemPtr problem;
  OptState impl;
};

namespace {

thread_local std::string g_last_error;

rsgda_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return RSGDA_E_DIMENSION;
    case ErrorKind::Parameter: return RSGDA_E_PARAMETER;
    case ErrorKind::Construction: return RSGDA_E_CONSTRUCTION;
    case ErrorKind::OracleViolation: return RSGDA_E_ORACLE;
    case ErrorKind::Capability: return RSGDA_E_CAPABILITY;
    case ErrorKind::Constraint: return RSGDA_E_CONSTRAINT;
    case ErrorKind::Config: return RSGDA_E_CONFIG;
    case ErrorKind::Diagnostic: return RSGDA_E_DIAGNOSTIC;
    case ErrorKind::UndefinedRatio: return RSGDA_E_UNDEFINED_RATIO;
    case ErrorKind::InsufficientData: return RSGDA_E_INSUFFICIENT_DATA;
    case ErrorKind::Io: return RSGDA_E_IO;
  }
  return RSGDA_E_INTERNAL;
}

// Runs body and converts any exception into a status plus message.
template <class Body>
rsgda_status guarded(Body&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const Error& e) {
    g_last_error = std::string(to_string(e.kind())) + ": " + e.what();
    return status_for(e.kind());
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return RSGDA_E_INTERNAL;
  } catch (...) {
    g_last_error = "internal error: unknown exception";
    return RSGDA_E_INTERNAL;
  }
}

rsgda_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return RSGDA_E_NULL_ARGUMENT;
}

#define RSGDA_NONNULL(p) \
  if (!(p)) return null_arg(#p)

JointPoint point_from(const Problem& p, const double* x, const double* y) {
  const Dims d = p.dims();
  return {Eigen::Map<const Vec>(x, d.m), Eigen::Map<const Vec>(y, d.n)};
}

void copy_out(const Vec& v, double* out) { Eigen::Map<Vec>(out, v.size()) = v; }

harness::CliOptions cli_from(const rsgda_cli_options* o) {
  harness::CliOptions cli;
  if (!o) return cli;
  if (o->out_dir) cli.out_dir = std::filesystem::path(o->out_dir);
  if (o->seeds && o->n_seeds > 0) cli.seeds = std::vector<std::uint64_t>(o->seeds, o->seeds + o->n_seeds);
  cli.waive_constraints = o->waive_constraints != 0;
  return cli;
}

rsgda_status wrap_problem(ProblemPtr p, rsgda_problem** out) {
  *out = new rsgda_problem{std::move(p)};
  return RSGDA_OK;
}

}  // namespace

extern "C" {

const char* rsgda_last_error(void) { return g_last_error.c_str(); }

const char* rsgda_status_name(rsgda_status status) {
  switch (status) {
    case RSGDA_OK: return "ok";
    case RSGDA_E_DIMENSION: return "dimension error";
    case RSGDA_E_PARAMETER: return "parameter error";
    case RSGDA_E_CONSTRUCTION: return "construction error";
    case RSGDA_E_ORACLE: return "oracle violation";
    case RSGDA_E_CAPABILITY: return "capability error";
    case RSGDA_E_CONSTRAINT: return "constraint error";
    case RSGDA_E_CONFIG: return "config error";
    case RSGDA_E_DIAGNOSTIC: return "diagnostic error";
    case RSGDA_E_UNDEFINED_RATIO: return "undefined ratio";
    case RSGDA_E_INSUFFICIENT_DATA: return "insufficient data";
    case RSGDA_E_IO: return "io error";
    case RSGDA_E_CHECK_FAILED: return "check failed";
    case RSGDA_E_NULL_ARGUMENT: return "null argument";
    case RSGDA_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* rsgda_version(void) { return harness::version(); }

int rsgda_exit_code(rsgda_status status) {
  switch (status) {
    case RSGDA_OK: return harness::kExitOk;
    case RSGDA_E_CONFIG: return harness::kExitConfig;
    case RSGDA_E_CONSTRAINT: return harness::kExitConstraint;
    case RSGDA_E_CHECK_FAILED:
    case RSGDA_E_ORACLE:
    case RSGDA_E_DIAGNOSTIC:
    case RSGDA_E_INSUFFICIENT_DATA:
    case RSGDA_E_UNDEFINED_RATIO: return harness::kExitCheck;
    default: return harness::kExitGeneric;
  }
}

rsgda_status rsgda_problem_from_json(const char* json_text, const char* base_dir,
                                     rsgda_problem** out) {
  RSGDA_NONNULL(json_text);
  RSGDA_NONNULL(out);
  return guarded([&] {
    nlohmann::json spec;
    try {
      spec = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::Config, std::string("invalid JSON: ") + e.what());
    }
    return wrap_problem(harness::build_problem(spec, base_dir ? base_dir : "."), out);
  });
}

rsgda_status rsgda_problem_scsc(double a, const double* b_row_major, size_t m, size_t n,
                                double sigma, rsgda_problem** out) {
  RSGDA_NONNULL(b_row_major);
  RSGDA_NONNULL(out);
  return guarded([&] {
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Mat b = Eigen::Map<const RowMat>(b_row_major, static_cast<Index>(m), static_cast<Index>(n));
    return wrap_problem(make_scsc_quadratic(a, b, sigma), out);
  });
}

rsgda_status rsgda_problem_bilinear(size_t m, size_t n, double sigma, rsgda_problem** out) {
  RSGDA_NONNULL(out);
  return guarded([&] {
    return wrap_problem(make_bilinear(static_cast<Index>(m), static_cast<Index>(n), sigma), out);
  });
}

void rsgda_problem_free(rsgda_problem* problem) { delete problem; }

rsgda_status rsgda_problem_dims(const rsgda_problem* problem, size_t* m, size_t* n) {
  RSGDA_NONNULL(problem);
  RSGDA_NONNULL(m);
  RSGDA_NONNULL(n);
  const Dims d = problem->impl->dims();
  *m = static_cast<size_t>(d.m);
  *n = static_cast<size_t>(d.n);
  return RSGDA_OK;
}

rsgda_status rsgda_problem_constants(const rsgda_problem* problem, rsgda_constants* out) {
  RSGDA_NONNULL(problem);
  RSGDA_NONNULL(out);
  const auto& c = problem->impl->constants();
  *out = {c.l1(), c.mu(), c.sigma(), c.kappa(), c.l2()};
  return RSGDA_OK;
}

rsgda_status rsgda_problem_value(const rsgda_problem* problem, const double* x, const double* y,
                                 double* out) {
  RSGDA_NONNULL(problem);
  RSGDA_NONNULL(x);
  RSGDA_NONNULL(y);
  RSGDA_NONNULL(out);
  return guarded([&] {
    *out = problem->impl->value(point_from(*problem->impl, x, y));
    return RSGDA_OK;
  });
}

rsgda_status rsgda_problem_exact_grad(const rsgda_problem* problem, const double* x,
                                      const double* y, double* gx, double* gy) {
  RSGDA_NONNULL(problem);
  RSGDA_NONNULL(x);
  RSGDA_NONNULL(y);
  RSGDA_NONNULL(gx);
  RSGDA_NONNULL(gy);
  return guarded([&] {
    const GradSample g = problem->impl->exact_grad(point_from(*problem->impl, x, y));
    copy_out(g.gx, gx);
    copy_out(g.gy, gy);
    return RSGDA_OK;
  });
}

rsgda_status rsgda_rng_new(uint64_t seed, uint64_t stream, rsgda_rng** out) {
  RSGDA_NONNULL(out);
  *out = new rsgda_rng{RngStream(seed, stream)};
  return RSGDA_OK;
}

void rsgda_rng_free(rsgda_rng* rng) { delete rng; }

rsgda_status rsgda_rng_uniform(rsgda_rng* rng, double* out) {
  RSGDA_NONNULL(rng);
  RSGDA_NONNULL(out);
  *out = rng->impl.uniform();
  return RSGDA_OK;
}

rsgda_status rsgda_rng_normal(rsgda_rng* rng, double* out) {
  RSGDA_NONNULL(rng);
  RSGDA_NONNULL(out);
  *out = rng->impl.normal();
  return RSGDA_OK;
}

rsgda_status rsgda_problem_stoch_grad(const rsgda_problem* problem, const double* x,
                                      const double* y, rsgda_rng* rng, double* gx, double* gy) {
  RSGDA_NONNULL(problem);
  RSGDA_NONNULL(x);
  RSGDA_NONNULL(y);
  RSGDA_NONNULL(rng);
  RSGDA_NONNULL(gx);
  RSGDA_NONNULL(gy);
  return guarded([&] {
    const GradSample g = problem->impl->stoch_grad(point_from(*problem->impl, x, y), rng->impl);
    copy_out(g.gx, gx);
    copy_out(g.gy, gy);
    return RSGDA_OK;
  });
}

rsgda_status rsgda_h_metric(const rsgda_problem* problem, const double* x, const double* y,
                            double* out) {
  RSGDA_NONNULL(problem);
  RSGDA_NONNULL(x);
  RSGDA_NONNULL(y);
  RSGDA_NONNULL(out);
  return guarded([&] {
    *out = h_metric(*problem->impl, point_from(*problem->impl, x, y), InnerConfig{}).h;
    return RSGDA_OK;
  });
}

rsgda_status rsgda_lyapunov(const rsgda_problem* problem, const double* x, const double* y,
                            double c, double* out) {
  RSGDA_NONNULL(problem);
  RSGDA_NONNULL(x);
  RSGDA_NONNULL(y);
  RSGDA_NONNULL(out);
  return guarded([&] {
    *out = lyapunov(*problem->impl, point_from(*problem->impl, x, y), c, InnerConfig{});
    return RSGDA_OK;
  });
}

rsgda_status rsgda_contraction_check(const rsgda_problem* problem, const double* x,
                                     const double* y, double alpha, double p,
                                     rsgda_contraction* out) {
  RSGDA_NONNULL(problem);
  RSGDA_NONNULL(x);
  RSGDA_NONNULL(y);
  RSGDA_NONNULL(out);
  return guarded([&] {
    const auto r = contraction_check(*problem->impl, point_from(*problem->impl, x, y), alpha, p);
    *out = {r.measured_ratio, r.rho, r.rho_printed, r.holds ? 1 : 0};
    return RSGDA_OK;
  });
}

rsgda_status rsgda_descent_check(const rsgda_problem* problem, const double* x, const double* y,
                                 double alpha, double eta, double p, double c,
                                 rsgda_descent* out) {
  RSGDA_NONNULL(problem);
  RSGDA_NONNULL(x);
  RSGDA_NONNULL(y);
  RSGDA_NONNULL(out);
  return guarded([&] {
    const auto r =
        descent_check(*problem->impl, point_from(*problem->impl, x, y), alpha, eta, p, c);
    *out = {r.lhs, r.rhs, r.residual};
    return RSGDA_OK;
  });
}

rsgda_status rsgda_step_constraints(double l1, double mu, double p, rsgda_step_bounds* out) {
  RSGDA_NONNULL(out);
  return guarded([&] {
    const StepBounds b = step_constraints(ProblemConstants::make(l1, mu, 0.0), p);
    *out = {b.alpha_max, b.eta_hi, b.eta_lo_slope, b.infeasible ? 1 : 0};
    return RSGDA_OK;
  });
}

rsgda_status rsgda_optimal_p(double l1, double mu, double sigma, double delta, double alpha,
                             double n, double* out) {
  RSGDA_NONNULL(out);
  return guarded([&] {
    *out = optimal_p(ProblemConstants::make(l1, mu, sigma), delta, alpha, n);
    return RSGDA_OK;
  });
}

rsgda_status rsgda_adaptive_p(double p0, int64_t n1, int64_t n2, int clamp_to_p0, int64_t n,
                              double* out) {
  RSGDA_NONNULL(out);
  return guarded([&] {
    *out = adaptive_p(PScheduleAda{p0, n1, n2, clamp_to_p0 != 0}, n);
    return RSGDA_OK;
  });
}

rsgda_status rsgda_state_new(const rsgda_problem* problem, const double* x, const double* y,
                             uint64_t seed, uint64_t stream, rsgda_state** out) {
  RSGDA_NONNULL(problem);
  RSGDA_NONNULL(x);
  RSGDA_NONNULL(y);
  RSGDA_NONNULL(out);
  return guarded([&] {
    OptState s = make_state(*problem->impl, point_from(*problem->impl, x, y),
                            RngStream(seed, stream));
    *out = new rsgda_state{problem->impl, std::move(s)};
    return RSGDA_OK;
  });
}

void rsgda_state_free(rsgda_state* state) { delete state; }

rsgda_status rsgda_state_point(const rsgda_state* state, double* x, double* y) {
  RSGDA_NONNULL(state);
  RSGDA_NONNULL(x);
  RSGDA_NONNULL(y);
  copy_out(state->impl.point.x, x);
  copy_out(state->impl.point.y, y);
  return RSGDA_OK;
}

rsgda_status rsgda_state_counters(const rsgda_state* state, rsgda_counters* out) {
  RSGDA_NONNULL(state);
  RSGDA_NONNULL(out);
  const auto& c = state->impl.counters;
  *out = {state->impl.k, c.x_steps, c.y_steps, c.grad_evals};
  return RSGDA_OK;
}

rsgda_status rsgda_sgda_step(rsgda_state* state, double alpha, double eta, int strict) {
  RSGDA_NONNULL(state);
  return guarded([&] {
    sgda_step(*state->problem, state->impl, alpha, eta, strict != 0);
    return RSGDA_OK;
  });
}

rsgda_status rsgda_esgda_step(rsgda_state* state, double alpha, double eta, int m) {
  RSGDA_NONNULL(state);
  return guarded([&] {
    esgda_step(*state->problem, state->impl, alpha, eta, m);
    return RSGDA_OK;
  });
}

rsgda_status rsgda_rsgda_step(rsgda_state* state, double alpha, double eta, double p,
                              rsgda_branch* branch) {
  RSGDA_NONNULL(state);
  return guarded([&] {
    rsgda_step(*state->problem, state->impl, alpha, eta, p);
    if (branch) *branch = state->impl.last_branch == Branch::X ? RSGDA_BRANCH_X : RSGDA_BRANCH_Y;
    return RSGDA_OK;
  });
}

rsgda_status rsgda_sgdmax_step(rsgda_state* state, double alpha, double delta,
                               int inner_max_iters) {
  RSGDA_NONNULL(state);
  return guarded([&] {
    Sgdmax cfg;
    cfg.delta = delta;
    cfg.inner_max_iters = inner_max_iters;
    sgdmax_step(*state->problem, state->impl, alpha, cfg);
    return RSGDA_OK;
  });
}

rsgda_status rsgda_cmd_run(const char* config_path, const rsgda_cli_options* options) {
  RSGDA_NONNULL(config_path);
  return guarded([&] {
    harness::cmd_run(config_path, cli_from(options));
    return RSGDA_OK;
  });
}

rsgda_status rsgda_cmd_compare(const char* config_path, const rsgda_cli_options* options) {
  RSGDA_NONNULL(config_path);
  return guarded([&] {
    harness::cmd_compare(config_path, cli_from(options));
    return RSGDA_OK;
  });
}

rsgda_status rsgda_cmd_pselect(const char* config_path, const rsgda_cli_options* options) {
  RSGDA_NONNULL(config_path);
  return guarded([&] {
    harness::cmd_pselect(config_path, cli_from(options));
    return RSGDA_OK;
  });
}

rsgda_status rsgda_cmd_check(const char* config_path, const rsgda_cli_options* options) {
  RSGDA_NONNULL(config_path);
  return guarded([&] {
    const auto report = harness::cmd_check(config_path, cli_from(options));
    if (!report.value("passed", false)) {
      g_last_error = "check failed: see check.json in the output directory";
      return RSGDA_E_CHECK_FAILED;
    }
    return RSGDA_OK;
  });
}

}  // extern "C"
