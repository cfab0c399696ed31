#include "rsgda/optimizers.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "rsgda/errors.hpp"

namespace rsgda {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_steps(double alpha, double eta, const char* who) {
  if (!(std::isfinite(alpha) && alpha > 0.0)) {
    fail(ErrorKind::Parameter, std::string(who) + ": alpha must be > 0, got " + std::to_string(alpha));
  }
  if (!(std::isfinite(eta) && eta >= 0.0)) {
    fail(ErrorKind::Parameter, std::string(who) + ": eta must be >= 0, got " + std::to_string(eta));
  }
}

void require_finite(const OptState& s, const char* who) {
  if (!s.point.x.allFinite() || !s.point.y.allFinite()) {
    fail(ErrorKind::Diagnostic,
         std::string(who) + ": iterate became non-finite at step " + std::to_string(s.k));
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

OptState make_state(const Problem& problem, JointPoint init, RngStream rng) {
  problem.check_point(init);
  OptState s;
  s.point = std::move(init);
  s.rng = rng;
  return s;
}

std::string kind_name(const OptKind& kind) {
  return std::visit(Overloaded{[](const Sgda&) { return std::string("sgda"); },
                               [](const Sgdmax&) { return std::string("sgdmax"); },
                               [](const Esgda&) { return std::string("esgda"); },
                               [](const Rsgda&) { return std::string("rsgda"); }},
                    kind);
}

nlohmann::json describe(const OptKind& kind) {
  return std::visit(
      Overloaded{[](const Sgda& k) { return nlohmann::json{{"kind", "sgda"}, {"strict", k.strict}}; },
                 [](const Sgdmax& k) {
                   nlohmann::json j{{"kind", "sgdmax"},
                                    {"delta", k.delta},
                                    {"inner_max_iters", k.inner_max_iters},
                                    {"stochastic_inner", k.stochastic_inner}};
                   if (k.inner_step) j["inner_step"] = *k.inner_step;
                   return j;
                 },
                 [](const Esgda& k) { return nlohmann::json{{"kind", "esgda"}, {"m", k.m}}; },
                 [](const Rsgda&) { return nlohmann::json{{"kind", "rsgda"}}; }},
      kind);
}

int grad_evals_per_step(const OptKind& kind) {
  return std::visit(Overloaded{[](const Sgda&) { return 2; }, [](const Sgdmax&) { return 0; },
                               [](const Esgda& k) { return k.m + 1; },
                               [](const Rsgda&) { return 1; }},
                    kind);
}

OptState& sgda_step(const Problem& problem, OptState& s, double alpha, double eta, bool strict) {
  require_steps(alpha, eta, "sgda_step");
  // A copy taken before the first draw replays z_k for the strict variant.
  RngStream replay = s.rng;
  const Vec gy = problem.stoch_grad(s.point, s.rng).gy;
  s.point.y += eta * gy;
  RngStream& second = strict ? replay : s.rng;
  const Vec gx = problem.stoch_grad(s.point, second).gx;
  s.point.x -= alpha * gx;
  s.counters.grad_evals += 2;
  ++s.counters.x_steps;
  ++s.counters.y_steps;
  s.last_branch = Branch::Both;
  ++s.k;
  require_finite(s, "sgda_step");
  return s;
}

OptState& sgdmax_step(const Problem& problem, OptState& s, double alpha, const Sgdmax& cfg) {
  require_steps(alpha, 0.0, "sgdmax_step");
  require(cfg.delta > 0.0, ErrorKind::Parameter, "sgdmax_step: delta must be > 0");
  require(cfg.inner_max_iters >= 0, ErrorKind::Parameter,
          "sgdmax_step: inner_max_iters must be >= 0");
  const auto& c = problem.constants();
  const double inner_step = cfg.inner_step.value_or(1.0 / c.l1());
  require(inner_step > 0.0, ErrorKind::Parameter, "sgdmax_step: inner step must be > 0");

  const std::optional<PhiValue> phi =
      problem.has_closed_phi() ? problem.closed_phi(s.point.x) : std::nullopt;
  // Certified F(x_k, y) >= phi(x_k) - delta: directly when phi is explicit,
  // else through the PL bound on the gap.
  auto certified = [&]() {
    if (phi) return phi->phi - problem.value(s.point) <= cfg.delta;
    return problem.exact_grad(s.point).gy.squaredNorm() / (2.0 * c.mu()) <= cfg.delta;
  };
  int inner = 0;
  bool ok = certified();
  while (!ok && inner < cfg.inner_max_iters) {
    const Vec gy = cfg.stochastic_inner ? problem.stoch_grad(s.point, s.rng).gy
                                        : problem.exact_grad(s.point).gy;
    s.point.y += inner_step * gy;
    ++inner;
    ok = certified();
  }
  if (!ok) ++s.inner_warnings;

  const Vec gx = problem.stoch_grad(s.point, s.rng).gx;
  s.point.x -= alpha * gx;
  s.counters.grad_evals += inner + 1;
  ++s.counters.x_steps;
  s.counters.y_steps += inner;
  s.last_inner_steps = inner;
  s.last_branch = Branch::Both;
  ++s.k;
  require_finite(s, "sgdmax_step");
  return s;
}

OptState& esgda_step(const Problem& problem, OptState& s, double alpha, double eta, int m) {
  require_steps(alpha, eta, "esgda_step");
  require(m >= 1, ErrorKind::Parameter, "esgda_step: m must be >= 1");
  for (int t = 0; t < m; ++t) {
    s.point.y += eta * problem.stoch_grad(s.point, s.rng).gy;
  }
  s.point.x -= alpha * problem.stoch_grad(s.point, s.rng).gx;
  s.counters.grad_evals += m + 1;
  ++s.counters.x_steps;
  s.counters.y_steps += m;
  s.last_branch = Branch::Both;
  ++s.k;
  require_finite(s, "esgda_step");
  return s;
}

OptState& rsgda_step(const Problem& problem, OptState& s, double alpha, double eta, double p) {
  require_steps(alpha, eta, "rsgda_step");
  if (!(p > 0.0 && p <= 1.0)) {
    fail(ErrorKind::Parameter, "rsgda_step: p must lie in (0, 1], got " + std::to_string(p));
  }
  const bool descend = s.rng.bernoulli(p);
  const GradSample g = problem.stoch_grad(s.point, s.rng);
  if (descend) {
    s.point.x -= alpha * g.gx;
    ++s.counters.x_steps;
    s.last_branch = Branch::X;
  } else {
    s.point.y += eta * g.gy;
    ++s.counters.y_steps;
    s.last_branch = Branch::Y;
  }
  ++s.counters.grad_evals;
  ++s.k;
  require_finite(s, "rsgda_step");
  return s;
}

OptState& step(const Problem& problem, OptState& s, const OptKind& kind, const StepPlan& plan) {
  const std::int64_t k = s.k;
  return std::visit(
      Overloaded{
          [&](const Sgda& o) -> OptState& {
            return sgda_step(problem, s, plan.alpha(k), plan.eta(k), o.strict);
          },
          [&](const Sgdmax& o) -> OptState& { return sgdmax_step(problem, s, plan.alpha(k), o); },
          [&](const Esgda& o) -> OptState& {
            return esgda_step(problem, s, plan.alpha(k), plan.eta(k), o.m);
          },
          [&](const Rsgda&) -> OptState& {
            return rsgda_step(problem, s, plan.alpha(k), plan.eta(k), plan.p(k));
          }},
      kind);
}

void check_plan(const Problem& problem, const OptKind& kind, const StepPlan& plan,
                std::int64_t iters) {
  const auto& c = problem.constants();
  const double alpha_max = 1.0 / (2.0 * c.l2());
  const double eta_hi = 1.0 / c.l1();
  const double rel = 1e-12;
  const bool rsgda = std::holds_alternative<Rsgda>(kind);
  const bool has_eta = !std::holds_alternative<Sgdmax>(kind);
  double prev_alpha = 0.0;

  for (std::int64_t k = 0; k < iters; ++k) {
    const double a = plan.alpha(k);
    const std::string at = " at k = " + std::to_string(k);
    if (a > alpha_max * (1.0 + rel)) {
      fail(ErrorKind::Constraint, "alpha_k = " + fmt(a) + " exceeds 1/(2 L2) = " + fmt(alpha_max) + at);
    }
    if (!has_eta) continue;
    const double e = plan.eta(k);
    if (e > eta_hi * (1.0 + rel)) {
      fail(ErrorKind::Constraint, "eta_k = " + fmt(e) + " exceeds 1/L1 = " + fmt(eta_hi) + at);
    }
    if (!rsgda) continue;
    const double p = plan.p(k);
    if (p >= 1.0) {
      fail(ErrorKind::Constraint, "p_k = 1 admits no eta with 18 kappa^2 p/(1-p) alpha <= eta" + at);
    }
    const double lo = step_constraints(c, p).eta_lo(a);
    if (e < lo * (1.0 - rel)) {
      fail(ErrorKind::Constraint,
           "eta_k = " + fmt(e) + " is below 18 kappa^2 p/(1-p) alpha_k = " + fmt(lo) + at);
    }
    if (k > 0 && a > prev_alpha * (1.0 + rel)) {
      fail(ErrorKind::Constraint, "alpha_k must be non-increasing, rises to " + fmt(a) + at);
    }
    prev_alpha = a;
  }
}

TraceRecord measure(const Problem& problem, const JointPoint& u, const DiagConfig& diag) {
  TraceRecord r;
  const GradSample g = problem.exact_grad(u);
  r.grad_x_norm = g.gx.norm();
  r.grad_y_norm = g.gy.norm();
  const bool phi_route = problem.pl_in_y() && (problem.has_closed_phi() || diag.inner);
  if (phi_route && (diag.h || diag.lyapunov)) {
    const PhiEstimate phi = resolve_phi(problem, u, diag.inner);
    r.phi_uncertain = phi.uncertain;
    if (diag.h) {
      const Vec grad_phi = problem.exact_grad({u.x, phi.y_star}).gx;
      const double kappa = problem.constants().kappa();
      r.h = 0.25 * grad_phi.squaredNorm() + kappa * kappa / 20.0 * g.gy.squaredNorm() +
            11.0 / 40.0 * g.gx.squaredNorm();
    }
    if (diag.lyapunov) r.V = phi.phi + kLyapunovC * (phi.phi - problem.value(u));
  }
  r.dist = problem.distance_to_opt(u);
  r.loss = problem.loss(u);
  return r;
}

RunResult run(const Problem& problem, const OptKind& kind, const StepPlan& plan,
              const JointPoint& init, std::int64_t iters, const DiagConfig& diag, RngStream rng,
              bool waive_constraints) {
  require(iters >= 0, ErrorKind::Parameter, "run: iters must be >= 0");
  require(diag.interval >= 1, ErrorKind::Parameter, "run: diagnostics interval must be >= 1");
  if (const auto* e = std::get_if<Esgda>(&kind)) {
    require(e->m >= 1, ErrorKind::Parameter, "run: esgda m must be >= 1");
  }
  if (!waive_constraints) check_plan(problem, kind, plan, iters);

  OptState s = make_state(problem, init, rng);
  RunResult out;
  out.iters = iters;
  out.trace.reserve(static_cast<std::size_t>(iters / diag.interval + 1));
  for (std::int64_t k = 0; k < iters; ++k) {
    const bool logged = k % diag.interval == 0;
    TraceRecord r;
    if (logged) {
      r = measure(problem, s.point, diag);
      r.k = k;
      r.alpha = plan.alpha(k);
      r.eta = plan.eta(k);
      r.p = std::holds_alternative<Rsgda>(kind) ? plan.p(k) : 1.0;
      r.grad_evals = s.counters.grad_evals;
    }
    step(problem, s, kind, plan);
    if (logged) {
      r.branch = s.last_branch;
      out.trace.push_back(std::move(r));
    }
  }
  out.final_metrics = measure(problem, s.point, diag);
  out.final_metrics.k = iters;
  out.final_metrics.grad_evals = s.counters.grad_evals;
  out.final_point = std::move(s.point);
  out.counters = s.counters;
  out.inner_warnings = s.inner_warnings;
  return out;
}

}  // namespace rsgda
