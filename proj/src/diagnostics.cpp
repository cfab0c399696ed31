#include "rsgda/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rsgda/errors.hpp"
#include "rsgda/schedules.hpp"

namespace rsgda {

const char* to_string(Branch b) noexcept {
  switch (b) {
    case Branch::X: return "x";
    case Branch::Y: return "y";
    case Branch::Both: return "both";
  }
  return "both";
}

PhiEstimate phi_inner(const Problem& problem, const Vec& x, const Vec& y0, double tol,
                      int max_iters) {
  require(tol > 0.0, ErrorKind::Parameter, "phi_inner: tol must be > 0");
  require(max_iters >= 0, ErrorKind::Parameter, "phi_inner: max_iters must be >= 0");
  const auto& c = problem.constants();
  const double step = 1.0 / c.l1();
  JointPoint u{x, y0};
  PhiEstimate est;
  for (;;) {
    const Vec gy = problem.exact_grad(u).gy;
    if (gy.squaredNorm() / (2.0 * c.mu()) <= tol) break;
    if (est.iters >= max_iters) {
      est.uncertain = true;
      break;
    }
    u.y += step * gy;
    ++est.iters;
  }
  est.phi = problem.value(u);
  est.y_star = std::move(u.y);
  return est;
}

PhiEstimate resolve_phi(const Problem& problem, const JointPoint& u,
                        const std::optional<InnerConfig>& inner) {
  if (!problem.pl_in_y()) {
    fail(ErrorKind::Capability,
         problem.name() + ": not PL in y, so phi-based diagnostics are undefined");
  }
  if (problem.has_closed_phi()) {
    auto closed = problem.closed_phi(u.x);
    return {closed->phi, std::move(closed->y_star), 0, false};
  }
  if (!inner) {
    fail(ErrorKind::Capability,
         problem.name() + ": no closed-form phi and no inner-maximization budget supplied");
  }
  double tol = inner->tol;
  if (inner->relative_tol) tol *= std::max(1.0, std::abs(problem.value(u)));
  return phi_inner(problem, u.x, u.y, tol, inner->max_iters);
}

HValue h_metric(const Problem& problem, const JointPoint& u,
                const std::optional<InnerConfig>& inner) {
  problem.check_point(u);
  const PhiEstimate phi = resolve_phi(problem, u, inner);
  const GradSample g = problem.exact_grad(u);
  const Vec grad_phi = problem.exact_grad({u.x, phi.y_star}).gx;
  const double kappa = problem.constants().kappa();
  const double h = 0.25 * grad_phi.squaredNorm() + kappa * kappa / 20.0 * g.gy.squaredNorm() +
                   11.0 / 40.0 * g.gx.squaredNorm();
  return {h, phi.uncertain};
}

double lyapunov(const Problem& problem, const JointPoint& u, double c,
                const std::optional<InnerConfig>& inner) {
  problem.check_point(u);
  const double phi = resolve_phi(problem, u, inner).phi;
  return phi + c * (phi - problem.value(u));
}

ContractionReport contraction_check(const Problem& problem, const JointPoint& u, double alpha,
                                    double p, double tol) {
  problem.check_point(u);
  require(p > 0.0 && p <= 1.0, ErrorKind::Parameter, "contraction_check: p must lie in (0, 1]");
  require(alpha > 0.0, ErrorKind::Parameter, "contraction_check: alpha must be > 0");
  const auto nash = problem.nash_point();
  if (!nash) {
    fail(ErrorKind::Capability, problem.name() + ": contraction check needs a known Nash point");
  }
  const auto& c = problem.constants();
  const double l1 = c.l1();
  const double mu = c.mu();
  if (p < 1.0 && !(alpha < 2.0 * p * mu / ((1.0 - p) * l1 * l1))) {
    fail(ErrorKind::Constraint, "contraction_check: alpha = " + std::to_string(alpha) +
                                    " violates alpha < 2 p mu / ((1 - p) l1^2) = " +
                                    std::to_string(2.0 * p * mu / ((1.0 - p) * l1 * l1)));
  }
  const Vec dx = u.x - nash->x;
  const Vec dy = u.y - nash->y;
  const double d0 = dx.squaredNorm() + dy.squaredNorm();
  if (d0 == 0.0) fail(ErrorKind::UndefinedRatio, "contraction_check: point equals the Nash point");

  const GradSample g = problem.exact_grad(u);
  const double x_branch = (dx - alpha * g.gx).squaredNorm() + dy.squaredNorm();
  const double y_branch = dx.squaredNorm() + (dy + alpha * g.gy).squaredNorm();

  ContractionReport r;
  r.measured_ratio = (p * x_branch + (1.0 - p) * y_branch) / d0;
  r.rho = 1.0 - 2.0 * p * mu * alpha + alpha * alpha * (1.0 - p) * l1 * l1;
  r.rho_printed = 1.0 - 2.0 * alpha * mu + alpha * alpha * (1.0 - p) * l1 * l1;
  r.holds = r.measured_ratio <= r.rho + tol;
  return r;
}

nlohmann::json DescentReport::to_json() const {
  return {{"lhs", lhs}, {"rhs", rhs}, {"residual", residual}};
}

DescentReport descent_check(const Problem& problem, const JointPoint& u, double alpha, double eta,
                            double p, double c, bool enforce_constraints) {
  problem.check_point(u);
  const auto& k = problem.constants();
  if (k.sigma() != 0.0) {
    fail(ErrorKind::Capability, "descent_check: needs exact gradients (sigma = 0), got sigma = " +
                                    std::to_string(k.sigma()));
  }
  if (!problem.has_closed_phi()) {
    fail(ErrorKind::Capability, problem.name() + ": descent_check needs a closed-form phi");
  }
  require(alpha > 0.0 && eta >= 0.0, ErrorKind::Parameter,
          "descent_check: steps must be positive");
  if (enforce_constraints) {
    const StepBounds b = step_constraints(k, p);
    const double rel = 1e-12;
    std::string violated;
    if (alpha > b.alpha_max * (1.0 + rel)) {
      violated = "alpha = " + std::to_string(alpha) + " > 1/(2 l2) = " + std::to_string(b.alpha_max);
    } else if (eta > b.eta_hi * (1.0 + rel)) {
      violated = "eta = " + std::to_string(eta) + " > 1/l1 = " + std::to_string(b.eta_hi);
    } else if (eta < b.eta_lo(alpha) * (1.0 - rel)) {
      violated = "eta = " + std::to_string(eta) + " < 18 kappa^2 p/(1-p) alpha = " +
                 std::to_string(b.eta_lo(alpha));
    }
    if (!violated.empty()) fail(ErrorKind::Constraint, "descent_check: " + violated);
  } else {
    require(p > 0.0 && p <= 1.0, ErrorKind::Parameter, "descent_check: p must lie in (0, 1]");
  }

  const GradSample g = problem.exact_grad(u);
  const double v0 = lyapunov(problem, u, c);
  const double vx = lyapunov(problem, {u.x - alpha * g.gx, u.y}, c);
  const double vy = lyapunov(problem, {u.x, u.y + eta * g.gy}, c);
  DescentReport r;
  r.lhs = v0 - (p * vx + (1.0 - p) * vy);
  r.rhs = p * alpha * h_metric(problem, u).h;
  r.residual = r.lhs - r.rhs;
  return r;
}

double fd_gradient_check(const Problem& problem, const JointPoint& u, double h) {
  const GradSample fd = finite_difference_grad(problem, u, h);
  const GradSample g = problem.exact_grad(u);
  const Vec a = concat(fd.gx, fd.gy);
  const Vec b = concat(g.gx, g.gy);
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a(i) - b(i)) / std::max(std::abs(b(i)), 1e-8));
  }
  return worst;
}

nlohmann::json RateSummary::to_json() const {
  return {{"exponent", exponent},
          {"intercept", intercept},
          {"points", ks.size()},
          {"final_running_min_h", running_min.empty() ? 0.0 : running_min.back()},
          {"assertion_applied", assertion_applied},
          {"assertion_passed", assertion_passed},
          {"assertion_threshold", kExactRateExponent}};
}

RateSummary rate_summary(const std::vector<TraceRecord>& trace, bool exact_gradients) {
  RateSummary s;
  double best = std::numeric_limits<double>::infinity();
  std::size_t logged = 0;
  for (const auto& r : trace) {
    if (!r.h) continue;
    ++logged;
    best = std::min(best, *r.h);
    if (r.k >= 1 && best > 0.0) {
      s.ks.push_back(r.k);
      s.running_min.push_back(best);
    }
  }
  if (logged < 10 || s.ks.size() < 2) {
    fail(ErrorKind::InsufficientData, "rate_summary: need at least 10 logged h values, got " +
                                          std::to_string(logged));
  }
  // Ordinary least squares on (log k, log running-min h).
  const auto n = static_cast<double>(s.ks.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < s.ks.size(); ++i) {
    const double lx = std::log(static_cast<double>(s.ks[i]));
    const double ly = std::log(s.running_min[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (!(denom > 0.0)) {
    fail(ErrorKind::InsufficientData, "rate_summary: logged steps do not span distinct k values");
  }
  s.exponent = (n * sxy - sx * sy) / denom;
  s.intercept = (sy - s.exponent * sx) / n;
  s.assertion_applied = exact_gradients;
  s.assertion_passed = !exact_gradients || s.exponent <= kExactRateExponent;
  return s;
}

}  // namespace rsgda
