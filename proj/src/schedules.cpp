#include "rsgda/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rsgda/errors.hpp"

namespace rsgda {

StepBounds step_constraints(const ProblemConstants& c, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    fail(ErrorKind::Parameter, "step_constraints: p must lie in (0, 1), got " + std::to_string(p));
  }
  const double kappa = c.kappa();
  StepBounds b;
  b.alpha_max = 1.0 / (2.0 * c.l2());
  b.eta_hi = 1.0 / c.l1();
  b.eta_lo_slope = 18.0 * kappa * kappa * p / (1.0 - p);
  // At p equal to the boundary value eta_lo(alpha_max) == eta_hi exactly in
  // real arithmetic; the relative slack keeps that case feasible after rounding.
  const double slack = 1e-12;
  b.infeasible = b.eta_lo(b.alpha_max) > b.eta_hi * (1.0 + slack) &&
                 p > p_boundary(c) * (1.0 + slack);
  return b;
}

double p_boundary(const ProblemConstants& c) {
  const double kappa = c.kappa();
  return c.l2() / (9.0 * c.l1() * kappa * kappa + c.l2());
}

double optimal_p(const ProblemConstants& c, double delta, double alpha, double n) {
  require(std::isfinite(delta) && delta >= 0.0, ErrorKind::Parameter,
          "optimal_p: delta must be >= 0");
  require(alpha > 0.0, ErrorKind::Parameter, "optimal_p: alpha must be > 0");
  require(n >= 1.0, ErrorKind::Parameter, "optimal_p: n must be >= 1");
  const double p2 = p_boundary(c);
  const double sigma = c.sigma();
  if (sigma == 0.0) return p2;
  const double k2 = c.kappa() * c.kappa();
  const double x = 648.0 * alpha * alpha * k2 * k2 * c.l1() * sigma * sigma * n;
  // (sqrt(d) sqrt(d + X) - d) / (X/2), rationalized so it stays accurate
  // when X is tiny or huge relative to d.
  // delta == 0 means the start is already optimal; the formula's limit is 0.
  if (delta == 0.0) return 0.0;
  const double p1 = 2.0 * delta / (std::sqrt(delta * delta + delta * x) + delta);
  return std::min(p1, p2);
}

void PScheduleAda::validate() const {
  require(p0 > 0.0 && p0 <= 1.0, ErrorKind::Parameter, "adaptive p: p0 must lie in (0, 1]");
  require(n1 >= 0, ErrorKind::Parameter, "adaptive p: N1 must be >= 0");
  require(n2 >= 1, ErrorKind::Parameter, "adaptive p: N2 must be >= 1");
}

double adaptive_p(const PScheduleAda& sched, std::int64_t n) {
  sched.validate();
  require(n >= 0, ErrorKind::Parameter, "adaptive p: step index must be >= 0");
  if (n < sched.n1) return sched.p0;
  const double q = 1.0 / static_cast<double>((n - sched.n1) / sched.n2 + 1);
  return sched.clamp_to_p0 ? std::min(sched.p0, q) : q;
}

StepPlan StepPlan::constant(double alpha, double eta) {
  require(std::isfinite(alpha) && alpha > 0.0, ErrorKind::Parameter,
          "constant plan: alpha must be > 0");
  require(std::isfinite(eta) && eta >= 0.0, ErrorKind::Parameter,
          "constant plan: eta must be >= 0");
  StepPlan plan;
  plan.kind_ = "constant";
  plan.alpha_ = [alpha](std::int64_t) { return alpha; };
  plan.eta_raw_ = [eta](std::int64_t) { return eta; };
  plan.params_ = {{"alpha", alpha}, {"eta", eta}};
  return plan;
}

StepPlan StepPlan::polynomial(double alpha0, double epsilon, double ratio) {
  require(alpha0 > 0.0, ErrorKind::Parameter, "polynomial plan: alpha0 must be > 0");
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    fail(ErrorKind::Parameter,
         "polynomial plan: epsilon must lie in (0, 1/2) for square-summable, non-summable steps");
  }
  require(ratio > 0.0, ErrorKind::Parameter, "polynomial plan: eta/alpha ratio must be > 0");
  StepPlan plan;
  plan.kind_ = "polynomial";
  const double expo = -(0.5 + epsilon);
  plan.alpha_ = [alpha0, expo](std::int64_t j) {
    return j <= 1 ? alpha0 : alpha0 * std::pow(static_cast<double>(j), expo);
  };
  plan.eta_raw_ = [a = plan.alpha_, ratio](std::int64_t j) { return ratio * a(j); };
  plan.params_ = {{"alpha0", alpha0}, {"epsilon", epsilon}, {"ratio", ratio}};
  return plan;
}

StepPlan StepPlan::custom(Series alpha, Series eta, std::string label) {
  require(static_cast<bool>(alpha) && static_cast<bool>(eta), ErrorKind::Parameter,
          "custom plan: both series are required");
  StepPlan plan;
  plan.kind_ = std::move(label);
  plan.alpha_ = std::move(alpha);
  plan.eta_raw_ = std::move(eta);
  plan.params_ = nlohmann::json::object();
  return plan;
}

StepPlan& StepPlan::with_p(double p) {
  require(p > 0.0 && p <= 1.0, ErrorKind::Parameter, "plan: p must lie in (0, 1]");
  p_ = p;
  ada_.reset();
  return *this;
}

StepPlan& StepPlan::with_adaptive_p(const PScheduleAda& sched) {
  sched.validate();
  ada_ = sched;
  return *this;
}

StepPlan& StepPlan::clip_eta_to(const ProblemConstants& c) {
  clip_ = c;
  return *this;
}

double StepPlan::alpha(std::int64_t k) const { return alpha_(k); }

double StepPlan::eta(std::int64_t k) const {
  const double raw = eta_raw_(k);
  if (!clip_) return raw;
  const double pk = p(k);
  const double hi = 1.0 / clip_->l1();
  if (pk >= 1.0) return hi;
  const double lo = step_constraints(*clip_, pk).eta_lo(alpha(k));
  return std::min(hi, std::max(lo, raw));
}

double StepPlan::p(std::int64_t k) const { return ada_ ? adaptive_p(*ada_, k) : p_; }

nlohmann::json StepPlan::describe() const {
  nlohmann::json out = params_;
  out["kind"] = kind_;
  out["eta_clipped"] = clip_.has_value();
  if (ada_) {
    out["p_schedule"] = {{"kind", "adaptive"},
                         {"p0", ada_->p0},
                         {"N1", ada_->n1},
                         {"N2", ada_->n2},
                         {"clamp_to_p0", ada_->clamp_to_p0}};
  } else {
    out["p_schedule"] = {{"kind", "constant"}, {"p", p_}};
  }
  return out;
}

}  // namespace rsgda
