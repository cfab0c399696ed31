#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"

#include "rsgda/problems.hpp"

namespace rsgda {

/// Step-size bounds under which the NC-PL descent inequality is proven:
/// alpha <= 1/(2 l2) and 18 kappa^2 p/(1-p) alpha <= eta <= 1/l1.
struct StepBounds {
  double alpha_max = 0.0;
  double eta_hi = 0.0;
  double eta_lo_slope = 0.0;  // eta_lo(alpha) = eta_lo_slope * alpha
  bool infeasible = false;

  double eta_lo(double alpha) const { return eta_lo_slope * alpha; }
};

/// Throws a parameter error unless 0 < p < 1.
StepBounds step_constraints(const ProblemConstants& c, double p);

/// Largest p for which alpha_max admits a valid eta: l2 / (9 l1 kappa^2 + l2).
double p_boundary(const ProblemConstants& c);

/// Variance-aware choice of p for a horizon of n steps. delta estimates
/// V(x_1, y_1) - inf V. Returns the boundary value when sigma == 0.
double optimal_p(const ProblemConstants& c, double delta, double alpha, double n);

/// Hold p0 for n1 steps, then p = 1/(floor((n - n1)/n2) + 1), optionally
/// capped at p0.
struct PScheduleAda {
  double p0 = 0.5;
  std::int64_t n1 = 0;
  std::int64_t n2 = 1;
  bool clamp_to_p0 = true;

  void validate() const;
};

double adaptive_p(const PScheduleAda& sched, std::int64_t n);

/// Step sizes (alpha_k, eta_k) and the descent probability p_k.
class StepPlan {
 public:
  using Series = std::function<double(std::int64_t)>;

  static StepPlan constant(double alpha, double eta);

  /// alpha_0 = alpha0 and alpha_j = alpha0 * j^-(1/2 + epsilon). eta_k is
  /// ratio * alpha_k clipped into [eta_lo(alpha_k), eta_hi] when bounds are
  /// attached with clip_eta_to().
  static StepPlan polynomial(double alpha0, double epsilon, double ratio);

  static StepPlan custom(Series alpha, Series eta, std::string label = "custom");

  /// Constant descent probability (default 0.5).
  StepPlan& with_p(double p);
  StepPlan& with_adaptive_p(const PScheduleAda& sched);
  /// Clip eta into the valid band computed from these constants and p_k.
  StepPlan& clip_eta_to(const ProblemConstants& c);

  double alpha(std::int64_t k) const;
  double eta(std::int64_t k) const;
  double p(std::int64_t k) const;

  const std::string& kind() const { return kind_; }
  bool adaptive() const { return ada_.has_value(); }
  nlohmann::json describe() const;

 private:
  StepPlan() = default;

  std::string kind_;
  Series alpha_;
  Series eta_raw_;
  nlohmann::json params_;
  double p_ = 0.5;
  std::optional<PScheduleAda> ada_;
  std::optional<ProblemConstants> clip_;
};

}  // namespace rsgda
