#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

#include "rsgda/problems.hpp"

namespace rsgda {

enum class Branch { X, Y, Both };
const char* to_string(Branch b) noexcept;

/// One logged iteration. Metrics are evaluated at (x_k, y_k) before step k;
/// branch, steps and p describe step k itself.
struct TraceRecord {
  std::int64_t k = 0;
  Branch branch = Branch::Both;
  double alpha = 0.0;
  double eta = 0.0;
  double p = 0.0;
  double grad_x_norm = 0.0;
  double grad_y_norm = 0.0;
  std::optional<double> h;
  std::optional<double> V;
  std::optional<double> dist;
  std::optional<double> loss;
  bool phi_uncertain = false;
  std::int64_t grad_evals = 0;  // cumulative, before step k
};

/// Budget for estimating phi when no closed form exists.
struct InnerConfig {
  double tol = 1e-8;
  /// Scale tol by max(1, |F(x, y0)|).
  bool relative_tol = true;
  int max_iters = 10000;
};

struct PhiEstimate {
  double phi = 0.0;
  Vec y_star;
  int iters = 0;
  bool uncertain = false;  // budget ran out before the PL certificate held
};

/// Exact-gradient ascent on y with step 1/l1 until |grad_y F|^2 / (2 mu) <= tol.
PhiEstimate phi_inner(const Problem& problem, const Vec& x, const Vec& y0, double tol,
                      int max_iters);

/// Closed-form phi when available, otherwise phi_inner under `inner`. Throws
/// a capability error for problems without the PL property or without either
/// route.
PhiEstimate resolve_phi(const Problem& problem, const JointPoint& u,
                        const std::optional<InnerConfig>& inner);

struct HValue {
  double h = 0.0;
  bool uncertain = false;
};

/// 1/4 |grad phi|^2 + kappa^2/20 |grad_y F|^2 + 11/40 |grad_x F|^2 with
/// grad phi(x) = grad_x F(x, y*(x)).
HValue h_metric(const Problem& problem, const JointPoint& u,
                const std::optional<InnerConfig>& inner = std::nullopt);

inline constexpr double kLyapunovC = 0.1;

/// V = phi(x) + C (phi(x) - F(x, y)).
double lyapunov(const Problem& problem, const JointPoint& u, double c = kLyapunovC,
                const std::optional<InnerConfig>& inner = std::nullopt);

struct ContractionReport {
  double measured_ratio = 0.0;  // exact two-branch E|u+ - u*|^2 / |u - u*|^2
  double rho = 0.0;             // 1 - 2 p mu alpha + alpha^2 (1 - p) l1^2
  double rho_printed = 0.0;     // same without p in the linear term
  bool holds = false;           // measured_ratio <= rho + tol
};

/// RSGDA with equal steps alpha on both players, exact gradients. Requires a
/// known Nash point and alpha < 2 p mu / ((1 - p) l1^2).
ContractionReport contraction_check(const Problem& problem, const JointPoint& u, double alpha,
                                    double p, double tol = 1e-12);

struct DescentReport {
  double lhs = 0.0;  // V(u) - E_k[V(u+)]
  double rhs = 0.0;  // p alpha h(u)
  double residual = 0.0;
  nlohmann::json to_json() const;
};

/// Exact two-branch expected descent of V for one RSGDA step at sigma = 0.
/// Refuses (constraint error) when (alpha, eta, p) violate the step bounds
/// unless enforce_constraints is false.
DescentReport descent_check(const Problem& problem, const JointPoint& u, double alpha, double eta,
                            double p, double c = kLyapunovC, bool enforce_constraints = true);

/// Max coordinate-wise relative error of central differences against
/// exact_grad, denominators max(|g_i|, 1e-8).
double fd_gradient_check(const Problem& problem, const JointPoint& u, double h);

struct RateSummary {
  std::vector<std::int64_t> ks;
  std::vector<double> running_min;
  double exponent = 0.0;  // slope of log(running-min h) against log k
  double intercept = 0.0;
  bool assertion_applied = false;  // only for exact-gradient traces
  bool assertion_passed = true;    // exponent <= -0.8 when applied
  nlohmann::json to_json() const;
};

inline constexpr double kExactRateExponent = -0.8;

/// Fits running-min h over logged steps k >= 1. Needs at least 10 logged h
/// values.
RateSummary rate_summary(const std::vector<TraceRecord>& trace, bool exact_gradients);

}  // namespace rsgda
