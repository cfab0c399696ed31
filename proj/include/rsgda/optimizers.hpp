#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "rsgda/diagnostics.hpp"
#include "rsgda/problems.hpp"
#include "rsgda/schedules.hpp"

namespace rsgda {

struct Counters {
  std::int64_t x_steps = 0;
  std::int64_t y_steps = 0;
  std::int64_t grad_evals = 0;
};

struct OptState {
  JointPoint point;
  std::int64_t k = 0;
  RngStream rng;
  Counters counters;
  Branch last_branch = Branch::Both;
  int last_inner_steps = 0;
  /// Number of SGDmax steps whose inner loop ran out of budget uncertified.
  std::int64_t inner_warnings = 0;
};

OptState make_state(const Problem& problem, JointPoint init, RngStream rng);

/// Simultaneous-information alternating SGDA. strict reuses the y-step sample
/// z_k for the x-step instead of drawing a fresh one.
struct Sgda {
  bool strict = false;
};

/// delta-accurate inner maximization before every x-step.
struct Sgdmax {
  double delta = 1e-6;
  int inner_max_iters = 1000;
  std::optional<double> inner_step;  // defaults to 1/l1
  bool stochastic_inner = false;
};

/// m ascent steps on y, then one descent step on x.
struct Esgda {
  int m = 1;
};

/// Coin flip per step: descent on x with probability p_k, else ascent on y.
struct Rsgda {};

using OptKind = std::variant<Sgda, Sgdmax, Esgda, Rsgda>;

std::string kind_name(const OptKind& kind);
nlohmann::json describe(const OptKind& kind);
/// Gradient evaluations per step when fixed (SGDmax varies and returns 0).
int grad_evals_per_step(const OptKind& kind);

OptState& sgda_step(const Problem& problem, OptState& s, double alpha, double eta,
                    bool strict = false);
OptState& sgdmax_step(const Problem& problem, OptState& s, double alpha, const Sgdmax& cfg);
OptState& esgda_step(const Problem& problem, OptState& s, double alpha, double eta, int m);
OptState& rsgda_step(const Problem& problem, OptState& s, double alpha, double eta, double p);

/// Dispatches one step of `kind` using the plan's values at s.k.
OptState& step(const Problem& problem, OptState& s, const OptKind& kind, const StepPlan& plan);

/// Throws a constraint error naming the first violated step bound over
/// k in [0, iters).
void check_plan(const Problem& problem, const OptKind& kind, const StepPlan& plan,
                std::int64_t iters);

struct DiagConfig {
  std::int64_t interval = 1;
  bool h = true;
  bool lyapunov = true;
  std::optional<InnerConfig> inner;  // needed when phi has no closed form
};

struct RunResult {
  std::vector<TraceRecord> trace;
  JointPoint final_point;
  TraceRecord final_metrics;  // metrics at the final point, k = iters
  Counters counters;
  std::int64_t inner_warnings = 0;
  std::int64_t iters = 0;
};

/// Metrics at u. Optional fields are left empty when the problem cannot
/// supply them.
TraceRecord measure(const Problem& problem, const JointPoint& u, const DiagConfig& diag);

RunResult run(const Problem& problem, const OptKind& kind, const StepPlan& plan,
              const JointPoint& init, std::int64_t iters, const DiagConfig& diag, RngStream rng,
              bool waive_constraints = false);

}  // namespace rsgda
