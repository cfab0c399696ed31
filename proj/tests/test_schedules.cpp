#include <cmath>

#include "doctest.h"
#include "rsgda/errors.hpp"
#include "rsgda/problems.hpp"
#include "rsgda/schedules.hpp"

using namespace rsgda;

namespace {
const ProblemConstants kC = ProblemConstants::make(2.0, 1.0, 0.0);

// Independent evaluation of the appendix closed form for p1.
double p1_oracle(double delta, double alpha, double kappa, double l1, double sigma, double n) {
  const double s = 324.0 * alpha * alpha * std::pow(kappa, 4) * l1 * sigma * sigma * n;
  return (std::sqrt(delta) * std::sqrt(delta + 2.0 * s) - delta) / s;
}
}  // namespace

TEST_CASE("step constraints") {
  CHECK(kC.l2() == 4.0);
  const StepBounds b = step_constraints(kC, 0.3);
  CHECK(b.alpha_max == doctest::Approx(0.125));
  CHECK(b.eta_hi == doctest::Approx(0.5));

  const StepBounds edge = step_constraints(kC, 1.0 / 19.0);
  CHECK(edge.eta_lo(0.125) == doctest::Approx(0.5));
  CHECK_FALSE(edge.infeasible);
  CHECK(p_boundary(kC) == doctest::Approx(1.0 / 19.0));

  const StepBounds half = step_constraints(kC, 0.5);
  CHECK(half.eta_lo(0.125) == doctest::Approx(9.0));
  CHECK(half.infeasible);

  CHECK_THROWS_AS(step_constraints(kC, 0.0), Error);
  CHECK_THROWS_AS(step_constraints(kC, 1.0), Error);
}

TEST_CASE("feasibility is monotone in p") {
  const double alpha = 0.05;
  for (double eta : {0.05, 0.2, 0.5}) {
    bool was_feasible = false;
    for (double p = 0.3; p > 1e-4; p *= 0.8) {
      const StepBounds b = step_constraints(kC, p);
      const bool ok = alpha <= b.alpha_max && b.eta_lo(alpha) <= eta && eta <= b.eta_hi;
      if (was_feasible) CHECK(ok);
      was_feasible = was_feasible || ok;
    }
  }
}

TEST_CASE("polynomial plan") {
  const StepPlan plan = StepPlan::polynomial(1.0, 0.1, 1.0);
  CHECK(plan.alpha(0) == 1.0);
  CHECK(plan.alpha(1) == 1.0);
  CHECK(plan.alpha(100) == doctest::Approx(0.063096).epsilon(1e-5));
  CHECK_THROWS_AS(StepPlan::polynomial(1.0, 0.0, 1.0), Error);
  CHECK_THROWS_AS(StepPlan::polynomial(1.0, 0.5, 1.0), Error);
  CHECK_THROWS_AS(StepPlan::polynomial(0.0, 0.1, 1.0), Error);

  // Square-summable but not summable: the tail of sum alpha^2 is negligible
  // while each doubling of the horizon adds a growing amount to sum alpha.
  const StepPlan slow = StepPlan::polynomial(1.0, 0.25, 1.0);
  auto sums = [&](std::int64_t horizon) {
    double s1 = 0.0, s2 = 0.0;
    for (std::int64_t j = 1; j <= horizon; ++j) {
      const double a = slow.alpha(j);
      s1 += a;
      s2 += a * a;
    }
    return std::pair{s1, s2};
  };
  const auto [a0, q0] = sums(250000);
  const auto [a1, q1] = sums(500000);
  const auto [a2, q2] = sums(1000000);
  CHECK((q2 - q1) < 1e-3 * q1);
  CHECK(q1 - q0 > q2 - q1);
  CHECK(a2 - a1 > a1 - a0);

  StepPlan clipped = StepPlan::polynomial(0.1, 0.1, 1.0);
  clipped.with_p(0.01).clip_eta_to(kC);
  const StepBounds b = step_constraints(kC, 0.01);
  for (std::int64_t k : {0, 1, 10, 1000}) {
    const double a = clipped.alpha(k);
    const double expect = std::min(b.eta_hi, std::max(b.eta_lo(a), a));
    CHECK(clipped.eta(k) == doctest::Approx(expect));
  }
}

TEST_CASE("constant plan and adaptive p") {
  StepPlan c = StepPlan::constant(0.1, 0.0);
  CHECK(c.eta(5) == 0.0);
  CHECK(c.p(3) == 0.5);
  CHECK_THROWS_AS(StepPlan::constant(0.0, 0.1), Error);
  CHECK_THROWS_AS(StepPlan::constant(0.1, -0.1), Error);

  const PScheduleAda s{0.5, 300, 300, true};
  CHECK(adaptive_p(s, 100) == 0.5);
  CHECK(adaptive_p(s, 900) == doctest::Approx(1.0 / 3.0));
  CHECK(adaptive_p(PScheduleAda{0.5, 300, 300, false}, 900) == doctest::Approx(1.0 / 3.0));
  CHECK(adaptive_p(s, 300) == 0.5);
  CHECK(adaptive_p(PScheduleAda{0.5, 300, 300, false}, 300) == 1.0);
  double prev = 1.0;
  for (std::int64_t n = 300; n < 5000; n += 37) {
    const double p = adaptive_p(s, n);
    CHECK(p <= prev);
    CHECK(p > 0.0);
    CHECK(p <= 0.5);
    prev = p;
  }
  CHECK_THROWS_AS(adaptive_p(PScheduleAda{0.5, 300, 0, true}, 10), Error);

  StepPlan ada = StepPlan::constant(0.1, 0.1);
  ada.with_adaptive_p(s);
  CHECK(ada.adaptive());
  CHECK(ada.p(900) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("optimal p") {
  CHECK(optimal_p(kC, 1.0, 0.125, 1e4) == doctest::Approx(1.0 / 19.0));
  const ProblemConstants noisy = ProblemConstants::make(2.0, 1.0, 1.0);
  const double p = optimal_p(noisy, 1.0, 0.125, 1e4);
  const double expect = (std::sqrt(3240001.0) - 1.0) / 1620000.0;
  CHECK(p == doctest::Approx(expect).epsilon(1e-12));
  CHECK(p == doctest::Approx(p1_oracle(1, 0.125, 2, 2, 1, 1e4)).epsilon(1e-12));
  CHECK(p == doctest::Approx(1.1105e-3).epsilon(1e-4));

  const double r6 = optimal_p(noisy, 1.0, 0.125, 1e6) * 1e3;
  const double r8 = optimal_p(noisy, 1.0, 0.125, 1e8) * 1e4;
  CHECK(std::abs(r6 - r8) / r8 < 0.05);

  const ProblemConstants tiny = ProblemConstants::make(2.0, 1.0, 1e-8);
  CHECK(optimal_p(tiny, 1.0, 0.125, 10) == p_boundary(tiny));
  CHECK(optimal_p(noisy, 0.0, 0.125, 100) == 0.0);
  CHECK_THROWS_AS(optimal_p(noisy, -1.0, 0.125, 100), Error);

  double prev = 1.0;
  for (double n = 1; n < 1e9; n *= 3.7) {
    const double q = optimal_p(noisy, 1.0, 0.125, n);
    CHECK(q <= p_boundary(noisy));
    CHECK(q <= prev + 1e-15);
    prev = q;
  }
}
