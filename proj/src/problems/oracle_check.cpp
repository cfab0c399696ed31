#include <algorithm>
#include <cmath>
#include <string>

#include "rsgda/errors.hpp"
#include "rsgda/problems.hpp"

namespace rsgda {

GradSample finite_difference_grad(const Problem& problem, const JointPoint& u, double h) {
  require(h > 0.0, ErrorKind::Parameter, "finite differences: step must be > 0");
  problem.check_point(u);
  JointPoint probe = u;
  auto central = [&](Vec& block, Index i) {
    const double saved = block(i);
    block(i) = saved + h;
    const double up = problem.value(probe);
    block(i) = saved - h;
    const double down = problem.value(probe);
    block(i) = saved;
    return (up - down) / (2.0 * h);
  };
  GradSample g{Vec(u.x.size()), Vec(u.y.size())};
  for (Index i = 0; i < u.x.size(); ++i) g.gx(i) = central(probe.x, i);
  for (Index i = 0; i < u.y.size(); ++i) g.gy(i) = central(probe.y, i);
  return g;
}

nlohmann::json OracleReport::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back({{"bias_norm", p.bias_norm},
                   {"bias_limit", p.bias_limit},
                   {"noise_sq", p.noise_sq},
                   {"fd_rel_err", p.fd_rel_err}});
  }
  return {{"passed", passed()},
          {"unbiased", unbiased},
          {"variance_bounded", variance_bounded},
          {"fd_consistent", fd_consistent},
          {"fd_tol", fd_tol_used},
          {"points", std::move(pts)}};
}

OracleReport evaluate_oracle(const Problem& problem, const OracleCheckOptions& opts,
                             RngStream& rng) {
  require(opts.points >= 1, ErrorKind::Parameter, "check_oracle: need at least one point");
  require(opts.trials >= 100, ErrorKind::Parameter, "check_oracle: trials must be >= 100");
  const double sigma = problem.constants().sigma();
  OracleReport report;
  report.fd_tol_used = problem.mlp_backed() ? opts.fd_tol_mlp : opts.fd_tol;

  for (int p = 0; p < opts.points; ++p) {
    const JointPoint u = problem.sample_point(rng);
    const GradSample exact = problem.exact_grad(u);
    const Vec g = concat(exact.gx, exact.gy);

    // Welford accumulation of the sample mean and total sample variance.
    Vec mean = Vec::Zero(g.size());
    Vec m2 = Vec::Zero(g.size());
    double noise_sq = 0.0;
    for (int t = 1; t <= opts.trials; ++t) {
      const GradSample s = problem.stoch_grad(u, rng);
      const Vec v = concat(s.gx, s.gy);
      noise_sq += (v - g).squaredNorm();
      const Vec d = v - mean;
      mean += d / t;
      m2.array() += d.array() * (v - mean).array();
    }
    const double trials = opts.trials;
    OraclePointReport pr;
    pr.noise_sq = noise_sq / trials;
    pr.bias_norm = (mean - g).norm();
    // Norm test on the mean: E|mean - g|^2 = tr(Cov) / T under unbiasedness.
    const double trace_cov = m2.sum() / (trials - 1.0);
    pr.bias_limit = opts.bias_se * std::sqrt(trace_cov / trials) + 1e-12 * (1.0 + g.norm());
    if (pr.bias_norm > pr.bias_limit) report.unbiased = false;
    if (pr.noise_sq > sigma * sigma * (1.0 + opts.variance_slack) + 1e-24) {
      report.variance_bounded = false;
    }

    const GradSample fd = finite_difference_grad(problem, u, opts.fd_step);
    const Vec f = concat(fd.gx, fd.gy);
    pr.fd_rel_err = (f - g).cwiseAbs().maxCoeff() / std::max(g.cwiseAbs().maxCoeff(), 1e-8);
    if (pr.fd_rel_err > report.fd_tol_used) report.fd_consistent = false;
    report.points.push_back(pr);
  }
  return report;
}

OracleReport check_oracle(const Problem& problem, const OracleCheckOptions& opts, RngStream& rng) {
  OracleReport report = evaluate_oracle(problem, opts, rng);
  auto worst = [&](auto field) {
    double w = 0.0;
    for (const auto& p : report.points) w = std::max(w, field(p));
    return w;
  };
  if (!report.unbiased) {
    fail(ErrorKind::OracleViolation,
         problem.name() + ": unbiasedness check failed (mean deviates beyond the standard-error bound)");
  }
  if (!report.variance_bounded) {
    fail(ErrorKind::OracleViolation,
         problem.name() + ": variance check failed (E|noise|^2 = " +
             std::to_string(worst([](const OraclePointReport& p) { return p.noise_sq; })) +
             " exceeds sigma^2 with slack)");
  }
  if (!report.fd_consistent) {
    fail(ErrorKind::OracleViolation,
         problem.name() + ": finite-difference check failed (relative error " +
             std::to_string(worst([](const OraclePointReport& p) { return p.fd_rel_err; })) + ")");
  }
  return report;
}

}  // namespace rsgda
