#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

#include "rsgda/mlp.hpp"
#include "rsgda/numcore.hpp"

namespace rsgda {

struct Dims {
  Index m = 0;  // minimizing player x
  Index n = 0;  // maximizing player y
};

struct JointPoint {
  Vec x;
  Vec y;
};

struct GradSample {
  Vec gx;
  Vec gy;
};

/// Smoothness, PL and noise constants of a problem instance.
class ProblemConstants {
 public:
  /// Validates l1 > 0, 0 < mu <= l1 and a finite sigma >= 0.
  static ProblemConstants make(double l1, double mu, double sigma);

  double l1() const noexcept { return l1_; }
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double kappa() const noexcept { return l1_ / mu_; }
  /// Smoothness of the primal function: l1 * (1 + kappa / 2).
  double l2() const noexcept { return l1_ * (1.0 + kappa() / 2.0); }

 private:
  ProblemConstants(double l1, double mu, double sigma) : l1_(l1), mu_(mu), sigma_(sigma) {}
  double l1_;
  double mu_;
  double sigma_;
};

/// phi(x) = max_y F(x, y) together with a maximizer.
struct PhiValue {
  double phi = 0.0;
  Vec y_star;
};

/// Stochastic minimax oracle for min_x max_y F(x, y) = E_z f(x, y; z).
///
/// Implementations are immutable after construction and may be shared across
/// threads; all randomness comes from the caller's stream.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual Dims dims() const = 0;
  virtual const ProblemConstants& constants() const = 0;

  virtual double value(const JointPoint& u) const = 0;
  virtual GradSample exact_grad(const JointPoint& u) const = 0;
  virtual GradSample stoch_grad(const JointPoint& u, RngStream& rng) const = 0;

  /// Closed-form phi(x) and y*(x) when the inner maximization is explicit.
  virtual std::optional<PhiValue> closed_phi(const Vec& /*x*/) const { return std::nullopt; }
  bool has_closed_phi() const { return closed_phi_available(); }

  /// Nash point for problems where it is known.
  virtual std::optional<JointPoint> nash_point() const { return std::nullopt; }

  /// Problem-specific distance to the optimal solution.
  virtual std::optional<double> distance_to_opt(const JointPoint& /*u*/) const {
    return std::nullopt;
  }

  /// Task-level loss logged in traces. Defaults to the payoff F itself.
  virtual double loss(const JointPoint& u) const { return value(u); }

  /// False for problems that violate the PL condition in y (bilinear).
  virtual bool pl_in_y() const { return true; }
  /// True when l1, mu and sigma are user estimates rather than derived bounds.
  virtual bool mlp_backed() const { return false; }
  /// True when the objective has kinks (relu nets).
  virtual bool nonsmooth() const { return false; }

  /// Random point from a problem-typical region, used by oracle checks.
  virtual JointPoint sample_point(RngStream& rng) const = 0;
  virtual JointPoint default_init(RngStream& rng) const = 0;

  /// Construction parameters for provenance records.
  virtual nlohmann::json describe() const = 0;

  /// Throws a dimension error unless u matches dims().
  void check_point(const JointPoint& u) const;

 protected:
  virtual bool closed_phi_available() const { return false; }
};

using ProblemPtr = std::shared_ptr<const Problem>;

/// F(x,y) = (a/2)|x|^2 + x'By - (a/2)|y|^2 with B of size m x n.
ProblemPtr make_scsc_quadratic(double a, const Mat& coupling, double sigma);

/// SCSC instance with a random Gaussian coupling of spectral size ~coupling_scale.
ProblemPtr make_random_scsc(Index m, Index n, double a, double coupling_scale, double sigma,
                            std::uint64_t seed);

/// F(x,y) = x'y. Not PL in y; refuses phi-based diagnostics.
ProblemPtr make_bilinear(Index m, Index n, double sigma);

/// Smooth nonconvex part g(x) = 0.5 x'Qx + c * sum_i sin(x_i).
struct NcplSmoothPart {
  Mat q;
  double c = 0.0;
};

/// F(x,y) = g(x) + y'Bx - 0.5 y'Ay with A PSD (possibly singular), B of size
/// n x m and range(B) inside range(A).
ProblemPtr make_ncpl_quadratic(const NcplSmoothPart& g, const Mat& a, const Mat& b, double sigma);

/// NC-PL instance with rank(A) = rank <= n, eigenvalues of A in [0.5, 2].
ProblemPtr make_random_ncpl(Index m, Index n, Index rank, double sigma, std::uint64_t seed);

struct WganSpec {
  Vec mu_star;     // 2 entries
  Vec sigma_star;  // 2 entries, standard deviations
  mlp::MlpArch disc{{2, 16, 16, 1}, mlp::Activation::Tanh};
  int batch = 100;
  double init_scale = 1.0;
  /// Optional ridge -(decay/2)|w|^2 on the discriminator payoff.
  double disc_weight_decay = 0.0;
  /// Gauss-Hermite nodes per latent dimension for the exact expectations.
  int quad_nodes = 24;
  double l1 = 10.0;
  double mu = 0.1;
  double sigma = 1.0;
};

/// min over generator theta = (theta_mu, theta_sigma) of max over
/// discriminator weights w of E[f_w(x)] - E[f_w(theta_mu + theta_sigma * z)].
ProblemPtr make_gaussian_wgan(const WganSpec& spec);

struct RegressionData {
  Mat features;  // n x d
  Vec targets;   // n
};

/// Features ~ N(0,1); targets from a random linear model plus Gaussian noise.
RegressionData generate_regression_data(Index n, Index d, double noise, std::uint64_t seed);

void write_regression_csv(const std::filesystem::path& path, const RegressionData& data);
RegressionData read_regression_csv(const std::filesystem::path& path);

struct RegressionSpec {
  mlp::MlpArch model{{1, 1}, mlp::Activation::Tanh};
  double lambda = 2.0;
  int batch = 32;
  double init_scale = 1.0;
  double l1 = 1.0;
  std::optional<double> mu;  // defaults to (lambda - 1) / n
  /// Defaults to a pilot estimate: 1.5 times the largest exact minibatch noise
  /// level over a fixed set of sampled points.
  std::optional<double> sigma;
};

/// min_w max_{y'} (1/n) sum_i 0.5 (f_w(x_i) - y'_i)^2 - (lambda/2)(y'_i - y_i)^2.
ProblemPtr make_robust_regression(RegressionData data, const RegressionSpec& spec);

/// Dataset view for regression problems; nullptr for other families.
const RegressionData* regression_data(const Problem& problem);

struct OracleCheckOptions {
  int points = 10;
  int trials = 100;
  double fd_step = 1e-5;
  double fd_tol = 1e-6;      // analytic problems
  double fd_tol_mlp = 1e-4;  // MLP-backed problems
  double bias_se = 4.0;
  double variance_slack = 0.1;
};

struct OraclePointReport {
  double bias_norm = 0.0;   // |mean(stoch_grad) - exact_grad|
  double bias_limit = 0.0;  // bias_se * standard error of that mean
  double noise_sq = 0.0;    // empirical E|noise|^2
  double fd_rel_err = 0.0;
};

struct OracleReport {
  std::vector<OraclePointReport> points;
  bool unbiased = true;
  bool variance_bounded = true;
  bool fd_consistent = true;
  double fd_tol_used = 0.0;

  bool passed() const { return unbiased && variance_bounded && fd_consistent; }
  nlohmann::json to_json() const;
};

/// Runs the three oracle checks without throwing.
OracleReport evaluate_oracle(const Problem& problem, const OracleCheckOptions& opts,
                             RngStream& rng);

/// Same checks; throws an oracle-violation error naming the first failed check.
OracleReport check_oracle(const Problem& problem, const OracleCheckOptions& opts, RngStream& rng);

/// Central-difference gradient of value() at u, returned in (x, y) blocks.
GradSample finite_difference_grad(const Problem& problem, const JointPoint& u, double h);

}  // namespace rsgda
