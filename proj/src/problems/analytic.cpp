#include <cmath>
#include <string>

#include "rsgda/errors.hpp"
#include "rsgda/problems.hpp"

namespace rsgda {

ProblemConstants ProblemConstants::make(double l1, double mu, double sigma) {
  require(std::isfinite(l1) && l1 > 0.0, ErrorKind::Parameter, "constants: l1 must be > 0");
  require(std::isfinite(mu) && mu > 0.0, ErrorKind::Parameter, "constants: mu must be > 0");
  require(mu <= l1 * (1.0 + 1e-12), ErrorKind::Parameter, "constants: mu must not exceed l1");
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorKind::Parameter,
          "constants: sigma must be finite and >= 0");
  return ProblemConstants(l1, std::min(mu, l1), sigma);
}

void Problem::check_point(const JointPoint& u) const {
  const Dims d = dims();
  if (u.x.size() != d.m || u.y.size() != d.n) {
    fail(ErrorKind::Dimension, name() + ": point has dims (" + std::to_string(u.x.size()) + ", " +
                                   std::to_string(u.y.size()) + "), expected (" +
                                   std::to_string(d.m) + ", " + std::to_string(d.n) + ")");
  }
}

namespace {

nlohmann::json mat_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Closed-form problems perturb the exact gradient with an isotropic Gaussian
// whose total variance over both blocks is sigma^2.
class AnalyticProblem : public Problem {
 public:
  AnalyticProblem(Dims dims, ProblemConstants constants) : dims_(dims), constants_(constants) {}

  Dims dims() const override { return dims_; }
  const ProblemConstants& constants() const override { return constants_; }

  GradSample stoch_grad(const JointPoint& u, RngStream& rng) const override {
    GradSample g = exact_grad(u);
    const double s = constants_.sigma();
    if (s > 0.0) {
      const double per_coord = s / std::sqrt(static_cast<double>(dims_.m + dims_.n));
      g.gx += gauss_vec(rng, dims_.m, per_coord);
      g.gy += gauss_vec(rng, dims_.n, per_coord);
    }
    return g;
  }

  JointPoint sample_point(RngStream& rng) const override {
    return {gauss_vec(rng, dims_.m, 2.0), gauss_vec(rng, dims_.n, 2.0)};
  }

  JointPoint default_init(RngStream&) const override {
    return {Vec::Ones(dims_.m), Vec::Ones(dims_.n)};
  }

 protected:
  Dims dims_;
  ProblemConstants constants_;
};

class ScscQuadratic final : public AnalyticProblem {
 public:
  ScscQuadratic(double a, Mat coupling, double sigma)
      : AnalyticProblem({coupling.rows(), coupling.cols()},
                        ProblemConstants::make(a + spectral_norm(coupling), a, sigma)),
        a_(a),
        b_(std::move(coupling)) {}

  std::string name() const override { return "scsc_quadratic"; }

  double value(const JointPoint& u) const override {
    check_point(u);
    return 0.5 * a_ * u.x.squaredNorm() + u.x.dot(b_ * u.y) - 0.5 * a_ * u.y.squaredNorm();
  }

  GradSample exact_grad(const JointPoint& u) const override {
    check_point(u);
    return {a_ * u.x + b_ * u.y, b_.transpose() * u.x - a_ * u.y};
  }

  std::optional<PhiValue> closed_phi(const Vec& x) const override {
    require(x.size() == dims_.m, ErrorKind::Dimension, "scsc_quadratic: x dimension mismatch");
    Vec bx = b_.transpose() * x;
    const double phi = 0.5 * a_ * x.squaredNorm() + bx.squaredNorm() / (2.0 * a_);
    return PhiValue{phi, bx / a_};
  }

  std::optional<JointPoint> nash_point() const override {
    return JointPoint{Vec::Zero(dims_.m), Vec::Zero(dims_.n)};
  }

  std::optional<double> distance_to_opt(const JointPoint& u) const override {
    return std::sqrt(u.x.squaredNorm() + u.y.squaredNorm());
  }

  nlohmann::json describe() const override {
    return {{"family", name()}, {"a", a_}, {"B", mat_json(b_)}, {"sigma", constants_.sigma()}};
  }

 protected:
  bool closed_phi_available() const override { return true; }

 private:
  double a_;
  Mat b_;
};

class Bilinear final : public AnalyticProblem {
 public:
  Bilinear(Index n, double sigma)
      : AnalyticProblem({n, n}, ProblemConstants::make(1.0, 1.0, sigma)) {}

  std::string name() const override { return "bilinear"; }

  double value(const JointPoint& u) const override {
    check_point(u);
    return u.x.dot(u.y);
  }

  GradSample exact_grad(const JointPoint& u) const override {
    check_point(u);
    return {u.y, u.x};
  }

  std::optional<JointPoint> nash_point() const override {
    return JointPoint{Vec::Zero(dims_.m), Vec::Zero(dims_.n)};
  }

  std::optional<double> distance_to_opt(const JointPoint& u) const override {
    return std::sqrt(u.x.squaredNorm() + u.y.squaredNorm());
  }

  bool pl_in_y() const override { return false; }

  nlohmann::json describe() const override {
    return {{"family", name()}, {"m", dims_.m}, {"n", dims_.n}, {"sigma", constants_.sigma()}};
  }
};

class NcplQuadratic final : public AnalyticProblem {
 public:
  NcplQuadratic(NcplSmoothPart g, Mat a, Mat b, SymmetricPinv pinv, ProblemConstants constants)
      : AnalyticProblem({b.cols(), b.rows()}, constants),
        g_(std::move(g)),
        a_(std::move(a)),
        b_(std::move(b)),
        a_pinv_(std::move(pinv.pinv)),
        // phi(x) = g(x) + 0.5 x' (B' A+ B) x
        phi_curv_(b_.transpose() * a_pinv_ * b_) {}

  std::string name() const override { return "ncpl_quadratic"; }

  double value(const JointPoint& u) const override {
    check_point(u);
    return g_value(u.x) + u.y.dot(b_ * u.x) - 0.5 * u.y.dot(a_ * u.y);
  }

  GradSample exact_grad(const JointPoint& u) const override {
    check_point(u);
    return {g_grad(u.x) + b_.transpose() * u.y, b_ * u.x - a_ * u.y};
  }

  std::optional<PhiValue> closed_phi(const Vec& x) const override {
    require(x.size() == dims_.m, ErrorKind::Dimension, "ncpl_quadratic: x dimension mismatch");
    Vec y_star = a_pinv_ * (b_ * x);
    return PhiValue{g_value(x) + 0.5 * x.dot(phi_curv_ * x), std::move(y_star)};
  }

  nlohmann::json describe() const override {
    return {{"family", name()}, {"Q", mat_json(g_.q)}, {"c", g_.c}, {"A", mat_json(a_)},
            {"B", mat_json(b_)},  {"sigma", constants_.sigma()}};
  }

  const Mat& a_pinv() const { return a_pinv_; }

 protected:
  bool closed_phi_available() const override { return true; }

 private:
  double g_value(const Vec& x) const {
    return 0.5 * x.dot(g_.q * x) + g_.c * x.array().sin().sum();
  }
  Vec g_grad(const Vec& x) const {
    return g_.q * x + g_.c * x.array().cos().matrix();
  }

  NcplSmoothPart g_;
  Mat a_;
  Mat b_;
  Mat a_pinv_;
  Mat phi_curv_;
};

}  // namespace

ProblemPtr make_scsc_quadratic(double a, const Mat& coupling, double sigma) {
  require(a > 0.0, ErrorKind::Parameter, "scsc_quadratic: a must be > 0");
  require(coupling.rows() >= 1 && coupling.cols() >= 1, ErrorKind::Dimension,
          "scsc_quadratic: coupling must be at least 1x1");
  require(coupling.allFinite(), ErrorKind::Parameter, "scsc_quadratic: non-finite coupling");
  return std::make_shared<ScscQuadratic>(a, coupling, sigma);
}

ProblemPtr make_random_scsc(Index m, Index n, double a, double coupling_scale, double sigma,
                            std::uint64_t seed) {
  require(m >= 1 && n >= 1, ErrorKind::Dimension, "random_scsc: dimensions must be >= 1");
  require(coupling_scale >= 0.0, ErrorKind::Parameter, "random_scsc: negative coupling scale");
  RngStream rng(seed, 0x5c5cull);
  Mat b(m, n);
  const double entry = coupling_scale / std::sqrt(static_cast<double>(std::max(m, n)));
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) b(i, j) = entry * rng.normal();
  return make_scsc_quadratic(a, b, sigma);
}

ProblemPtr make_bilinear(Index m, Index n, double sigma) {
  if (m != n) {
    fail(ErrorKind::Dimension, "bilinear: requires m == n (got " + std::to_string(m) + " and " +
                                   std::to_string(n) + ")");
  }
  require(m >= 1, ErrorKind::Dimension, "bilinear: dimension must be >= 1");
  return std::make_shared<Bilinear>(m, sigma);
}

ProblemPtr make_ncpl_quadratic(const NcplSmoothPart& g, const Mat& a, const Mat& b, double sigma) {
  const Index n = a.rows();
  const Index m = b.cols();
  require(n >= 1 && a.cols() == n, ErrorKind::Dimension, "ncpl_quadratic: A must be square");
  require(b.rows() == n, ErrorKind::Dimension, "ncpl_quadratic: B must have as many rows as A");
  require(m >= 1, ErrorKind::Dimension, "ncpl_quadratic: x dimension must be >= 1");
  require(g.q.rows() == m && g.q.cols() == m, ErrorKind::Dimension,
          "ncpl_quadratic: Q must be m x m");
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + a.cwiseAbs().maxCoeff()),
          ErrorKind::Construction, "ncpl_quadratic: A is not symmetric");
  require((g.q - g.q.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + g.q.cwiseAbs().maxCoeff()),
          ErrorKind::Construction, "ncpl_quadratic: Q is not symmetric");

  SymmetricPinv pinv = symmetric_pinv(a);
  require(pinv.rank > 0, ErrorKind::Construction, "ncpl_quadratic: A is zero, no PL constant");
  require(pinv.lambda_min >= -1e-10 * pinv.lambda_max, ErrorKind::Construction,
          "ncpl_quadratic: A is not positive semidefinite");
  const Mat residual = b - a * (pinv.pinv * b);
  const double leak = residual.size() ? spectral_norm(residual) : 0.0;
  if (leak > 1e-10) {
    fail(ErrorKind::Construction,
         "ncpl_quadratic: range(B) is not contained in range(A) (|(I - AA+)B| = " +
             std::to_string(leak) + "); the inner maximum would not exist");
  }
  const double l1 = spectral_norm(g.q) + std::abs(g.c) + pinv.lambda_max + spectral_norm(b);
  auto constants = ProblemConstants::make(l1, pinv.lambda_min_positive, sigma);
  return std::make_shared<NcplQuadratic>(g, a, b, std::move(pinv), constants);
}

ProblemPtr make_random_ncpl(Index m, Index n, Index rank, double sigma, std::uint64_t seed) {
  require(m >= 1 && n >= 1, ErrorKind::Dimension, "random_ncpl: dimensions must be >= 1");
  require(rank >= 1 && rank <= n, ErrorKind::Parameter, "random_ncpl: need 1 <= rank <= n");
  RngStream rng(seed, 0x9c91ull);
  auto gaussian = [&](Index r, Index c) {
    Mat out(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) out(i, j) = rng.normal();
    return out;
  };

  Mat q = gaussian(m, m);
  q = (0.25 * (q + q.transpose())).eval();
  const double c = 0.2 + 0.8 * rng.uniform();

  Eigen::HouseholderQR<Mat> qr(gaussian(n, n));
  const Mat basis = qr.householderQ() * Mat::Identity(n, n);
  Vec eig = Vec::Zero(n);
  for (Index i = 0; i < rank; ++i) eig(i) = 0.5 + 1.5 * rng.uniform();
  Mat a = basis * eig.asDiagonal() * basis.transpose();
  a = (0.5 * (a + a.transpose())).eval();
  const Mat b = 0.7 * basis.leftCols(rank) * gaussian(rank, m);
  return make_ncpl_quadratic({q, c}, a, b, sigma);
}

}  // namespace rsgda
