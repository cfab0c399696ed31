#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "rsgda/errors.hpp"
#include "rsgda/problems.hpp"

namespace rsgda {

namespace {

// Gauss-Hermite rule for the standard normal weight via Golub-Welsch: the
// Jacobi matrix of the probabilists' Hermite polynomials has off-diagonal
// entries sqrt(k), and the weights are the squared first eigenvector entries.
void gauss_hermite(int q, Vec& nodes, Vec& weights) {
  Mat jacobi = Mat::Zero(q, q);
  for (int k = 1; k < q; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
  nodes = eig.eigenvalues();
  weights = eig.eigenvectors().row(0).transpose().array().square();
}

// Affine generator g(z) = theta_mu + theta_sigma * z against an MLP critic.
// x-player theta = (mu_1, mu_2, sigma_1, sigma_2); y-player the critic weights.
class GaussianWgan final : public Problem {
 public:
  explicit GaussianWgan(const WganSpec& spec)
      : spec_(spec),
        constants_(ProblemConstants::make(spec.l1, spec.mu, spec.sigma)),
        dims_{4, spec.disc.param_count()} {
    Vec nodes, weights;
    gauss_hermite(spec.quad_nodes, nodes, weights);
    const int q = spec.quad_nodes;
    quad_z_.resize(2, q * q);
    quad_w_.resize(q * q);
    for (int i = 0; i < q; ++i) {
      for (int j = 0; j < q; ++j) {
        quad_z_(0, i * q + j) = nodes(i);
        quad_z_(1, i * q + j) = nodes(j);
        quad_w_(i * q + j) = weights(i) * weights(j);
      }
    }
    real_quad_ = affine(spec.mu_star, spec.sigma_star, quad_z_);
  }

  std::string name() const override { return "gaussian_wgan"; }
  Dims dims() const override { return dims_; }
  const ProblemConstants& constants() const override { return constants_; }

  double value(const JointPoint& u) const override {
    check_point(u);
    const Mat fake = affine(u.x.head(2), u.x.tail(2), quad_z_);
    const double real_mean = mlp::forward_batch(spec_.disc, u.y, real_quad_).row(0).dot(quad_w_);
    const double fake_mean = mlp::forward_batch(spec_.disc, u.y, fake).row(0).dot(quad_w_);
    return real_mean - fake_mean - 0.5 * spec_.disc_weight_decay * u.y.squaredNorm();
  }

  GradSample exact_grad(const JointPoint& u) const override {
    check_point(u);
    return payoff_grad(u, real_quad_, quad_z_, quad_w_.transpose(), quad_w_.transpose());
  }

  GradSample stoch_grad(const JointPoint& u, RngStream& rng) const override {
    check_point(u);
    const int b = spec_.batch;
    Mat eps(2, b), z(2, b);
    for (int s = 0; s < b; ++s) {
      eps(0, s) = rng.normal();
      eps(1, s) = rng.normal();
    }
    for (int s = 0; s < b; ++s) {
      z(0, s) = rng.normal();
      z(1, s) = rng.normal();
    }
    const Mat real = affine(spec_.mu_star, spec_.sigma_star, eps);
    const Mat uniform = Mat::Constant(1, b, 1.0 / b);
    return payoff_grad(u, real, z, uniform, uniform);
  }

  std::optional<double> distance_to_opt(const JointPoint& u) const override {
    Vec target(4);
    target << spec_.mu_star, spec_.sigma_star;
    return (u.x - target).norm();
  }

  bool mlp_backed() const override { return true; }
  bool nonsmooth() const override { return spec_.disc.activation == mlp::Activation::Relu; }

  JointPoint sample_point(RngStream& rng) const override {
    Vec theta(4);
    theta << spec_.mu_star + gauss_vec(rng, 2, 1.0),
        (spec_.sigma_star + gauss_vec(rng, 2, 0.3)).cwiseAbs();
    return {theta, mlp::init_params(spec_.disc, rng, spec_.init_scale)};
  }

  JointPoint default_init(RngStream& rng) const override {
    Vec theta(4);
    theta << 0.0, 0.0, 1.0, 1.0;
    return {theta, mlp::init_params(spec_.disc, rng, spec_.init_scale)};
  }

  nlohmann::json describe() const override {
    return {{"family", name()},
            {"mu_star", {spec_.mu_star(0), spec_.mu_star(1)}},
            {"sigma_star", {spec_.sigma_star(0), spec_.sigma_star(1)}},
            {"disc_layers", spec_.disc.layer_sizes},
            {"activation", mlp::to_string(spec_.disc.activation)},
            {"batch", spec_.batch},
            {"disc_weight_decay", spec_.disc_weight_decay},
            {"quad_nodes", spec_.quad_nodes},
            {"constants_source", "user-supplied estimates"}};
  }

 private:
  static Mat affine(const Vec& shift, const Vec& scale, const Mat& z) {
    Mat out = scale.asDiagonal() * z;
    out.colwise() += shift;
    return out;
  }

  // Weighted payoff gradient: real_w and fake_w are row vectors of sample
  // weights (quadrature weights or 1/batch).
  GradSample payoff_grad(const JointPoint& u, const Mat& real, const Mat& z, const Mat& real_w,
                         const Mat& fake_w) const {
    const Mat fake = affine(u.x.head(2), u.x.tail(2), z);
    const auto real_bw = mlp::backward_batch(spec_.disc, u.y, real, real_w);
    const auto fake_bw = mlp::backward_batch(spec_.disc, u.y, fake, fake_w);

    GradSample g;
    g.gy = real_bw.param_grad - fake_bw.param_grad - spec_.disc_weight_decay * u.y;
    g.gx.resize(4);
    // fake_bw.input_grad already carries the sample weights.
    g.gx.head(2) = -fake_bw.input_grad.rowwise().sum();
    g.gx.tail(2) = -(fake_bw.input_grad.array() * z.array()).rowwise().sum().matrix();
    return g;
  }

  WganSpec spec_;
  ProblemConstants constants_;
  Dims dims_;
  Mat quad_z_;
  Vec quad_w_;
  Mat real_quad_;
};

}  // namespace

ProblemPtr make_gaussian_wgan(const WganSpec& spec) {
  require(spec.mu_star.size() == 2 && spec.sigma_star.size() == 2, ErrorKind::Dimension,
          "gaussian_wgan: mu_star and sigma_star need 2 entries");
  require(spec.mu_star.allFinite(), ErrorKind::Parameter, "gaussian_wgan: non-finite mu_star");
  require(spec.sigma_star.allFinite() && (spec.sigma_star.array() > 0.0).all(),
          ErrorKind::Parameter, "gaussian_wgan: sigma_star entries must be > 0");
  require(spec.batch >= 1, ErrorKind::Parameter, "gaussian_wgan: batch must be >= 1");
  require(spec.quad_nodes >= 2 && spec.quad_nodes <= 128, ErrorKind::Parameter,
          "gaussian_wgan: quad_nodes must lie in [2, 128]");
  require(spec.disc_weight_decay >= 0.0, ErrorKind::Parameter,
          "gaussian_wgan: disc_weight_decay must be >= 0");
  require(spec.init_scale > 0.0, ErrorKind::Parameter, "gaussian_wgan: init_scale must be > 0");
  spec.disc.validate();
  require(spec.disc.input_size() == 2 && spec.disc.output_size() == 1, ErrorKind::Dimension,
          "gaussian_wgan: discriminator must map R^2 to R");
  return std::make_shared<GaussianWgan>(spec);
}

}  // namespace rsgda
