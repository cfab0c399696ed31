#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "rsgda/errors.hpp"
#include "rsgda/problems.hpp"

namespace rsgda {

RegressionData generate_regression_data(Index n, Index d, double noise, std::uint64_t seed) {
  require(n >= 1 && d >= 1, ErrorKind::Parameter, "regression data: n and d must be >= 1");
  require(noise >= 0.0, ErrorKind::Parameter, "regression data: noise must be >= 0");
  RngStream rng(seed, 0xda7aull);
  RegressionData data;
  data.features.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) data.features(i, j) = rng.normal();
  const Vec w_true = gauss_vec(rng, d, 1.0 / std::sqrt(static_cast<double>(d)));
  data.targets = data.features * w_true + gauss_vec(rng, n, noise);
  return data;
}

void write_regression_csv(const std::filesystem::path& path, const RegressionData& data) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  const Index d = data.features.cols();
  for (Index j = 0; j < d; ++j) out << 'x' << j << ',';
  out << "target\n";
  char buf[40];
  for (Index i = 0; i < data.features.rows(); ++i) {
    for (Index j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", data.features(i, j));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", data.targets(i));
    out << buf;
  }
}

RegressionData read_regression_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io,
          path.string() + ": missing header");
  const auto columns = static_cast<Index>(std::count(line.begin(), line.end(), ',')) + 1;
  require(columns >= 2 && line.rfind("target") == line.size() - 6, ErrorKind::Io,
          path.string() + ": header must be x0,...,x{d-1},target");

  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Index count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorKind::Io, path.string() + ": bad number '" + cell + "' on data row " +
                                std::to_string(rows + 1));
      }
      ++count;
    }
    require(count == columns, ErrorKind::Io,
            path.string() + ": row " + std::to_string(rows + 1) + " has " +
                std::to_string(count) + " cells, expected " + std::to_string(columns));
    ++rows;
  }
  require(rows >= 1, ErrorKind::Io, path.string() + ": no data rows");
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Mat all = Eigen::Map<const RowMat>(values.data(), rows, columns);
  return {all.leftCols(columns - 1), all.col(columns - 1)};
}

namespace {

// x-player: model weights w. y-player: one perturbed target y'_i per sample.
class RobustRegression final : public Problem {
 public:
  RobustRegression(RegressionData data, const RegressionSpec& spec, ProblemConstants constants)
      : data_(std::move(data)),
        inputs_(data_.features.transpose()),
        spec_(spec),
        constants_(constants),
        dims_{spec.model.param_count(), data_.features.rows()} {}

  std::string name() const override { return "robust_regression"; }
  Dims dims() const override { return dims_; }
  const ProblemConstants& constants() const override { return constants_; }

  double value(const JointPoint& u) const override {
    check_point(u);
    const Vec f = predict(u.x);
    const double fit = 0.5 * (f - u.y).squaredNorm();
    const double pull = 0.5 * spec_.lambda * (u.y - data_.targets).squaredNorm();
    return (fit - pull) / n();
  }

  GradSample exact_grad(const JointPoint& u) const override {
    check_point(u);
    const Vec f = predict(u.x);
    const Vec resid = f - u.y;
    const Mat out_grad = resid.transpose() / n();
    GradSample g;
    g.gx = mlp::backward_batch(spec_.model, u.x, inputs_, out_grad).param_grad;
    g.gy = (-resid - spec_.lambda * (u.y - data_.targets)) / n();
    return g;
  }

  // Minibatch drawn with replacement. Placing (1/b) dl_i/dy'_i on each sampled
  // coordinate makes the y-block unbiased for the (1/n)-scaled gradient.
  GradSample stoch_grad(const JointPoint& u, RngStream& rng) const override {
    check_point(u);
    const int b = spec_.batch;
    std::vector<Index> idx(b);
    for (auto& i : idx) i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n())));

    Mat batch(inputs_.rows(), b);
    for (int s = 0; s < b; ++s) batch.col(s) = inputs_.col(idx[s]);
    const Vec f = mlp::forward_batch(spec_.model, u.x, batch).row(0).transpose();

    Mat out_grad(1, b);
    GradSample g;
    g.gy = Vec::Zero(dims_.n);
    for (int s = 0; s < b; ++s) {
      const Index i = idx[s];
      const double resid = f(s) - u.y(i);
      out_grad(0, s) = resid / b;
      g.gy(i) += (-resid - spec_.lambda * (u.y(i) - data_.targets(i))) / b;
    }
    g.gx = mlp::backward_batch(spec_.model, u.x, batch, out_grad).param_grad;
    return g;
  }

  std::optional<PhiValue> closed_phi(const Vec& x) const override {
    require(x.size() == dims_.m, ErrorKind::Dimension, "robust_regression: w dimension mismatch");
    const Vec f = predict(x);
    Vec y_star = (spec_.lambda * data_.targets - f) / (spec_.lambda - 1.0);
    const double phi = value({x, y_star});
    return PhiValue{phi, std::move(y_star)};
  }

  /// Mean squared error of the model against the clean targets.
  double loss(const JointPoint& u) const override {
    check_point(u);
    return 0.5 * (predict(u.x) - data_.targets).squaredNorm() / n();
  }

  bool mlp_backed() const override { return true; }
  bool nonsmooth() const override {
    return spec_.model.activation == mlp::Activation::Relu && spec_.model.num_layers() > 1;
  }

  JointPoint sample_point(RngStream& rng) const override {
    return {mlp::init_params(spec_.model, rng, spec_.init_scale),
            data_.targets + gauss_vec(rng, dims_.n, 1.0)};
  }

  JointPoint default_init(RngStream& rng) const override {
    return {mlp::init_params(spec_.model, rng, spec_.init_scale), data_.targets};
  }

  nlohmann::json describe() const override {
    return {{"family", name()},
            {"n", data_.features.rows()},
            {"d", data_.features.cols()},
            {"lambda", spec_.lambda},
            {"batch", spec_.batch},
            {"model_layers", spec_.model.layer_sizes},
            {"activation", mlp::to_string(spec_.model.activation)},
            {"sigma", constants_.sigma()},
            {"constants_source", spec_.sigma ? "user-supplied estimates"
                                             : "user-supplied l1 and mu; sigma from a pilot estimate"}};
  }

  const RegressionData& data() const { return data_; }

  /// Exact E|stoch_grad - exact_grad|^2 at u. With indices drawn uniformly
  /// with replacement this is (mean_i |G_i|^2 - |grad F|^2) / b, where G_i is
  /// sample i's gradient (model block plus its own y' coordinate).
  double noise_sq(const JointPoint& u) const {
    const Vec f = predict(u.x);
    double sum_sq = 0.0;
    for (Index i = 0; i < dims_.n; ++i) {
      const double resid = f(i) - u.y(i);
      const Vec gw = mlp::backward(spec_.model, u.x, inputs_.col(i), Vec::Constant(1, resid)).param_grad;
      const double gy = -resid - spec_.lambda * (u.y(i) - data_.targets(i));
      sum_sq += gw.squaredNorm() + gy * gy;
    }
    const GradSample g = exact_grad(u);
    const double full_sq = g.gx.squaredNorm() + g.gy.squaredNorm();
    return std::max(0.0, sum_sq / n() - full_sq) / spec_.batch;
  }

  void set_sigma(double sigma) {
    constants_ = ProblemConstants::make(constants_.l1(), constants_.mu(), sigma);
  }

 protected:
  bool closed_phi_available() const override { return true; }

 private:
  double n() const { return static_cast<double>(dims_.n); }

  Vec predict(const Vec& w) const {
    return mlp::forward_batch(spec_.model, w, inputs_).row(0).transpose();
  }

  RegressionData data_;
  Mat inputs_;  // d x n, one column per sample
  RegressionSpec spec_;
  ProblemConstants constants_;
  Dims dims_;
};

}  // namespace

ProblemPtr make_robust_regression(RegressionData data, const RegressionSpec& spec) {
  require(spec.lambda > 1.0, ErrorKind::Parameter,
          "robust_regression: lambda must be > 1 (the inner problem is degenerate otherwise)");
  require(spec.batch >= 1, ErrorKind::Parameter, "robust_regression: batch must be >= 1");
  require(spec.init_scale > 0.0, ErrorKind::Parameter, "robust_regression: init_scale must be > 0");
  const Index n = data.features.rows();
  const Index d = data.features.cols();
  require(n >= 1 && d >= 1, ErrorKind::Parameter, "robust_regression: empty dataset");
  require(data.targets.size() == n, ErrorKind::Dimension,
          "robust_regression: targets length differs from the number of samples");
  require(data.features.allFinite() && data.targets.allFinite(), ErrorKind::Parameter,
          "robust_regression: dataset has non-finite entries");
  spec.model.validate();
  require(spec.model.input_size() == d && spec.model.output_size() == 1, ErrorKind::Dimension,
          "robust_regression: model must map R^" + std::to_string(d) + " to R");
  const double mu = spec.mu.value_or((spec.lambda - 1.0) / static_cast<double>(n));
  auto constants = ProblemConstants::make(spec.l1, mu, spec.sigma.value_or(0.0));
  auto problem = std::make_shared<RobustRegression>(std::move(data), spec, constants);
  if (!spec.sigma) {
    RngStream pilot(0x9110ull, 0);
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) worst = std::max(worst, problem->noise_sq(problem->sample_point(pilot)));
    problem->set_sigma(1.5 * std::sqrt(worst));
  }
  return problem;
}

const RegressionData* regression_data(const Problem& problem) {
  if (const auto* r = dynamic_cast<const RobustRegression*>(&problem)) return &r->data();
  return nullptr;
}

}  // namespace rsgda
