#include "rsgda/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "rsgda/errors.hpp"

namespace rsgda::mlp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMat>;
using Weights = Eigen::Map<RowMat>;

struct LayerView {
  Index offset;
  int in;
  int out;
};

std::vector<LayerView> layout(const MlpArch& arch) {
  std::vector<LayerView> layers;
  Index offset = 0;
  for (std::size_t l = 0; l + 1 < arch.layer_sizes.size(); ++l) {
    const int in = arch.layer_sizes[l];
    const int out = arch.layer_sizes[l + 1];
    layers.push_back({offset, in, out});
    offset += static_cast<Index>(in) * out + out;
  }
  return layers;
}

void check_params(const MlpArch& arch, const MlpParams& params) {
  arch.validate();
  if (params.size() != arch.param_count()) {
    fail(ErrorKind::Dimension, "mlp: parameter vector has length " + std::to_string(params.size()) +
                                   ", architecture needs " + std::to_string(arch.param_count()));
  }
}

void activate(Activation act, Mat& z) {
  if (act == Activation::Tanh) {
    z = z.array().tanh().matrix();
  } else {
    z = z.cwiseMax(0.0);
  }
}

// Derivative expressed through the post-activation value.
Mat activation_slope(Activation act, const Mat& post) {
  if (act == Activation::Tanh) return (1.0 - post.array().square()).matrix();
  return (post.array() > 0.0).cast<double>().matrix();
}

// Forward pass that keeps every layer's post-activation (index 0 is the input).
std::vector<Mat> forward_trace(const MlpArch& arch, const MlpParams& params, const Mat& inputs) {
  const auto layers = layout(arch);
  std::vector<Mat> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    ConstWeights w(params.data() + L.offset, L.out, L.in);
    Eigen::Map<const Vec> b(params.data() + L.offset + static_cast<Index>(L.in) * L.out, L.out);
    Mat z = w * acts.back();
    z.colwise() += b;
    if (l + 1 < layers.size()) activate(arch.activation, z);
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  fail(ErrorKind::Parameter, "unknown activation '" + name + "' (expected tanh or relu)");
}

const char* to_string(Activation act) noexcept {
  return act == Activation::Tanh ? "tanh" : "relu";
}

void MlpArch::validate() const {
  require(layer_sizes.size() >= 2, ErrorKind::Parameter,
          "mlp: architecture needs at least input and output sizes");
  for (int s : layer_sizes) require(s >= 1, ErrorKind::Parameter, "mlp: layer sizes must be >= 1");
}

Index MlpArch::param_count() const {
  Index total = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    total += static_cast<Index>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return total;
}

MlpParams init_params(const MlpArch& arch, RngStream& rng, double scale) {
  arch.validate();
  require(scale > 0.0, ErrorKind::Parameter, "init_params: scale must be positive");
  MlpParams params = MlpParams::Zero(arch.param_count());
  for (const auto& L : layout(arch)) {
    const double std = scale / std::sqrt(static_cast<double>(L.in));
    for (Index i = 0; i < static_cast<Index>(L.in) * L.out; ++i) {
      params(L.offset + i) = std * rng.normal();
    }
  }
  return params;
}

Mat forward_batch(const MlpArch& arch, const MlpParams& params, const Mat& inputs) {
  check_params(arch, params);
  require(inputs.rows() == arch.input_size(), ErrorKind::Dimension,
          "mlp forward: input has " + std::to_string(inputs.rows()) + " rows, expected " +
              std::to_string(arch.input_size()));
  return std::move(forward_trace(arch, params, inputs).back());
}

Vec forward(const MlpArch& arch, const MlpParams& params, const Vec& input) {
  return forward_batch(arch, params, input).col(0);
}

BackwardBatch backward_batch(const MlpArch& arch, const MlpParams& params, const Mat& inputs,
                             const Mat& out_grads) {
  check_params(arch, params);
  require(inputs.rows() == arch.input_size(), ErrorKind::Dimension,
          "mlp backward: input dimension mismatch");
  require(out_grads.rows() == arch.output_size() && out_grads.cols() == inputs.cols(),
          ErrorKind::Dimension, "mlp backward: output-gradient dimension mismatch");

  const auto layers = layout(arch);
  const auto acts = forward_trace(arch, params, inputs);

  BackwardBatch out;
  out.param_grad = Vec::Zero(params.size());
  Mat delta = out_grads;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& L = layers[li];
    const Mat& below = acts[li];
    Weights gw(out.param_grad.data() + L.offset, L.out, L.in);
    gw.noalias() = delta * below.transpose();
    out.param_grad.segment(L.offset + static_cast<Index>(L.in) * L.out, L.out) =
        delta.rowwise().sum();

    ConstWeights w(params.data() + L.offset, L.out, L.in);
    Mat up = w.transpose() * delta;
    if (li > 0) up.array() *= activation_slope(arch.activation, below).array();
    delta = std::move(up);
  }
  out.input_grad = std::move(delta);
  return out;
}

Backward backward(const MlpArch& arch, const MlpParams& params, const Vec& input,
                  const Vec& out_grad) {
  auto b = backward_batch(arch, params, input, out_grad);
  return {std::move(b.param_grad), b.input_grad.col(0)};
}

double min_abs_preactivation(const MlpArch& arch, const MlpParams& params, const Vec& input) {
  check_params(arch, params);
  const auto layers = layout(arch);
  double best = std::numeric_limits<double>::infinity();
  Vec a = input;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto& L = layers[l];
    ConstWeights w(params.data() + L.offset, L.out, L.in);
    Eigen::Map<const Vec> b(params.data() + L.offset + static_cast<Index>(L.in) * L.out, L.out);
    Vec z = w * a + b;
    best = std::min(best, z.cwiseAbs().minCoeff());
    Mat zm = z;
    activate(arch.activation, zm);
    a = zm.col(0);
  }
  return best;
}

void save_params_csv(const std::filesystem::path& path, const MlpParams& params) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  char buf[40];
  for (Index i = 0; i < params.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", params(i));
    out << buf;
  }
}

MlpParams load_params_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot read " + path.string());
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      fail(ErrorKind::Io, "malformed parameter line '" + line + "' in " + path.string());
    }
  }
  return Eigen::Map<Vec>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace rsgda::mlp
