#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rsgda/numcore.hpp"

namespace rsgda::mlp {

enum class Activation { Tanh, Relu };

Activation parse_activation(const std::string& name);
const char* to_string(Activation act) noexcept;

/// Layer widths from input to output. The activation applies to hidden layers
/// only; the output layer is affine.
struct MlpArch {
  std::vector<int> layer_sizes;
  Activation activation = Activation::Tanh;

  void validate() const;
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  /// Sum over layers of in*out + out.
  Index param_count() const;
};

/// Flat parameter vector: per layer the row-major weight matrix followed by the
/// bias.
using MlpParams = Vec;

/// Weights ~ N(0, scale^2 / fan_in), biases zero.
MlpParams init_params(const MlpArch& arch, RngStream& rng, double scale);

Vec forward(const MlpArch& arch, const MlpParams& params, const Vec& input);

struct Backward {
  Vec param_grad;
  Vec input_grad;
};

/// Gradients of <out_grad, forward(input)> with respect to params and input.
Backward backward(const MlpArch& arch, const MlpParams& params, const Vec& input,
                  const Vec& out_grad);

/// Column-per-sample variants. backward_batch sums the parameter gradient over
/// the batch and returns one input-gradient column per sample.
Mat forward_batch(const MlpArch& arch, const MlpParams& params, const Mat& inputs);

struct BackwardBatch {
  Vec param_grad;
  Mat input_grad;
};

BackwardBatch backward_batch(const MlpArch& arch, const MlpParams& params, const Mat& inputs,
                             const Mat& out_grads);

/// Smallest |pre-activation| over hidden units, used to skip kink-adjacent
/// coordinates when finite-differencing relu nets.
double min_abs_preactivation(const MlpArch& arch, const MlpParams& params, const Vec& input);

void save_params_csv(const std::filesystem::path& path, const MlpParams& params);
MlpParams load_params_csv(const std::filesystem::path& path);

}  // namespace rsgda::mlp
