#include <cmath>

#include "doctest.h"
#include "rsgda/errors.hpp"
#include "rsgda/mlp.hpp"

using namespace rsgda;
using namespace rsgda::mlp;

namespace {

Vec vec1(double a) { return Vec::Constant(1, a); }

// Central differences of <out_grad, forward(input)> over params and input.
Backward numeric_backward(const MlpArch& arch, const MlpParams& w, const Vec& in,
                          const Vec& og, double h) {
  auto f = [&](const MlpParams& ww, const Vec& xx) { return og.dot(forward(arch, ww, xx)); };
  Backward out{Vec(w.size()), Vec(in.size())};
  for (Index i = 0; i < w.size(); ++i) {
    MlpParams p = w, m = w;
    p[i] += h;
    m[i] -= h;
    out.param_grad[i] = (f(p, in) - f(m, in)) / (2 * h);
  }
  for (Index i = 0; i < in.size(); ++i) {
    Vec p = in, m = in;
    p[i] += h;
    m[i] -= h;
    out.input_grad[i] = (f(w, p) - f(w, m)) / (2 * h);
  }
  return out;
}

double rel_err(const Vec& num, const Vec& ana) {
  double worst = 0.0;
  for (Index i = 0; i < num.size(); ++i)
    worst = std::max(worst, std::abs(num[i] - ana[i]) / std::max(std::abs(ana[i]), 1e-8));
  return worst;
}

}  // namespace

TEST_CASE("parameter layout") {
  MlpArch arch{{2, 3, 1}, Activation::Tanh};
  CHECK(arch.param_count() == 13);
  CHECK_THROWS_AS(MlpArch({{2}, Activation::Tanh}).validate(), Error);
  CHECK_THROWS_AS(MlpArch({{2, 0, 1}, Activation::Tanh}).validate(), Error);
  CHECK(parse_activation("relu") == Activation::Relu);
  CHECK_THROWS_AS(parse_activation("sigmoid"), Error);
}

TEST_CASE("init_params") {
  MlpArch arch{{2, 3, 1}, Activation::Tanh};
  RngStream a(4, 0), b(4, 0);
  CHECK(init_params(arch, a, 1.0) == init_params(arch, b, 1.0));
  CHECK_THROWS_AS(init_params(arch, a, 0.0), Error);
  RngStream c(4, 0);
  const MlpParams tiny = init_params(arch, c, 1e-300);
  CHECK(forward(arch, tiny, Vec::Constant(2, 3.0)).norm() < 1e-250);
}

TEST_CASE("forward on small nets") {
  MlpArch lin{{2, 2}, Activation::Tanh};
  MlpParams ident(6);
  ident << 1, 0, 0, 1, 0, 0;  // W row-major then b
  const Vec x = (Vec(2) << 0.3, -2.0).finished();
  CHECK(forward(lin, ident, x) == x);

  MlpArch tanh_net{{2, 4, 1}, Activation::Tanh};
  CHECK(forward(tanh_net, MlpParams::Zero(tanh_net.param_count()), x)[0] == 0.0);

  MlpArch affine{{1, 1}, Activation::Tanh};
  MlpParams wb(2);
  wb << 2, 1;
  CHECK(forward(affine, wb, vec1(3))[0] == 7.0);
  CHECK_THROWS_AS(forward(affine, wb, Vec::Ones(2)), Error);
}

TEST_CASE("backward on the affine net") {
  MlpArch affine{{1, 1}, Activation::Tanh};
  MlpParams wb(2);
  wb << 2, 1;
  const Backward g = backward(affine, wb, vec1(3), vec1(1));
  CHECK(g.param_grad[0] == 3.0);
  CHECK(g.param_grad[1] == 1.0);
  CHECK(g.input_grad[0] == 2.0);
  const Backward z = backward(affine, wb, vec1(3), vec1(0));
  CHECK(z.param_grad.isZero());
  CHECK(z.input_grad.isZero());
  CHECK_THROWS_AS(backward(affine, wb, vec1(3), Vec::Ones(2)), Error);
}

TEST_CASE("backward matches finite differences on random nets") {
  RngStream rng(99, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const bool relu = trial % 2 == 1;
    MlpArch arch{{3, 2 + trial % 4, 3, 2}, relu ? Activation::Relu : Activation::Tanh};
    const MlpParams w = init_params(arch, rng, 1.0);
    const Vec in = gauss_vec(rng, 3, 1.0);
    const Vec og = gauss_vec(rng, 2, 1.0);
    if (relu && min_abs_preactivation(arch, w, in) < 1e-4) continue;  // kink-adjacent
    const Backward ana = backward(arch, w, in, og);
    const Backward num = numeric_backward(arch, w, in, og, 1e-5);
    const double tol = relu ? 1e-5 : 1e-6;
    CHECK(rel_err(num.param_grad, ana.param_grad) <= tol);
    CHECK(rel_err(num.input_grad, ana.input_grad) <= tol);
  }
}

TEST_CASE("batched passes agree with per-sample passes") {
  RngStream rng(5, 1);
  MlpArch arch{{2, 5, 1}, Activation::Tanh};
  const MlpParams w = init_params(arch, rng, 1.0);
  Mat inputs(2, 4);  // one sample per column
  for (Index i = 0; i < 4; ++i) inputs.col(i) = gauss_vec(rng, 2, 1.0);
  const Mat outs = forward_batch(arch, w, inputs);
  Mat og(1, 4);
  og << 0.5, -1, 2, 0.25;
  const BackwardBatch bb = backward_batch(arch, w, inputs, og);
  Vec acc = Vec::Zero(w.size());
  for (Index i = 0; i < 4; ++i) {
    const Vec xi = inputs.col(i);
    CHECK(outs(0, i) == doctest::Approx(forward(arch, w, xi)[0]).epsilon(1e-14));
    const Backward b = backward(arch, w, xi, og.col(i));
    acc += b.param_grad;
    CHECK((bb.input_grad.col(i) - b.input_grad).norm() < 1e-13);
  }
  CHECK((acc - bb.param_grad).norm() < 1e-12);
}
