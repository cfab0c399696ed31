#include <cmath>
#include <set>

#include "doctest.h"
#include "rsgda/errors.hpp"
#include "rsgda/numcore.hpp"

using namespace rsgda;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
}  // namespace

TEST_CASE("dot product") {
  CHECK(dot(v2(1, 2), v2(3, 4)) == 11.0);
  CHECK(dot(v2(5, -7), Vec::Zero(2)) == 0.0);
  CHECK(dot(v2(1, 0), v2(0, 1)) == 0.0);
  CHECK_THROWS_AS(dot(v2(1, 2), Vec::Ones(3)), Error);
  try {
    dot(v2(1, 2), Vec::Ones(3));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Dimension);
  }
}

TEST_CASE("euclidean norm") {
  CHECK(norm2(v2(3, 4)) == 5.0);
  CHECK(norm2(Vec::Zero(3)) == 0.0);
  CHECK(norm2(Vec::Ones(4)) == 2.0);
}

TEST_CASE("philox known-answer vectors") {
  // Reference outputs of Philox4x32-10 published with the Random123 suite.
  auto zero = RngStream::philox({0, 0, 0, 0}, {0, 0});
  CHECK(zero == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  auto ones = RngStream::philox({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                {0xffffffffu, 0xffffffffu});
  CHECK(ones == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  auto pi = RngStream::philox({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              {0xa4093822u, 0x299f31d0u});
  CHECK(pi == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are deterministic and independent") {
  RngStream a(7, 1), b(7, 1), c(7, 2), d(8, 1);
  std::set<std::uint64_t> firsts;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    firsts.insert(va);
  }
  CHECK(firsts.size() == 100);
  RngStream a2(7, 1);
  CHECK(a2.next_u64() != c.next_u64());
  RngStream a3(7, 1);
  CHECK(a3.next_u64() != d.next_u64());

  // A copy replays the original's future draws.
  RngStream e(3, 3);
  e.normal();
  RngStream f = e;
  for (int i = 0; i < 10; ++i) CHECK(e.normal() == f.normal());
}

TEST_CASE("uniform, bernoulli and below stay in range") {
  RngStream r(1, 0);
  int heads = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK_UNARY(u >= 0.0);
    CHECK_UNARY(u < 1.0);
    heads += r.bernoulli(0.3) ? 1 : 0;
    CHECK(r.below(7) < 7);
  }
  const double se = std::sqrt(0.3 * 0.7 / n);
  CHECK(std::abs(heads / double(n) - 0.3) < 4 * se);
  CHECK(r.bernoulli(1.0));
  CHECK_FALSE(r.bernoulli(0.0));
}

TEST_CASE("gaussian vectors") {
  RngStream r(11, 4);
  CHECK(gauss_vec(r, 5, 0.0) == Vec::Zero(5));
  CHECK_THROWS_AS(gauss_vec(r, 5, -1.0), Error);

  RngStream s1(2, 9), s2(2, 9);
  CHECK(gauss_vec(s1, 6, 1.5) == gauss_vec(s2, 6, 1.5));

  // Mean of |v|^2/dim estimates std^2; Monte-Carlo standard error from the
  // chi-square variance 2 std^4 / dim per draw.
  const double sd = 1.7;
  const Index dim = 3;
  const int draws = 100000;
  RngStream r2(5, 5);
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) acc += gauss_vec(r2, dim, sd).squaredNorm() / dim;
  const double mean = acc / draws;
  const double se = std::sqrt(2.0 * std::pow(sd, 4) / dim / draws);
  CHECK(std::abs(mean - sd * sd) < 3 * se);
}

TEST_CASE("symmetric pseudoinverse") {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 4.0;
  const auto p = symmetric_pinv(a);
  CHECK(p.rank == 1);
  CHECK(p.pinv(0, 0) == doctest::Approx(0.25));
  CHECK(p.pinv(1, 1) == doctest::Approx(0.0));
  CHECK(p.lambda_min_positive == doctest::Approx(4.0));
  CHECK(p.lambda_max == doctest::Approx(4.0));
}

TEST_CASE("spectral norm and fnv") {
  Mat b(2, 2);
  b << 3, 0, 0, -5;
  CHECK(spectral_norm(b) == doctest::Approx(5.0));
  // Published FNV-1a 64 test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}
