#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace rsgda {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Euclidean inner product; throws a dimension error on length mismatch.
double dot(const Vec& a, const Vec& b);

double norm2(const Vec& a);

bool all_finite(const Vec& a);

/// Concatenation (x, y) of the two player blocks.
Vec concat(const Vec& a, const Vec& b);

/// Largest singular value. Zero for empty matrices.
double spectral_norm(const Mat& a);

/// Moore-Penrose pseudoinverse of a symmetric matrix through its
/// eigendecomposition. Eigenvalues at or below cutoff_ratio * |lambda_max| are
/// treated as zero.
struct SymmetricPinv {
  Mat pinv;
  double lambda_max = 0.0;
  double lambda_min_positive = 0.0;  // zero when the matrix is null
  double lambda_min = 0.0;
  Index rank = 0;
};

SymmetricPinv symmetric_pinv(const Mat& a, double cutoff_ratio = 1e-10);

/// Counter-based stream built on Philox4x32-10. A stream is a pure function of
/// (base_seed, stream_id, counter); copying a stream replays its future draws.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id)
      : seed_(base_seed), stream_(stream_id) {}

  std::uint64_t base_seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1).
  double uniform();

  double normal();

  bool bernoulli(double p);

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Raw Philox4x32-10 block, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int used_ = 2;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// i.i.d. N(0, std^2) entries drawn from rng.
Vec gauss_vec(RngStream& rng, Index dim, double std);

/// FNV-1a, used for config provenance hashes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace rsgda
