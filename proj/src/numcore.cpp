#include "rsgda/numcore.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "rsgda/errors.hpp"

namespace rsgda {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Construction: return "construction error";
    case ErrorKind::OracleViolation: return "oracle violation";
    case ErrorKind::Capability: return "capability error";
    case ErrorKind::Constraint: return "constraint error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Diagnostic: return "diagnostic error";
    case ErrorKind::UndefinedRatio: return "undefined ratio";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::Dimension, "dot: length mismatch " + std::to_string(a.size()) +
                                   " vs " + std::to_string(b.size()));
  }
  return a.dot(b);
}

double norm2(const Vec& a) { return std::sqrt(a.dot(a)); }

bool all_finite(const Vec& a) { return a.allFinite(); }

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

SymmetricPinv symmetric_pinv(const Mat& a, double cutoff_ratio) {
  require(a.rows() == a.cols(), ErrorKind::Dimension, "symmetric_pinv: matrix is not square");
  SymmetricPinv out;
  const Index n = a.rows();
  out.pinv = Mat::Zero(n, n);
  if (n == 0) return out;

  Eigen::SelfAdjointEigenSolver<Mat> eig(a);
  const Vec& lam = eig.eigenvalues();
  const Mat& vecs = eig.eigenvectors();
  out.lambda_min = lam(0);
  out.lambda_max = lam.cwiseAbs().maxCoeff();
  const double cutoff = cutoff_ratio * out.lambda_max;
  for (Index i = 0; i < n; ++i) {
    if (lam(i) > cutoff) {
      if (out.rank == 0) out.lambda_min_positive = lam(i);
      ++out.rank;
      out.pinv.noalias() += (1.0 / lam(i)) * vecs.col(i) * vecs.col(i).transpose();
    }
  }
  return out;
}

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

__extension__ using u128 = unsigned __int128;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

}  // namespace

std::array<std::uint32_t, 4> RngStream::philox(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t RngStream::next_u64() {
  if (used_ == 2) {
    const auto out = philox(
        {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
         static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
        {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    block_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    block_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    ++counter_;
    used_ = 0;
  }
  return block_[used_++];
}

double RngStream::uniform() {
  // 53 random bits centred in their cell, so 0 and 1 are never returned.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::uint64_t RngStream::below(std::uint64_t n) {
  require(n > 0, ErrorKind::Parameter, "RngStream::below: empty range");
  // Lemire's multiply-shift with rejection keeps the draw unbiased.
  for (;;) {
    const std::uint64_t x = next_u64();
    const u128 m = static_cast<u128>(x) * n;
    const auto low = static_cast<std::uint64_t>(m);
    if (low >= n || low >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
  }
}

Vec gauss_vec(RngStream& rng, Index dim, double std) {
  require(std >= 0.0, ErrorKind::Parameter, "gauss_vec: negative standard deviation");
  require(dim >= 0, ErrorKind::Dimension, "gauss_vec: negative dimension");
  Vec out(dim);
  if (std == 0.0) {
    out.setZero();
    return out;
  }
  for (Index i = 0; i < dim; ++i) out(i) = std * rng.normal();
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace rsgda
