#pragma once

// Philox4x32-10 counter-based generator. Keyed by the config seed so every
// sampled quantity is a pure function of (seed, stream, draw index).

#include "taw/linalg.hpp"

#include <array>
#include <cmath>
#include <cstdint>

namespace taw {

class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) {
    key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    ctr_ = {0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  }

  static Block round10(Block c, std::array<std::uint32_t, 2> k) {
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
      const Block n = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                       static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      c = n;
      k[0] += kW0;
      k[1] += kW1;
    }
    return c;
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      buf_ = round10(ctr_, key_);
      if (++ctr_[0] == 0) ++ctr_[1];
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // 53 random bits in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; no cached second value so the stream position stays simple.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  cd complex_normal() { return cd(normal(), normal()) / std::sqrt(2.0); }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  std::array<std::uint32_t, 2> key_;
  Block ctr_;
  Block buf_{};
  int pos_ = 4;
};

inline Mat random_ginibre(Philox& rng, long r, long c) {
  Mat m(r, c);
  for (long j = 0; j < c; ++j)
    for (long i = 0; i < r; ++i) m(i, j) = rng.complex_normal();
  return m;
}

inline Vec random_vector(Philox& rng, long n) { return random_ginibre(rng, n, 1).col(0); }

inline Mat random_hermitian(Philox& rng, long n) { return herm_part(random_ginibre(rng, n, n)); }

// Haar unitary: QR of a Ginibre matrix with the phases of diag(R) removed.
inline Mat random_unitary(Philox& rng, long n) {
  const Mat g = random_ginibre(rng, n, n);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Mat r = qr.matrixQR();
  for (long i = 0; i < n; ++i) {
    const cd d = r(i, i);
    if (std::abs(d) > 0.0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

// Positive definite density with spectrum in [lo, hi].
inline Mat random_density(Philox& rng, long n, double lo = 0.5, double hi = 2.0) {
  const Mat u = random_unitary(rng, n);
  Vec ev(n);
  for (long i = 0; i < n; ++i) ev(i) = rng.uniform(lo, hi);
  return herm_part(u * ev.asDiagonal() * u.adjoint());
}

}  // namespace taw
