#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace vpblab {

/// 8-dimensional Sobol sequence (Joe-Kuo direction numbers) with an optional
/// seed-derived digital shift. Deterministic: point i depends only on (i, seed).
class Sobol8 {
 public:
  static constexpr int kDim = 8;
  static constexpr int kBits = 32;

  explicit Sobol8(std::uint64_t seed = 0) {
    // primitive polynomial degree s, coefficient word a, initial m values,
    // for dimensions 2..8 of the Joe-Kuo table; dimension 1 is van der Corput.
    struct Row { int s; std::uint32_t a; std::array<std::uint32_t, 5> m; };
    static constexpr Row rows[7] = {
        {1, 0, {1, 0, 0, 0, 0}},  {2, 1, {1, 3, 0, 0, 0}},
        {3, 1, {1, 3, 1, 0, 0}},  {3, 2, {1, 1, 1, 0, 0}},
        {4, 1, {1, 1, 3, 3, 0}},  {4, 4, {1, 3, 5, 13, 0}},
        {5, 2, {1, 1, 5, 5, 17}},
    };
    for (int b = 0; b < kBits; ++b) dir_[0][b] = 1u << (kBits - 1 - b);
    for (int d = 1; d < kDim; ++d) {
      const Row& r = rows[d - 1];
      for (int b = 0; b < r.s; ++b) dir_[d][b] = r.m[b] << (kBits - 1 - b);
      for (int b = r.s; b < kBits; ++b) {
        std::uint32_t v = dir_[d][b - r.s];
        v ^= v >> r.s;
        for (int k = 1; k < r.s; ++k)
          if ((r.a >> (r.s - 1 - k)) & 1u) v ^= dir_[d][b - k];
        dir_[d][b] = v;
      }
    }
    std::mt19937_64 rng(seed);
    for (int d = 0; d < kDim; ++d)
      shift_[d] = seed == 0 ? 0u : static_cast<std::uint32_t>(rng());
    state_.fill(0);
    index_ = 0;
  }

  /// Next point in [0,1)^8 (skips the all-zeros initial point when unshifted).
  void next(double* out) {
    const std::uint64_t i = index_ + 1;
    const int c = lowest_set_bit(i);
    for (int d = 0; d < kDim; ++d) {
      state_[d] ^= dir_[d][c];
      out[d] = (state_[d] ^ shift_[d]) * 0x1p-32;
    }
    ++index_;
  }

  /// Jump to the state where `count` points have already been drawn.
  void seek(std::uint64_t count) {
    state_.fill(0);
    // Gray-code of count gives the cumulative XOR of the first `count` steps.
    const std::uint64_t g = (count ^ (count >> 1));
    for (int b = 0; b < kBits; ++b)
      if ((g >> b) & 1u)
        for (int d = 0; d < kDim; ++d) state_[d] ^= dir_[d][b];
    index_ = count;
  }

 private:
  static int lowest_set_bit(std::uint64_t i) {
    int c = 0;
    while (!(i & 1u)) {
      i >>= 1;
      ++c;
    }
    return c;
  }

  std::array<std::array<std::uint32_t, kBits>, kDim> dir_{};
  std::array<std::uint32_t, kDim> shift_{};
  std::array<std::uint32_t, kDim> state_{};
  std::uint64_t index_ = 0;
};

/// Inverse standard-normal CDF (Acklam's rational approximation plus one
/// Halley step), accurate to ~1e-15 over (0,1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p outside (0,1)");
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

}  // namespace vpblab
