#pragma once

#include <cmath>
#include <cstdint>

#include "transgeo/core.hpp"

namespace transgeo {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based generator: output i is a fixed hash of (key, i), so any
/// (seed, stream) pair yields a reproducible sequence independent of how the
/// consuming loops are partitioned.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(detail::mix64(detail::mix64(seed) ^ detail::mix64(0x5851f42d4c957f2dULL + stream))) {}

  std::uint64_t next_u64() { return detail::mix64(key_ + 0x9e3779b97f4a7c15ULL * ++ctr_); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Exact Poisson draw via the sum-of-exponentials representation.
  long poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    long k = 0;
    double s = -std::log1p(-uniform());
    while (s <= mean) {
      ++k;
      s += -std::log1p(-uniform());
    }
    return k;
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

template <int D>
Vec<D> sample_box(Rng& rng, const Box<D>& b) {
  Vec<D> x;
  for (int i = 0; i < D; ++i) x[i] = rng.uniform(b.lo[i], b.hi[i]);
  return x;
}

inline Mat<2> rotation2(double theta) {
  Mat<2> r;
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

/// Haar-uniform rotation. d=2: uniform angle; d=3: uniform unit quaternion.
template <int D>
Mat<D> random_rotation(Rng& rng);

template <>
inline Mat<2> random_rotation<2>(Rng& rng) {
  return rotation2(rng.uniform(0.0, 2.0 * M_PI));
}

template <>
inline Mat<3> random_rotation<3>(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t2 = 2.0 * M_PI * u2, t3 = 2.0 * M_PI * u3;
  const double x = a * std::sin(t2), y = a * std::cos(t2);
  const double z = b * std::sin(t3), w = b * std::cos(t3);
  Mat<3> r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

template <int D>
Vec<D> random_unit(Rng& rng);

template <>
inline Vec<2> random_unit<2>(Rng& rng) {
  const double t = rng.uniform(0.0, 2.0 * M_PI);
  return Vec<2>(std::cos(t), std::sin(t));
}

template <>
inline Vec<3> random_unit<3>(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double t = rng.uniform(0.0, 2.0 * M_PI);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Vec<3>(r * std::cos(t), r * std::sin(t), z);
}

}  // namespace transgeo
