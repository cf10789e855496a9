#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace transgeo {

// Tolerances used across the library. Lengths are in the input's length units;
// all test geometry is unit-scale, so absolute and relative thresholds coincide.
inline constexpr double eps_geom = 1e-9;  ///< incidence / dedup tolerance (length units)
inline constexpr double eps_num = 1e-9;   ///< relative tolerance for numeric identities
inline constexpr double eps_gp = 1e-7;    ///< general-position certification margin
inline constexpr double det_tol = 1e-12;  ///< face-determinant annihilation threshold

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;
template <int D>
using Mat = Eigen::Matrix<double, D, D>;
template <int D>
using MatX = Eigen::Matrix<double, D, Eigen::Dynamic>;

/// Volume of the n-dimensional unit ball.
inline double unit_ball_volume(int n) {
  return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

/// |a - b| measured against max(1, |a|, |b|).
inline bool almost_equal(double a, double b, double rel = eps_num) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Closed halfspace {x : normal . x <= offset}; normals are kept unit length.
template <int D>
struct Halfspace {
  Vec<D> normal;
  double offset;
};

/// Axis-aligned box, possibly degenerate (lo == hi along an axis).
template <int D>
struct Box {
  Vec<D> lo, hi;

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < D; ++i) v *= std::max(0.0, hi[i] - lo[i]);
    return v;
  }
  bool contains(const Vec<D>& x, double tol = eps_geom) const {
    for (int i = 0; i < D; ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
  }
  Vec<D> center() const { return 0.5 * (lo + hi); }
  Box grown(double r) const { return {lo.array() - r, hi.array() + r}; }
  Box eroded(double r) const { return grown(-r); }

  std::vector<Halfspace<D>> halfspaces() const {
    std::vector<Halfspace<D>> hs;
    hs.reserve(2 * D);
    for (int i = 0; i < D; ++i) {
      Vec<D> n = Vec<D>::Zero();
      n[i] = 1.0;
      hs.push_back({n, hi[i]});
      hs.push_back({-n, -lo[i]});
    }
    return hs;
  }

  static Box cube(double half_side) {
    return {Vec<D>::Constant(-half_side), Vec<D>::Constant(half_side)};
  }
};

/// Monte Carlo estimate: sample mean, standard error, replication count, seed.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  long replications = 0;
  std::uint64_t seed = 0;

  double z_score(double reference) const {
    return se > 0.0 ? (mean - reference) / se : (mean == reference ? 0.0 : INFINITY);
  }
};

/// Accumulates a stream of values into an Estimate.
class Accumulator {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  long count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  Estimate estimate(std::uint64_t seed = 0) const {
    Estimate e;
    e.mean = mean_;
    e.se = n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    e.replications = n_;
    e.seed = seed;
    return e;
  }

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Orthonormal basis of the column span of A (D x rank), rank detected at `tol`.
template <int D>
MatX<D> orthonormal_span(const MatX<D>& a, double tol = eps_geom) {
  if (a.cols() == 0) return MatX<D>(D, 0);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(tol);
  const int r = static_cast<int>(qr.rank());
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(D, r);
  return q;
}

/// Orthonormal basis of the orthogonal complement of span(B); B must have
/// orthonormal (or at least independent) columns.
template <int D>
MatX<D> orthonormal_complement(const MatX<D>& b) {
  const int k = static_cast<int>(b.cols());
  if (k == 0) return Mat<D>::Identity();
  if (k >= D) return MatX<D>(D, 0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(D - k);
}

/// Volume of the parallelepiped spanned by the columns of M (Gram determinant).
template <int D>
double gram_volume(const MatX<D>& m) {
  const int c = static_cast<int>(m.cols());
  if (c == 0) return 1.0;
  if (c > D) return 0.0;
  if (c == D) return std::abs(Eigen::MatrixXd(m).determinant());
  const Eigen::MatrixXd g = m.transpose() * m;
  return std::sqrt(std::max(0.0, g.determinant()));
}

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace transgeo
