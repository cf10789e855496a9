#pragma once

#include <numbers>
#include <optional>
#include <vector>

#include "transgeo/polytope.hpp"

namespace transgeo {

/// Closed convex cone in structured form: an orthonormal basis of its
/// lineality space plus unit generators of the pointed part, which are
/// orthogonal to the lineality space. Every normal cone and every valid
/// Minkowski sum of normal cones is representable this way.
template <int D>
struct Cone {
  MatX<D> lineality{D, 0};
  std::vector<Vec<D>> gens;
};

/// Kinds of intersections of a structured cone with the unit sphere.
enum class SectionKind {
  Empty,        ///< cone is {0}
  Point,        ///< single direction
  PointPair,    ///< antipodal pair (1-dim lineality)
  Arc,          ///< great-circle arc, possibly a half circle
  GreatCircle,  ///< full great circle (2-dim lineality)
  Lune,         ///< wedge between two half great circles
  Polygon,      ///< spherical polygon (pointed full-rank cone in R^3)
  Hemisphere,   ///< half sphere
  Sphere        ///< all of S^2
};

/// Intersection of a cone with the unit sphere in chart form.
///  Point:       verts = {u}
///  PointPair:   verts = {v, -v}
///  Arc:         verts = {a, b}; axis = unit tangent at a; angle in (0, pi]
///  GreatCircle: axis = normal of the circle's plane
///  Lune:        verts = {g1, g2} boundary midpoints, axis = pole; angle = dihedral
///  Polygon:     verts = extreme directions in ccw cycle order
///  Hemisphere:  axis = center direction
template <int D>
struct SphericalSection {
  SectionKind kind = SectionKind::Empty;
  std::vector<Vec<D>> verts;
  Vec<D> axis = Vec<D>::Zero();
  double angle = 0.0;
};

/// Intrinsic dimension of a section (-1 for the empty section).
inline int section_dimension(SectionKind k) {
  switch (k) {
    case SectionKind::Empty:
      return -1;
    case SectionKind::Point:
    case SectionKind::PointPair:
      return 0;
    case SectionKind::Arc:
    case SectionKind::GreatCircle:
      return 1;
    default:
      return 2;
  }
}

/// Total measure of the s-dimensional unit sphere (counting measure for s=0).
inline double sphere_total_measure(int s) {
  switch (s) {
    case 0:
      return 2.0;
    case 1:
      return 2.0 * std::numbers::pi;
    case 2:
      return 4.0 * std::numbers::pi;
    default:
      throw std::invalid_argument("sphere_total_measure: bad dimension");
  }
}

// ---------------------------------------------------------------------------
// Normal cones
// ---------------------------------------------------------------------------

/// Outer normal cone of a face: facet normals of the facets containing the
/// face generate the pointed part; the affine hull's orthogonal complement is
/// the lineality space.
template <int D>
Cone<D> normal_cone(const FaceRef<D>& fr) {
  Cone<D> c;
  c.lineality = orthonormal_complement<D>(fr.poly->aff_basis);
  for (int fid : fr.face().facets) c.gens.push_back(fr.poly->facets[fid].normal);
  return c;
}

// ---------------------------------------------------------------------------
// Pointedness via the nearest point of the generator hull
// ---------------------------------------------------------------------------

namespace detail {

/// Nearest point of conv(pts) to the origin, by enumerating support subsets of
/// size <= D+1 (exact for points in R^D by Caratheodory's theorem).
template <int D>
Vec<D> min_norm_point(const std::vector<Vec<D>>& pts) {
  const int n = static_cast<int>(pts.size());
  double best = INFINITY;
  Vec<D> bp = Vec<D>::Zero();
  std::vector<int> subset;
  auto eval_subset = [&]() {
    const int k = static_cast<int>(subset.size());
    Eigen::MatrixXd sys(k + 1, k + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sys(i, j) = pts[subset[i]].dot(pts[subset[j]]);
    for (int i = 0; i < k; ++i) sys(i, k) = sys(k, i) = 1.0;
    sys(k, k) = 0.0;
    rhs[k] = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (!lu.isInvertible()) return;
    Eigen::VectorXd sol = lu.solve(rhs);
    Vec<D> x = Vec<D>::Zero();
    for (int i = 0; i < k; ++i) {
      if (sol[i] < -1e-10) return;  // outside the simplex facet
      x += sol[i] * pts[subset[i]];
    }
    if (x.norm() < best) {
      best = x.norm();
      bp = x;
    }
  };
  auto rec = [&](auto&& self, int start, int remaining) -> void {
    if (!subset.empty()) eval_subset();
    if (remaining == 0) return;
    for (int i = start; i < n; ++i) {
      subset.push_back(i);
      self(self, i + 1, remaining - 1);
      subset.pop_back();
    }
  };
  rec(rec, 0, std::min(n, D + 1));
  return bp;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cone sums
// ---------------------------------------------------------------------------

/// Minkowski sum of structured cones, or nothing when the summed pointed part
/// fails to stay pointed over the combined lineality space.
template <int D>
std::optional<Cone<D>> try_cone_sum(const std::vector<Cone<D>>& cones) {
  int lin_cols = 0;
  for (const auto& c : cones) lin_cols += static_cast<int>(c.lineality.cols());
  MatX<D> stacked(D, lin_cols);
  int at = 0;
  for (const auto& c : cones) {
    stacked.middleCols(at, c.lineality.cols()) = c.lineality;
    at += static_cast<int>(c.lineality.cols());
  }
  Cone<D> out;
  out.lineality = orthonormal_span<D>(stacked);
  for (const auto& c : cones)
    for (const auto& g : c.gens) {
      Vec<D> h = g - out.lineality * (out.lineality.transpose() * g);
      const double len = h.norm();
      if (len <= eps_num) continue;  // absorbed by the lineality space
      h /= len;
      bool dup = false;
      for (const auto& e : out.gens)
        if (e.dot(h) > 1.0 - 1e-12) {
          dup = true;
          break;
        }
      if (!dup) out.gens.push_back(h);
    }
  if (out.gens.size() >= 2 &&
      detail::min_norm_point<D>(out.gens).norm() <= eps_num)
    return std::nullopt;  // generators positively span a line or more
  return out;
}

/// Minkowski sum of structured cones; throws std::domain_error when the sum
/// is not pointed over its lineality space.
template <int D>
Cone<D> cone_sum(const std::vector<Cone<D>>& cones) {
  auto c = try_cone_sum<D>(cones);
  if (!c) throw std::domain_error("cone_sum: pointed parts collapse");
  return *c;
}

// ---------------------------------------------------------------------------
// Sphere sections
// ---------------------------------------------------------------------------

namespace detail {

/// Extreme generators of a rank-2 cone: returns (e_lo, e_hi, spread). Angles
/// are measured from gens[0], so a pointed wedge has spread < pi.
template <int D>
std::tuple<Vec<D>, Vec<D>, double> wedge_extremes(const std::vector<Vec<D>>& gens) {
  const Vec<D> b1 = gens[0];
  Vec<D> b2 = Vec<D>::Zero();
  double blen = 0.0;
  for (const auto& g : gens) {
    const Vec<D> w = g - b1 * b1.dot(g);
    if (w.norm() > blen) {
      blen = w.norm();
      b2 = w;
    }
  }
  b2 /= blen;  // rank 2 guarantees blen > 0
  double lo = 0.0, hi = 0.0;
  Vec<D> e_lo = gens[0], e_hi = gens[0];
  for (const auto& g : gens) {
    const double phi = std::atan2(b2.dot(g), b1.dot(g));
    if (phi < lo) lo = phi, e_lo = g;
    if (phi > hi) hi = phi, e_hi = g;
  }
  return {e_lo, e_hi, hi - lo};
}

}  // namespace detail

/// Intersection of a structured cone with the unit sphere, classified into
/// chart form. Throws std::domain_error if the pointed part is not pointed.
template <int D>
SphericalSection<D> sphere_section(const Cone<D>& cone) {
  const int l = static_cast<int>(cone.lineality.cols());
  MatX<D> gm(D, static_cast<int>(cone.gens.size()));
  for (std::size_t i = 0; i < cone.gens.size(); ++i)
    gm.col(static_cast<int>(i)) = cone.gens[i];
  MatX<D> gbasis = orthonormal_span<D>(gm, 1e-10);
  const int r = static_cast<int>(gbasis.cols());

  SphericalSection<D> s;
  if (l + r > D) throw std::domain_error("sphere_section: inconsistent cone");
  if (l == 0 && r == 0) return s;  // Empty

  auto gens_aligned = [&]() {
    for (const auto& g : cone.gens)
      if (g.dot(cone.gens[0]) < 0.0)
        throw std::domain_error("sphere_section: opposite generators");
  };
  if (l == 0 && r == 1) {
    gens_aligned();
    s.kind = SectionKind::Point;
    s.verts = {cone.gens[0]};
    return s;
  }
  if (l == 1 && r == 0) {
    s.kind = SectionKind::PointPair;
    Vec<D> v = cone.lineality.col(0);
    s.verts = {v, -v};
    return s;
  }
  if (l == 1 && r == 1) {
    // half plane: half great circle from v through g to -v
    gens_aligned();
    s.kind = SectionKind::Arc;
    Vec<D> v = cone.lineality.col(0);
    s.verts = {v, -v};
    s.axis = cone.gens[0];
    s.angle = std::numbers::pi;
    return s;
  }
  if (l == 0 && r == 2) {
    auto [e1, e2, spread] = detail::wedge_extremes<D>(cone.gens);
    if (spread >= std::numbers::pi - 1e-12)
      throw std::domain_error("sphere_section: wedge opens to a half plane");
    s.kind = SectionKind::Arc;
    s.verts = {e1, e2};
    s.angle = spread;
    s.axis = (e2 - e1 * std::cos(spread)).normalized();  // tangent at e1
    return s;
  }
  if constexpr (D == 3) {
    if (l == 2 && r == 0) {
      s.kind = SectionKind::GreatCircle;
      s.axis = orthonormal_complement<3>(cone.lineality).col(0);
      s.angle = 2.0 * std::numbers::pi;
      return s;
    }
    if (l == 2 && r == 1) {
      gens_aligned();
      s.kind = SectionKind::Hemisphere;
      s.axis = cone.gens[0];
      return s;
    }
    if (l == 1 && r == 2) {
      auto [e1, e2, spread] = detail::wedge_extremes<D>(cone.gens);
      if (spread >= std::numbers::pi - 1e-12)
        throw std::domain_error("sphere_section: lune opens to a hemisphere");
      s.kind = SectionKind::Lune;
      s.verts = {e1, e2};
      s.axis = cone.lineality.col(0);
      s.angle = spread;
      return s;
    }
    if (l == 1 && r == 1) {
      gens_aligned();
      s.kind = SectionKind::Arc;
      Vec<3> v = cone.lineality.col(0);
      s.verts = {v, -v};
      s.axis = cone.gens[0];
      s.angle = std::numbers::pi;
      return s;
    }
    if (l == 3) {
      s.kind = SectionKind::Sphere;
      return s;
    }
    if (l == 0 && r == 3) {
      const Vec<3> m = detail::min_norm_point<3>(cone.gens);
      if (m.norm() <= eps_num)
        throw std::domain_error("sphere_section: cone is not pointed");
      const Vec<3> mi = m.normalized();
      // gnomonic projection onto the plane m.x = 1; hull vertices there are
      // exactly the extreme directions, in ccw cycle order
      MatX<3> plane = orthonormal_complement<3>(MatX<3>(mi));
      Vec<3> b1 = plane.col(0), b2 = plane.col(1);
      if (b1.cross(b2).dot(mi) < 0) std::swap(b1, b2);  // ccw seen from outside
      std::vector<Vec<2>> flat;
      for (const auto& g : cone.gens) {
        const double t = mi.dot(g);
        if (t <= eps_num) throw std::domain_error("sphere_section: cone is not pointed");
        flat.emplace_back(b1.dot(g) / t, b2.dot(g) / t);
      }
      std::vector<int> h = detail::hull2d(flat);
      s.kind = SectionKind::Polygon;
      for (int i : h) s.verts.push_back(cone.gens[i]);
      return s;
    }
  }
  if (l == 2 && r == 0) {  // D == 2: full unit circle
    s.kind = SectionKind::GreatCircle;
    s.angle = 2.0 * std::numbers::pi;
    return s;
  }
  throw std::domain_error("sphere_section: unsupported cone shape");
}

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

/// Spherical Lebesgue measure of the section in its own dimension; 0-dim
/// sections carry counting measure.
template <int D>
double spherical_measure(const SphericalSection<D>& s) {
  switch (s.kind) {
    case SectionKind::Empty:
      return 0.0;
    case SectionKind::Point:
      return 1.0;
    case SectionKind::PointPair:
      return 2.0;
    case SectionKind::Arc:
      return s.angle;
    case SectionKind::GreatCircle:
      return 2.0 * std::numbers::pi;
    case SectionKind::Hemisphere:
      return 2.0 * std::numbers::pi;
    case SectionKind::Lune:
      return 2.0 * s.angle;
    case SectionKind::Sphere:
      return 4.0 * std::numbers::pi;
    case SectionKind::Polygon: {
      // spherical excess: sum of interior angles minus (n-2) pi
      const int n = static_cast<int>(s.verts.size());
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const Vec<D>& prev = s.verts[(i + n - 1) % n];
        const Vec<D>& cur = s.verts[i];
        const Vec<D>& next = s.verts[(i + 1) % n];
        Vec<D> tp = (prev - cur * cur.dot(prev)).normalized();
        Vec<D> tn = (next - cur * cur.dot(next)).normalized();
        sum += std::acos(std::clamp(tp.dot(tn), -1.0, 1.0));
      }
      return sum - (n - 2) * std::numbers::pi;
    }
  }
  return 0.0;
}

/// Normalized external angle of a face: the measure of the normal cone's
/// sphere section divided by the total measure of the sphere of the same
/// dimension.
template <int D>
double external_angle(const FaceRef<D>& fr) {
  SphericalSection<D> s = sphere_section<D>(normal_cone<D>(fr));
  // the whole polytope has normal cone {0}: its external angle is 1 by convention
  if (s.kind == SectionKind::Empty) return fr.dim == D ? 1.0 : 0.0;
  return spherical_measure<D>(s) / sphere_total_measure(section_dimension(s.kind));
}

// ---------------------------------------------------------------------------
// First moments
// ---------------------------------------------------------------------------

namespace detail {

/// Integrates f over a flat triangle with a degree-5 seven-point rule,
/// subdividing adaptively until the local error estimate is below tol.
template <typename F>
double adaptive_triangle(const Vec<3>& p1, const Vec<3>& p2, const Vec<3>& p3, const F& f,
                         double coarse, double tol, int depth) {
  static const double w_c = 9.0 / 40.0;
  static const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
  static const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
  auto rule = [&](const Vec<3>& q1, const Vec<3>& q2, const Vec<3>& q3) {
    const double area = 0.5 * (q2 - q1).cross(q3 - q1).norm();
    double s = w_c * f((q1 + q2 + q3) / 3.0);
    s += w1 * (f(a1 * q1 + b1 * q2 + b1 * q3) + f(b1 * q1 + a1 * q2 + b1 * q3) +
               f(b1 * q1 + b1 * q2 + a1 * q3));
    s += w2 * (f(a2 * q1 + b2 * q2 + b2 * q3) + f(b2 * q1 + a2 * q2 + b2 * q3) +
               f(b2 * q1 + b2 * q2 + a2 * q3));
    return s * area;
  };
  if (depth == 0) coarse = rule(p1, p2, p3);
  const Vec<3> m12 = 0.5 * (p1 + p2), m23 = 0.5 * (p2 + p3), m13 = 0.5 * (p1 + p3);
  const double c1 = rule(p1, m12, m13), c2 = rule(m12, p2, m23), c3 = rule(m13, m23, p3),
               c4 = rule(m12, m23, m13);
  const double fine = c1 + c2 + c3 + c4;
  if (std::abs(fine - coarse) <= tol || depth >= 24) return fine;
  return adaptive_triangle(p1, m12, m13, f, c1, 0.25 * tol, depth + 1) +
         adaptive_triangle(m12, p2, m23, f, c2, 0.25 * tol, depth + 1) +
         adaptive_triangle(m13, m23, p3, f, c3, 0.25 * tol, depth + 1) +
         adaptive_triangle(m12, m23, m13, f, c4, 0.25 * tol, depth + 1);
}

/// Integral of <u, x0> over the spherical triangle with the given corners,
/// via central projection from the flat corner triangle.
inline double spherical_triangle_moment(const Vec<3>& p1, const Vec<3>& p2, const Vec<3>& p3,
                                        const Vec<3>& x0, double tol) {
  Vec<3> nrm = (p2 - p1).cross(p3 - p1);
  const double nl = nrm.norm();
  if (nl <= 1e-14) return 0.0;  // degenerate chord triangle
  nrm /= nl;
  const double h = std::abs(nrm.dot(p1));  // plane distance from the origin
  if (h <= 1e-14) return 0.0;
  auto f = [&](const Vec<3>& x) {
    const double r = x.norm();
    return x.dot(x0) / r * h / (r * r * r);
  };
  return adaptive_triangle(p1, p2, p3, f, 0.0, tol, 0);
}

}  // namespace detail

/// Integral of u |-> <u, x0> over the section with respect to its spherical
/// measure. Closed forms for 0/1-dimensional sections and for symmetric
/// sections; adaptive quadrature for lunes and spherical polygons.
template <int D>
double linear_moment(const SphericalSection<D>& s, const Vec<D>& x0) {
  switch (s.kind) {
    case SectionKind::Empty:
    case SectionKind::PointPair:
    case SectionKind::GreatCircle:
    case SectionKind::Sphere:
      return 0.0;  // antipodally symmetric
    case SectionKind::Point:
      return s.verts[0].dot(x0);
    case SectionKind::Arc:
      // u(t) = a cos t + w sin t on [0, angle]
      return s.verts[0].dot(x0) * std::sin(s.angle) +
             s.axis.dot(x0) * (1.0 - std::cos(s.angle));
    case SectionKind::Hemisphere:
      if constexpr (D == 3) return std::numbers::pi * s.axis.dot(x0);
      return 0.0;
    case SectionKind::Lune:
      if constexpr (D == 3) {
        const double tol = 0.5e-10 * std::max(1.0, x0.norm());
        return detail::spherical_triangle_moment(s.axis, s.verts[0], s.verts[1], x0, tol) +
               detail::spherical_triangle_moment(-s.axis, s.verts[0], s.verts[1], x0, tol);
      }
      return 0.0;
    case SectionKind::Polygon:
      if constexpr (D == 3) {
        const int n = static_cast<int>(s.verts.size());
        const double tol = 1e-10 * std::max(1.0, x0.norm()) / std::max(1, n - 2);
        double sum = 0.0;
        for (int i = 1; i + 1 < n; ++i)
          sum += detail::spherical_triangle_moment(s.verts[0], s.verts[i], s.verts[i + 1], x0,
                                                   tol);
        return sum;
      }
      return 0.0;
  }
  return 0.0;
}

}  // namespace transgeo
