#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "transgeo/core.hpp"

namespace transgeo {

/// One face of a polytope. `verts` holds vertex ids: in boundary-cycle order
/// for 2-dimensional faces, ascending otherwise. `facets` lists the ids of the
/// relative facets (supporting halfspaces) that contain the face.
template <int D>
struct Face {
  int dim = 0;
  std::vector<int> verts;
  std::vector<int> facets;
};

/// Convex polytope in R^D (D in {2,3}), possibly of lower intrinsic dimension.
/// The halfspace description is split into `facets` (supporting halfspaces of
/// the relative facets, with normals in the direction space of the affine
/// hull) and `slabs` (paired constraints pinning the affine hull itself), so
/// that the conjunction of both lists always describes the set exactly and
/// intersection works uniformly across intrinsic dimensions.
template <int D>
struct Polytope {
  static_assert(D == 2 || D == 3, "only dimensions 2 and 3 are supported");

  MatX<D> V;                          ///< vertices as columns
  std::vector<Halfspace<D>> facets;   ///< relative facet halfspaces
  std::vector<Halfspace<D>> slabs;    ///< affine-hull slab halfspaces
  MatX<D> aff_basis;                  ///< D x idim orthonormal direction basis
  Vec<D> aff_point = Vec<D>::Zero();  ///< a point of the affine hull
  int idim = 0;                       ///< intrinsic dimension
  std::array<std::vector<Face<D>>, static_cast<std::size_t>(D) + 1> lattice;

  int vertex_count() const { return static_cast<int>(V.cols()); }
  Vec<D> vertex(int i) const { return V.col(i); }
  Vec<D> centroid() const { return V.rowwise().mean(); }
  bool full_dimensional() const { return idim == D; }

  std::vector<Halfspace<D>> all_halfspaces() const {
    std::vector<Halfspace<D>> hs = facets;
    hs.insert(hs.end(), slabs.begin(), slabs.end());
    return hs;
  }
};

/// Lightweight reference to one face of a polytope.
template <int D>
struct FaceRef {
  const Polytope<D>* poly = nullptr;
  int dim = 0;
  int index = 0;

  const Face<D>& face() const { return poly->lattice[dim][index]; }
};

namespace detail {

template <int D>
double coordinate_scale(const MatX<D>& pts) {
  return pts.cols() == 0 ? 1.0 : pts.cwiseAbs().maxCoeff();
}

inline double cross2(const Vec<2>& o, const Vec<2>& a, const Vec<2>& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Indices of the convex hull of 2d points in counter-clockwise order.
/// Collinear intermediate points are dropped.
inline std::vector<int> hull2d(const std::vector<Vec<2>>& pts) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (pts[a].x() != pts[b].x()) return pts[a].x() < pts[b].x();
    return pts[a].y() < pts[b].y();
  });
  if (n <= 2) return idx;
  double scale = 1.0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double tol = eps_geom * scale * scale;
  std::vector<int> h(2 * n);
  int k = 0;
  for (int ii = 0; ii < n; ++ii) {  // lower chain
    const int i = idx[ii];
    while (k >= 2 && cross2(pts[h[k - 2]], pts[h[k - 1]], pts[i]) <= tol) --k;
    h[k++] = i;
  }
  for (int ii = n - 2, lower = k + 1; ii >= 0; --ii) {  // upper chain
    const int i = idx[ii];
    while (k >= lower && cross2(pts[h[k - 2]], pts[h[k - 1]], pts[i]) <= tol) --k;
    h[k++] = i;
  }
  h.resize(k - 1);
  return h;
}

template <int D>
std::vector<Vec<D>> dedupe_points(const std::vector<Vec<D>>& pts, double tol) {
  std::vector<Vec<D>> out;
  for (const auto& p : pts) {
    bool dup = false;
    for (const auto& q : out)
      if ((p - q).norm() <= tol) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(p);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace detail {

/// Polytope consisting of a single point.
template <int D>
Polytope<D> make_point(const Vec<D>& p) {
  Polytope<D> poly;
  poly.V = p;
  poly.aff_basis = MatX<D>(D, 0);
  poly.aff_point = p;
  poly.idim = 0;
  for (int i = 0; i < D; ++i) {
    Vec<D> n = Vec<D>::Zero();
    n[i] = 1.0;
    poly.slabs.push_back({n, n.dot(p)});
    poly.slabs.push_back({-n, -n.dot(p)});
  }
  poly.lattice[0].push_back({0, {0}, {}});
  return poly;
}

template <int D>
Polytope<D> make_segment(const Vec<D>& a, const Vec<D>& b) {
  Polytope<D> poly;
  poly.V.resize(D, 2);
  poly.V.col(0) = a;
  poly.V.col(1) = b;
  Vec<D> u = (b - a).normalized();
  poly.aff_basis = u;
  poly.aff_point = a;
  poly.idim = 1;
  poly.facets.push_back({u, u.dot(b)});    // supports vertex b
  poly.facets.push_back({-u, -u.dot(a)});  // supports vertex a
  MatX<D> comp = orthonormal_complement<D>(poly.aff_basis);
  for (int i = 0; i < comp.cols(); ++i) {
    Vec<D> n = comp.col(i);
    poly.slabs.push_back({n, n.dot(a)});
    poly.slabs.push_back({-n, -n.dot(a)});
  }
  poly.lattice[0].push_back({0, {0}, {1}});
  poly.lattice[0].push_back({0, {1}, {0}});
  poly.lattice[1].push_back({1, {0, 1}, {}});
  return poly;
}

/// Builds the polygon lattice shared by full-dimensional 2d polytopes and
/// planar polygons embedded in R^3. `cycle` must be in ccw order with respect
/// to `up` (`up` is ignored for D == 2).
template <int D>
Polytope<D> make_polygon(const std::vector<Vec<D>>& cycle, const Vec<D>& up) {
  const int n = static_cast<int>(cycle.size());
  Polytope<D> poly;
  poly.V.resize(D, n);
  for (int i = 0; i < n; ++i) poly.V.col(i) = cycle[i];
  poly.aff_point = poly.centroid();
  poly.idim = 2;
  if constexpr (D == 2) {
    poly.aff_basis = Mat<2>::Identity();
  } else {
    MatX<D> diffs(D, n);
    for (int i = 0; i < n; ++i) diffs.col(i) = cycle[i] - poly.aff_point;
    poly.aff_basis = orthonormal_span<D>(diffs);
    poly.slabs.push_back({up, up.dot(poly.aff_point)});
    poly.slabs.push_back({-up, -up.dot(poly.aff_point)});
  }
  for (int i = 0; i < n; ++i) {
    const Vec<D>& a = cycle[i];
    const Vec<D>& b = cycle[(i + 1) % n];
    Vec<D> nrm;
    if constexpr (D == 2) {
      Vec<2> dir = (b - a).normalized();
      nrm = Vec<2>(dir.y(), -dir.x());  // outward for ccw cycles
    } else {
      nrm = (b - a).cross(up).normalized();
      if (nrm.dot(a - poly.aff_point) < 0) nrm = -nrm;  // point away from interior
    }
    poly.facets.push_back({nrm, nrm.dot(a)});
    poly.lattice[1].push_back({1, {i, (i + 1) % n}, {i}});
  }
  for (int i = 0; i < n; ++i)
    poly.lattice[0].push_back({0, {i}, {(i + n - 1) % n, i}});
  Face<D> whole;
  whole.dim = 2;
  whole.verts.resize(n);
  for (int i = 0; i < n; ++i) whole.verts[i] = i;
  poly.lattice[2].push_back(whole);
  return poly;
}

/// Assembles a full-dimensional 3d polytope from candidate vertices and the
/// list of supporting planes. Planes touching fewer than three candidate
/// points are dropped; returns nothing if the incidence structure fails the
/// Euler relation (caller falls back to a slower generic build).
inline std::optional<Polytope<3>> assemble3(const std::vector<Vec<3>>& pts,
                                            const std::vector<Halfspace<3>>& planes,
                                            double tol) {
  struct FacetData {
    Halfspace<3> plane;
    std::vector<int> cycle;  // indices into pts
  };
  std::vector<FacetData> fs;
  for (const auto& pl : planes) {
    std::vector<int> inc;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
      if (std::abs(pl.normal.dot(pts[i]) - pl.offset) <= tol) inc.push_back(i);
    if (static_cast<int>(inc.size()) < 3) continue;
    // ccw cycle around the outward normal
    Vec<3> b1 = orthonormal_complement<3>(MatX<3>(pl.normal)).col(0);
    Vec<3> b2 = pl.normal.cross(b1);
    std::vector<Vec<2>> flat(inc.size());
    for (std::size_t k = 0; k < inc.size(); ++k)
      flat[k] = Vec<2>(b1.dot(pts[inc[k]]), b2.dot(pts[inc[k]]));
    std::vector<int> h = detail::hull2d(flat);
    if (h.size() < 3) continue;
    FacetData fd;
    fd.plane = pl;
    for (int k : h) fd.cycle.push_back(inc[k]);
    // drop duplicate planes (same vertex cycle)
    bool dup = false;
    std::vector<int> key = fd.cycle;
    std::sort(key.begin(), key.end());
    for (const auto& other : fs) {
      std::vector<int> ok = other.cycle;
      std::sort(ok.begin(), ok.end());
      if (ok == key && std::abs(other.plane.normal.dot(pl.normal) - 1.0) < 1e-7) {
        dup = true;
        break;
      }
    }
    if (!dup) fs.push_back(std::move(fd));
  }
  if (fs.size() < 4) return std::nullopt;

  // keep only points that appear in some facet cycle
  std::vector<int> remap(pts.size(), -1);
  std::vector<Vec<3>> verts;
  for (const auto& fd : fs)
    for (int i : fd.cycle)
      if (remap[i] < 0) {
        remap[i] = static_cast<int>(verts.size());
        verts.push_back(pts[i]);
      }

  Polytope<3> poly;
  poly.V.resize(3, static_cast<int>(verts.size()));
  for (std::size_t i = 0; i < verts.size(); ++i) poly.V.col(static_cast<int>(i)) = verts[i];
  poly.aff_basis = Mat<3>::Identity();
  poly.aff_point = poly.centroid();
  poly.idim = 3;

  std::map<std::pair<int, int>, std::vector<int>> edge_facets;
  std::vector<std::vector<int>> vertex_facets(verts.size());
  for (int f = 0; f < static_cast<int>(fs.size()); ++f) {
    poly.facets.push_back(fs[f].plane);
    Face<3> face;
    face.dim = 2;
    for (int i : fs[f].cycle) face.verts.push_back(remap[i]);
    face.facets = {f};
    const int m = static_cast<int>(face.verts.size());
    for (int k = 0; k < m; ++k) {
      int a = face.verts[k], b = face.verts[(k + 1) % m];
      edge_facets[{std::min(a, b), std::max(a, b)}].push_back(f);
      vertex_facets[a].push_back(f);
    }
    poly.lattice[2].push_back(std::move(face));
  }
  for (auto& [vb, fl] : edge_facets) {
    if (fl.size() != 2) return std::nullopt;  // open or over-shared edge
    std::sort(fl.begin(), fl.end());
    poly.lattice[1].push_back({1, {vb.first, vb.second}, fl});
  }
  for (int v = 0; v < static_cast<int>(verts.size()); ++v) {
    auto& fl = vertex_facets[v];
    std::sort(fl.begin(), fl.end());
    fl.erase(std::unique(fl.begin(), fl.end()), fl.end());
    if (fl.size() < 3) return std::nullopt;
    poly.lattice[0].push_back({0, {v}, fl});
  }
  const long nv = static_cast<long>(poly.lattice[0].size());
  const long ne = static_cast<long>(poly.lattice[1].size());
  const long nf = static_cast<long>(poly.lattice[2].size());
  if (nv - ne + nf != 2) return std::nullopt;  // Euler relation
  Face<3> whole;
  whole.dim = 3;
  for (int v = 0; v < static_cast<int>(verts.size()); ++v) whole.verts.push_back(v);
  poly.lattice[3].push_back(std::move(whole));
  return poly;
}

/// Discovers the supporting planes of a full-dimensional 3d point set by
/// enumerating vertex triples.
inline std::vector<Halfspace<3>> discover_planes(const std::vector<Vec<3>>& pts, double tol) {
  std::vector<Halfspace<3>> planes;
  const int n = static_cast<int>(pts.size());
  auto add_unique = [&](const Vec<3>& nrm, double off) {
    for (const auto& pl : planes)
      if (pl.normal.dot(nrm) > 1.0 - 1e-9 && std::abs(pl.offset - off) <= tol) return;
    planes.push_back({nrm, off});
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Vec<3> nrm = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
        const double len = nrm.norm();
        if (len <= tol) continue;
        nrm /= len;
        double off = nrm.dot(pts[i]);
        double lo = 0.0, hi = 0.0;
        for (const auto& p : pts) {
          const double s = nrm.dot(p) - off;
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
        if (hi <= tol) add_unique(nrm, off);
        else if (lo >= -tol) add_unique(-nrm, -off);
      }
  return planes;
}

}  // namespace detail

/// Convex hull of the given points with full face lattice. Lower-dimensional
/// hulls are permitted and flagged through `idim`; coincident points are
/// merged silently.
template <int D>
Polytope<D> build_polytope(const std::vector<Vec<D>>& points) {
  static_assert(D == 2 || D == 3);
  if (points.empty()) throw std::invalid_argument("build_polytope: no points");
  double scale = 1.0;
  for (const auto& p : points) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double tol0 = eps_geom * scale;
  // thin bodies can carry vertex clusters far below the hull scale (nearly
  // parallel supporting planes meeting at shallow angles); when facet
  // assembly cannot reconcile such clusters, merge them and retry coarser
  double spread = 0.0;
  for (const auto& p : points) spread = std::max(spread, (p - points[0]).norm());
  for (double tol = tol0;; tol *= 10.0) {
    std::vector<Vec<D>> pts = detail::dedupe_points<D>(points, tol);

    Vec<D> mean = Vec<D>::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    MatX<D> diffs(D, static_cast<int>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) diffs.col(static_cast<int>(i)) = pts[i] - mean;
    MatX<D> basis = orthonormal_span<D>(diffs, tol);
    const int idim = static_cast<int>(basis.cols());

    if (idim == 0) return detail::make_point<D>(pts[0]);
    if (idim == 1) {
      const Vec<D> u = basis.col(0);
      double tmin = INFINITY, tmax = -INFINITY;
      Vec<D> a = pts[0], b = pts[0];
      for (const auto& p : pts) {
        const double t = u.dot(p - mean);
        if (t < tmin) tmin = t, a = p;
        if (t > tmax) tmax = t, b = p;
      }
      return detail::make_segment<D>(a, b);
    }
    if (idim == 2) {
      Vec<D> up = Vec<D>::Zero();
      if constexpr (D == 3) up = orthonormal_complement<3>(basis).col(0);
      std::vector<Vec<2>> flat(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if constexpr (D == 2) {
          flat[i] = pts[i] - mean;  // keep the ambient orientation
        } else {
          flat[i].x() = basis.col(0).dot(pts[i] - mean);
          flat[i].y() = basis.col(1).dot(pts[i] - mean);
        }
      }
      std::vector<int> h = detail::hull2d(flat);
      std::vector<Vec<D>> cycle;
      for (int i : h) cycle.push_back(pts[i]);
      if constexpr (D == 3) {
        // make the cycle ccw around `up`
        Vec<3> area = Vec<3>::Zero();
        for (std::size_t i = 0; i < cycle.size(); ++i)
          area += cycle[i].cross(cycle[(i + 1) % cycle.size()]);
        if (area.dot(up) < 0) up = -up;
      }
      return detail::make_polygon<D>(cycle, up);
    }
    if constexpr (D == 3) {
      auto planes = detail::discover_planes(pts, tol);
      if (auto poly = detail::assemble3(pts, planes, tol)) return *poly;
      // the loop terminates: once tol reaches the point spread everything
      // merges to a single point and the rank-0 route returns
      if (tol > 1e3 * spread) throw std::runtime_error("build_polytope: hull assembly failed");
    } else {
      throw std::logic_error("build_polytope: unreachable");
    }
  }
}

template <int D>
Polytope<D> polytope_from_box(const Box<D>& b) {
  std::vector<Vec<D>> corners;
  for (int m = 0; m < (1 << D); ++m) {
    Vec<D> c;
    for (int i = 0; i < D; ++i) c[i] = (m >> i & 1) ? b.hi[i] : b.lo[i];
    corners.push_back(c);
  }
  return build_polytope<D>(corners);
}

// ---------------------------------------------------------------------------
// Basic queries
// ---------------------------------------------------------------------------

/// All j-faces of P. F_D(P) is empty when P is lower-dimensional.
template <int D>
std::vector<FaceRef<D>> faces(const Polytope<D>& p, int j) {
  if (j < 0 || j > D) throw std::invalid_argument("faces: dimension out of range");
  std::vector<FaceRef<D>> out;
  out.reserve(p.lattice[j].size());
  for (int i = 0; i < static_cast<int>(p.lattice[j].size()); ++i) out.push_back({&p, j, i});
  return out;
}

template <int D>
bool contains(const Polytope<D>& p, const Vec<D>& x, double tol = eps_geom) {
  for (const auto& h : p.facets)
    if (h.normal.dot(x) > h.offset + tol) return false;
  for (const auto& h : p.slabs)
    if (h.normal.dot(x) > h.offset + tol) return false;
  return true;
}

template <int D>
bool strictly_inside(const Polytope<D>& p, const Vec<D>& x, double margin = eps_geom) {
  if (!p.full_dimensional()) return false;
  for (const auto& h : p.facets)
    if (h.normal.dot(x) >= h.offset - margin) return false;
  return true;
}

template <int D>
Box<D> bounding_box(const Polytope<D>& p) {
  return {p.V.rowwise().minCoeff(), p.V.rowwise().maxCoeff()};
}

namespace detail {

inline double polygon_area2(const MatX<2>& v, const std::vector<int>& cycle) {
  double s = 0.0;
  const int n = static_cast<int>(cycle.size());
  for (int i = 0; i < n; ++i) {
    const Vec<2>&a = v.col(cycle[i]), &b = v.col(cycle[(i + 1) % n]);
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(s);
}

inline double polygon_area3(const MatX<3>& v, const std::vector<int>& cycle) {
  Vec<3> s = Vec<3>::Zero();
  const int n = static_cast<int>(cycle.size());
  for (int i = 0; i < n; ++i) s += v.col(cycle[i]).cross(v.col(cycle[(i + 1) % n]));
  return 0.5 * s.norm();
}

}  // namespace detail

/// D-dimensional volume (0 for lower-dimensional polytopes).
template <int D>
double volume(const Polytope<D>& p) {
  if (p.idim < D) return 0.0;
  if constexpr (D == 2) {
    return detail::polygon_area2(p.V, p.lattice[2][0].verts);
  } else {
    const Vec<3> c = p.centroid();
    double v = 0.0;
    for (const auto& f : p.lattice[2]) {
      const auto& pl = p.facets[f.facets[0]];
      v += pl.normal.dot(p.V.col(f.verts[0]) - c) * detail::polygon_area3(p.V, f.verts);
    }
    return std::max(0.0, v / 3.0);
  }
}

/// j-dimensional Lebesgue content of a j-face (counting measure for j = 0).
template <int D>
double face_volume(const FaceRef<D>& fr) {
  const auto& f = fr.face();
  switch (f.dim) {
    case 0:
      return 1.0;
    case 1:
      return (fr.poly->V.col(f.verts[0]) - fr.poly->V.col(f.verts[1])).norm();
    case 2:
      if constexpr (D == 2) return detail::polygon_area2(fr.poly->V, f.verts);
      else return detail::polygon_area3(fr.poly->V, f.verts);
    default:
      return volume(*fr.poly);
  }
}

/// Orthonormal basis of the face's direction space (D x dim).
template <int D>
MatX<D> direction_basis(const FaceRef<D>& fr) {
  const auto& f = fr.face();
  if (f.dim == 0) return MatX<D>(D, 0);
  MatX<D> diffs(D, static_cast<int>(f.verts.size()) - 1);
  for (int i = 1; i < static_cast<int>(f.verts.size()); ++i)
    diffs.col(i - 1) = fr.poly->V.col(f.verts[i]) - fr.poly->V.col(f.verts[0]);
  return orthonormal_span<D>(diffs);
}

/// Orthonormal basis of the orthogonal complement of the direction space.
template <int D>
MatX<D> complement_basis(const FaceRef<D>& fr) {
  return orthonormal_complement<D>(direction_basis(fr));
}

template <int D>
Vec<D> face_centroid(const FaceRef<D>& fr) {
  Vec<D> c = Vec<D>::Zero();
  for (int v : fr.face().verts) c += fr.poly->V.col(v);
  return c / static_cast<double>(fr.face().verts.size());
}

// ---------------------------------------------------------------------------
// Affine images
// ---------------------------------------------------------------------------

template <int D>
Polytope<D> translate(const Polytope<D>& p, const Vec<D>& x) {
  Polytope<D> q = p;
  q.V.colwise() += x;
  for (auto& h : q.facets) h.offset += h.normal.dot(x);
  for (auto& h : q.slabs) h.offset += h.normal.dot(x);
  q.aff_point += x;
  return q;
}

/// Linear image under a rotation about the origin; the lattice is preserved.
template <int D>
Polytope<D> rotate(const Polytope<D>& p, const Mat<D>& r) {
  Polytope<D> q = p;
  q.V = r * p.V;
  for (auto& h : q.facets) h.normal = (r * h.normal).eval();
  for (auto& h : q.slabs) h.normal = (r * h.normal).eval();
  q.aff_basis = r * p.aff_basis;
  q.aff_point = r * p.aff_point;
  return q;
}

template <int D>
Polytope<D> scale(const Polytope<D>& p, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("scale: negative factor");
  if (alpha == 0.0) return detail::make_point<D>(Vec<D>::Zero());
  Polytope<D> q = p;
  q.V *= alpha;
  for (auto& h : q.facets) h.offset *= alpha;
  for (auto& h : q.slabs) h.offset *= alpha;
  q.aff_point *= alpha;
  return q;
}

// ---------------------------------------------------------------------------
// Intersection
// ---------------------------------------------------------------------------

namespace detail {

/// Sutherland-Hodgman clip of a convex cycle (2d, or coplanar 3d) by one
/// halfspace.
template <int D>
std::vector<Vec<D>> clip_cycle(const std::vector<Vec<D>>& cyc, const Halfspace<D>& h,
                               double tol) {
  std::vector<Vec<D>> out;
  const int n = static_cast<int>(cyc.size());
  out.reserve(n + 2);
  for (int i = 0; i < n; ++i) {
    const Vec<D>&a = cyc[i], &b = cyc[(i + 1) % n];
    const double da = h.normal.dot(a) - h.offset;
    const double db = h.normal.dot(b) - h.offset;
    const bool ina = da <= tol, inb = db <= tol;
    if (ina) out.push_back(a);
    if (ina != inb && std::abs(da - db) > 1e-300) {
      const double t = da / (da - db);
      if (t > 0.0 && t < 1.0) out.push_back(a + t * (b - a));
    }
  }
  return out;
}

/// Removes duplicate and collinear cycle vertices.
template <int D>
std::vector<Vec<D>> tidy_cycle(std::vector<Vec<D>> cyc, double tol) {
  // merge near-duplicates
  std::vector<Vec<D>> uniq;
  for (const auto& p : cyc) {
    if (!uniq.empty() && (p - uniq.back()).norm() <= tol) continue;
    uniq.push_back(p);
  }
  while (uniq.size() > 1 && (uniq.front() - uniq.back()).norm() <= tol) uniq.pop_back();
  // drop collinear vertices
  std::vector<Vec<D>> out;
  const int n = static_cast<int>(uniq.size());
  if (n < 3) return uniq;
  for (int i = 0; i < n; ++i) {
    const Vec<D>& prev = uniq[(i + n - 1) % n];
    const Vec<D>& cur = uniq[i];
    const Vec<D>& next = uniq[(i + 1) % n];
    const Vec<D> e1 = cur - prev, e2 = next - cur;
    double sin_area;
    if constexpr (D == 2)
      sin_area = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    else
      sin_area = e1.cross(e2).norm();
    if (sin_area > 1e-9 * e1.norm() * e2.norm()) out.push_back(cur);
  }
  return out.size() >= 3 ? out : uniq;
}

/// Vertex-enumeration intersection of a halfspace list (candidates from
/// constraint pairs/triples, feasibility filter, then lattice assembly).
template <int D>
std::optional<Polytope<D>> intersect_halfspaces(const std::vector<Halfspace<D>>& hs,
                                                double scale) {
  const double tol = eps_geom * (1.0 + scale);
  std::vector<Vec<D>> cand;
  const int m = static_cast<int>(hs.size());
  auto feasible = [&](const Vec<D>& x) {
    for (const auto& h : hs)
      if (h.normal.dot(x) > h.offset + tol) return false;
    return true;
  };
  if constexpr (D == 2) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        Mat<2> a;
        a.row(0) = hs[i].normal.transpose();
        a.row(1) = hs[j].normal.transpose();
        const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        if (std::abs(det) <= 1e-12) continue;
        const Vec<2> x = a.inverse() * Vec<2>(hs[i].offset, hs[j].offset);
        if (feasible(x)) cand.push_back(x);
      }
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int k = j + 1; k < m; ++k) {
          Mat<3> a;
          a.row(0) = hs[i].normal.transpose();
          a.row(1) = hs[j].normal.transpose();
          a.row(2) = hs[k].normal.transpose();
          const double det = a.determinant();
          if (std::abs(det) <= 1e-10) continue;
          const Vec<3> x = a.inverse() * Vec<3>(hs[i].offset, hs[j].offset, hs[k].offset);
          if (feasible(x)) cand.push_back(x);
        }
  }
  cand = dedupe_points<D>(cand, tol);
  if (cand.empty()) return std::nullopt;
  if constexpr (D == 3) {
    // try the fast assembly from the already-known planes
    Vec<3> mean = Vec<3>::Zero();
    for (const auto& c : cand) mean += c;
    mean /= static_cast<double>(cand.size());
    MatX<3> diffs(3, static_cast<int>(cand.size()));
    for (std::size_t i = 0; i < cand.size(); ++i) diffs.col(static_cast<int>(i)) = cand[i] - mean;
    if (orthonormal_span<3>(diffs, tol).cols() == 3) {
      if (auto poly = assemble3(cand, hs, tol)) return poly;
    }
  }
  return build_polytope<D>(cand);
}

template <int D>
std::optional<Polytope<D>> intersect_generic(const Polytope<D>& p, const Polytope<D>& q) {
  std::vector<Halfspace<D>> hs = p.all_halfspaces();
  {
    auto qh = q.all_halfspaces();
    hs.insert(hs.end(), qh.begin(), qh.end());
  }
  const double scale = std::max(coordinate_scale<D>(p.V), coordinate_scale<D>(q.V));
  return intersect_halfspaces<D>(hs, scale);
}

}  // namespace detail

/// P clipped by an explicit halfspace list (used for region restriction).
template <int D>
std::optional<Polytope<D>> clip_polytope(const Polytope<D>& p,
                                         const std::vector<Halfspace<D>>& hs) {
  const double scale = detail::coordinate_scale<D>(p.V);
  if constexpr (D == 2) {
    if (p.full_dimensional()) {
      const double tol = eps_geom * (1.0 + scale);
      std::vector<Vec<2>> cyc;
      cyc.reserve(p.vertex_count());
      for (int v : p.lattice[2][0].verts) cyc.push_back(p.V.col(v));
      for (const auto& h : hs) {
        cyc = detail::clip_cycle<2>(cyc, h, tol);
        if (cyc.empty()) return std::nullopt;
      }
      std::vector<Vec<2>> tidy = detail::tidy_cycle<2>(cyc, tol);
      if (tidy.size() >= 3) return detail::make_polygon<2>(tidy, Vec<2>::Zero());
      if (tidy.empty()) return std::nullopt;
      return build_polytope<2>(tidy);
    }
  }
  std::vector<Halfspace<D>> pooled = p.all_halfspaces();
  pooled.insert(pooled.end(), hs.begin(), hs.end());
  return detail::intersect_halfspaces<D>(pooled, scale);
}

/// P int Q with full face lattice, or nothing when the intersection is empty.
/// Full-dimensional 2d inputs use polygon clipping; everything else goes
/// through pooled-halfspace vertex enumeration.
template <int D>
std::optional<Polytope<D>> intersect(const Polytope<D>& p, const Polytope<D>& q) {
  // quick bounding-box reject
  const Box<D> bp = bounding_box(p), bq = bounding_box(q);
  for (int i = 0; i < D; ++i)
    if (bp.lo[i] > bq.hi[i] + eps_geom || bq.lo[i] > bp.hi[i] + eps_geom) return std::nullopt;

  if constexpr (D == 2) {
    if (p.full_dimensional() && q.full_dimensional()) {
      const double scale =
          std::max(detail::coordinate_scale<2>(p.V), detail::coordinate_scale<2>(q.V));
      const double tol = eps_geom * (1.0 + scale);
      std::vector<Vec<2>> cyc;
      cyc.reserve(p.vertex_count());
      for (int v : p.lattice[2][0].verts) cyc.push_back(p.V.col(v));
      for (const auto& h : q.facets) {
        cyc = detail::clip_cycle<2>(cyc, h, tol);
        if (cyc.empty()) return std::nullopt;
      }
      std::vector<Vec<2>> tidy = detail::tidy_cycle<2>(cyc, tol);
      if (tidy.size() >= 3)
        return detail::make_polygon<2>(tidy, Vec<2>::Zero());
      if (tidy.empty()) return std::nullopt;
      return build_polytope<2>(tidy);  // degenerate sliver
    }
  }
  return detail::intersect_generic<D>(p, q);
}

// ---------------------------------------------------------------------------
// Regions (convex clipping targets for the restricted measures)
// ---------------------------------------------------------------------------

/// Convex region used to restrict measures, as a halfspace list with a
/// bounding box for quick rejection.
template <int D>
struct Region {
  std::vector<Halfspace<D>> hs;
  Box<D> bbox;

  static Region from_box(const Box<D>& b) { return {b.halfspaces(), b}; }
  static Region from_polytope(const Polytope<D>& p) {
    return {p.all_halfspaces(), bounding_box(p)};
  }

  Region translated(const Vec<D>& x) const {
    Region r = *this;
    for (auto& h : r.hs) h.offset += h.normal.dot(x);
    r.bbox.lo += x;
    r.bbox.hi += x;
    return r;
  }

  /// Conjunction of two regions (halfspace lists concatenate).
  static Region meet(const Region& a, const Region& b) {
    Region r = a;
    r.hs.insert(r.hs.end(), b.hs.begin(), b.hs.end());
    r.bbox.lo = a.bbox.lo.cwiseMax(b.bbox.lo);
    r.bbox.hi = a.bbox.hi.cwiseMin(b.bbox.hi);
    return r;
  }
};

/// lambda_F(A int F): clips the face by the region inside its affine hull and
/// returns the j-dimensional content (0/1 indicator for vertices).
template <int D>
double face_measure_restricted(const FaceRef<D>& fr, const Region<D>& region) {
  const auto& f = fr.face();
  const double tol = eps_geom * (1.0 + region.bbox.hi.cwiseAbs().maxCoeff());
  if (f.dim == 0) {
    const Vec<D> v = fr.poly->V.col(f.verts[0]);
    for (const auto& h : region.hs)
      if (h.normal.dot(v) > h.offset + tol) return 0.0;
    return 1.0;
  }
  if (f.dim == 1) {
    const Vec<D> a = fr.poly->V.col(f.verts[0]);
    const Vec<D> b = fr.poly->V.col(f.verts[1]);
    double t0 = 0.0, t1 = 1.0;
    for (const auto& h : region.hs) {
      const double da = h.normal.dot(a) - h.offset;
      const double db = h.normal.dot(b) - h.offset;
      const double denom = db - da;
      if (std::abs(denom) <= 1e-14) {
        if (da > tol) return 0.0;
        continue;
      }
      const double t = -da / denom;
      if (denom > 0) t1 = std::min(t1, t);
      else t0 = std::max(t0, t);
    }
    return std::max(0.0, t1 - t0) * (b - a).norm();
  }
  if (f.dim == 2) {
    std::vector<Vec<D>> cyc;
    for (int v : f.verts) cyc.push_back(fr.poly->V.col(v));
    for (const auto& h : region.hs) {
      cyc = detail::clip_cycle<D>(cyc, h, tol);
      if (cyc.size() < 3) return 0.0;
    }
    double area = 0.0;
    if constexpr (D == 2) {
      for (std::size_t i = 0; i < cyc.size(); ++i) {
        const auto& a = cyc[i];
        const auto& b = cyc[(i + 1) % cyc.size()];
        area += a.x() * b.y() - b.x() * a.y();
      }
      area = 0.5 * std::abs(area);
    } else {
      Vec<3> s = Vec<3>::Zero();
      for (std::size_t i = 0; i < cyc.size(); ++i)
        s += cyc[i].cross(cyc[(i + 1) % cyc.size()]);
      area = 0.5 * s.norm();
    }
    return area;
  }
  // full-dimensional face: clip the polytope itself
  auto clipped = clip_polytope(*fr.poly, region.hs);
  return clipped ? volume(*clipped) : 0.0;
}

// ---------------------------------------------------------------------------
// Support boxes
// ---------------------------------------------------------------------------

/// Axis-aligned box containing {x : P int (Q + x) nonempty} (the bounding box
/// of the difference body P + (-Q)).
template <int D>
Box<D> translation_support(const Polytope<D>& p, const Polytope<D>& q) {
  Box<D> b;
  b.lo = p.V.rowwise().minCoeff() - q.V.rowwise().maxCoeff();
  b.hi = p.V.rowwise().maxCoeff() - q.V.rowwise().minCoeff();
  return b;
}

/// Box covering every listed polytope with padding; stands in for "all of
/// R^d" as an explicit clipping region.
template <int D>
Box<D> covering_box(std::initializer_list<const Polytope<D>*> polys, double pad = 1.0) {
  Box<D> b{Vec<D>::Constant(INFINITY), Vec<D>::Constant(-INFINITY)};
  for (const auto* p : polys) {
    b.lo = b.lo.cwiseMin(p->V.rowwise().minCoeff());
    b.hi = b.hi.cwiseMax(p->V.rowwise().maxCoeff());
  }
  return b.grown(pad);
}

// ---------------------------------------------------------------------------
// Face determinants
// ---------------------------------------------------------------------------

namespace detail {

template <int D>
double det_of_complements(std::vector<MatX<D>> comp) {
  const int k = static_cast<int>(comp.size());
  if (k == 1) return 1.0;
  if (k == 2) {
    MatX<D> m(D, comp[0].cols() + comp[1].cols());
    m << comp[0], comp[1];
    return gram_volume<D>(m);
  }
  // [F1,...,Fk] = [F1,...,F_{k-2}, F_{k-1} ^ F_k] * [F_{k-1}, F_k]; the wedge
  // face has direction space L_{k-1} int L_k, i.e. complement span(C_{k-1} u C_k).
  MatX<D> m(D, comp[k - 2].cols() + comp[k - 1].cols());
  m << comp[k - 2], comp[k - 1];
  const double pair = gram_volume<D>(m);
  if (pair <= det_tol) return 0.0;
  MatX<D> wedge = orthonormal_span<D>(m);
  if (wedge.cols() != m.cols()) return 0.0;  // dependent complements
  comp.resize(k - 2);
  comp.push_back(wedge);
  return det_of_complements<D>(std::move(comp)) * pair;
}

}  // namespace detail

/// Determinant [F1,...,Fk]: the (d-j)-volume of the parallelepiped spanned by
/// orthonormal bases of the faces' direction-space complements, evaluated
/// through the pairwise wedge recursion. Face dimensions must satisfy
/// sum m_i = (k-1) d + j for some j in {0,...,d}.
template <int D>
double face_determinant(const std::vector<FaceRef<D>>& frs) {
  if (frs.size() < 2) throw std::invalid_argument("face_determinant: need >= 2 faces");
  int total = 0;
  std::vector<MatX<D>> comp;
  comp.reserve(frs.size());
  for (const auto& fr : frs) {
    total += fr.dim;
    comp.push_back(complement_basis(fr));
  }
  const int j = total - (static_cast<int>(frs.size()) - 1) * D;
  if (j < 0 || j > D)
    throw std::invalid_argument("face_determinant: dimension sum out of range");
  return detail::det_of_complements<D>(std::move(comp));
}

/// Direct (single Gram determinant) evaluation of [F1,...,Fk]; the reference
/// implementation the recursion is tested against.
template <int D>
double face_determinant_direct(const std::vector<FaceRef<D>>& frs) {
  int cols = 0;
  std::vector<MatX<D>> comp;
  for (const auto& fr : frs) {
    comp.push_back(complement_basis(fr));
    cols += static_cast<int>(comp.back().cols());
  }
  if (cols > D) return 0.0;
  MatX<D> m(D, cols);
  int at = 0;
  for (const auto& c : comp) {
    m.middleCols(at, c.cols()) = c;
    at += static_cast<int>(c.cols());
  }
  return gram_volume<D>(m);
}

// ---------------------------------------------------------------------------
// Enclosing balls and separation tests
// ---------------------------------------------------------------------------

template <int D>
struct Ball {
  Vec<D> center = Vec<D>::Zero();
  double radius = -1.0;  // negative: contains nothing

  bool contains(const Vec<D>& p, double tol = 1e-10) const {
    return radius >= 0.0 && (p - center).norm() <= radius + tol * (1.0 + radius);
  }
};

namespace detail {

/// Smallest ball with all support points on its boundary (their circumball
/// within their affine hull).
template <int D>
Ball<D> circumball(const std::vector<Vec<D>>& s) {
  if (s.empty()) return {};
  if (s.size() == 1) return {s[0], 0.0};
  const int k = static_cast<int>(s.size()) - 1;
  Eigen::MatrixXd a(k, D);
  Eigen::VectorXd rhs(k);
  for (int i = 0; i < k; ++i) {
    a.row(i) = 2.0 * (s[i + 1] - s[0]).transpose();
    rhs[i] = s[i + 1].squaredNorm() - s[0].squaredNorm();
  }
  // translate so rows solve for (c - s0): min-norm solution stays in the hull's
  // affine span, which is exactly the circumcenter we want
  Eigen::VectorXd rhs0(k);
  for (int i = 0; i < k; ++i) rhs0[i] = rhs[i] - a.row(i).dot(s[0]);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  Vec<D> c = s[0] + Vec<D>(cod.solve(rhs0));
  return {c, (c - s[0]).norm()};
}

template <int D>
Ball<D> welzl(std::vector<Vec<D>>& pts, std::size_t n, std::vector<Vec<D>> support) {
  if (n == 0 || support.size() == static_cast<std::size_t>(D) + 1)
    return circumball<D>(support);
  Ball<D> b = welzl<D>(pts, n - 1, support);
  if (b.contains(pts[n - 1])) return b;
  support.push_back(pts[n - 1]);
  Ball<D> b2 = welzl<D>(pts, n - 1, std::move(support));
  // move-to-front: keep boundary points early to stay near-linear
  auto it = pts.begin() + static_cast<long>(n - 1);
  Vec<D> p = *it;
  pts.erase(it);
  pts.insert(pts.begin(), p);
  return b2;
}

}  // namespace detail

/// Minimum enclosing ball (Welzl's algorithm).
template <int D>
Ball<D> minimum_enclosing_ball(const std::vector<Vec<D>>& points) {
  if (points.empty()) return {};
  std::vector<Vec<D>> pts = points;
  return detail::welzl<D>(pts, pts.size(), {});
}

/// Exact separation test between a polytope and a box (separating-axis test
/// over facet normals, box axes and edge-direction cross products).
template <int D>
bool disjoint_from_box(const Polytope<D>& p, const Box<D>& b) {
  auto separated = [&](const Vec<D>& axis) {
    double pmin = INFINITY, pmax = -INFINITY;
    for (int i = 0; i < p.vertex_count(); ++i) {
      const double s = axis.dot(p.V.col(i));
      pmin = std::min(pmin, s);
      pmax = std::max(pmax, s);
    }
    double bmin = 0.0, bmax = 0.0;
    for (int i = 0; i < D; ++i) {
      const double l = axis[i] * b.lo[i], h = axis[i] * b.hi[i];
      bmin += std::min(l, h);
      bmax += std::max(l, h);
    }
    return pmax < bmin || bmax < pmin;
  };
  for (int i = 0; i < D; ++i) {
    Vec<D> e = Vec<D>::Zero();
    e[i] = 1.0;
    if (separated(e)) return true;
  }
  for (const auto& h : p.facets)
    if (separated(h.normal)) return true;
  for (const auto& h : p.slabs)
    if (separated(h.normal)) return true;
  if constexpr (D == 3) {
    for (const auto& edge : p.lattice[1]) {
      const Vec<3> dir = p.V.col(edge.verts[1]) - p.V.col(edge.verts[0]);
      for (int i = 0; i < 3; ++i) {
        Vec<3> e = Vec<3>::Zero();
        e[i] = 1.0;
        Vec<3> axis = dir.cross(e);
        if (axis.norm() > 1e-12 && separated(axis.normalized())) return true;
      }
    }
  }
  return false;
}

/// Structural validation: Euler relation and facet support conditions.
template <int D>
bool validate_lattice(const Polytope<D>& p) {
  if (p.idim == D) {
    // alternating face-count sum including the whole polytope as its top face
    long alt = 0;
    for (int j = 0; j <= D; ++j) {
      const long cnt = static_cast<long>(p.lattice[j].size());
      alt += (j % 2 == 0 ? cnt : -cnt);
    }
    if (alt != 1) return false;
  }
  const double scale = detail::coordinate_scale<D>(p.V);
  const double tol = eps_geom * (1.0 + scale);
  for (int i = 0; i < p.vertex_count(); ++i)
    if (!contains(p, Vec<D>(p.V.col(i)), tol)) return false;
  const int need = p.idim >= 2 ? p.idim : 1;
  for (const auto& h : p.facets) {
    int touching = 0;
    for (int i = 0; i < p.vertex_count(); ++i)
      if (std::abs(h.normal.dot(p.V.col(i)) - h.offset) <= tol) ++touching;
    if (touching < need) return false;
  }
  return true;
}

}  // namespace transgeo
