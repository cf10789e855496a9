#pragma once

#include <cstdint>
#include <map>

#include "transgeo/functional.hpp"

namespace transgeo {

/// One nonempty common intersection of a grain subset, with its
/// inclusion-exclusion sign.
template <int D>
struct UnionMask {
  std::vector<int> members;  ///< grain indices, ascending
  int sign = 1;              ///< (-1)^(|members|+1)
  Polytope<D> isect;
};

/// A finite union of convex polytopes, prepared for inclusion-exclusion:
/// grains are grouped into overlap clusters and every grain subset with a
/// nonempty common intersection is stored with its sign.
template <int D>
struct PolytopeUnion {
  std::vector<Polytope<D>> grains;
  std::vector<Box<D>> boxes;              ///< grain bounding boxes
  std::vector<std::vector<int>> clusters; ///< connected overlap components
  std::vector<UnionMask<D>> masks;
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
  void merge(int a, int b) { parent[find(a)] = find(b); }
};

template <int D>
bool boxes_overlap(const Box<D>& a, const Box<D>& b, double tol) {
  for (int i = 0; i < D; ++i)
    if (a.lo[i] > b.hi[i] + tol || b.lo[i] > a.hi[i] + tol) return false;
  return true;
}

}  // namespace detail

/// Groups grains into overlap clusters and enumerates all grain subsets with
/// nonempty common intersection, smallest first, pruning any subset whose
/// predecessor (drop the largest element) was already empty. Throws when a
/// cluster exceeds max_cluster grains or the subset count explodes.
template <int D>
PolytopeUnion<D> make_union(std::vector<Polytope<D>> grains, int max_cluster = 25,
                            std::size_t max_masks = 200000) {
  PolytopeUnion<D> u;
  u.grains = std::move(grains);
  const int n = static_cast<int>(u.grains.size());
  u.boxes.reserve(n);
  double cell = eps_geom;
  for (const auto& g : u.grains) {
    u.boxes.push_back(bounding_box(g));
    cell = std::max(cell, (u.boxes.back().hi - u.boxes.back().lo).maxCoeff());
  }

  // coarse grid over box centers; only same-or-adjacent cells can overlap
  std::map<std::array<long, static_cast<std::size_t>(D)>, std::vector<int>> grid;
  auto cell_of = [&](const Vec<D>& x) {
    std::array<long, static_cast<std::size_t>(D)> key;
    for (int i = 0; i < D; ++i) key[i] = static_cast<long>(std::floor(x[i] / cell));
    return key;
  };
  detail::UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    const auto key = cell_of(u.boxes[i].center());
    std::array<long, static_cast<std::size_t>(D)> probe;
    const int span = (D == 2) ? 9 : 27;
    for (int code = 0; code < span; ++code) {
      int c = code;
      for (int a = 0; a < D; ++a) {
        probe[a] = key[a] + (c % 3) - 1;
        c /= 3;
      }
      auto it = grid.find(probe);
      if (it == grid.end()) continue;
      for (int l : it->second)
        if (detail::boxes_overlap<D>(u.boxes[i], u.boxes[l], eps_geom)) uf.merge(i, l);
    }
    grid[key].push_back(i);
  }

  std::map<int, std::vector<int>> roots;
  for (int i = 0; i < n; ++i) roots[uf.find(i)].push_back(i);
  for (auto& [root, ids] : roots) {
    if (static_cast<int>(ids.size()) > max_cluster)
      throw std::runtime_error("make_union: overlap cluster too large (" +
                               std::to_string(ids.size()) + " grains)");
    u.clusters.push_back(ids);
  }

  for (const auto& ids : u.clusters) {
    const int c = static_cast<int>(ids.size());
    // every nonempty subset is reached once from its parent (drop the largest
    // element), and an empty parent prunes all its extensions
    std::size_t level_begin = u.masks.size();
    for (int e = 0; e < c; ++e) u.masks.push_back({{ids[e]}, 1, u.grains[ids[e]]});
    while (level_begin < u.masks.size()) {
      const std::size_t level_end = u.masks.size();
      for (std::size_t at = level_begin; at < level_end; ++at) {
        int top = -1;
        for (int e = 0; e < c; ++e)
          if (std::binary_search(u.masks[at].members.begin(), u.masks[at].members.end(),
                                 ids[e]))
            top = e;
        for (int e = top + 1; e < c; ++e) {
          if (!detail::boxes_overlap<D>(bounding_box(u.masks[at].isect), u.boxes[ids[e]],
                                        eps_geom))
            continue;
          auto next = intersect<D>(u.masks[at].isect, u.grains[ids[e]]);
          if (!next) continue;
          if (u.masks.size() >= max_masks)
            throw std::runtime_error("make_union: subset intersection count exceeds limit");
          UnionMask<D> m;
          m.members = u.masks[at].members;
          m.members.push_back(ids[e]);
          m.sign = -u.masks[at].sign;
          m.isect = std::move(*next);
          u.masks.push_back(std::move(m));
        }
      }
      level_begin = level_end;
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// Functionals of unions by inclusion-exclusion
// ---------------------------------------------------------------------------

/// Degree-j functional extended to the union: signed sum over all stored
/// subset intersections.
template <int D>
double union_functional(const FunctionFamily<D>& fam, int j, const PolytopeUnion<D>& u,
                        const Region<D>* region = nullptr, FCache* cache = nullptr) {
  double sum = 0.0;
  for (const auto& m : u.masks)
    sum += m.sign * phi_homogeneous<D>(fam, j, m.isect, region, cache);
  return sum;
}

/// All homogeneous degrees 0..D at once.
template <int D>
std::array<double, static_cast<std::size_t>(D) + 1> union_functional_profile(
    const FunctionFamily<D>& fam, const PolytopeUnion<D>& u,
    const Region<D>* region = nullptr, FCache* cache = nullptr) {
  std::array<double, static_cast<std::size_t>(D) + 1> out{};
  for (int j = 0; j <= D; ++j) out[j] = union_functional<D>(fam, j, u, region, cache);
  return out;
}

/// Mixed functional where both arguments are unions: the signed double sum of
/// the convex mixed functionals over subset intersections.
template <int D>
double union_mixed_functional(const FunctionFamily<D>& fam, int j, const PolytopeUnion<D>& a,
                              const PolytopeUnion<D>& b, const std::vector<int>& m,
                              const std::vector<Region<D>>* regions = nullptr,
                              FCache* cache = nullptr) {
  double sum = 0.0;
  for (const auto& ma : a.masks)
    for (const auto& mb : b.masks)
      sum += ma.sign * mb.sign *
             mixed_functional<D>(fam, j, {&ma.isect, &mb.isect}, m, regions, cache);
  return sum;
}

/// Degree-j translative sum for a pair of unions.
template <int D>
double union_translative_sum(const FunctionFamily<D>& fam, int j, const PolytopeUnion<D>& a,
                             const PolytopeUnion<D>& b, FCache* cache = nullptr) {
  double sum = 0.0;
  for (const auto& ma : a.masks)
    for (const auto& mb : b.masks)
      sum += ma.sign * mb.sign * translative_sum<D>(fam, j, {&ma.isect, &mb.isect}, nullptr, cache);
  return sum;
}

// ---------------------------------------------------------------------------
// General position certification
// ---------------------------------------------------------------------------

/// One failed face condition inside a subset intersection.
struct PositionViolation {
  std::vector<int> members;
  int face_dim = 0;
  int face_index = 0;
  int rank_sum = 0;     ///< sum of per-grain active constraint ranks
  int pooled_rank = 0;  ///< rank of all active constraints together
  int expected = 0;     ///< D - face_dim
};

struct GeneralPositionReport {
  bool ok = true;
  long masks_checked = 0;
  long faces_checked = 0;
  std::vector<PositionViolation> violations;  // capped at 64 entries
};

/// Checks that every face of every subset intersection is cut out by
/// constraint sets whose per-grain normal spans are in direct sum: the face
/// codimension must equal the sum of the individual active ranks. Touching
/// boundaries, shared facet planes, and lower-dimensional intersections all
/// surface as violations.
template <int D>
GeneralPositionReport certify_general_position(const PolytopeUnion<D>& u,
                                               double eps = eps_gp) {
  GeneralPositionReport rep;
  for (const auto& m : u.masks) {
    if (m.members.size() < 2) continue;
    ++rep.masks_checked;
    const auto& s = m.isect;
    for (int t = 0; t <= s.idim; ++t) {
      for (int fi = 0; fi < static_cast<int>(s.lattice[t].size()); ++fi) {
        ++rep.faces_checked;
        const auto& face = s.lattice[t][fi];
        int rank_sum = 0;
        std::vector<Vec<D>> pooled;
        for (int gi : m.members) {
          const auto& g = u.grains[gi];
          const double scale =
              1.0 + std::max(u.boxes[gi].hi.cwiseAbs().maxCoeff(),
                             u.boxes[gi].lo.cwiseAbs().maxCoeff());
          std::vector<Vec<D>> active;
          for (const auto& h : g.all_halfspaces()) {
            bool tight = true;
            for (int v : face.verts)
              if (std::abs(h.normal.dot(s.V.col(v)) - h.offset) > eps * scale) {
                tight = false;
                break;
              }
            if (tight) active.push_back(h.normal);
          }
          if (!active.empty()) {
            MatX<D> a(D, static_cast<int>(active.size()));
            for (int c = 0; c < static_cast<int>(active.size()); ++c) a.col(c) = active[c];
            rank_sum += static_cast<int>(orthonormal_span<D>(a).cols());
          }
          pooled.insert(pooled.end(), active.begin(), active.end());
        }
        int pooled_rank = 0;
        if (!pooled.empty()) {
          MatX<D> a(D, static_cast<int>(pooled.size()));
          for (int c = 0; c < static_cast<int>(pooled.size()); ++c) a.col(c) = pooled[c];
          pooled_rank = static_cast<int>(orthonormal_span<D>(a).cols());
        }
        if (pooled_rank != D - t || rank_sum != pooled_rank) {
          rep.ok = false;
          if (rep.violations.size() < 64)
            rep.violations.push_back({m.members, t, fi, rank_sum, pooled_rank, D - t});
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Redundancy reduction
// ---------------------------------------------------------------------------

/// Removes grains covered by the rest of the union (one at a time, so mutual
/// duplicates keep one representative). Detection compares the
/// inclusion-exclusion volume with and without the grain.
template <int D>
PolytopeUnion<D> reduce_union(const PolytopeUnion<D>& u, std::vector<int>* removed = nullptr,
                              double rel_tol = 1e-12) {
  std::vector<Polytope<D>> kept = u.grains;
  std::vector<int> alive(u.grains.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = static_cast<int>(i);
  PolytopeUnion<D> cur = u;
  for (;;) {
    double total = 0.0, largest = 0.0;
    for (const auto& m : cur.masks) {
      total += m.sign * volume(m.isect);
      largest = std::max(largest, volume(m.isect));
    }
    int drop = -1;
    for (std::size_t i = 0; i < cur.grains.size() && drop < 0; ++i) {
      double without = 0.0;
      for (const auto& m : cur.masks) {
        if (std::binary_search(m.members.begin(), m.members.end(), static_cast<int>(i)))
          continue;
        without += m.sign * volume(m.isect);
      }
      if (std::abs(total - without) <= rel_tol * std::max(1.0, largest))
        drop = static_cast<int>(i);
    }
    if (drop < 0) break;
    if (removed) removed->push_back(alive[drop]);
    alive.erase(alive.begin() + drop);
    std::vector<Polytope<D>> next;
    for (std::size_t i = 0; i < cur.grains.size(); ++i)
      if (static_cast<int>(i) != drop) next.push_back(cur.grains[i]);
    cur = make_union<D>(std::move(next));
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Boundary feature scan (independent of inclusion-exclusion)
// ---------------------------------------------------------------------------

/// Counts and measures of the union boundary, classified by how many distinct
/// grains produce each feature. Signed totals must reproduce the
/// inclusion-exclusion functionals with unit weights.
struct FeatureReport {
  std::array<long, 3> vertex_counts{{0, 0, 0}};  ///< features from 1, 2, 3 grains
  double vertex_signed = 0.0;                    ///< + - + alternating
  double original_edge_length = 0.0;             ///< uncovered parts of grain edges
  double crossing_edge_length = 0.0;             ///< uncovered facet-facet segments (3D)
  double edge_signed = 0.0;                      ///< original minus crossing
};

namespace detail {

/// Subinterval of t in [0,1] where a + t (b - a) lies in the polytope,
/// empty as {1, 0} when it misses.
template <int D>
std::pair<double, double> segment_inside(const Vec<D>& a, const Vec<D>& b,
                                         const Polytope<D>& p) {
  double lo = 0.0, hi = 1.0;
  auto clip = [&](const Vec<D>& n, double c) {
    const double da = n.dot(a) - c, db = n.dot(b) - c;
    const double den = db - da;
    if (std::abs(den) < 1e-15) {
      if (da > 0.0) lo = 1.0, hi = 0.0;
      return;
    }
    const double t = -da / den;
    if (den > 0.0) hi = std::min(hi, t);
    else lo = std::max(lo, t);
  };
  for (const auto& h : p.facets) clip(h.normal, h.offset);
  for (const auto& h : p.slabs) clip(h.normal, h.offset);
  return {lo, hi};
}

/// Total length of [0,1] minus the given subintervals.
inline double uncovered_measure(std::vector<std::pair<double, double>> iv) {
  std::sort(iv.begin(), iv.end());
  double covered = 0.0, reach = 0.0;
  for (const auto& [a, b] : iv) {
    if (b <= reach) continue;
    covered += b - std::max(a, reach);
    reach = b;
  }
  return 1.0 - covered;
}

}  // namespace detail

template <int D>
FeatureReport boundary_features(const PolytopeUnion<D>& u) {
  FeatureReport rep;
  const auto& gs = u.grains;
  auto overlap = [&](int i, int l) {
    return detail::boxes_overlap<D>(u.boxes[i], u.boxes[l], eps_geom);
  };
  // any grain covering a feature of grain i overlaps i, so it shares i's
  // cluster; all scans below stay cluster-local
  auto covered = [&](const std::vector<int>& cluster, const Vec<D>& x, int skip1, int skip2) {
    for (int l : cluster) {
      if (l == skip1 || l == skip2) continue;
      if (strictly_inside(gs[l], x)) return true;
    }
    return false;
  };

  for (const auto& cluster : u.clusters) {
    // grain vertices not swallowed by any other grain
    for (int i : cluster)
      for (int v = 0; v < gs[i].vertex_count(); ++v)
        if (!covered(cluster, Vec<D>(gs[i].V.col(v)), i, -1)) ++rep.vertex_counts[0];

    // uncovered parts of the original edges
    for (int i : cluster) {
      for (int e = 0; e < static_cast<int>(gs[i].lattice[1].size()); ++e) {
        const auto& face = gs[i].lattice[1][e];
        const Vec<D> a = gs[i].V.col(face.verts.front());
        const Vec<D> b = gs[i].V.col(face.verts.back());
        std::vector<std::pair<double, double>> iv;
        for (int l : cluster) {
          if (l == i || !overlap(i, l) || !gs[l].full_dimensional()) continue;
          auto [lo, hi] = detail::segment_inside<D>(a, b, gs[l]);
          if (hi > lo) iv.push_back({lo, hi});
        }
        rep.original_edge_length += detail::uncovered_measure(std::move(iv)) * (b - a).norm();
      }
    }

    if constexpr (D == 2) {
      // proper edge crossings between grain pairs
      for (std::size_t ci = 0; ci < cluster.size(); ++ci)
        for (std::size_t cl = ci + 1; cl < cluster.size(); ++cl) {
          const int i = cluster[ci], l = cluster[cl];
          if (!overlap(i, l)) continue;
          for (const auto& fi : gs[i].lattice[1])
            for (const auto& fl : gs[l].lattice[1]) {
              const Vec<2> a = gs[i].V.col(fi.verts.front());
              const Vec<2> r = Vec<2>(gs[i].V.col(fi.verts.back())) - a;
              const Vec<2> c = gs[l].V.col(fl.verts.front());
              const Vec<2> s = Vec<2>(gs[l].V.col(fl.verts.back())) - c;
              const double den = r.x() * s.y() - r.y() * s.x();
              if (std::abs(den) < 1e-14) continue;
              const Vec<2> ca = c - a;
              const double t = (ca.x() * s.y() - ca.y() * s.x()) / den;
              const double w = (ca.x() * r.y() - ca.y() * r.x()) / den;
              if (t <= 1e-9 || t >= 1.0 - 1e-9 || w <= 1e-9 || w >= 1.0 - 1e-9) continue;
              if (!covered(cluster, Vec<2>(a + t * r), i, l)) ++rep.vertex_counts[1];
            }
        }
    } else {
      // edge-facet crossing points (ordered pairs: edge grain, facet grain)
      for (int i : cluster)
        for (int l : cluster) {
          if (i == l || !overlap(i, l)) continue;
          for (const auto& face : gs[i].lattice[1]) {
            const Vec<D> a = gs[i].V.col(face.verts.front());
            const Vec<D> b = gs[i].V.col(face.verts.back());
            for (const auto& h : gs[l].facets) {
              const double da = h.normal.dot(a) - h.offset;
              const double db = h.normal.dot(b) - h.offset;
              if (std::abs(db - da) < 1e-14) continue;
              const double t = -da / (db - da);
              if (t <= 1e-9 || t >= 1.0 - 1e-9) continue;
              const Vec<D> x = a + t * (b - a);
              if (!contains(gs[l], x)) continue;
              if (!covered(cluster, x, i, l)) ++rep.vertex_counts[1];
            }
          }
        }

      // facet-facet crossing segments, uncovered length
      for (std::size_t ci = 0; ci < cluster.size(); ++ci)
        for (std::size_t cl = ci + 1; cl < cluster.size(); ++cl) {
          const int i = cluster[ci], l = cluster[cl];
          if (!overlap(i, l)) continue;
          for (const auto& hi : gs[i].facets)
            for (const auto& hl : gs[l].facets) {
              Vec<D> dir = hi.normal.cross(hl.normal);
              const double dn = dir.norm();
              if (dn < 1e-12) continue;
              dir /= dn;
              Eigen::Matrix<double, 2, 3> plane;
              plane.row(0) = hi.normal.transpose();
              plane.row(1) = hl.normal.transpose();
              const Vec<D> x0 = plane.completeOrthogonalDecomposition().solve(
                  Eigen::Vector2d(hi.offset, hl.offset));
              // clip the line to both grains; on the cut planes this confines
              // it to the two facets
              double lo = -1e18, hi_t = 1e18;
              for (const auto* g : {&gs[i], &gs[l]}) {
                for (const auto& h : g->facets) {
                  const double dd = h.normal.dot(dir);
                  const double dv = h.normal.dot(x0) - h.offset;
                  if (std::abs(dd) < 1e-14) {
                    if (dv > eps_geom) lo = 1.0, hi_t = 0.0;
                    continue;
                  }
                  const double t = -dv / dd;
                  if (dd > 0.0) hi_t = std::min(hi_t, t);
                  else lo = std::max(lo, t);
                }
              }
              if (hi_t - lo <= eps_geom) continue;
              const Vec<D> sa = x0 + lo * dir, sb = x0 + hi_t * dir;
              std::vector<std::pair<double, double>> iv;
              for (int o : cluster) {
                if (o == i || o == l) continue;
                auto [clo, chi] = detail::segment_inside<D>(sa, sb, gs[o]);
                if (chi > clo) iv.push_back({clo, chi});
              }
              rep.crossing_edge_length +=
                  detail::uncovered_measure(std::move(iv)) * (sb - sa).norm();
            }
        }

      // facet triples from three distinct grains meeting at a boundary point
      for (std::size_t ci = 0; ci < cluster.size(); ++ci)
        for (std::size_t cl = ci + 1; cl < cluster.size(); ++cl)
          for (std::size_t co = cl + 1; co < cluster.size(); ++co) {
            const int i = cluster[ci], l = cluster[cl], o = cluster[co];
            if (!overlap(i, l) || !overlap(l, o) || !overlap(i, o)) continue;
            for (const auto& hi : gs[i].facets)
              for (const auto& hl : gs[l].facets)
                for (const auto& ho : gs[o].facets) {
                  Mat<D> plane;
                  plane.row(0) = hi.normal.transpose();
                  plane.row(1) = hl.normal.transpose();
                  plane.row(2) = ho.normal.transpose();
                  if (std::abs(plane.determinant()) < 1e-10) continue;
                  const Vec<D> x =
                      plane.partialPivLu().solve(Vec<D>(hi.offset, hl.offset, ho.offset));
                  if (!contains(gs[i], x) || !contains(gs[l], x) || !contains(gs[o], x))
                    continue;
                  if (!covered(cluster, x, -1, -1)) ++rep.vertex_counts[2];
                }
          }
    }
  }

  rep.vertex_signed = static_cast<double>(rep.vertex_counts[0]) -
                      static_cast<double>(rep.vertex_counts[1]) +
                      static_cast<double>(rep.vertex_counts[2]);
  rep.edge_signed = rep.original_edge_length - rep.crossing_edge_length;
  return rep;
}

}  // namespace transgeo
