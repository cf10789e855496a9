#pragma once

#include <cstring>
#include <string>
#include <unordered_map>

#include "transgeo/rng.hpp"
#include "transgeo/spherical.hpp"

namespace transgeo {

/// How the degree-j weight function acts on normal-cone sphere sections.
enum class FKind {
  Constant,      ///< ignores the section (value 1 counts/measures the skeleton)
  ExternalAngle  ///< normalized section measure (yields intrinsic volumes)
};

/// Weight function of one homogeneity degree. An optional linear perturbation
/// adds the first moment of the section against a fixed direction x0, which
/// preserves all global (unrestricted) functional values.
template <int D>
struct DegreeFunction {
  FKind kind = FKind::Constant;
  double value = 1.0;  // constant value, or scale factor for ExternalAngle
  bool perturbed = false;
  Vec<D> x0 = Vec<D>::Zero();

  /// Constant unperturbed functions never need the cone geometry.
  bool needs_section() const { return kind != FKind::Constant || perturbed; }

  double eval(const SphericalSection<D>& s) const {
    double v = value;
    if (kind == FKind::ExternalAngle) {
      if (s.kind == SectionKind::Empty) return 0.0;
      v *= spherical_measure<D>(s) / sphere_total_measure(section_dimension(s.kind));
    }
    if (perturbed) v += linear_moment<D>(s, x0);
    return v;
  }
};

/// Weight functions for all degrees 0..D-1 plus the coefficient of the
/// top-degree volume term.
template <int D>
struct FunctionFamily {
  std::array<DegreeFunction<D>, static_cast<std::size_t>(D)> f;
  double c_top = 1.0;

  /// f_j = 1 for all degrees: counts vertices, measures the j-skeletons.
  static FunctionFamily ones() { return {}; }

  /// f_j = external angle: the functionals become the intrinsic volumes.
  static FunctionFamily intrinsic() {
    FunctionFamily fam;
    for (auto& df : fam.f) df.kind = FKind::ExternalAngle;
    return fam;
  }

  /// Constant weight per degree.
  static FunctionFamily constants(const std::array<double, static_cast<std::size_t>(D)>& vals,
                                  double c_top_val) {
    FunctionFamily fam;
    for (int j = 0; j < D; ++j) fam.f[j].value = vals[j];
    fam.c_top = c_top_val;
    return fam;
  }
};

/// Same family with every degree function perturbed in direction x0.
template <int D>
FunctionFamily<D> perturbed_family(FunctionFamily<D> fam, const Vec<D>& x0) {
  for (auto& df : fam.f) {
    df.perturbed = true;
    df.x0 = x0;
  }
  return fam;
}

// ---------------------------------------------------------------------------
// Weight-value cache
// ---------------------------------------------------------------------------

/// Memoizes weight evaluations keyed by the structured cone. Useful when the
/// same finitely many cone shapes recur across many Monte Carlo samples.
using FCache = std::unordered_map<std::string, double>;

namespace detail {

template <int D>
std::string cone_cache_key(int j, const Cone<D>& cone) {
  std::vector<std::array<long long, static_cast<std::size_t>(D)>> rows;
  for (const auto& g : cone.gens) {
    std::array<long long, static_cast<std::size_t>(D)> r;
    for (int i = 0; i < D; ++i) r[i] = std::llround(g[i] * 1e9);
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end());
  // the lineality projector is basis independent
  Mat<D> proj = cone.lineality * cone.lineality.transpose();
  std::string key;
  key.reserve(16 + rows.size() * D * 8 + D * D * 8);
  key.push_back(static_cast<char>('0' + j));
  key.push_back(static_cast<char>('0' + cone.lineality.cols()));
  auto put = [&key](long long v) {
    char buf[sizeof v];
    std::memcpy(buf, &v, sizeof v);
    key.append(buf, sizeof v);
  };
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) put(std::llround(proj(a, b) * 1e9));
  for (const auto& r : rows)
    for (long long v : r) put(v);
  return key;
}

/// Minkowski sum for cones already known to stay pointed (callers guard with
/// a positive face determinant); skips the nearest-point test.
template <int D>
Cone<D> cone_sum_presumed_pointed(const std::vector<Cone<D>>& cones) {
  int lin_cols = 0;
  for (const auto& c : cones) lin_cols += static_cast<int>(c.lineality.cols());
  Cone<D> out;
  if (lin_cols == 0) {
    out.lineality = MatX<D>(D, 0);
    for (const auto& c : cones)
      for (const auto& g : c.gens) {
        bool dup = false;
        for (const auto& e : out.gens)
          if (e.dot(g) > 1.0 - 1e-12) {
            dup = true;
            break;
          }
        if (!dup) out.gens.push_back(g);
      }
    return out;
  }
  MatX<D> stacked(D, lin_cols);
  int at = 0;
  for (const auto& c : cones) {
    stacked.middleCols(at, c.lineality.cols()) = c.lineality;
    at += static_cast<int>(c.lineality.cols());
  }
  out.lineality = orthonormal_span<D>(stacked);
  for (const auto& c : cones)
    for (const auto& g : c.gens) {
      Vec<D> h = g - out.lineality * (out.lineality.transpose() * g);
      const double len = h.norm();
      if (len <= eps_num) continue;
      h /= len;
      bool dup = false;
      for (const auto& e : out.gens)
        if (e.dot(h) > 1.0 - 1e-12) {
          dup = true;
          break;
        }
      if (!dup) out.gens.push_back(h);
    }
  return out;
}

template <int D>
double eval_on_cone(const DegreeFunction<D>& df, int j, const Cone<D>& cone, FCache* cache) {
  if (!df.needs_section()) return df.value;
  std::string key;
  if (cache) {
    key = cone_cache_key<D>(j, cone);
    auto it = cache->find(key);
    if (it != cache->end()) return it->second;
  }
  const double v = df.eval(sphere_section<D>(cone));
  if (cache) cache->emplace(std::move(key), v);
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Local functionals of a single polytope
// ---------------------------------------------------------------------------

/// Degree-j part of the local functional: sum over j-faces of the weight at
/// the face's normal direction times the face measure restricted to the
/// region (all of space when region is null). Degree D is the weighted
/// volume. Throws for j outside [0, D].
template <int D>
double phi_homogeneous(const FunctionFamily<D>& fam, int j, const Polytope<D>& p,
                       const Region<D>* region = nullptr, FCache* cache = nullptr) {
  if (j < 0 || j > D) throw std::invalid_argument("phi_homogeneous: degree out of range");
  if (j == D) {
    if (!region) return fam.c_top * volume(p);
    if (p.idim < D) return 0.0;
    auto clipped = clip_polytope<D>(p, region->hs);
    return clipped ? fam.c_top * volume(*clipped) : 0.0;
  }
  const auto& df = fam.f[j];
  const bool flat = !df.needs_section();
  double sum = 0.0;
  for (int i = 0; i < static_cast<int>(p.lattice[j].size()); ++i) {
    FaceRef<D> fr{&p, j, i};
    const double lam = region ? face_measure_restricted<D>(fr, *region) : face_volume<D>(fr);
    if (lam == 0.0) continue;
    if (flat) {
      sum += df.value * lam;
    } else {
      sum += detail::eval_on_cone<D>(df, j, normal_cone<D>(fr), cache) * lam;
    }
  }
  return sum;
}

/// Full local functional: all homogeneous parts plus the volume term.
template <int D>
double phi(const FunctionFamily<D>& fam, const Polytope<D>& p,
           const Region<D>* region = nullptr, FCache* cache = nullptr) {
  double sum = 0.0;
  for (int j = 0; j <= D; ++j) sum += phi_homogeneous<D>(fam, j, p, region, cache);
  return sum;
}

/// Intrinsic volume V_j(P).
template <int D>
double intrinsic_volume(const Polytope<D>& p, int j) {
  static const FunctionFamily<D> fam = FunctionFamily<D>::intrinsic();
  return phi_homogeneous<D>(fam, j, p);
}

// ---------------------------------------------------------------------------
// Mixed functionals
// ---------------------------------------------------------------------------

/// Mixed degree-j functional of k polytopes with face dimensions m_i: the sum
/// over face tuples of weight(summed normal cone) * [F_1,...,F_k] * product of
/// face measures. Requires sum(m_i) = (k-1) D + j (which forces m_i >= j).
/// Regions, when given, restrict each factor's face measure.
template <int D>
double mixed_functional(const FunctionFamily<D>& fam, int j,
                        const std::vector<const Polytope<D>*>& ps, const std::vector<int>& m,
                        const std::vector<Region<D>>* regions = nullptr,
                        FCache* cache = nullptr) {
  const int k = static_cast<int>(ps.size());
  if (k < 1 || m.size() != ps.size())
    throw std::invalid_argument("mixed_functional: size mismatch");
  if (regions && regions->size() != ps.size())
    throw std::invalid_argument("mixed_functional: region count mismatch");
  int total = 0;
  for (int mi : m) {
    if (mi < 0 || mi > D) throw std::invalid_argument("mixed_functional: bad face dimension");
    total += mi;
  }
  if (j < 0 || j > D || total != (k - 1) * D + j)
    throw std::invalid_argument("mixed_functional: dimensions do not satisfy the degree rule");

  if (j == D) {  // every m_i = D: product of restricted volumes
    double prod = fam.c_top;
    for (int i = 0; i < k; ++i) {
      if (!ps[i]->full_dimensional()) return 0.0;
      if (regions) {
        auto clipped = clip_polytope<D>(*ps[i], (*regions)[i].hs);
        prod *= clipped ? volume(*clipped) : 0.0;
      } else {
        prod *= volume(*ps[i]);
      }
      if (prod == 0.0) return 0.0;
    }
    return prod;
  }

  const auto& df = fam.f[j];
  // per-factor usable faces with nonzero restricted measure
  struct Entry {
    FaceRef<D> fr;
    double lam;
    MatX<D> comp;
  };
  std::vector<std::vector<Entry>> lists(k);
  for (int i = 0; i < k; ++i) {
    for (int idx = 0; idx < static_cast<int>(ps[i]->lattice[m[i]].size()); ++idx) {
      FaceRef<D> fr{ps[i], m[i], idx};
      const double lam =
          regions ? face_measure_restricted<D>(fr, (*regions)[i]) : face_volume<D>(fr);
      if (lam == 0.0) continue;
      lists[i].push_back({fr, lam, complement_basis<D>(fr)});
    }
    if (lists[i].empty()) return 0.0;
  }

  double sum = 0.0;
  std::vector<int> pick(k, 0);
  std::vector<MatX<D>> comps(k, MatX<D>(D, 0));
  auto rec = [&](auto&& self, int i, double lam_acc) -> void {
    if (i == k) {
      std::vector<MatX<D>> cs = comps;
      const double det = detail::det_of_complements<D>(std::move(cs));
      if (det <= det_tol) return;
      double w;
      if (!df.needs_section()) {
        w = df.value;
      } else {
        std::vector<Cone<D>> cones;
        cones.reserve(k);
        for (int t = 0; t < k; ++t) cones.push_back(normal_cone<D>(lists[t][pick[t]].fr));
        // a positive determinant certifies the sum stays pointed
        w = detail::eval_on_cone<D>(df, j, detail::cone_sum_presumed_pointed<D>(cones), cache);
      }
      sum += w * det * lam_acc;
      return;
    }
    for (int idx = 0; idx < static_cast<int>(lists[i].size()); ++idx) {
      pick[i] = idx;
      comps[i] = lists[i][idx].comp;
      self(self, i + 1, lam_acc * lists[i][idx].lam);
    }
  };
  rec(rec, 0, 1.0);
  return sum;
}

/// One translative expansion term.
struct MixedTerm {
  std::vector<int> dims;
  double value = 0.0;
};

/// All mixed terms of the degree-j translative expansion for k bodies:
/// every tuple (m_1,...,m_k) with entries in [j, D] summing to (k-1) D + j.
template <int D>
std::vector<MixedTerm> translative_terms(const FunctionFamily<D>& fam, int j,
                                         const std::vector<const Polytope<D>*>& ps,
                                         const std::vector<Region<D>>* regions = nullptr,
                                         FCache* cache = nullptr) {
  const int k = static_cast<int>(ps.size());
  if (k < 2) throw std::invalid_argument("translative_terms: need at least two bodies");
  if (j < 0 || j > D) throw std::invalid_argument("translative_terms: degree out of range");
  std::vector<MixedTerm> out;
  std::vector<int> m(k, 0);
  auto rec = [&](auto&& self, int i, int left) -> void {
    if (i == k - 1) {
      if (left < j || left > D) return;
      m[i] = left;
      out.push_back({m, mixed_functional<D>(fam, j, ps, m, regions, cache)});
      return;
    }
    for (int mi = j; mi <= D; ++mi) {
      if (left - mi < 0) break;
      m[i] = mi;
      self(self, i + 1, left - mi);
    }
  };
  rec(rec, 0, (k - 1) * D + j);
  return out;
}

/// Degree-j translative integral: the sum of all mixed expansion terms.
template <int D>
double translative_sum(const FunctionFamily<D>& fam, int j,
                       const std::vector<const Polytope<D>*>& ps,
                       const std::vector<Region<D>>* regions = nullptr,
                       FCache* cache = nullptr) {
  double s = 0.0;
  for (const auto& t : translative_terms<D>(fam, j, ps, regions, cache)) s += t.value;
  return s;
}

// ---------------------------------------------------------------------------
// Monte Carlo evaluation of the translative integrals
// ---------------------------------------------------------------------------

/// Direct Monte Carlo estimate of integral over x of
/// phi_j(P int (Q + x), A int (B + x)) dx, sampling x uniformly over the
/// translation support box.
template <int D>
Estimate translative_lhs_mc(const FunctionFamily<D>& fam, int j, const Polytope<D>& p,
                            const Polytope<D>& q, long samples, std::uint64_t seed,
                            const Region<D>* a = nullptr, const Region<D>* b = nullptr) {
  if (samples <= 0) throw std::invalid_argument("translative_lhs_mc: need samples");
  const Box<D> box = translation_support<D>(p, q);
  const double vol = box.volume();
  Rng rng(seed);
  FCache cache;
  Accumulator acc;
  for (long s = 0; s < samples; ++s) {
    const Vec<D> x = sample_box<D>(rng, box);
    auto isect = intersect<D>(p, translate<D>(q, x));
    if (!isect) {
      acc.add(0.0);
      continue;
    }
    double val;
    if (a || b) {
      // P int (Q + x) lies inside P, so a region covering P stands in for a
      // missing A; likewise B covering Q covers Q + x after translation.
      Region<D> ra = a ? *a : Region<D>::from_box(bounding_box(p).grown(1.0));
      Region<D> rb = (b ? *b : Region<D>::from_box(bounding_box(q).grown(1.0))).translated(x);
      Region<D> both = Region<D>::meet(ra, rb);
      val = phi_homogeneous<D>(fam, j, *isect, &both, &cache);
    } else {
      val = phi_homogeneous<D>(fam, j, *isect, nullptr, &cache);
    }
    acc.add(vol * val);
  }
  return acc.estimate(seed);
}

/// Monte Carlo estimate of the iterated (k-fold) translative integral of
/// phi_j(P_1 int (P_2 + x_2) int ... int (P_k + x_k)) over all shifts.
template <int D>
Estimate iterated_lhs_mc(const FunctionFamily<D>& fam, int j,
                         const std::vector<const Polytope<D>*>& ps, long samples,
                         std::uint64_t seed) {
  const int k = static_cast<int>(ps.size());
  if (k < 2) throw std::invalid_argument("iterated_lhs_mc: need at least two bodies");
  if (samples <= 0) throw std::invalid_argument("iterated_lhs_mc: need samples");
  std::vector<Box<D>> boxes;
  double vol = 1.0;
  for (int i = 1; i < k; ++i) {
    boxes.push_back(translation_support<D>(*ps[0], *ps[i]));
    vol *= boxes.back().volume();
  }
  Rng rng(seed);
  FCache cache;
  Accumulator acc;
  for (long s = 0; s < samples; ++s) {
    std::optional<Polytope<D>> cur = *ps[0];
    for (int i = 1; i < k && cur; ++i)
      cur = intersect<D>(*cur, translate<D>(*ps[i], sample_box<D>(rng, boxes[i - 1])));
    acc.add(cur ? vol * phi_homogeneous<D>(fam, j, *cur, nullptr, &cache) : 0.0);
  }
  return acc.estimate(seed);
}

}  // namespace transgeo
