#pragma once

#include "transgeo/gp_union.hpp"

namespace transgeo {

enum class RotationMode { Fixed, Isotropic };

/// One grain shape of the particle process: a single polytope or a finite
/// union of parts in mutual general position, stored centered at the center
/// of the smallest ball enclosing all parts. `u.grains` holds the parts and
/// `u.masks` the signed intersection bodies used by the analytic formulas.
template <int D>
struct GrainShape {
  PolytopeUnion<D> u;
  double weight = 1.0;  ///< mixing probability, normalized over shapes
  double radius = 0.0;  ///< circumradius about the origin

  bool single() const { return u.grains.size() == 1; }
  const Polytope<D>& part() const { return u.grains[0]; }

  /// inclusion-exclusion volume of the shape
  double volume_ie() const {
    double v = 0.0;
    for (const auto& m : u.masks) v += m.sign * volume(m.isect);
    return v;
  }
};

/// Stationary Poisson particle process: germs with intensity gamma, each
/// carrying an independent shape (by weight) and optional uniform rotation.
template <int D>
struct BooleanModel {
  std::vector<GrainShape<D>> shapes;
  double gamma = 0.0;
  RotationMode rotation = RotationMode::Fixed;

  double max_radius() const {
    double r = 0.0;
    for (const auto& s : shapes) r = std::max(r, s.radius);
    return r;
  }
};

/// Model over poly-polytopal shapes: each shape is given by its list of parts,
/// which must be in mutual general position (certified here; a single part is
/// trivially fine).
template <int D>
BooleanModel<D> make_boolean_model(std::vector<std::vector<Polytope<D>>> shapes,
                                   std::vector<double> weights, double gamma,
                                   RotationMode rotation = RotationMode::Fixed) {
  if (shapes.empty() || shapes.size() != weights.size())
    throw std::invalid_argument("make_boolean_model: need matching shapes and weights");
  if (gamma < 0.0) throw std::invalid_argument("make_boolean_model: negative intensity");
  double total = 0.0;
  for (double w : weights) {
    if (w <= 0.0) throw std::invalid_argument("make_boolean_model: weights must be positive");
    total += w;
  }
  BooleanModel<D> model;
  model.gamma = gamma;
  model.rotation = rotation;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (shapes[i].empty()) throw std::invalid_argument("make_boolean_model: empty shape");
    std::vector<Vec<D>> pts;
    for (const auto& part : shapes[i])
      for (int v = 0; v < part.vertex_count(); ++v) pts.push_back(part.V.col(v));
    const Ball<D> ball = minimum_enclosing_ball<D>(pts);
    GrainShape<D> g;
    std::vector<Polytope<D>> centered;
    for (const auto& part : shapes[i])
      centered.push_back(translate<D>(part, Vec<D>(-ball.center)));
    g.u = make_union<D>(centered);
    if (centered.size() > 1 && !certify_general_position<D>(g.u).ok)
      throw std::invalid_argument("make_boolean_model: shape parts not in general position");
    g.weight = weights[i] / total;
    g.radius = ball.radius;
    model.shapes.push_back(std::move(g));
  }
  return model;
}

template <int D>
BooleanModel<D> make_boolean_model(std::vector<Polytope<D>> shapes, std::vector<double> weights,
                                   double gamma, RotationMode rotation = RotationMode::Fixed) {
  std::vector<std::vector<Polytope<D>>> wrapped;
  for (auto& s : shapes) wrapped.push_back({std::move(s)});
  return make_boolean_model<D>(std::move(wrapped), std::move(weights), gamma, rotation);
}

/// All parts of all grains hitting the window, tagged by germ.
template <int D>
struct GrainSample {
  std::vector<Polytope<D>> parts;  ///< germ-contiguous
  std::vector<int> germ;           ///< germ index per part
  long germs = 0;                  ///< number of hitting germs
};

/// Exact sample of all grains hitting the window: germs are drawn on the
/// window grown by the shape's circumradius (no grain from farther away can
/// reach), then germs whose every part misses the window are discarded by a
/// separation test. Parts that miss the window individually are dropped too:
/// they cannot touch any window-restricted measure.
template <int D>
GrainSample<D> sample_grains(const BooleanModel<D>& model, const Box<D>& window, Rng& rng) {
  GrainSample<D> out;
  for (const auto& s : model.shapes) {
    const Box<D> grown = window.grown(s.radius);
    const long n = rng.poisson(model.gamma * s.weight * grown.volume());
    for (long i = 0; i < n; ++i) {
      const Mat<D> r = model.rotation == RotationMode::Isotropic ? random_rotation<D>(rng)
                                                                 : Mat<D>::Identity();
      const Vec<D> x = sample_box<D>(rng, grown);
      std::vector<Polytope<D>> kept;
      for (const auto& part : s.u.grains) {
        Polytope<D> g = model.rotation == RotationMode::Isotropic
                            ? translate<D>(rotate<D>(part, r), x)
                            : translate<D>(part, x);
        if (!disjoint_from_box(g, window)) kept.push_back(std::move(g));
      }
      if (kept.empty()) continue;
      const int id = static_cast<int>(out.germs++);
      for (auto& g : kept) {
        out.parts.push_back(std::move(g));
        out.germ.push_back(id);
      }
    }
  }
  return out;
}

/// Union with a general-position certificate. Grains named in violations get
/// a tiny random shake and the union is rebuilt, up to max_rounds times.
template <int D>
struct CertifiedUnion {
  PolytopeUnion<D> u;
  GeneralPositionReport cert;
  int jitter_rounds = 0;
};

template <int D>
CertifiedUnion<D> boolean_union(std::vector<Polytope<D>> grains, Rng& rng,
                                double jitter = 1e-6, int max_rounds = 20) {
  CertifiedUnion<D> out;
  // a realization may percolate into one big overlap cluster; the empty-
  // intersection pruning keeps the subset walk tractable, so only the mask
  // budget is enforced here
  const int cluster_cap = std::max<int>(25, static_cast<int>(grains.size()));
  for (int round = 0;; ++round) {
    std::vector<char> shake(grains.size(), 0);
    bool build_failed = false;
    try {
      out.u = make_union<D>(grains, cluster_cap);
      out.cert = certify_general_position<D>(out.u);
      out.jitter_rounds = round;
      if (out.cert.ok) return out;
      for (const auto& v : out.cert.violations)
        for (int id : v.members) shake[id] = 1;
    } catch (const std::runtime_error&) {
      // hull assembly defeated by an ill-conditioned intersection; no culprit
      // list is available, so every grain gets reshaken
      if (round == max_rounds) throw;
      build_failed = true;
      std::fill(shake.begin(), shake.end(), 1);
    }
    if (!build_failed && round == max_rounds)
      throw std::runtime_error("boolean_union: general position not reached after " +
                               std::to_string(max_rounds) + " jitter rounds");
    // exact coincidences (touching facets, shared planes) resolve under a
    // tiny translation; near-parallel supporting planes crossing at a shallow
    // angle do not, so persistent offenders also get a small rotation with
    // amplitude growing by round
    const double tshift = std::min(jitter * std::pow(4.0, round), 1e-4);
    const double angle = round < 2 ? 0.0 : std::min(1e-6 * std::pow(4.0, round - 2), 1e-3);
    for (std::size_t i = 0; i < grains.size(); ++i) {
      if (!shake[i]) continue;
      Vec<D> delta;
      for (int a = 0; a < D; ++a) delta[a] = rng.uniform(-tshift, tshift);
      if (angle > 0.0) {
        const Vec<D> c = grains[i].centroid();
        Mat<D> r;
        if constexpr (D == 2) {
          r = rotation2(rng.uniform(-angle, angle));
        } else {
          const Vec<3> axis = random_unit<3>(rng);
          r = Eigen::AngleAxisd(rng.uniform(-angle, angle), axis).toRotationMatrix();
        }
        grains[i] = translate<D>(rotate<D>(translate<D>(grains[i], -c), r), c + delta);
      } else {
        grains[i] = translate<D>(grains[i], delta);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Density estimation by simulation
// ---------------------------------------------------------------------------

/// Mean densities per unit volume, one Estimate per homogeneity degree.
template <int D>
struct BooleanSimulation {
  std::array<Estimate, static_cast<std::size_t>(D) + 1> x_density;  ///< particle process
  std::array<Estimate, static_cast<std::size_t>(D) + 1> z_density;  ///< union set
  Estimate grains_per_replication;
  long total_jitter_rounds = 0;
};

/// Single-pass engine: every replication samples one grain configuration,
/// accumulates the window-restricted particle sums (unbiased for the particle
/// densities) and the union functionals on the eroded window (minus-sampling
/// for the union densities).
template <int D>
BooleanSimulation<D> simulate_densities(const BooleanModel<D>& model,
                                        const FunctionFamily<D>& fam, const Box<D>& window,
                                        long replications, std::uint64_t seed) {
  if (replications < 2)
    throw std::invalid_argument("simulate_densities: need at least two replications");
  const double margin = model.max_radius();
  for (int a = 0; a < D; ++a)
    if (window.hi[a] - window.lo[a] <= 2.0 * margin)
      throw std::invalid_argument(
          "simulate_densities: window too small for the erosion margin");
  const Box<D> inner = window.eroded(margin);
  const Region<D> outer_region = Region<D>::from_box(window);
  const Region<D> inner_region = Region<D>::from_box(inner);
  const double wv = window.volume();
  const double iv = inner.volume();

  BooleanSimulation<D> sim;
  std::array<Accumulator, static_cast<std::size_t>(D) + 1> acc_x, acc_z;
  Accumulator acc_n;
  for (long rep = 0; rep < replications; ++rep) {
    Rng rng(seed, static_cast<std::uint64_t>(rep) + 1);
    auto sample = sample_grains<D>(model, window, rng);
    acc_n.add(static_cast<double>(sample.germs));
    FCache cache;
    std::array<double, static_cast<std::size_t>(D) + 1> xsum{};
    for (std::size_t lo = 0; lo < sample.parts.size();) {
      std::size_t hi = lo + 1;
      while (hi < sample.parts.size() && sample.germ[hi] == sample.germ[lo]) ++hi;
      if (hi - lo == 1) {
        for (int j = 0; j <= D; ++j)
          xsum[j] += phi_homogeneous<D>(fam, j, sample.parts[lo], &outer_region, &cache);
      } else {
        // poly-polytopal germ: its own parts stay rigid, so the shape's
        // certified general position carries over and no jitter is needed
        const auto gu = make_union<D>(
            std::vector<Polytope<D>>(sample.parts.begin() + static_cast<long>(lo),
                                     sample.parts.begin() + static_cast<long>(hi)));
        for (int j = 0; j <= D; ++j)
          xsum[j] += union_functional<D>(fam, j, gu, &outer_region, &cache);
      }
      lo = hi;
    }
    for (int j = 0; j <= D; ++j) acc_x[j].add(xsum[j] / wv);
    auto cu = boolean_union<D>(std::move(sample.parts), rng);
    sim.total_jitter_rounds += cu.jitter_rounds;
    for (int j = 0; j <= D; ++j)
      acc_z[j].add(union_functional<D>(fam, j, cu.u, &inner_region, &cache) / iv);
  }
  for (int j = 0; j <= D; ++j) {
    sim.x_density[j] = acc_x[j].estimate(seed);
    sim.z_density[j] = acc_z[j].estimate(seed);
  }
  sim.grains_per_replication = acc_n.estimate(seed);
  return sim;
}

// ---------------------------------------------------------------------------
// Analytic densities
// ---------------------------------------------------------------------------

/// Particle-process density of the degree-j functional. Exact for both
/// rotation modes: the global functionals are rotation invariant because the
/// weights act on rotated cones through rotation-invariant section measures.
template <int D>
double analytic_density_x(const BooleanModel<D>& model, const FunctionFamily<D>& fam, int j) {
  double mean = 0.0;
  for (const auto& s : model.shapes)
    mean += s.weight * (s.single() ? phi_homogeneous<D>(fam, j, s.part())
                                   : union_functional<D>(fam, j, s.u));
  return model.gamma * mean;
}

namespace detail {

/// Signed intersection bodies of every shape of the model: multilinearity
/// turns a mixed functional of poly-polytopal shapes into a sign-weighted sum
/// over mask tuples, one body per slot.
template <int D>
std::vector<std::vector<std::pair<double, const Polytope<D>*>>> signed_bodies(
    const BooleanModel<D>& model) {
  std::vector<std::vector<std::pair<double, const Polytope<D>*>>> out(model.shapes.size());
  for (std::size_t i = 0; i < model.shapes.size(); ++i)
    for (const auto& m : model.shapes[i].u.masks) out[i].push_back({m.sign, &m.isect});
  return out;
}

}  // namespace detail

/// Mean-weighted mixed functional over independent grains of the model, times
/// gamma^s: the s-fold mixed density. Exact for fixed rotations; for
/// isotropic rotations a Monte Carlo rotation average with rot_samples draws.
template <int D>
double mixed_density(const BooleanModel<D>& model, const FunctionFamily<D>& fam, int j,
                     const std::vector<int>& m, long rot_samples = 100000,
                     std::uint64_t seed = 9001) {
  const int s = static_cast<int>(m.size());
  const auto bodies = detail::signed_bodies<D>(model);
  std::vector<int> tuple(s, 0);
  std::vector<const Polytope<D>*> ps(s);
  double total = 0.0;
  FCache cache;

  // sign-weighted sum over one intersection body per slot (trivial for
  // single-part shapes); `pick` supplies the bodies of slot i
  auto mask_sum = [&](auto&& pick, FCache* cc) {
    double acc = 0.0;
    auto rec = [&](auto&& self, int at, double sign) -> void {
      if (at == s) {
        acc += sign * mixed_functional<D>(fam, j, ps, m, nullptr, cc);
        return;
      }
      for (const auto& [sg, body] : pick(at)) {
        ps[at] = body;
        self(self, at + 1, sign * sg);
      }
    };
    rec(rec, 0, 1.0);
    return acc;
  };

  auto shapes_rec = [&](auto&& self, int at) -> void {
    if (at == s) {
      double w = 1.0;
      for (int i = 0; i < s; ++i) w *= model.shapes[tuple[i]].weight;
      double value;
      if (model.rotation == RotationMode::Fixed) {
        value = mask_sum([&](int i) -> const auto& { return bodies[tuple[i]]; }, &cache);
      } else {
        std::uint64_t stream = 1;
        for (int i = 0; i < s; ++i)
          stream = stream * (model.shapes.size() + 1) + static_cast<std::uint64_t>(tuple[i]);
        Rng rng(seed, stream);
        Accumulator acc;
        std::vector<std::vector<std::pair<double, const Polytope<D>*>>> rotated(s);
        std::vector<std::vector<Polytope<D>>> store(s);
        for (long r = 0; r < rot_samples; ++r) {
          for (int i = 0; i < s; ++i) {
            const Mat<D> rot = random_rotation<D>(rng);
            store[i].clear();
            rotated[i].clear();
            for (const auto& [sg, body] : bodies[tuple[i]])
              store[i].push_back(rotate<D>(*body, rot));
            for (std::size_t b = 0; b < store[i].size(); ++b)
              rotated[i].push_back({bodies[tuple[i]][b].first, &store[i][b]});
          }
          acc.add(mask_sum([&](int i) -> const auto& { return rotated[i]; }, nullptr));
        }
        value = acc.estimate().mean;
      }
      total += w * value;
      return;
    }
    for (int t = 0; t < static_cast<int>(model.shapes.size()); ++t) {
      tuple[at] = t;
      self(self, at + 1);
    }
  };
  shapes_rec(shapes_rec, 0);
  return std::pow(model.gamma, s) * total;
}

/// Density of the degree-j functional of the union set Z. The volume degree
/// saturates as c (1 - exp(-v)); below that the particle density is corrected
/// by alternating sums of mixed densities over interior face dimensions.
template <int D>
double analytic_density_z(const BooleanModel<D>& model, const FunctionFamily<D>& fam, int j,
                          long rot_samples = 100000, std::uint64_t seed = 9001) {
  if (j < 0 || j > D) throw std::invalid_argument("analytic_density_z: degree out of range");
  double vbar = 0.0;
  for (const auto& s : model.shapes) vbar += s.weight * s.volume_ie();
  vbar *= model.gamma;
  if (j == D) return fam.c_top * (1.0 - std::exp(-vbar));
  double inner = analytic_density_x<D>(model, fam, j);
  double sign = -1.0;
  double sfact = 1.0;
  for (int s = 2; s <= D - j; ++s) {
    sfact *= s;
    std::vector<int> m(s, 0);
    double level = 0.0;
    auto rec = [&](auto&& self, int at, int left) -> void {
      if (at == s - 1) {
        if (left < j + 1 || left > D - 1) return;
        m[at] = left;
        level += mixed_density<D>(model, fam, j, m, rot_samples, seed);
        return;
      }
      for (int mi = j + 1; mi <= D - 1; ++mi) {
        if (left - mi < 0) break;
        m[at] = mi;
        self(self, at + 1, left - mi);
      }
    };
    rec(rec, 0, (s - 1) * D + j);
    inner += sign / sfact * level;
    sign = -sign;
  }
  return std::exp(-vbar) * inner;
}

/// Density of the k-th intersection process: the mean degree-j translation
/// integral over k independent grains, weighted by gamma^k / k!.
template <int D>
double intersection_density(const BooleanModel<D>& model, const FunctionFamily<D>& fam, int j,
                            int k, long rot_samples = 20000, std::uint64_t seed = 9001) {
  if (k < 2) throw std::invalid_argument("intersection_density: need k >= 2");
  const auto bodies = detail::signed_bodies<D>(model);
  std::vector<int> tuple(k, 0);
  std::vector<const Polytope<D>*> ps(k);
  double total = 0.0;
  FCache cache;

  auto mask_sum = [&](auto&& pick, FCache* cc) {
    double acc = 0.0;
    auto rec = [&](auto&& self, int at, double sign) -> void {
      if (at == k) {
        acc += sign * translative_sum<D>(fam, j, ps, nullptr, cc);
        return;
      }
      for (const auto& [sg, body] : pick(at)) {
        ps[at] = body;
        self(self, at + 1, sign * sg);
      }
    };
    rec(rec, 0, 1.0);
    return acc;
  };

  auto rec = [&](auto&& self, int at) -> void {
    if (at == k) {
      double w = 1.0;
      for (int i = 0; i < k; ++i) w *= model.shapes[tuple[i]].weight;
      double value;
      if (model.rotation == RotationMode::Fixed) {
        value = mask_sum([&](int i) -> const auto& { return bodies[tuple[i]]; }, &cache);
      } else {
        std::uint64_t stream = 2;
        for (int i = 0; i < k; ++i)
          stream = stream * (model.shapes.size() + 1) + static_cast<std::uint64_t>(tuple[i]);
        Rng rng(seed, stream);
        Accumulator acc;
        std::vector<std::vector<std::pair<double, const Polytope<D>*>>> rotated(k);
        std::vector<std::vector<Polytope<D>>> store(k);
        for (long r = 0; r < rot_samples; ++r) {
          for (int i = 0; i < k; ++i) {
            const Mat<D> rot = random_rotation<D>(rng);
            store[i].clear();
            rotated[i].clear();
            for (const auto& [sg, body] : bodies[tuple[i]])
              store[i].push_back(rotate<D>(*body, rot));
            for (std::size_t b = 0; b < store[i].size(); ++b)
              rotated[i].push_back({bodies[tuple[i]][b].first, &store[i][b]});
          }
          acc.add(mask_sum([&](int i) -> const auto& { return rotated[i]; }, nullptr));
        }
        value = acc.estimate().mean;
      }
      total += w * value;
      return;
    }
    for (int t = 0; t < static_cast<int>(model.shapes.size()); ++t) {
      tuple[at] = t;
      self(self, at + 1);
    }
  };
  rec(rec, 0);
  double kfact = 1.0;
  for (int i = 2; i <= k; ++i) kfact *= i;
  return std::pow(model.gamma, k) / kfact * total;
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

struct SimulationRow {
  std::string name;
  double analytic = 0.0;
  Estimate est;
};

struct SimulationReport {
  std::vector<SimulationRow> rows;
  Estimate grains_per_replication;
  long total_jitter_rounds = 0;
};

/// Full density report for a weight family: particle and union densities of
/// every degree, analytic column against the simulated estimate.
template <int D>
SimulationReport density_report(const BooleanModel<D>& model, const FunctionFamily<D>& fam,
                                const Box<D>& window, long replications, std::uint64_t seed,
                                long rot_samples = 100000) {
  const auto sim = simulate_densities<D>(model, fam, window, replications, seed);
  SimulationReport rep;
  rep.grains_per_replication = sim.grains_per_replication;
  rep.total_jitter_rounds = sim.total_jitter_rounds;
  for (int j = 0; j <= D; ++j)
    rep.rows.push_back({"X_" + std::to_string(j), analytic_density_x<D>(model, fam, j),
                        sim.x_density[j]});
  for (int j = 0; j <= D; ++j)
    rep.rows.push_back({"Z_" + std::to_string(j),
                        analytic_density_z<D>(model, fam, j, rot_samples, seed),
                        sim.z_density[j]});
  return rep;
}

/// Skeleton densities of the union set with unit weights, named in the usual
/// order: area fraction and boundary length in the plane, volume fraction,
/// surface content and edge length in space, vertex intensity in both.
template <int D>
SimulationReport skeleton_density_report(const BooleanModel<D>& model, const Box<D>& window,
                                         long replications, std::uint64_t seed,
                                         long rot_samples = 100000) {
  const auto fam = FunctionFamily<D>::ones();
  const auto sim = simulate_densities<D>(model, fam, window, replications, seed);
  SimulationReport rep;
  rep.grains_per_replication = sim.grains_per_replication;
  rep.total_jitter_rounds = sim.total_jitter_rounds;
  const std::array<std::string, 4> names2{{"N0_Z", "L_Z", "A_Z", ""}};
  const std::array<std::string, 4> names3{{"N0_Z", "L1_Z", "S_Z", "V_Z"}};
  for (int j = D; j >= 0; --j) {
    const std::string name = (D == 2) ? names2[j] : names3[j];
    rep.rows.push_back(
        {name, analytic_density_z<D>(model, fam, j, rot_samples, seed), sim.z_density[j]});
  }
  return rep;
}

}  // namespace transgeo
