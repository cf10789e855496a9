#pragma once

#include <iosfwd>
#include <string>

#include "transgeo/boolean_model.hpp"

namespace transgeo {

// ---------------------------------------------------------------------------
// Polytope files: one line "dim d", then one vertex per line with d
// whitespace-separated decimals. '#' starts a comment, blank lines are
// skipped. All errors are ParseError with "<name>:<line>: ..." prefixes.
// ---------------------------------------------------------------------------

struct PolytopeFile {
  int dim = 0;
  std::vector<std::vector<double>> vertices;
};

PolytopeFile read_polytope_file(std::istream& in, const std::string& name);
PolytopeFile read_polytope_file(const std::string& path);

template <int D>
Polytope<D> to_polytope(const PolytopeFile& pf, const std::string& name = "polytope") {
  if (pf.dim != D)
    throw ParseError(name + ": dimension " + std::to_string(pf.dim) + ", expected " +
                     std::to_string(D));
  std::vector<Vec<D>> pts;
  pts.reserve(pf.vertices.size());
  for (const auto& row : pf.vertices) {
    Vec<D> p;
    for (int a = 0; a < D; ++a) p[a] = row[static_cast<std::size_t>(a)];
    pts.push_back(p);
  }
  return build_polytope<D>(pts);
}

template <int D>
Polytope<D> read_polytope(const std::string& path) {
  return to_polytope<D>(read_polytope_file(path), path);
}

/// Union spec: one polytope file path per line ('#' comments, blanks
/// skipped), resolved relative to the spec file's directory.
std::vector<std::string> read_union_spec(const std::string& path);

// ---------------------------------------------------------------------------
// Weight-family spec shared by config files and command-line flags
// ---------------------------------------------------------------------------

/// kind: "ones" (unit weights), "intrinsic" (external angles), or
/// "constants" with one value per degree 0..d-1 followed by the volume
/// coefficient.
struct FunctionalSpec {
  std::string kind = "ones";
  std::vector<double> constants;  ///< used by kind == "constants"
  std::vector<double> x0;         ///< optional perturbation shift, empty = none
};

template <int D>
FunctionFamily<D> make_family(const FunctionalSpec& fs) {
  FunctionFamily<D> fam;
  if (fs.kind == "ones") {
    fam = FunctionFamily<D>::ones();
  } else if (fs.kind == "intrinsic") {
    fam = FunctionFamily<D>::intrinsic();
  } else if (fs.kind == "constants") {
    if (fs.constants.size() != static_cast<std::size_t>(D) + 1)
      throw ParseError("functional constants: expected " + std::to_string(D + 1) +
                       " values (degrees 0.." + std::to_string(D - 1) +
                       " plus the volume coefficient)");
    std::array<double, static_cast<std::size_t>(D)> vals;
    for (int j = 0; j < D; ++j) vals[static_cast<std::size_t>(j)] = fs.constants[j];
    fam = FunctionFamily<D>::constants(vals, fs.constants[static_cast<std::size_t>(D)]);
  } else {
    throw ParseError("functional kind '" + fs.kind + "' not recognized");
  }
  if (!fs.x0.empty()) {
    if (fs.x0.size() != static_cast<std::size_t>(D))
      throw ParseError("x0: expected " + std::to_string(D) + " coordinates");
    Vec<D> x0;
    for (int a = 0; a < D; ++a) x0[a] = fs.x0[static_cast<std::size_t>(a)];
    fam = perturbed_family<D>(fam, x0);
  }
  return fam;
}

// ---------------------------------------------------------------------------
// Simulation config
// ---------------------------------------------------------------------------

struct GrainSpec {
  std::vector<std::string> paths;  ///< parts of one (poly-)polytopal shape
  double weight = 1.0;
};

struct SimConfig {
  int dimension = 0;
  double gamma = -1.0;
  double window_size = 0.0;  ///< cubic window [0, size]^d
  long replications = 0;
  bool has_seed = false;
  std::uint64_t seed = 0;
  RotationMode rotation = RotationMode::Fixed;
  long rot_samples = 100000;
  std::vector<GrainSpec> grains;
  FunctionalSpec functional;
};

/// Key-value config ("key = value", '#' comments). Required keys: dimension,
/// gamma, window_size, replications, and at least one grain (path[,path...]
/// [weight]). Optional: seed, rotation_mode, rot_samples, functional,
/// constants, x0. Grain paths resolve relative to the config file.
SimConfig read_config(const std::string& path);

template <int D>
BooleanModel<D> model_from_config(const SimConfig& cfg) {
  if (cfg.dimension != D) throw ParseError("config dimension does not match");
  std::vector<std::vector<Polytope<D>>> shapes;
  std::vector<double> weights;
  for (const auto& g : cfg.grains) {
    std::vector<Polytope<D>> parts;
    for (const auto& p : g.paths) parts.push_back(read_polytope<D>(p));
    shapes.push_back(std::move(parts));
    weights.push_back(g.weight);
  }
  return make_boolean_model<D>(std::move(shapes), std::move(weights), cfg.gamma, cfg.rotation);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Shortest decimal round-trip representation, '.' separator, locale-free.
std::string format_number(double x);

/// CSV "quantity,analytic_value,estimate,stderr,z_score" rows; deterministic
/// bytes for identical inputs.
void write_report_csv(std::ostream& out, const std::vector<SimulationRow>& rows);

/// Machine-readable summary: configuration echo, per-row values, and the
/// tolerance verdict, with stable key order.
std::string report_summary(const SimConfig& cfg, const SimulationReport& rep,
                           double tolerance_sigma);

}  // namespace transgeo
