#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "transgeo/io.hpp"

namespace {

using namespace transgeo;

struct EvalOpts {
  std::string shape;
  FunctionalSpec fs;
  int degree = -1;
  bool total = false;
  std::vector<double> box;
};

struct TranslativeOpts {
  std::string p, q;
  FunctionalSpec fs;
  int j = 0;
  long samples = 100000;
  std::uint64_t seed = 0;
  double tol = 3.0;
};

struct SimulateOpts {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  long reps = 0;
  double tol = 3.0;
};

struct GpOpts {
  std::string spec;
  FunctionalSpec fs;
};

void add_functional_flags(CLI::App* sub, FunctionalSpec& fs) {
  sub->add_option("--functional", fs.kind, "weight family: ones, intrinsic, or constants")
      ->check(CLI::IsMember({"ones", "intrinsic", "constants"}));
  sub->add_option("--constants", fs.constants,
                  "per-degree weights plus volume coefficient (with --functional constants)");
  sub->add_option("--x0", fs.x0, "shift applied to every weight argument");
}

template <int D>
Region<D> box_region(const std::vector<double>& vals) {
  if (vals.size() != 2 * static_cast<std::size_t>(D))
    throw ParseError("--box: expected " + std::to_string(2 * D) +
                     " values (lo coordinates then hi coordinates)");
  Box<D> b;
  for (int i = 0; i < D; ++i) {
    b.lo[i] = vals[static_cast<std::size_t>(i)];
    b.hi[i] = vals[static_cast<std::size_t>(D + i)];
    if (!(b.hi[i] > b.lo[i])) throw ParseError("--box: hi must exceed lo in every coordinate");
  }
  return Region<D>::from_box(b);
}

template <int D>
int run_eval(const EvalOpts& o, const PolytopeFile& pf) {
  const Polytope<D> p = to_polytope<D>(pf, o.shape);
  const FunctionFamily<D> fam = make_family<D>(o.fs);
  Region<D> region;
  const Region<D>* rp = nullptr;
  if (!o.box.empty()) {
    region = box_region<D>(o.box);
    rp = &region;
  }
  FCache cache;
  if (o.degree >= 0) {
    std::cout << format_number(phi_homogeneous<D>(fam, o.degree, p, rp, &cache)) << "\n";
    return 0;
  }
  for (int j = 0; j <= D; ++j)
    std::cout << (j ? " " : "") << format_number(phi_homogeneous<D>(fam, j, p, rp, &cache));
  std::cout << "\n";
  if (o.total) std::cout << "total " << format_number(phi<D>(fam, p, rp, &cache)) << "\n";
  return 0;
}

template <int D>
int run_check_translative(const TranslativeOpts& o, const PolytopeFile& pfp,
                          const PolytopeFile& pfq) {
  const Polytope<D> p = to_polytope<D>(pfp, o.p);
  const Polytope<D> q = to_polytope<D>(pfq, o.q);
  const FunctionFamily<D> fam = make_family<D>(o.fs);
  FCache cache;
  const auto terms = translative_terms<D>(fam, o.j, {&p, &q}, nullptr, &cache);
  double rhs = 0.0;
  for (const auto& t : terms) {
    std::cout << "m=(";
    for (std::size_t i = 0; i < t.dims.size(); ++i)
      std::cout << (i ? "," : "") << t.dims[i];
    std::cout << ") " << format_number(t.value) << "\n";
    rhs += t.value;
  }
  std::cout << "rhs " << format_number(rhs) << "\n";
  const Estimate lhs = translative_lhs_mc<D>(fam, o.j, p, q, o.samples, o.seed);
  std::cout << "lhs " << format_number(lhs.mean) << " se " << format_number(lhs.se) << "\n";
  const double z = lhs.z_score(rhs);
  std::cout << "z " << format_number(z) << "\n";
  return std::abs(z) < o.tol ? 0 : 1;
}

template <int D>
int run_simulate(const SimConfig& cfg, const SimulateOpts& o) {
  const BooleanModel<D> model = model_from_config<D>(cfg);
  Box<D> window;
  window.lo = Vec<D>::Zero();
  window.hi = Vec<D>::Constant(cfg.window_size);
  std::cerr << "simulate: dimension=" << D << " gamma=" << format_number(cfg.gamma)
            << " replications=" << cfg.replications << " seed=" << cfg.seed << "\n";
  const bool skeleton = cfg.functional.kind == "ones" && cfg.functional.x0.empty();
  SimulationReport rep;
  if (skeleton) {
    rep = skeleton_density_report<D>(model, window, cfg.replications, cfg.seed,
                                     cfg.rot_samples);
  } else {
    const FunctionFamily<D> fam = make_family<D>(cfg.functional);
    rep = density_report<D>(model, fam, window, cfg.replications, cfg.seed, cfg.rot_samples);
  }
  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw ParseError(o.out + ": cannot open for writing");
    write_report_csv(f, rep.rows);
  } else {
    write_report_csv(std::cout, rep.rows);
  }
  std::cout << report_summary(cfg, rep, o.tol);
  double max_abs_z = 0.0;
  for (const auto& r : rep.rows) max_abs_z = std::max(max_abs_z, std::abs(r.est.z_score(r.analytic)));
  return max_abs_z < o.tol ? 0 : 1;
}

template <int D>
int run_check_gp(const GpOpts& o, const std::vector<std::string>& paths) {
  std::vector<Polytope<D>> parts;
  for (const auto& p : paths) parts.push_back(read_polytope<D>(p));
  const int n_in = static_cast<int>(parts.size());
  const auto u = make_union<D>(std::move(parts));
  const auto cert = certify_general_position<D>(u);
  std::cout << "certification " << (cert.ok ? "PASS" : "FAIL") << " masks "
            << cert.masks_checked << " faces " << cert.faces_checked << "\n";
  if (!cert.ok) {
    for (const auto& v : cert.violations) {
      std::cout << "violation members=(";
      for (std::size_t i = 0; i < v.members.size(); ++i)
        std::cout << (i ? "," : "") << v.members[i];
      std::cout << ") face_dim=" << v.face_dim << " rank_sum=" << v.rank_sum
                << " pooled_rank=" << v.pooled_rank << " expected=" << v.expected << "\n";
    }
    return 1;
  }
  std::vector<int> removed;
  const auto reduced = reduce_union<D>(u, &removed);
  std::cout << "parts " << n_in << " reduced " << reduced.grains.size();
  if (!removed.empty()) {
    std::cout << " removed";
    for (int i : removed) std::cout << " " << i;
  }
  std::cout << "\n";
  const FunctionFamily<D> fam = make_family<D>(o.fs);
  const auto profile = union_functional_profile<D>(fam, u);
  for (int j = 0; j <= D; ++j)
    std::cout << "phi_" << j << " " << format_number(profile[static_cast<std::size_t>(j)])
              << "\n";
  const FeatureReport fr = boundary_features<D>(u);
  std::cout << "feature_kind,sign,count_or_length\n";
  std::cout << "vertex_1grain,1," << fr.vertex_counts[0] << "\n";
  std::cout << "vertex_2grain,-1," << fr.vertex_counts[1] << "\n";
  std::cout << "vertex_3grain,1," << fr.vertex_counts[2] << "\n";
  std::cout << "edge_original,1," << format_number(fr.original_edge_length) << "\n";
  std::cout << "edge_crossing,-1," << format_number(fr.crossing_edge_length) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local functionals on convex polytopes: evaluation, translative expansions, "
               "union certification, and Boolean-model simulation"};
  app.require_subcommand(1);

  EvalOpts eo;
  auto* eval = app.add_subcommand("eval", "evaluate the homogeneous functional values of a shape");
  eval->add_option("--shape", eo.shape, "polytope file")->required();
  add_functional_flags(eval, eo.fs);
  eval->add_option("--degree", eo.degree, "print a single degree instead of all");
  eval->add_flag("--total", eo.total, "also print the summed functional");
  eval->add_option("--box", eo.box, "restrict to an axis box: lo coordinates then hi");

  TranslativeOpts to;
  auto* tr = app.add_subcommand("check-translative",
                                "compare the mixed expansion of an overlap integral with "
                                "direct Monte Carlo");
  tr->add_option("--p", to.p, "first polytope file")->required();
  tr->add_option("--q", to.q, "second polytope file")->required();
  tr->add_option("--j", to.j, "degree of the expansion");
  add_functional_flags(tr, to.fs);
  tr->add_option("--samples", to.samples, "Monte Carlo sample count");
  tr->add_option("--seed", to.seed, "random seed")->required();
  tr->add_option("--tolerance-sigma", to.tol, "accept when |z| is below this");

  SimulateOpts so;
  auto* sim = app.add_subcommand("simulate",
                                 "run a Boolean-model simulation against its analytic densities");
  sim->add_option("--config", so.config, "simulation config file")->required();
  sim->add_option("--out", so.out, "write the CSV report here instead of standard output");
  auto* seed_opt = sim->add_option("--seed", so.seed, "override the config seed");
  sim->add_option("--reps", so.reps, "override the config replication count");
  sim->add_option("--tolerance-sigma", so.tol, "accept when every |z| is below this");

  GpOpts go;
  auto* gp = app.add_subcommand("check-gp",
                                "certify a union of parts and report its functionals and "
                                "boundary features");
  gp->add_option("--union", go.spec, "union spec file: one polytope path per line")->required();
  add_functional_flags(gp, go.fs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*eval) {
      const PolytopeFile pf = read_polytope_file(eo.shape);
      return pf.dim == 2 ? run_eval<2>(eo, pf) : run_eval<3>(eo, pf);
    }
    if (*tr) {
      const PolytopeFile pfp = read_polytope_file(to.p);
      const PolytopeFile pfq = read_polytope_file(to.q);
      if (pfp.dim != pfq.dim)
        throw ParseError("shapes have different dimensions: " + std::to_string(pfp.dim) +
                         " vs " + std::to_string(pfq.dim));
      return pfp.dim == 2 ? run_check_translative<2>(to, pfp, pfq)
                          : run_check_translative<3>(to, pfp, pfq);
    }
    if (*sim) {
      SimConfig cfg = read_config(so.config);
      if (seed_opt->count() > 0) {
        cfg.seed = so.seed;
        cfg.has_seed = true;
      }
      if (!cfg.has_seed)
        throw ParseError("seed required: set 'seed' in the config or pass --seed");
      if (so.reps > 0) cfg.replications = so.reps;
      return cfg.dimension == 2 ? run_simulate<2>(cfg, so) : run_simulate<3>(cfg, so);
    }
    if (*gp) {
      const auto paths = read_union_spec(go.spec);
      const PolytopeFile first = read_polytope_file(paths.front());
      return first.dim == 2 ? run_check_gp<2>(go, paths) : run_check_gp<3>(go, paths);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
