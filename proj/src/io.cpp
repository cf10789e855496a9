#include "transgeo/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace transgeo {

namespace {

// strip comments, carriage returns, and surrounding whitespace
std::string clean_line(std::string s) {
  if (auto h = s.find('#'); h != std::string::npos) s.erase(h);
  std::size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  std::size_t e = s.size();
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t b = 0;
  while (b <= s.size()) {
    std::size_t e = s.find(sep, b);
    if (e == std::string::npos) e = s.size();
    out.push_back(clean_line(s.substr(b, e - b)));
    b = e + 1;
  }
  return out;
}

double parse_double(const std::string& tok, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw ParseError(where + ": not a number: '" + tok + "'");
  return v;
}

long parse_long(const std::string& tok, const std::string& where) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw ParseError(where + ": not an integer: '" + tok + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& tok, const std::string& where) {
  std::uint64_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw ParseError(where + ": not a nonnegative integer: '" + tok + "'");
  return v;
}

std::vector<double> parse_doubles(const std::string& value, const std::string& where) {
  std::vector<double> out;
  for (const auto& tok : split_ws(value)) out.push_back(parse_double(tok, where));
  return out;
}

std::string resolve_relative(const std::string& base_file, const std::string& p) {
  std::filesystem::path q(p);
  if (q.is_absolute()) return q.string();
  return (std::filesystem::path(base_file).parent_path() / q).string();
}

std::string loc(const std::string& name, int line) {
  return name + ":" + std::to_string(line);
}

}  // namespace

PolytopeFile read_polytope_file(std::istream& in, const std::string& name) {
  PolytopeFile pf;
  std::string raw;
  int lineno = 0;
  bool have_dim = false;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    if (!have_dim) {
      if (toks.size() != 2 || toks[0] != "dim")
        throw ParseError(loc(name, lineno) + ": expected 'dim d' header");
      const long d = parse_long(toks[1], loc(name, lineno));
      if (d < 1 || d > 3)
        throw ParseError(loc(name, lineno) + ": unsupported dimension " + toks[1]);
      pf.dim = static_cast<int>(d);
      have_dim = true;
      continue;
    }
    if (toks.size() != static_cast<std::size_t>(pf.dim))
      throw ParseError(loc(name, lineno) + ": expected " + std::to_string(pf.dim) +
                       " coordinates, got " + std::to_string(toks.size()));
    std::vector<double> row;
    row.reserve(toks.size());
    for (const auto& t : toks) row.push_back(parse_double(t, loc(name, lineno)));
    pf.vertices.push_back(std::move(row));
  }
  if (!have_dim) throw ParseError(name + ": missing 'dim d' header");
  if (pf.vertices.empty()) throw ParseError(name + ": no vertices");
  return pf;
}

PolytopeFile read_polytope_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  return read_polytope_file(in, path);
}

std::vector<std::string> read_union_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::vector<std::string> parts;
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    parts.push_back(resolve_relative(path, line));
  }
  if (parts.empty()) throw ParseError(path + ": no parts listed");
  return parts;
}

SimConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  SimConfig cfg;
  std::set<std::string> seen;
  std::string raw;
  int lineno = 0;
  bool have_dim = false, have_gamma = false, have_window = false, have_reps = false;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(loc(path, lineno) + ": expected 'key = value'");
    const std::string key = clean_line(line.substr(0, eq));
    const std::string value = clean_line(line.substr(eq + 1));
    const std::string where = loc(path, lineno);
    if (key.empty() || value.empty()) throw ParseError(where + ": expected 'key = value'");

    if (key == "grain") {
      // "path[,path...] [weight]"
      const auto toks = split_ws(value);
      if (toks.size() > 2) throw ParseError(where + ": grain takes paths[,paths] [weight]");
      GrainSpec g;
      for (const auto& p : split_on(toks[0], ',')) {
        if (p.empty()) throw ParseError(where + ": empty path in grain list");
        g.paths.push_back(resolve_relative(path, p));
      }
      if (toks.size() == 2) {
        g.weight = parse_double(toks[1], where);
        if (!(g.weight > 0.0)) throw ParseError(where + ": grain weight must be positive");
      }
      cfg.grains.push_back(std::move(g));
      continue;
    }

    if (!seen.insert(key).second) throw ParseError(where + ": duplicate key '" + key + "'");
    if (key == "dimension") {
      const long d = parse_long(value, where);
      if (d != 2 && d != 3) throw ParseError(where + ": dimension must be 2 or 3");
      cfg.dimension = static_cast<int>(d);
      have_dim = true;
    } else if (key == "gamma") {
      cfg.gamma = parse_double(value, where);
      if (cfg.gamma < 0.0) throw ParseError(where + ": gamma must be nonnegative");
      have_gamma = true;
    } else if (key == "window_size") {
      cfg.window_size = parse_double(value, where);
      if (!(cfg.window_size > 0.0)) throw ParseError(where + ": window_size must be positive");
      have_window = true;
    } else if (key == "replications") {
      cfg.replications = parse_long(value, where);
      if (cfg.replications < 1) throw ParseError(where + ": replications must be >= 1");
      have_reps = true;
    } else if (key == "seed") {
      cfg.seed = parse_u64(value, where);
      cfg.has_seed = true;
    } else if (key == "rotation_mode") {
      if (value == "fixed")
        cfg.rotation = RotationMode::Fixed;
      else if (value == "isotropic")
        cfg.rotation = RotationMode::Isotropic;
      else
        throw ParseError(where + ": rotation_mode must be 'fixed' or 'isotropic'");
    } else if (key == "rot_samples") {
      cfg.rot_samples = parse_long(value, where);
      if (cfg.rot_samples < 1) throw ParseError(where + ": rot_samples must be >= 1");
    } else if (key == "functional") {
      if (value != "ones" && value != "intrinsic" && value != "constants")
        throw ParseError(where + ": functional must be 'ones', 'intrinsic', or 'constants'");
      cfg.functional.kind = value;
    } else if (key == "constants") {
      cfg.functional.constants = parse_doubles(value, where);
    } else if (key == "x0") {
      cfg.functional.x0 = parse_doubles(value, where);
    } else {
      throw ParseError(where + ": unknown key '" + key + "'");
    }
  }
  if (!have_dim) throw ParseError(path + ": missing key 'dimension'");
  if (!have_gamma) throw ParseError(path + ": missing key 'gamma'");
  if (!have_window) throw ParseError(path + ": missing key 'window_size'");
  if (!have_reps) throw ParseError(path + ": missing key 'replications'");
  if (cfg.grains.empty()) throw ParseError(path + ": no grain entries");
  if (cfg.functional.kind != "constants" && !cfg.functional.constants.empty())
    throw ParseError(path + ": 'constants' requires functional = constants");
  if (cfg.functional.kind == "constants" &&
      cfg.functional.constants.size() != static_cast<std::size_t>(cfg.dimension) + 1)
    throw ParseError(path + ": constants needs " + std::to_string(cfg.dimension + 1) +
                     " values (degrees 0.." + std::to_string(cfg.dimension - 1) +
                     " plus the volume coefficient)");
  if (!cfg.functional.x0.empty() &&
      cfg.functional.x0.size() != static_cast<std::size_t>(cfg.dimension))
    throw ParseError(path + ": x0 needs " + std::to_string(cfg.dimension) + " coordinates");
  return cfg;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_report_csv(std::ostream& out, const std::vector<SimulationRow>& rows) {
  out << "quantity,analytic_value,estimate,stderr,z_score\n";
  for (const auto& r : rows)
    out << r.name << ',' << format_number(r.analytic) << ',' << format_number(r.est.mean) << ','
        << format_number(r.est.se) << ',' << format_number(r.est.z_score(r.analytic)) << '\n';
}

std::string report_summary(const SimConfig& cfg, const SimulationReport& rep,
                           double tolerance_sigma) {
  using json = nlohmann::ordered_json;
  auto num = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return format_number(v);  // JSON has no inf/nan literals
  };
  json j;
  json& c = j["config"];
  c["dimension"] = cfg.dimension;
  c["gamma"] = cfg.gamma;
  c["window_size"] = cfg.window_size;
  c["replications"] = cfg.replications;
  c["seed"] = cfg.seed;
  c["rotation_mode"] = cfg.rotation == RotationMode::Isotropic ? "isotropic" : "fixed";
  c["rot_samples"] = cfg.rot_samples;
  c["functional"]["kind"] = cfg.functional.kind;
  if (!cfg.functional.constants.empty()) c["functional"]["constants"] = cfg.functional.constants;
  if (!cfg.functional.x0.empty()) c["functional"]["x0"] = cfg.functional.x0;
  c["grains"] = json::array();
  for (const auto& g : cfg.grains) c["grains"].push_back({{"paths", g.paths}, {"weight", g.weight}});

  double max_abs_z = 0.0;
  j["rows"] = json::array();
  for (const auto& r : rep.rows) {
    const double z = r.est.z_score(r.analytic);
    max_abs_z = std::max(max_abs_z, std::abs(z));
    j["rows"].push_back({{"quantity", r.name},
                         {"analytic_value", num(r.analytic)},
                         {"estimate", num(r.est.mean)},
                         {"stderr", num(r.est.se)},
                         {"z_score", num(z)}});
  }
  j["grains_per_replication"] = num(rep.grains_per_replication.mean);
  j["jitter_rounds"] = rep.total_jitter_rounds;
  j["tolerance_sigma"] = tolerance_sigma;
  j["max_abs_z"] = num(max_abs_z);
  j["pass"] = max_abs_z < tolerance_sigma;
  return j.dump(2) + "\n";
}

}  // namespace transgeo
