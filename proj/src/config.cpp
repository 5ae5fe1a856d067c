#include "circlesync/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace circlesync {

namespace {

void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
  }
}

double get_number(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw std::invalid_argument(where + " needs '" + key + "'");
  const Json& v = j.at(key);
  if (!v.is_number()) throw std::invalid_argument(where + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw std::invalid_argument(where + "." + key + " must be finite");
  return d;
}

void read_number(const Json& j, const char* key, double& out, const std::string& where) {
  if (j.contains(key)) out = get_number(j, key, where);
}

void read_positive(const Json& j, const char* key, double& out, const std::string& where) {
  read_number(j, key, out, where);
  if (!(out > 0.0)) throw std::invalid_argument(where + "." + key + " must be positive");
}

template <class T>
void read_count(const Json& j, const char* key, T& out, const std::string& where,
                std::uint64_t min_value = 1) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw std::invalid_argument(where + "." + key + " must be a non-negative integer");
  }
  const auto u = v.get<std::uint64_t>();
  if (u < min_value) {
    throw std::invalid_argument(where + "." + key + " must be at least " + std::to_string(min_value));
  }
  out = static_cast<T>(u);
}

int get_int(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw std::invalid_argument(where + "." + key + " must be an integer");
  }
  return j.at(key).get<int>();
}

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

}  // namespace

Homeomorphism map_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw std::invalid_argument("map descriptor needs a string 'type'");
  }
  const std::string type = j.at("type").get<std::string>();
  const std::string where = "map '" + type + "'";
  if (type == "rotation") {
    require_keys(j, {"type", "angle"}, where);
    return Homeomorphism::rotation(get_number(j, "angle", where));
  }
  if (type == "projective") {
    require_keys(j, {"type", "matrix"}, where);
    const Json& m = j.at("matrix");
    if (!m.is_array() || m.size() != 4 || !std::all_of(m.begin(), m.end(), [](const Json& v) { return v.is_number(); })) {
      throw std::invalid_argument(where + ".matrix must be 4 numbers [a, b, c, d]");
    }
    return Homeomorphism::projective(m[0].get<double>(), m[1].get<double>(), m[2].get<double>(),
                                     m[3].get<double>());
  }
  if (type == "flip") {
    require_keys(j, {"type"}, where);
    return Homeomorphism::flip();
  }
  if (type == "piecewise_linear") {
    require_keys(j, {"type", "breakpoints", "orientation"}, where);
    const Json& b = j.at("breakpoints");
    if (!b.is_array()) throw std::invalid_argument(where + ".breakpoints must be an array");
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : b) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw std::invalid_argument(where + ".breakpoints entries must be [x, y]");
      }
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    const int orientation = j.contains("orientation") ? get_int(j, "orientation", where) : 1;
    return Homeomorphism::piecewise_linear(std::move(pts), orientation);
  }
  if (type == "klift" || type == "kfactor") {
    require_keys(j, {"type", "base", "k"}, where);
    if (!j.contains("base")) throw std::invalid_argument(where + " needs 'base'");
    Homeomorphism base = map_from_json(j.at("base"));
    const int k = get_int(j, "k", where);
    return type == "klift" ? Homeomorphism::klift(std::move(base), k)
                           : Homeomorphism::kfactor(std::move(base), k);
  }
  if (type == "compose") {
    require_keys(j, {"type", "outer", "inner"}, where);
    if (!j.contains("outer") || !j.contains("inner")) {
      throw std::invalid_argument(where + " needs 'outer' and 'inner'");
    }
    return Homeomorphism::compose(map_from_json(j.at("outer")), map_from_json(j.at("inner")));
  }
  if (type == "inverse") {
    require_keys(j, {"type", "of"}, where);
    if (!j.contains("of")) throw std::invalid_argument(where + " needs 'of'");
    return Homeomorphism::inverse_of(map_from_json(j.at("of")));
  }
  throw std::invalid_argument("unknown map type '" + type + "'");
}

Json map_to_json(const Homeomorphism& f) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RotationMap>) {
          return {{"type", "rotation"}, {"angle", s.angle}};
        } else if constexpr (std::is_same_v<T, ProjectiveMap>) {
          return {{"type", "projective"}, {"matrix", s.matrix}};
        } else if constexpr (std::is_same_v<T, PiecewiseLinearMap>) {
          Json pts = Json::array();
          for (const auto& [x, y] : s.breakpoints) pts.push_back({x, y});
          return {{"type", "piecewise_linear"}, {"breakpoints", pts}, {"orientation", s.orientation}};
        } else if constexpr (std::is_same_v<T, FlipMap>) {
          return {{"type", "flip"}};
        } else if constexpr (std::is_same_v<T, KLiftMap>) {
          return {{"type", "klift"}, {"base", map_to_json(s.base)}, {"k", s.k}};
        } else if constexpr (std::is_same_v<T, KFactorMap>) {
          return {{"type", "kfactor"}, {"base", map_to_json(s.base)}, {"k", s.k}};
        } else if constexpr (std::is_same_v<T, ComposedMap>) {
          return {{"type", "compose"}, {"outer", map_to_json(s.outer)}, {"inner", map_to_json(s.inner)}};
        } else if constexpr (std::is_same_v<T, InverseMap>) {
          return {{"type", "inverse"}, {"of", map_to_json(s.of)}};
        } else {
          throw std::invalid_argument("grid conjugates have no descriptor");
        }
      },
      f.node().spec);
}

IfsWithProbabilities ExperimentConfig::ifs() const {
  std::vector<Homeomorphism> maps;
  for (const auto& d : map_descriptors) maps.push_back(map_from_json(d));
  return IfsWithProbabilities(std::move(maps), probs);
}

OrbitMode orbit_mode_from_string(const std::string& s) {
  for (auto mode : {OrbitMode::forward, OrbitMode::reversed, OrbitMode::inverse_forward,
                    OrbitMode::inverse_reversed}) {
    if (to_string(mode) == s) return mode;
  }
  throw std::invalid_argument("unknown orbit mode '" + s + "'");
}

ExperimentConfig parse_config(const Json& j) {
  require_keys(j,
               {"ifs", "seed", "grid_size", "solver_tol", "solver_max_iter", "minimality_grid",
                "preserved", "horizon", "max_horizon", "sync_seeds", "sync_pairs", "cluster_tol",
                "invariance_tol", "contraction_tol", "fiber_samples", "mu_minus_samples",
                "mu_minus_seeds", "metric", "sync_L", "k", "fiber_seeds", "simulate", "out"},
               "config");
  ExperimentConfig c;
  if (!j.contains("ifs")) throw std::invalid_argument("config needs 'ifs'");
  const Json& ifs = j.at("ifs");
  require_keys(ifs, {"maps", "probs"}, "ifs");
  if (!ifs.contains("maps") || !ifs.at("maps").is_array()) {
    throw std::invalid_argument("ifs.maps must be an array of map descriptors");
  }
  for (const auto& d : ifs.at("maps")) c.map_descriptors.push_back(d);
  if (ifs.contains("probs")) {
    const Json& p = ifs.at("probs");
    if (!p.is_array() || !std::all_of(p.begin(), p.end(), [](const Json& v) { return v.is_number(); })) {
      throw std::invalid_argument("ifs.probs must be an array of numbers");
    }
    for (const auto& v : p) c.probs.push_back(v.get<double>());
  } else {
    c.probs.assign(c.map_descriptors.size(), 1.0 / static_cast<double>(c.map_descriptors.size()));
  }

  AnalysisConfig& a = c.analysis;
  read_count(j, "seed", a.seed, "config", 0);
  read_count(j, "grid_size", a.grid_size, "config", 16);
  if (!is_power_of_two(a.grid_size)) throw std::invalid_argument("config.grid_size must be a power of two");
  read_positive(j, "solver_tol", a.solver_tol, "config");
  read_count(j, "solver_max_iter", a.solver_max_iter, "config");
  read_count(j, "minimality_grid", a.minimality_grid, "config", 16);
  if (j.contains("preserved")) {
    const Json& p = j.at("preserved");
    require_keys(p, {"s_grid", "x_samples", "tol", "k_max"}, "preserved");
    read_count(p, "s_grid", a.preserved.s_grid, "preserved", 256);
    read_count(p, "x_samples", a.preserved.x_samples, "preserved");
    read_positive(p, "tol", a.preserved.tol, "preserved");
    read_count(p, "k_max", a.preserved.k_max, "preserved");
  }
  read_count(j, "horizon", a.horizon, "config");
  read_count(j, "max_horizon", a.max_horizon, "config");
  read_count(j, "sync_seeds", a.sync_seeds, "config");
  read_count(j, "sync_pairs", a.sync_pairs, "config");
  if (a.sync_seeds * a.sync_pairs < 2) throw std::invalid_argument("config needs at least 2 sync replicas");
  read_positive(j, "cluster_tol", a.cluster_tol, "config");
  read_positive(j, "invariance_tol", a.invariance_tol, "config");
  read_positive(j, "contraction_tol", a.contraction_tol, "config");
  read_count(j, "fiber_samples", a.fiber_samples, "config");
  read_count(j, "mu_minus_samples", a.mu_minus_samples, "config");
  read_count(j, "mu_minus_seeds", a.mu_minus_seeds, "config");

  if (j.contains("metric")) {
    if (!j.at("metric").is_string()) throw std::invalid_argument("config.metric must be a string");
    c.metric = j.at("metric").get<std::string>();
    if (c.metric != "euclidean" && c.metric != "rho") {
      throw std::invalid_argument("config.metric must be \"euclidean\" or \"rho\"");
    }
  }
  if (j.contains("sync_L")) {
    const Json& L = j.at("sync_L");
    if (!L.is_array()) throw std::invalid_argument("config.sync_L must be an array");
    for (const auto& v : L) {
      if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 0.5) {
        throw std::invalid_argument("config.sync_L entries must lie in [0, 1/2]");
      }
      c.sync_L.push_back(v.get<double>());
    }
  }
  read_count(j, "k", c.k, "config");
  read_count(j, "fiber_seeds", c.fiber_seeds, "config");
  if (j.contains("simulate")) {
    const Json& s = j.at("simulate");
    require_keys(s, {"x", "n", "mode", "stream_id"}, "simulate");
    read_number(s, "x", c.simulate.x, "simulate");
    read_count(s, "n", c.simulate.n, "simulate", 0);
    read_count(s, "stream_id", c.simulate.stream_id, "simulate", 0);
    if (s.contains("mode")) {
      if (!s.at("mode").is_string()) throw std::invalid_argument("simulate.mode must be a string");
      c.simulate.mode = orbit_mode_from_string(s.at("mode").get<std::string>());
    }
  }
  if (j.contains("out")) {
    if (!j.at("out").is_string()) throw std::invalid_argument("config.out must be a string");
    c.out_dir = j.at("out").get<std::string>();
  }

  (void)c.ifs();  // validates the maps and probabilities
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

Json config_to_json(const ExperimentConfig& c) {
  const AnalysisConfig& a = c.analysis;
  Json j;
  j["ifs"] = {{"maps", c.map_descriptors}, {"probs", c.probs}};
  j["seed"] = a.seed;
  j["grid_size"] = a.grid_size;
  j["solver_tol"] = a.solver_tol;
  j["solver_max_iter"] = a.solver_max_iter;
  j["minimality_grid"] = a.minimality_grid;
  j["preserved"] = {{"s_grid", a.preserved.s_grid},
                    {"x_samples", a.preserved.x_samples},
                    {"tol", a.preserved.tol},
                    {"k_max", a.preserved.k_max}};
  j["horizon"] = a.horizon;
  j["max_horizon"] = a.max_horizon;
  j["sync_seeds"] = a.sync_seeds;
  j["sync_pairs"] = a.sync_pairs;
  j["cluster_tol"] = a.cluster_tol;
  j["invariance_tol"] = a.invariance_tol;
  j["contraction_tol"] = a.contraction_tol;
  j["fiber_samples"] = a.fiber_samples;
  j["mu_minus_samples"] = a.mu_minus_samples;
  j["mu_minus_seeds"] = a.mu_minus_seeds;
  j["metric"] = c.metric;
  j["sync_L"] = c.sync_L;
  j["k"] = c.k;
  j["fiber_seeds"] = c.fiber_seeds;
  j["simulate"] = {{"x", c.simulate.x},
                   {"n", c.simulate.n},
                   {"mode", to_string(c.simulate.mode)},
                   {"stream_id", c.simulate.stream_id}};
  j["out"] = c.out_dir;
  return j;
}

Json to_json(const MinimalityCertificate& cert) {
  return {{"forward", cert.forward},
          {"backward", cert.backward},
          {"grid_size", cert.grid_size},
          {"caveat", "numerical certificate at resolution 1/grid_size, not a proof"}};
}

Json to_json(const PreservedDistanceReport& r) {
  Json j;
  j["metric"] = r.metric_tag;
  j["tol"] = r.tol_used;
  if (r.k) {
    j["k"] = *r.k;
  } else {
    j["k"] = "all";
  }
  j["fitted_set"] = r.fitted_set;
  j["oplus_closed"] = r.oplus_closed;
  j["defect_curve"] = "defect_curve.csv";
  return j;
}

Json to_json(const SynchronizationReport& r) {
  Json j;
  j["n"] = r.n_used;
  j["seeds"] = r.seeds_used;
  j["pairs_per_seed"] = r.pairs_per_seed;
  j["L"] = r.L_values;
  j["assignment"] = r.assignment;
  j["unassigned"] = r.unassigned;
  const auto& sm = r.supermartingale;
  j["supermartingale"] = {{"ok", sm.ok},
                          {"worst_step", sm.worst_step},
                          {"worst_z", std::isfinite(sm.worst_z) ? Json(sm.worst_z) : Json("inf")},
                          {"worst_paired_z",
                           std::isfinite(sm.worst_paired_z) ? Json(sm.worst_paired_z) : Json("inf")},
                          {"initial_mean", sm.mean_path.empty() ? 0.0 : sm.mean_path.front()},
                          {"final_mean", sm.mean_path.empty() ? 0.0 : sm.mean_path.back()}};
  j["warnings"] = r.warnings;
  j["samples"] = "sync_samples.csv";
  return j;
}

Json to_json(const TrichotomyResult& r) {
  Json j;
  j["label"] = to_string(r.label);
  j["k"] = r.k;
  if (r.psi) {
    j["psi"] = {{"construction", "Phi^-1 o R_{1/k} o Phi"},
                {"rotation", 1.0 / r.k},
                {"order_error", r.psi_order_error},
                {"commutation_error", r.psi_commutation_error},
                {"factor_map_error", r.factor_map_error}};
  }
  if (r.common_measure) {
    j["common_measure"] = {{"file", "common_measure.csv"}, {"residual", r.common_measure_residual}};
  }
  j["certificate"] = to_json(r.certificate);
  j["preserved"] = to_json(r.preserved);
  if (r.factor_preserved) j["factor_preserved"] = to_json(*r.factor_preserved);
  j["sync"] = to_json(r.sync);
  j["solver_iterations"] = r.solver_iterations;
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const FiberMeasure& f) {
  Json atoms = Json::array();
  for (const auto& [x, w] : f.atoms) atoms.push_back({{"x", x.value()}, {"weight", w}});
  return {{"seed", f.seed},          {"stream_id", f.stream_id}, {"offset", f.offset},
          {"atoms", atoms},          {"hatZ_minus", f.hatZ_minus.value()},
          {"samples", f.samples},    {"n", f.n_used},           {"weights_ok", f.weights_ok}};
}

Json to_json(const HatZMinusEstimate& est) {
  Json atoms = Json::array();
  for (const auto& a : est.atoms) atoms.push_back(a.value());
  return {{"value", est.value.value()}, {"atoms", atoms}, {"n", est.n_used}};
}

void write_trajectory_jsonl(std::ostream& out, const Trajectory& t) {
  std::ostringstream buf;
  for (std::size_t n = 0; n < t.points.size(); ++n) {
    Json rec;
    rec["n"] = n;
    rec["x"] = t.points[n].value();
    rec["symbol"] = n == 0 ? Json(nullptr) : Json(t.symbols[n - 1]);
    buf << rec.dump() << '\n';
  }
  out << buf.str();
}

void write_defect_curve_csv(std::ostream& out, const PreservedDistanceReport& r) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << "s,defect\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.s_values.size(); ++i) buf << r.s_values[i] << ',' << r.defects[i] << '\n';
  out << buf.str();
}

void write_samples_csv(std::ostream& out, const std::vector<double>& samples) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << "replica,distance\n" << std::setprecision(17);
  for (std::size_t i = 0; i < samples.size(); ++i) buf << i << ',' << samples[i] << '\n';
  out << buf.str();
}

}  // namespace circlesync
