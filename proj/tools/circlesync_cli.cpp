// circlesync: experiment runner for random circle homeomorphism systems.
//
//   circlesync classify --config sys.json --out out/
//
// Exit codes: 0 success, 1 usage / config / IO error, 2 analysis error (the
// error name is written to summary.json).
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "circlesync/analysis.hpp"
#include "circlesync/config.hpp"
#include "circlesync/errors.hpp"
#include "circlesync/kernels.hpp"
#include "circlesync/measure.hpp"
#include "circlesync/preserved.hpp"

namespace fs = std::filesystem;
using namespace circlesync;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> grid;
  std::optional<int> jobs;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Outputs {
public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string payload) { files_.emplace_back(name, std::move(payload)); }
  void add_json(const std::string& name, const Json& j) { add(name, j.dump(2) + "\n"); }

  // Everything is written once, at the end.
  void flush() const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw UsageError("cannot create output directory " + dir_.string() + ": " + ec.message());
    for (const auto& [name, payload] : files_) {
      std::ofstream out(dir_ / name, std::ios::binary);
      out << payload;
      if (!out) throw UsageError("cannot write " + (dir_ / name).string());
    }
  }

private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c;
  try {
    c = load_config(o.config_path);
    if (o.seed) c.analysis.seed = *o.seed;
    if (o.out) c.out_dir = *o.out;
    if (o.grid) {
      const std::size_t g = *o.grid;
      if (g < 16 || (g & (g - 1)) != 0) throw std::invalid_argument("--grid must be a power of two >= 16");
      c.analysis.grid_size = g;
    }
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (o.jobs) {
    if (*o.jobs < 1) throw UsageError("--jobs must be positive");
    kernels::set_num_threads(*o.jobs);
  }
  return c;
}

Json summary_head(const ExperimentConfig& c, const std::string& command) {
  Json j;
  j["command"] = command;
  j["seed"] = c.analysis.seed;
  j["config"] = config_to_json(c);
  return j;
}

std::string measure_csv(const GridMeasure& mu) {
  std::ostringstream s;
  write_csv(s, mu);
  return s.str();
}

Metric metric_for(const ExperimentConfig& c, const IfsWithProbabilities& ifs) {
  if (c.metric == "euclidean") return Metric::euclidean();
  const auto solved = invariant_measure(ifs.inverse(), c.analysis.grid_size, c.analysis.solver_tol,
                                        c.analysis.solver_max_iter);
  return rho_metric(solved.measure);
}

void cmd_classify(const ExperimentConfig& c, Outputs& out) {
  const TrichotomyResult r = classify_trichotomy(c.ifs(), c.analysis);
  Json j = summary_head(c, "classify");
  j["result"] = to_json(r);
  out.add_json("trichotomy.json", j);
  std::ostringstream curve;
  write_defect_curve_csv(curve, r.preserved);
  out.add("defect_curve.csv", curve.str());
  std::ostringstream samples;
  write_samples_csv(samples, r.sync.limit_samples);
  out.add("sync_samples.csv", samples.str());
  if (r.common_measure) out.add("common_measure.csv", measure_csv(*r.common_measure));
  std::cout << to_string(r.label);
  if (r.label == TrichotomyLabel::factorization) std::cout << " k=" << r.k;
  std::cout << '\n';
}

void cmd_invariant(const ExperimentConfig& c, Outputs& out) {
  const auto& a = c.analysis;
  const auto r = invariant_measure(c.ifs(), a.grid_size, a.solver_tol, a.solver_max_iter);
  const SupportAudit audit = support_and_atom_audit(r.measure);
  Json j = summary_head(c, "invariant");
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  j["averaged"] = r.averaged;
  j["audit"] = {{"max_cell_mass", audit.max_cell_mass},
                {"min_window_mass", audit.min_window_mass},
                {"window", audit.window},
                {"atomic", audit.atomic()},
                {"full_support", audit.full_support()}};
  out.add("measure.csv", measure_csv(r.measure));
  out.add_json("summary.json", j);
  std::cout << "converged in " << r.iterations << " iterations, residual " << r.residual << '\n';
}

void cmd_sync(const ExperimentConfig& c, Outputs& out) {
  const auto& a = c.analysis;
  const auto ifs = c.ifs();
  const auto r = sync_experiment(ifs, metric_for(c, ifs), a.horizon, a.sync_seeds, a.sync_pairs,
                                 c.sync_L, a.cluster_tol, a.seed);
  Json j = summary_head(c, "sync");
  j["metric"] = c.metric;
  j["result"] = to_json(r);
  std::ostringstream samples;
  write_samples_csv(samples, r.limit_samples);
  out.add("sync_samples.csv", samples.str());
  out.add_json("summary.json", j);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

void cmd_preserved(const ExperimentConfig& c, Outputs& out) {
  const auto ifs = c.ifs();
  const auto r = estimate_L(ifs, metric_for(c, ifs), c.analysis.preserved);
  Json j = summary_head(c, "preserved");
  j["result"] = to_json(r);
  std::ostringstream curve;
  write_defect_curve_csv(curve, r);
  out.add_json("preserved.json", j);
  out.add("defect_curve.csv", curve.str());
  std::cout << "L = " << (r.k ? "Finite(" + std::to_string(*r.k) + ")" : std::string("all distances"))
            << '\n';
}

void cmd_fibers(const ExperimentConfig& c, Outputs& out) {
  const auto& a = c.analysis;
  const auto ifs = c.ifs();
  const auto m = invariant_measure(ifs.inverse(), a.grid_size, a.solver_tol, a.solver_max_iter).measure;
  std::ostringstream lines;
  for (std::size_t s = 0; s < c.fiber_seeds; ++s) {
    const SymbolStream omega(a.seed, s, ifs.probs());
    const auto hat = estimate_hatZ_minus_adaptive(ifs, omega, c.k, a);
    const auto fiber = fiber_measure(ifs, omega, m, c.k, a.fiber_samples, a.horizon, a);
    Json rec = to_json(fiber);
    rec["hatZ_minus_arc"] = to_json(hat);
    lines << rec.dump() << '\n';
  }
  const auto avg = mu_minus_from_fibers(ifs, m, c.k, a.mu_minus_seeds, a);
  Json j = summary_head(c, "fibers");
  j["k"] = c.k;
  j["fibers_written"] = c.fiber_seeds;
  j["mu_minus_seeds"] = avg.seeds_requested;
  j["mu_minus_failures"] = avg.failures;
  j["low_confidence"] = avg.low_confidence;
  j["wasserstein_to_solver"] = wasserstein(avg.measure, m);
  out.add("fibers.jsonl", lines.str());
  out.add("mu_minus.csv", measure_csv(avg.measure));
  out.add_json("summary.json", j);
}

void cmd_simulate(const ExperimentConfig& c, Outputs& out) {
  const auto ifs = c.ifs();
  const auto& s = c.simulate;
  const SymbolStream omega(c.analysis.seed, s.stream_id, ifs.probs());
  const CirclePoint x(s.x);
  Trajectory t = [&] {
    switch (s.mode) {
      case OrbitMode::forward: return forward_orbit(ifs, x, omega, s.n);
      case OrbitMode::reversed: return reversed_orbit(ifs, x, omega, s.n);
      case OrbitMode::inverse_forward: return inverse_forward_orbit(ifs, x, omega, s.n);
      case OrbitMode::inverse_reversed: return inverse_reversed_orbit(ifs, x, omega, s.n);
    }
    throw UsageError("unknown orbit mode");
  }();
  std::ostringstream lines;
  write_trajectory_jsonl(lines, t);
  Json j = summary_head(c, "simulate");
  j["points"] = t.points.size();
  out.add("trajectory.jsonl", lines.str());
  out.add_json("summary.json", j);
}

int run(const std::string& name, const Overrides& o,
        const std::function<void(const ExperimentConfig&, Outputs&)>& cmd) {
  ExperimentConfig c;
  try {
    c = resolve(o);
  } catch (const UsageError& e) {
    std::cerr << "circlesync " << name << ": " << e.what() << '\n';
    return 1;
  }
  Outputs out(c.out_dir);
  try {
    cmd(c, out);
    out.flush();
    return 0;
  } catch (const AnalysisError& e) {
    std::cerr << "circlesync " << name << ": " << e.name() << ": " << e.what() << '\n';
    Outputs failed(c.out_dir);
    Json j = summary_head(c, name);
    j["error"] = e.name();
    j["message"] = e.what();
    failed.add_json("summary.json", j);
    try {
      failed.flush();
    } catch (const UsageError& io) {
      std::cerr << "circlesync " << name << ": " << io.what() << '\n';
      return 1;
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "circlesync " << name << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synchronization analysis for random circle homeomorphisms"};
  app.require_subcommand(1);

  Overrides o;
  const std::vector<std::pair<std::string, std::function<void(const ExperimentConfig&, Outputs&)>>> commands = {
      {"classify", cmd_classify}, {"invariant", cmd_invariant}, {"sync", cmd_sync},
      {"preserved", cmd_preserved}, {"fibers", cmd_fibers}, {"simulate", cmd_simulate}};
  const std::map<std::string, std::string> help = {
      {"classify", "synchronization / factorization / invariance label with evidence"},
      {"invariant", "stationary measure by the transfer operator"},
      {"sync", "terminal distances of random pairs"},
      {"preserved", "distances preserved by every map"},
      {"fibers", "fiberwise limit measures and their average"},
      {"simulate", "one random orbit"}};

  std::string chosen;
  for (const auto& [name, cmd] : commands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", o.config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "overrides the config seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--grid", o.grid, "grid size (power of two)");
    sub->add_option("--jobs", o.jobs, "OpenMP threads");
    sub->callback([&chosen, n = name] { chosen = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  for (const auto& [name, cmd] : commands) {
    if (name == chosen) return run(name, o, cmd);
  }
  return 1;
}
