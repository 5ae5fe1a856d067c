// Experiment configuration (JSON) and the report formats written by the
// command line runner.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "circlesync/analysis.hpp"
#include "circlesync/homeo.hpp"
#include "circlesync/ifs.hpp"

namespace circlesync {

using Json = nlohmann::ordered_json;

struct SimulateOptions {
  double x = 0.0;
  std::size_t n = 1000;
  OrbitMode mode = OrbitMode::forward;
  std::uint64_t stream_id = 0;
};

struct ExperimentConfig {
  std::vector<Json> map_descriptors;
  std::vector<double> probs;
  AnalysisConfig analysis;
  /// "euclidean" or "rho" (the measure metric of mu_-), for the sync runner.
  std::string metric = "euclidean";
  /// Preserved distances assigned to by the sync runner; empty for none.
  std::vector<double> sync_L;
  /// Factor order expected by the fiber runner.
  int k = 1;
  std::size_t fiber_seeds = 20;
  SimulateOptions simulate;
  std::string out_dir = "out";

  IfsWithProbabilities ifs() const;
};

/// Builds a map from {"type": ..., ...}. Throws std::invalid_argument on
/// unknown types, unknown keys or invalid parameters.
Homeomorphism map_from_json(const Json& j);
/// Descriptor of a map built from descriptors; grid conjugates have none.
Json map_to_json(const Homeomorphism& f);

/// Throws std::invalid_argument on unknown keys or values that fail the
/// construction invariants.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// The fully resolved configuration, every default spelled out.
Json config_to_json(const ExperimentConfig& config);

OrbitMode orbit_mode_from_string(const std::string& s);

Json to_json(const MinimalityCertificate& cert);
Json to_json(const PreservedDistanceReport& report);
Json to_json(const SynchronizationReport& report);
Json to_json(const TrichotomyResult& result);
Json to_json(const FiberMeasure& fiber);
Json to_json(const HatZMinusEstimate& est);

/// One JSON object per line: {"n", "x", "symbol"}; symbol is null at n = 0.
void write_trajectory_jsonl(std::ostream& out, const Trajectory& t);
/// s,defect
void write_defect_curve_csv(std::ostream& out, const PreservedDistanceReport& report);
/// replica,distance
void write_samples_csv(std::ostream& out, const std::vector<double>& samples);

}  // namespace circlesync
