// The classification pipeline: conjugation by the distribution function of
// the inverse system's stationary measure, non-expansiveness audits,
// synchronization experiments, the synchronization / factorization /
// invariance trichotomy, and fiberwise limit measures.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "circlesync/ifs.hpp"
#include "circlesync/measure.hpp"
#include "circlesync/metric.hpp"
#include "circlesync/preserved.hpp"

namespace circlesync {

struct AnalysisConfig {
  std::uint64_t seed = 1;
  std::size_t grid_size = kDefaultGridSize;
  double solver_tol = 1e-9;
  std::size_t solver_max_iter = 20000;
  std::size_t minimality_grid = 1024;
  PreservedDistanceOptions preserved;
  // Sync experiment used as classification evidence.
  std::size_t horizon = 2000;
  std::size_t sync_seeds = 200;
  std::size_t sync_pairs = 1;
  double cluster_tol = 1e-3;
  // Residual allowed when checking that a measure is invariant under every
  // map, and when checking 1/k-invariance of a fiber sampler.
  double invariance_tol = 1e-3;
  double contraction_tol = 1e-6;
  std::size_t max_horizon = std::size_t{1} << 16;
  std::size_t fiber_samples = 1000;
  std::size_t mu_minus_samples = 100;
  std::size_t mu_minus_seeds = 500;
};

struct ConjugatedSystem {
  IfsWithProbabilities original;
  GridMeasure mu_minus;
  CdfMap phi_minus;
  Metric rho;
  IfsWithProbabilities conjugated;  // g_j = Phi o f_j o Phi^-1
  MinimalityCertificate certificate;
  std::size_t solver_iterations = 0;
  double solver_residual = 0.0;
  std::vector<std::string> warnings;
};

/// Throws DegenerateConjugation when mu_- is atomic or has gaps; propagates
/// NonConvergence from the stationary solver.
ConjugatedSystem conjugate_system(const IfsWithProbabilities& ifs, const AnalysisConfig& config);

struct NonexpansiveAudit {
  double max_defect = 0.0;   // max of sum_j p_j rho(f_j x, f_j y) - rho(x, y)
  double mean_ratio = 0.0;   // mean of sum_j p_j rho(f_j x, f_j y) / rho(x, y)
  std::size_t pairs = 0;
};

NonexpansiveAudit nonexpansive_audit(const IfsWithProbabilities& ifs, const Metric& metric,
                                     std::size_t pair_samples, std::uint64_t seed = 1);

/// Uniform random pairs, a pure function of (seed, count).
std::vector<std::pair<CirclePoint, CirclePoint>> random_pairs(std::uint64_t seed, std::size_t count);

struct SupermartingaleCheck {
  bool ok = true;
  std::size_t worst_step = 0;
  // Largest (mean_{m+1} - mean_m) / max(se_m, se_{m+1}) over the steps.
  double worst_z = 0.0;
  // Largest mean increment over the standard error of the paired increment.
  // Stricter than the test above: a martingale trips it by chance.
  double worst_paired_z = 0.0;
  std::vector<double> mean_path;
  std::vector<double> standard_errors;  // of mean_path
};

/// The seed-averaged distance sequence is non-increasing within 2 standard
/// errors: mean_{m+1} <= mean_m + 2 max(se_m, se_{m+1}) + 1e-12 at every m.
SupermartingaleCheck supermartingale_check(const std::vector<double>& paths, std::size_t replicas,
                                           std::size_t steps);

struct SynchronizationReport {
  std::vector<double> limit_samples;
  /// Elements of L used for assignment; empty when L = [0, 1/2].
  std::vector<double> L_values;
  std::vector<double> assignment;
  double unassigned = 0.0;
  std::size_t n_used = 0;
  std::size_t seeds_used = 0;
  std::size_t pairs_per_seed = 0;
  SupermartingaleCheck supermartingale;
  std::vector<std::string> warnings;
};

/// seeds x pairs replicas; replica (s, p) runs symbol stream (seed, s) from a
/// random pair. Terminal distances are assigned to the nearest element of
/// L_values within cluster_tol.
SynchronizationReport sync_experiment(const IfsWithProbabilities& ifs, const Metric& metric,
                                      std::size_t n, std::size_t seeds, std::size_t pairs,
                                      const std::vector<double>& L_values, double cluster_tol,
                                      std::uint64_t seed);

/// The same experiment from one fixed pair for every seed.
SynchronizationReport sync_experiment_fixed_pair(const IfsWithProbabilities& ifs,
                                                 const Metric& metric, CirclePoint x, CirclePoint y,
                                                 std::size_t n, std::size_t seeds,
                                                 const std::vector<double>& L_values,
                                                 double cluster_tol, std::uint64_t seed);

enum class TrichotomyLabel { synchronization, factorization, invariance };
std::string to_string(TrichotomyLabel label);

struct TrichotomyResult {
  TrichotomyLabel label = TrichotomyLabel::synchronization;
  /// 1 for synchronization, >= 2 for factorization, 0 for invariance.
  int k = 0;
  /// Order-k homeomorphism Phi^-1 o R_{1/k} o Phi commuting with the maps.
  std::optional<Homeomorphism> psi;
  std::optional<GridMeasure> common_measure;

  // Evidence.
  MinimalityCertificate certificate;
  PreservedDistanceReport preserved;
  SynchronizationReport sync;
  std::optional<PreservedDistanceReport> factor_preserved;
  double psi_order_error = 0.0;
  double psi_commutation_error = 0.0;
  double factor_map_error = 0.0;
  double common_measure_residual = 0.0;
  std::size_t solver_iterations = 0;
  std::vector<std::string> warnings;
};

/// Throws Inconclusive when L cannot be fitted or an evidence check fails.
TrichotomyResult classify_trichotomy(const IfsWithProbabilities& ifs, const AnalysisConfig& config);

struct HatZMinusEstimate {
  /// k * sup{y in [0, 1/k) : |Z_n([0, y])| -> 0} mod 1.
  CirclePoint value;
  /// sup + i/k for i < k, found by a separate search in each period.
  std::vector<CirclePoint> atoms;
  std::size_t n_used = 0;
};

/// Fixed horizon n. Throws NoContraction when no arc [i/k, i/k + y] shrinks
/// below contraction_tol.
HatZMinusEstimate estimate_hatZ_minus(const IfsWithProbabilities& ifs, const SymbolStream& omega,
                                      std::size_t n, int k, double contraction_tol);
/// Doubles n from config.horizon until the estimate moves less than
/// cluster_tol, or max_horizon is reached.
HatZMinusEstimate estimate_hatZ_minus_adaptive(const IfsWithProbabilities& ifs,
                                               const SymbolStream& omega, int k,
                                               const AnalysisConfig& config);

struct FiberMeasure {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::size_t offset = 0;
  std::vector<std::pair<CirclePoint, double>> atoms;
  CirclePoint hatZ_minus;
  std::size_t samples = 0;
  std::size_t n_used = 0;
  bool weights_ok = false;  // each weight within 1/k +- 3 binomial sigma
};

/// Pushes `samples` draws from m through Zhat^-_n(., omega) and clusters
/// the endpoints. Throws InvalidSampler when m fails its audit or
/// 1/k-invariance, ClusterCountMismatch when the clusters are not k points
/// spaced 1/k apart.
FiberMeasure fiber_measure(const IfsWithProbabilities& ifs, const SymbolStream& omega,
                           const GridMeasure& m, int k, std::size_t samples, std::size_t n,
                           const AnalysisConfig& config);

/// Max over atoms of the distance between the atoms of omega and the images
/// under f_{omega_1}^{-1} of the atoms of sigma(omega).
double fiber_equivariance_error(const IfsWithProbabilities& ifs, const SymbolStream& omega,
                                const GridMeasure& m, int k, std::size_t samples, std::size_t n,
                                const AnalysisConfig& config);

struct FiberAverage {
  GridMeasure measure;
  std::vector<FiberMeasure> fibers;
  std::vector<std::string> failures;
  std::size_t seeds_requested = 0;
  bool low_confidence = false;
};

/// Bins the atoms of `seeds` independent fibers. Seeds that error are
/// excluded and reported; rethrows when fewer than 90% succeed. Flagged low
/// confidence below 10 fibers or when any seed failed.
FiberAverage mu_minus_from_fibers(const IfsWithProbabilities& ifs, const GridMeasure& m, int k,
                                  std::size_t seeds, const AnalysisConfig& config);

}  // namespace circlesync
