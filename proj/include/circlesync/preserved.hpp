// Numerical estimation of the set L(F, rho) of distances preserved by every
// map of an IFS, and the factor construction for finite L.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "circlesync/ifs.hpp"
#include "circlesync/measure.hpp"
#include "circlesync/metric.hpp"

namespace circlesync {

struct PreservedDistanceOptions {
  std::size_t s_grid = 1024;
  std::size_t x_samples = 512;
  double tol = 1e-4;
  int k_max = 64;
};

/// Default tolerance for a metric: grid-built rho carries interpolation error.
double default_preservation_tol(const Metric& metric);

struct PreservedDistanceReport {
  std::string metric_tag;
  double tol_used = 0.0;
  std::vector<double> s_values;
  std::vector<double> defects;
  /// Finite(k) when set; AllDistances when empty.
  std::optional<int> k;
  /// {0, 1/k, ..., floor(k/2)/k} for Finite(k).
  std::vector<double> fitted_set;
  bool oplus_closed = false;

  bool all_distances() const { return !k.has_value(); }
};

/// The metric rho of a grid measure, after the nonatomic / full-support audit.
/// Throws MetricDegenerate when the audit fails.
Metric rho_metric(const GridMeasure& mu);

/// E(s) = max over maps and sampled x of |rho(f(x), f(y_s(x))) - s|, where
/// y_s(x) lies at distance s counterclockwise from x.
double preservation_defect(const IfsWithProbabilities& ifs, const Metric& metric, double s,
                           std::size_t x_samples = 512);

/// Throws StructureMismatch when low-defect distances fit no k <= k_max.
PreservedDistanceReport estimate_L(const IfsWithProbabilities& ifs, const Metric& metric,
                                   const PreservedDistanceOptions& options = {});

/// The IFS of x -> k f_j(x/k) mod 1, semiconjugate to F through x -> kx mod 1.
/// Throws NotEquivariant unless 1/k is a preserved d-distance within tol.
IfsWithProbabilities factor_ifs(const IfsWithProbabilities& ifs, int k, double tol = 1e-4);

}  // namespace circlesync
