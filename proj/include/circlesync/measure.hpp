// Probability measures on the circle stored as distribution functions on a
// uniform grid, the transfer operator pair and the stationary solver.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "circlesync/circle.hpp"
#include "circlesync/homeo.hpp"
#include "circlesync/ifs.hpp"

namespace circlesync {

inline constexpr std::size_t kDefaultGridSize = 4096;

/// cdf[i] = mu([0, i/grid_size]), linear between knots (mass spread uniformly
/// over each cell). cdf[0] = 0, cdf[grid_size] = 1, non-decreasing.
class GridMeasure {
public:
  explicit GridMeasure(std::vector<double> cdf);
  static GridMeasure lebesgue(std::size_t grid_size = kDefaultGridSize);

  std::size_t grid_size() const { return cdf_.size() - 1; }
  std::span<const double> cdf() const { return cdf_; }

  /// F(x) for x in [0, 1], interpolated.
  double cdf_at(double x) const;
  /// Mass of the counterclockwise arc from a to b.
  double arc_mass(CirclePoint a, CirclePoint b) const;
  double cell_mass(std::size_t i) const { return cdf_[i + 1] - cdf_[i]; }
  /// Smallest x with F(x) = u, interpolated within the cell.
  CirclePoint quantile(double u) const;

  /// The distribution function as a circle homeomorphism; throws
  /// std::invalid_argument if some cell carries no mass.
  CdfMap to_cdf_map() const { return CdfMap(cdf_); }

private:
  std::vector<double> cdf_;
};

/// Finitely many weighted atoms; weights positive and summing to 1.
class EmpiricalMeasure {
public:
  explicit EmpiricalMeasure(std::vector<std::pair<CirclePoint, double>> atoms);

  std::span<const std::pair<CirclePoint, double>> atoms() const { return atoms_; }
  /// Each atom's mass goes to the cell containing it.
  GridMeasure binned(std::size_t grid_size = kDefaultGridSize) const;

private:
  std::vector<std::pair<CirclePoint, double>> atoms_;
};

/// A test function h sampled at the knots i/grid_size, i < grid_size, and
/// extended periodically by linear interpolation.
struct GridFunction {
  std::vector<double> values;

  std::size_t grid_size() const { return values.size(); }
  double operator()(CirclePoint x) const;

  template <class F>
  static GridFunction sample(F&& h, std::size_t grid_size) {
    GridFunction g;
    g.values.resize(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) g.values[i] = h(static_cast<double>(i) / grid_size);
    return g;
  }
};

/// f_* mu, with the preimage of each [0, y_i] computed exactly by evaluate_inverse.
GridMeasure pushforward(const GridMeasure& mu, const Homeomorphism& f);
/// T_* mu = sum_j p_j (f_j)_* mu.
GridMeasure transfer_apply(const IfsWithProbabilities& ifs, const GridMeasure& mu);
/// T h(x) = sum_j p_j h(f_j(x)) at the knots.
GridFunction transfer_dual_apply(const IfsWithProbabilities& ifs, const GridFunction& h);
/// Integral of h against mu, trapezoidal over cells.
double integrate(const GridFunction& h, const GridMeasure& mu);

struct InvariantMeasureResult {
  GridMeasure measure;
  std::size_t iterations = 0;
  double residual = 0.0;  // Wasserstein(T_* mu, mu) of the returned measure
  bool converged = false;
  bool averaged = false;  // Cesaro average of the last iterates was used
};

/// Power iteration from Lebesgue; never throws on non-convergence.
InvariantMeasureResult solve_invariant_measure(const IfsWithProbabilities& ifs,
                                               std::size_t grid_size = kDefaultGridSize,
                                               double tol = 1e-9, std::size_t max_iter = 20000);
/// As solve_invariant_measure, throwing NonConvergence when max_iter is hit.
InvariantMeasureResult invariant_measure(const IfsWithProbabilities& ifs,
                                         std::size_t grid_size = kDefaultGridSize,
                                         double tol = 1e-9, std::size_t max_iter = 20000);

/// (1/n) sum_{k<n} delta_{Z_k(x, omega)}.
EmpiricalMeasure empirical_measure(const IfsWithProbabilities& ifs, CirclePoint x,
                                   const SymbolStream& omega, std::size_t n);

/// Circular W1: min over c of the integral of |F_mu - F_nu - c|.
double wasserstein(const GridMeasure& mu, const GridMeasure& nu);

/// Wasserstein(mu, (R_s)_* mu).
double s_invariance_defect(const GridMeasure& mu, double s);

struct SupportAudit {
  double max_cell_mass = 0.0;
  double min_window_mass = 0.0;
  double window = 0.0;
  // Largest mass of a block of 16 cells. An atom keeps its mass under
  // refinement; a (possibly singular) density loses most of it.
  double coarse_max_cell_mass = 0.0;

  bool atomic() const { return max_cell_mass > 0.5 * coarse_max_cell_mass; }
  bool full_support() const { return min_window_mass > 0.0; }
};

/// Largest single-cell mass and smallest mass of a sliding window of width
/// `window` (rounded to whole cells).
SupportAudit support_and_atom_audit(const GridMeasure& mu, double window = 1.0 / 64.0);

void write_csv(std::ostream& out, const GridMeasure& mu);
GridMeasure read_csv(std::istream& in);

}  // namespace circlesync
