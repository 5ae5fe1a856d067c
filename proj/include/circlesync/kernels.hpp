// Data-parallel kernels. Every kernel runs either as a plain serial loop (the
// reference) or as an OpenMP loop; both write results by index, so their
// outputs are bitwise identical.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "circlesync/circle.hpp"
#include "circlesync/homeo.hpp"
#include "circlesync/ifs.hpp"
#include "circlesync/metric.hpp"

namespace circlesync::kernels {

enum class Backend { serial, omp };

/// Backend used by the high-level operations (default omp).
Backend default_backend();
void set_default_backend(Backend backend);
/// Threads for the omp backend; 0 keeps the OpenMP default.
void set_num_threads(int threads);

/// body(i) for i in [0, count): a plain loop for serial, an OpenMP loop for omp.
template <class Body>
void parallel_for(Backend backend, std::size_t count, Body&& body) {
  const auto n = static_cast<std::int64_t>(count);
  if (backend == Backend::serial) {
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    return;
  }
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
}

/// Knot values of the distribution function of f_* mu, given those of mu.
std::vector<double> pushforward_cdf(std::span<const double> cdf, const Homeomorphism& f,
                                    Backend backend);
/// Knot values of T_* mu.
std::vector<double> transfer_cdf(std::span<const double> cdf, const IfsWithProbabilities& ifs,
                                 Backend backend);
/// (T h) at the knots.
std::vector<double> transfer_dual(std::span<const double> h, const IfsWithProbabilities& ifs,
                                  Backend backend);

/// For every replica r: rho(Z_n(x_r), Z_n(y_r)) under stream
/// (seed, r / pairs_per_stream).
std::vector<double> terminal_distances(const IfsWithProbabilities& ifs, const Metric& metric,
                                       std::uint64_t seed,
                                       std::span<const std::pair<CirclePoint, CirclePoint>> pairs,
                                       std::size_t n, Backend backend,
                                       std::size_t pairs_per_stream = 1);

/// Row-major [replica][m] table of rho(Z_m(x_r), Z_m(y_r)), m = 0..n.
std::vector<double> distance_paths(const IfsWithProbabilities& ifs, const Metric& metric,
                                   std::uint64_t seed,
                                   std::span<const std::pair<CirclePoint, CirclePoint>> pairs,
                                   std::size_t n, Backend backend,
                                       std::size_t pairs_per_stream = 1);

/// Inverse reversed endpoints Zhat^-_n(x_i, omega) for every start point.
std::vector<CirclePoint> inverse_reversed_endpoints(const IfsWithProbabilities& ifs,
                                                    const SymbolStream& omega,
                                                    std::span<const CirclePoint> starts,
                                                    std::size_t n, Backend backend);

/// Binned empirical distribution functions along forward trajectories, one
/// per (start, stream) replica: row r holds grid_size + 1 knot values.
std::vector<double> empirical_cdfs(const IfsWithProbabilities& ifs, std::uint64_t seed,
                                   std::span<const CirclePoint> starts, std::size_t n,
                                   std::size_t grid_size, Backend backend);

}  // namespace circlesync::kernels
