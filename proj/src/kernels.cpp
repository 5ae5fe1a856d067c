#include "circlesync/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <omp.h>

namespace circlesync::kernels {

namespace {

std::atomic<Backend> g_backend{Backend::omp};

double cdf_interp(std::span<const double> cdf, double x) {
  const std::size_t g = cdf.size() - 1;
  const double pos = x * static_cast<double>(g);
  std::size_t i = std::min(static_cast<std::size_t>(pos), g - 1);
  return cdf[i] + (cdf[i + 1] - cdf[i]) * (pos - static_cast<double>(i));
}

double arc_mass(std::span<const double> cdf, CirclePoint a, CirclePoint b) {
  const double fa = cdf_interp(cdf, a.value());
  const double fb = cdf_interp(cdf, b.value());
  return b.value() >= a.value() ? fb - fa : 1.0 - fa + fb;
}

double periodic_interp(std::span<const double> h, CirclePoint x) {
  const std::size_t g = h.size();
  const double pos = x.value() * static_cast<double>(g);
  std::size_t i = std::min(static_cast<std::size_t>(pos), g - 1);
  const double t = pos - static_cast<double>(i);
  return h[i] + (h[(i + 1) % g] - h[i]) * t;
}

}  // namespace

Backend default_backend() { return g_backend.load(); }
void set_default_backend(Backend backend) { g_backend.store(backend); }
void set_num_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

std::vector<double> pushforward_cdf(std::span<const double> cdf, const Homeomorphism& f,
                                    Backend backend) {
  const std::size_t g = cdf.size() - 1;
  std::vector<double> out(g + 1, 0.0);
  const CirclePoint pre_zero = f.evaluate_inverse(CirclePoint(0.0));
  const bool preserving = f.orientation() > 0;
  parallel_for(backend, g - 1, [&](std::size_t k) {
    const std::size_t i = k + 1;
    const CirclePoint pre = f.evaluate_inverse(CirclePoint(static_cast<double>(i) / g));
    // f^-1([0, y]) is the arc from f^-1(0) to f^-1(y), reversed for
    // orientation-reversing f.
    out[i] = preserving ? arc_mass(cdf, pre_zero, pre) : arc_mass(cdf, pre, pre_zero);
  });
  out[g] = 1.0;
  // Rounding can leave a knot a few ulps below its predecessor.
  for (std::size_t i = 1; i <= g; ++i) out[i] = std::clamp(out[i], out[i - 1], 1.0);
  return out;
}

std::vector<double> transfer_cdf(std::span<const double> cdf, const IfsWithProbabilities& ifs,
                                 Backend backend) {
  const std::size_t g = cdf.size() - 1;
  std::vector<double> out(g + 1, 0.0);
  for (std::size_t j = 0; j < ifs.size(); ++j) {
    auto part = pushforward_cdf(cdf, ifs.map(j), backend);
    const double p = ifs.probs()[j];
    for (std::size_t i = 0; i <= g; ++i) out[i] += p * part[i];
  }
  out[0] = 0.0;
  out[g] = 1.0;
  for (std::size_t i = 1; i <= g; ++i) out[i] = std::clamp(out[i], out[i - 1], 1.0);
  return out;
}

std::vector<double> transfer_dual(std::span<const double> h, const IfsWithProbabilities& ifs,
                                  Backend backend) {
  const std::size_t g = h.size();
  std::vector<double> out(g, 0.0);
  parallel_for(backend, g, [&](std::size_t i) {
    const CirclePoint x(static_cast<double>(i) / g);
    double acc = 0.0;
    for (std::size_t j = 0; j < ifs.size(); ++j) {
      acc += ifs.probs()[j] * periodic_interp(h, ifs.map(j).evaluate(x));
    }
    out[i] = acc;
  });
  return out;
}

std::vector<double> terminal_distances(const IfsWithProbabilities& ifs, const Metric& metric,
                                       std::uint64_t seed,
                                       std::span<const std::pair<CirclePoint, CirclePoint>> pairs,
                                       std::size_t n, Backend backend,
                                       std::size_t pairs_per_stream) {
  std::vector<double> out(pairs.size(), 0.0);
  parallel_for(backend, pairs.size(), [&](std::size_t r) {
    SymbolStream omega(seed, r / pairs_per_stream, ifs.probs());
    CirclePoint x = pairs[r].first;
    CirclePoint y = pairs[r].second;
    for (std::size_t k = 1; k <= n; ++k) {
      const auto& f = ifs.map(omega.symbol(k));
      x = f.evaluate(x);
      y = f.evaluate(y);
    }
    out[r] = metric.distance(x, y);
  });
  return out;
}

std::vector<double> distance_paths(const IfsWithProbabilities& ifs, const Metric& metric,
                                   std::uint64_t seed,
                                   std::span<const std::pair<CirclePoint, CirclePoint>> pairs,
                                   std::size_t n, Backend backend,
                                       std::size_t pairs_per_stream) {
  const std::size_t width = n + 1;
  std::vector<double> out(pairs.size() * width, 0.0);
  parallel_for(backend, pairs.size(), [&](std::size_t r) {
    SymbolStream omega(seed, r / pairs_per_stream, ifs.probs());
    CirclePoint x = pairs[r].first;
    CirclePoint y = pairs[r].second;
    double* row = out.data() + r * width;
    row[0] = metric.distance(x, y);
    for (std::size_t k = 1; k <= n; ++k) {
      const auto& f = ifs.map(omega.symbol(k));
      x = f.evaluate(x);
      y = f.evaluate(y);
      row[k] = metric.distance(x, y);
    }
  });
  return out;
}

std::vector<CirclePoint> inverse_reversed_endpoints(const IfsWithProbabilities& ifs,
                                                    const SymbolStream& omega,
                                                    std::span<const CirclePoint> starts,
                                                    std::size_t n, Backend backend) {
  // Symbols are drawn once; every start point shares the realization.
  std::vector<std::size_t> symbols(n);
  for (std::size_t k = 1; k <= n; ++k) symbols[k - 1] = omega.symbol(k);
  std::vector<CirclePoint> out(starts.size());
  parallel_for(backend, starts.size(), [&](std::size_t i) {
    CirclePoint x = starts[i];
    for (std::size_t k = n; k >= 1; --k) x = ifs.map(symbols[k - 1]).evaluate_inverse(x);
    out[i] = x;
  });
  return out;
}

std::vector<double> empirical_cdfs(const IfsWithProbabilities& ifs, std::uint64_t seed,
                                   std::span<const CirclePoint> starts, std::size_t n,
                                   std::size_t grid_size, Backend backend) {
  const std::size_t width = grid_size + 1;
  std::vector<double> out(starts.size() * width, 0.0);
  parallel_for(backend, starts.size(), [&](std::size_t r) {
    SymbolStream omega(seed, r, ifs.probs());
    std::vector<std::uint32_t> counts(grid_size, 0);
    CirclePoint x = starts[r];
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) x = ifs.map(omega.symbol(k)).evaluate(x);
      auto cell = std::min(static_cast<std::size_t>(x.value() * grid_size), grid_size - 1);
      ++counts[cell];
    }
    double* row = out.data() + r * width;
    std::uint64_t running = 0;
    row[0] = 0.0;
    for (std::size_t i = 0; i < grid_size; ++i) {
      running += counts[i];
      row[i + 1] = static_cast<double>(running) / static_cast<double>(n);
    }
    row[grid_size] = 1.0;
  });
  return out;
}

}  // namespace circlesync::kernels
