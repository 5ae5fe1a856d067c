#include "circlesync/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace circlesync {

namespace {
constexpr double kCollapseGap = 1e-13;
}

IfsWithProbabilities::IfsWithProbabilities(std::vector<Homeomorphism> maps, std::vector<double> probs)
    : maps_(std::move(maps)), probs_(std::move(probs)) {
  if (maps_.empty()) throw std::invalid_argument("an IFS needs at least one map");
  if (maps_.size() != probs_.size()) {
    throw std::invalid_argument("probability vector length differs from the number of maps");
  }
  for (double p : probs_) {
    if (!(p > 0.0)) throw std::invalid_argument("probabilities must be strictly positive");
  }
  double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("probabilities must sum to 1");
}

IfsWithProbabilities IfsWithProbabilities::inverse() const {
  std::vector<Homeomorphism> inv;
  inv.reserve(maps_.size());
  for (const auto& f : maps_) inv.push_back(f.inverse());
  return IfsWithProbabilities(std::move(inv), probs_);
}

std::uint64_t stream_state(std::uint64_t seed, std::uint64_t stream_id) {
  return SplitMix64::mix(seed ^ SplitMix64::mix(stream_id + SplitMix64::kGamma));
}

SymbolStream::SymbolStream(std::uint64_t seed, std::uint64_t stream_id, std::span<const double> probs)
    : seed_(seed), stream_id_(stream_id), state0_(stream_state(seed, stream_id)) {
  if (probs.empty()) throw std::invalid_argument("symbol stream needs a probability vector");
  cumulative_.resize(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cumulative_.begin());
  cumulative_.back() = 1.0;
}

std::size_t SymbolStream::symbol(std::size_t k) const {
  if (k == 0) throw std::out_of_range("symbols are indexed from 1");
  const std::uint64_t index = static_cast<std::uint64_t>(offset_ + k);
  const double u = SplitMix64::to_unit(SplitMix64::mix(state0_ + index * SplitMix64::kGamma));
  std::size_t j = 0;
  while (j + 1 < cumulative_.size() && !(u < cumulative_[j])) ++j;
  return j;
}

SymbolStream SymbolStream::shift(std::size_t n) const {
  SymbolStream s = *this;
  s.offset_ += n;
  return s;
}

std::string to_string(OrbitMode mode) {
  switch (mode) {
    case OrbitMode::forward: return "forward";
    case OrbitMode::reversed: return "reversed";
    case OrbitMode::inverse_forward: return "inverse_forward";
    case OrbitMode::inverse_reversed: return "inverse_reversed";
  }
  return "unknown";
}

CirclePoint forward_point(const IfsWithProbabilities& ifs, CirclePoint x, const SymbolStream& omega,
                          std::size_t n) {
  for (std::size_t k = 1; k <= n; ++k) x = ifs.map(omega.symbol(k)).evaluate(x);
  return x;
}

CirclePoint reversed_point(const IfsWithProbabilities& ifs, CirclePoint x,
                           const SymbolStream& omega, std::size_t n) {
  for (std::size_t k = n; k >= 1; --k) x = ifs.map(omega.symbol(k)).evaluate(x);
  return x;
}

CirclePoint inverse_forward_point(const IfsWithProbabilities& ifs, CirclePoint x,
                                  const SymbolStream& omega, std::size_t n) {
  for (std::size_t k = 1; k <= n; ++k) x = ifs.map(omega.symbol(k)).evaluate_inverse(x);
  return x;
}

CirclePoint inverse_reversed_point(const IfsWithProbabilities& ifs, CirclePoint x,
                                   const SymbolStream& omega, std::size_t n) {
  for (std::size_t k = n; k >= 1; --k) x = ifs.map(omega.symbol(k)).evaluate_inverse(x);
  return x;
}

namespace {

Trajectory sequential_orbit(const IfsWithProbabilities& ifs, CirclePoint x,
                            const SymbolStream& omega, std::size_t n, bool inverse) {
  Trajectory t{inverse ? OrbitMode::inverse_forward : OrbitMode::forward, {}, {}};
  t.points.reserve(n + 1);
  t.symbols.reserve(n);
  t.points.push_back(x);
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t j = omega.symbol(k);
    const auto& f = ifs.map(j);
    x = inverse ? f.evaluate_inverse(x) : f.evaluate(x);
    t.points.push_back(x);
    t.symbols.push_back(j);
  }
  return t;
}

// Reversed compositions do not extend incrementally, so every point is
// recomputed from scratch: O(n^2) evaluations.
Trajectory recomputed_orbit(const IfsWithProbabilities& ifs, CirclePoint x,
                            const SymbolStream& omega, std::size_t n, bool inverse) {
  Trajectory t{inverse ? OrbitMode::inverse_reversed : OrbitMode::reversed, {}, {}};
  t.points.reserve(n + 1);
  t.symbols.reserve(n);
  t.points.push_back(x);
  for (std::size_t m = 1; m <= n; ++m) {
    t.points.push_back(inverse ? inverse_reversed_point(ifs, x, omega, m)
                               : reversed_point(ifs, x, omega, m));
    t.symbols.push_back(omega.symbol(m));
  }
  return t;
}

}  // namespace

Trajectory forward_orbit(const IfsWithProbabilities& ifs, CirclePoint x, const SymbolStream& omega,
                         std::size_t n) {
  return sequential_orbit(ifs, x, omega, n, false);
}

Trajectory inverse_forward_orbit(const IfsWithProbabilities& ifs, CirclePoint x,
                                 const SymbolStream& omega, std::size_t n) {
  return sequential_orbit(ifs, x, omega, n, true);
}

Trajectory reversed_orbit(const IfsWithProbabilities& ifs, CirclePoint x,
                          const SymbolStream& omega, std::size_t n) {
  return recomputed_orbit(ifs, x, omega, n, false);
}

Trajectory inverse_reversed_orbit(const IfsWithProbabilities& ifs, CirclePoint x,
                                  const SymbolStream& omega, std::size_t n) {
  return recomputed_orbit(ifs, x, omega, n, true);
}

void for_each_forward(const IfsWithProbabilities& ifs, CirclePoint x, const SymbolStream& omega,
                      std::size_t n,
                      const std::function<void(std::size_t, CirclePoint, std::size_t)>& visit) {
  visit(0, x, 0);
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t j = omega.symbol(k);
    x = ifs.map(j).evaluate(x);
    visit(k, x, j);
  }
}

ArcTracker::ArcTracker(CirclePoint start, double length)
    : start_(start), end_(CirclePoint(start.value() + length)), length_(length) {
  if (!(length >= 0.0 && length <= 1.0)) throw std::invalid_argument("arc length outside [0, 1]");
}

void ArcTracker::apply(const Homeomorphism& f) {
  CirclePoint a = f.evaluate(start_);
  CirclePoint b = f.evaluate(end_);
  if (f.orientation() < 0) std::swap(a, b);
  const double gap = ccw_length(a, b);
  if (std::min(gap, 1.0 - gap) < kCollapseGap) {
    // Endpoint order is no longer resolvable; freeze both endpoints together.
    start_ = end_ = a;
    length_ = length_ > 0.5 ? 1.0 : 0.0;
  } else {
    start_ = a;
    end_ = b;
    length_ = gap;
  }
}

double arc_image_length(const IfsWithProbabilities& ifs, CirclePoint a, double length,
                        const SymbolStream& omega, std::size_t n) {
  ArcTracker arc(a, length);
  for (std::size_t k = 1; k <= n; ++k) arc.apply(ifs.map(omega.symbol(k)));
  return arc.length();
}

double interval_image_length(const IfsWithProbabilities& ifs, CirclePoint y,
                             const SymbolStream& omega, std::size_t n) {
  return arc_image_length(ifs, CirclePoint(0.0), y.value(), omega, n);
}

namespace {

// Cells touched by the image of the open cell (i/g, (i+1)/g).
void cell_image(const Homeomorphism& f, std::size_t i, std::size_t g, std::vector<std::size_t>& out) {
  const double width = 1.0 / static_cast<double>(g);
  const double eps = 1e-9 * width;
  CirclePoint a = f.evaluate(CirclePoint(i * width));
  CirclePoint b = f.evaluate(CirclePoint((i + 1) * width));
  if (f.orientation() < 0) std::swap(a, b);
  double len = ccw_length(a, b);
  if (len == 0.0) len = 1.0;  // a cell cannot collapse; coincident endpoints mean a full turn
  const double lo = a.value() + eps;
  const double hi = a.value() + len - eps;
  auto first = static_cast<long long>(std::floor(lo * g));
  auto last = static_cast<long long>(std::floor(hi * g));
  if (last < first) last = first;
  const auto gg = static_cast<long long>(g);
  for (long long c = first; c <= last && c - first < gg; ++c) {
    out.push_back(static_cast<std::size_t>(((c % gg) + gg) % gg));
  }
}

bool strongly_connected(const std::vector<std::vector<std::size_t>>& adj) {
  const std::size_t g = adj.size();
  auto reach_all = [g](const std::vector<std::vector<std::size_t>>& edges) {
    std::vector<char> seen(g, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : edges[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == g;
  };
  std::vector<std::vector<std::size_t>> rev(g);
  for (std::size_t v = 0; v < g; ++v) {
    for (std::size_t w : adj[v]) rev[w].push_back(v);
  }
  return reach_all(adj) && reach_all(rev);
}

bool cell_graph_connected(const IfsWithProbabilities& ifs, std::size_t g) {
  std::vector<std::vector<std::size_t>> adj(g);
  for (std::size_t i = 0; i < g; ++i) {
    for (const auto& f : ifs.maps()) cell_image(f, i, g, adj[i]);
  }
  return strongly_connected(adj);
}

}  // namespace

MinimalityCertificate minimality_certificate(const IfsWithProbabilities& ifs, std::size_t grid_size) {
  if (grid_size < 16) throw std::invalid_argument("minimality certificate needs grid_size >= 16");
  return {cell_graph_connected(ifs, grid_size), cell_graph_connected(ifs.inverse(), grid_size),
          grid_size};
}

}  // namespace circlesync
