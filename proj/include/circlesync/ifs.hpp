// Iterated function systems with probabilities, Bernoulli symbol streams and
// the four orbit sequences (forward, reversed, and their inverse-map variants).
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "circlesync/circle.hpp"
#include "circlesync/homeo.hpp"

namespace circlesync {

class IfsWithProbabilities {
public:
  /// Throws std::invalid_argument unless N >= 1, sizes agree, every p_j > 0
  /// and the p_j sum to 1 within 1e-12.
  IfsWithProbabilities(std::vector<Homeomorphism> maps, std::vector<double> probs);

  std::size_t size() const { return maps_.size(); }
  const Homeomorphism& map(std::size_t j) const { return maps_[j]; }
  std::span<const Homeomorphism> maps() const { return maps_; }
  std::span<const double> probs() const { return probs_; }

  /// The system of inverse maps with the same probability vector.
  IfsWithProbabilities inverse() const;

private:
  std::vector<Homeomorphism> maps_;
  std::vector<double> probs_;
};

/// SplitMix64 with the standard constants. The k-th output (k >= 1) is
/// mix(state0 + k * 0x9E3779B97F4A7C15), so streams support random access.
struct SplitMix64 {
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  /// Top 53 bits scaled to [0, 1).
  static double to_unit(std::uint64_t v) { return static_cast<double>(v >> 11) * 0x1.0p-53; }

  std::uint64_t state = 0;

  std::uint64_t next() {
    state += kGamma;
    return mix(state);
  }
  double next_unit() { return to_unit(next()); }
};

/// Initial SplitMix64 state of stream `stream_id` under `seed`.
std::uint64_t stream_state(std::uint64_t seed, std::uint64_t stream_id);

/// An i.i.d. symbol sequence omega_1 omega_2 ... with law p, a pure function of
/// (seed, stream_id). Symbols are 0-based map indices.
class SymbolStream {
public:
  SymbolStream(std::uint64_t seed, std::uint64_t stream_id, std::span<const double> probs);

  /// omega_k for k >= 1.
  std::size_t symbol(std::size_t k) const;
  /// The shifted sequence sigma^n(omega); re-indexes, never re-seeds.
  SymbolStream shift(std::size_t n = 1) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::size_t offset() const { return offset_; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state0_;
  std::size_t offset_ = 0;
  std::vector<double> cumulative_;
};

enum class OrbitMode { forward, reversed, inverse_forward, inverse_reversed };

std::string to_string(OrbitMode mode);

struct Trajectory {
  OrbitMode mode;
  std::vector<CirclePoint> points;    // points[0] = x
  std::vector<std::size_t> symbols;   // symbols[k] = omega_{k+1}
};

Trajectory forward_orbit(const IfsWithProbabilities& ifs, CirclePoint x, const SymbolStream& omega,
                         std::size_t n);
Trajectory reversed_orbit(const IfsWithProbabilities& ifs, CirclePoint x,
                          const SymbolStream& omega, std::size_t n);
Trajectory inverse_forward_orbit(const IfsWithProbabilities& ifs, CirclePoint x,
                                 const SymbolStream& omega, std::size_t n);
Trajectory inverse_reversed_orbit(const IfsWithProbabilities& ifs, CirclePoint x,
                                  const SymbolStream& omega, std::size_t n);

/// Endpoints only, O(n) time and O(1) memory.
CirclePoint forward_point(const IfsWithProbabilities& ifs, CirclePoint x, const SymbolStream& omega,
                          std::size_t n);
CirclePoint reversed_point(const IfsWithProbabilities& ifs, CirclePoint x,
                           const SymbolStream& omega, std::size_t n);
CirclePoint inverse_forward_point(const IfsWithProbabilities& ifs, CirclePoint x,
                                  const SymbolStream& omega, std::size_t n);
CirclePoint inverse_reversed_point(const IfsWithProbabilities& ifs, CirclePoint x,
                                   const SymbolStream& omega, std::size_t n);

/// Streams Z_0, ..., Z_n to `visit(k, point, symbol)` without materializing
/// the trajectory; symbol is omega_k (unused for k = 0).
void for_each_forward(const IfsWithProbabilities& ifs, CirclePoint x, const SymbolStream& omega,
                      std::size_t n,
                      const std::function<void(std::size_t, CirclePoint, std::size_t)>& visit);

/// Tracks the image of the counterclockwise arc [a, a + length] under the
/// forward composition. Once the endpoint images coincide in floating point
/// the arc is either collapsed (length 0) or covers the circle (length 1);
/// the previous length decides which.
class ArcTracker {
public:
  ArcTracker(CirclePoint start, double length);

  void apply(const Homeomorphism& f);
  double length() const { return length_; }
  CirclePoint start() const { return start_; }

private:
  CirclePoint start_;
  CirclePoint end_;
  double length_;
};

/// |Z_n([0, y], omega)|.
double interval_image_length(const IfsWithProbabilities& ifs, CirclePoint y,
                             const SymbolStream& omega, std::size_t n);
/// |Z_n([a, a + length], omega)|.
double arc_image_length(const IfsWithProbabilities& ifs, CirclePoint a, double length,
                        const SymbolStream& omega, std::size_t n);

struct MinimalityCertificate {
  bool forward = false;
  bool backward = false;
  std::size_t grid_size = 0;
};

/// Strong connectivity of the cell-reachability graph at resolution
/// 1/grid_size. A numerical certificate, not a proof: systems that are
/// minimal only below the resolution can be reported minimal.
MinimalityCertificate minimality_certificate(const IfsWithProbabilities& ifs,
                                             std::size_t grid_size = 1024);

}  // namespace circlesync
