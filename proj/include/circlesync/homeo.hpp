// Circle homeomorphisms: a closed family of parametric maps with exact
// evaluation, exact inverse evaluation and orientation sign.
#pragma once

#include <array>
#include <memory>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "circlesync/circle.hpp"

namespace circlesync {

/// Distribution function x -> mu([0, x]) of a nonatomic, fully supported
/// measure, sampled at grid_size + 1 uniform knots and interpolated linearly.
/// The knot values must be strictly increasing with cdf[0] = 0 and
/// cdf[grid_size] = 1.
class CdfMap {
public:
  explicit CdfMap(std::vector<double> knots);

  std::size_t grid_size() const { return knots_->size() - 1; }
  std::span<const double> knots() const { return *knots_; }

  CirclePoint evaluate(CirclePoint x) const;
  CirclePoint evaluate_inverse(CirclePoint y) const;

private:
  std::shared_ptr<const std::vector<double>> knots_;
};

enum class ConjugateDirection {
  forward,  // phi o inner o phi^-1
  inverse,  // phi^-1 o inner o phi
};

struct MapNode;

class Homeomorphism {
public:
  static Homeomorphism rotation(double angle);
  /// Projective action of [[a, b], [c, d]] on lines through the origin; the
  /// point x stands for the line at angle pi*x.
  static Homeomorphism projective(double a, double b, double c, double d);
  /// Circle map interpolating breakpoints x_i -> y_i linearly. The x_i must be
  /// increasing in [0, 1); the y_i must advance cyclically in the direction
  /// given by orientation, each step by at least 1e-9, wrapping exactly once.
  static Homeomorphism piecewise_linear(std::vector<std::pair<double, double>> breakpoints,
                                        int orientation);
  static Homeomorphism flip();
  /// The k-fold lift x -> G(kx)/k mod 1, G the lift of base with G(0) in [0,1).
  /// Commutes with rotation by 1/k (orientation preserving base) or
  /// conjugates it to rotation by -1/k (reversing base).
  static Homeomorphism klift(Homeomorphism base, int k);
  /// The factor x -> k * base(x/k) mod 1 of a map that preserves distance 1/k.
  static Homeomorphism kfactor(Homeomorphism base, int k);
  static Homeomorphism cdf_conjugate(CdfMap phi, Homeomorphism inner, ConjugateDirection direction);
  /// outer o inner
  static Homeomorphism compose(Homeomorphism outer, Homeomorphism inner);
  static Homeomorphism inverse_of(Homeomorphism f);

  CirclePoint evaluate(CirclePoint x) const;
  CirclePoint evaluate_inverse(CirclePoint y) const;
  CirclePoint operator()(CirclePoint x) const { return evaluate(x); }
  int orientation() const;

  Homeomorphism inverse() const { return inverse_of(*this); }

  const MapNode& node() const { return *node_; }

private:
  explicit Homeomorphism(std::shared_ptr<const MapNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const MapNode> node_;
};

struct RotationMap {
  double angle;
};

struct ProjectiveMap {
  std::array<double, 4> matrix;
};

struct PiecewiseLinearMap {
  std::vector<std::pair<double, double>> breakpoints;
  int orientation;
  // Lifted coordinates: xs has one extra entry xs[0] + 1, ys the matching
  // lifted images, monotone in the direction of orientation.
  std::vector<double> xs;
  std::vector<double> ys;
};

struct FlipMap {};

struct KLiftMap {
  Homeomorphism base;
  int k;
  double base_at_zero;
};

struct KFactorMap {
  Homeomorphism base;
  int k;
};

struct CdfConjugateMap {
  CdfMap phi;
  Homeomorphism inner;
  ConjugateDirection direction;
};

struct ComposedMap {
  Homeomorphism outer;
  Homeomorphism inner;
};

struct InverseMap {
  Homeomorphism of;
};

using MapSpec = std::variant<RotationMap, ProjectiveMap, PiecewiseLinearMap, FlipMap, KLiftMap,
                             KFactorMap, CdfConjugateMap, ComposedMap, InverseMap>;

struct MapNode {
  MapSpec spec;
  int orientation;
};

/// Sign of the cyclic order of f(0), f(1/3), f(2/3): +1 counterclockwise.
int cyclic_order_sign(const Homeomorphism& f, double a = 0.0, double b = 1.0 / 3.0,
                      double c = 2.0 / 3.0);

}  // namespace circlesync
