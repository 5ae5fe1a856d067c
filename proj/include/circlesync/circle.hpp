// Points, distances and arcs on the circle R/Z.
#pragma once

#include <cmath>

namespace circlesync {

/// Reduces a real number into [0, 1).
inline double wrap01(double v) {
  double r = v - std::floor(v);
  // v slightly below an integer can round up to exactly 1.0
  return r >= 1.0 ? 0.0 : r;
}

/// A point of R/Z, stored as its representative in [0, 1).
class CirclePoint {
public:
  constexpr CirclePoint() = default;
  CirclePoint(double v) : value_(wrap01(v)) {}  // NOLINT: implicit by design of the call sites

  double value() const { return value_; }
  operator double() const { return value_; }  // NOLINT

private:
  double value_ = 0.0;
};

/// A circle distance, always in [0, 1/2].
class CircleDistance {
public:
  constexpr CircleDistance() = default;
  explicit CircleDistance(double v);

  double value() const { return value_; }
  operator double() const { return value_; }  // NOLINT

private:
  double value_ = 0.0;
};

/// Counterclockwise arc [start, start + length), 0 <= length <= 1.
struct Arc {
  CirclePoint start;
  double length = 0.0;

  Arc() = default;
  Arc(CirclePoint s, double len);

  CirclePoint end() const { return CirclePoint(start.value() + length); }
};

/// Standard metric d(x,y) = min(|y-x|, 1-|y-x|).
CircleDistance dist(CirclePoint x, CirclePoint y);

/// Rotation R_s(x) = (x + s) mod 1.
CirclePoint rotate(CirclePoint x, double s);

/// The operation s1 (+) s2 = min(s1 + s2, 1 - s1 - s2) on preserved distances.
CircleDistance dist_add(CircleDistance s1, CircleDistance s2);

/// Counterclockwise length of the arc from x to y, in [0, 1).
inline double ccw_length(CirclePoint x, CirclePoint y) { return wrap01(y.value() - x.value()); }

Arc arc_complement(const Arc& a);
bool arc_contains(const Arc& a, CirclePoint x);

}  // namespace circlesync
