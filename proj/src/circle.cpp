#include "circlesync/circle.hpp"

#include <algorithm>
#include <stdexcept>

namespace circlesync {

CircleDistance::CircleDistance(double v) {
  if (!(v >= -1e-15 && v <= 0.5 + 1e-15)) {
    throw std::invalid_argument("circle distance outside [0, 1/2]");
  }
  value_ = std::clamp(v, 0.0, 0.5);
}

Arc::Arc(CirclePoint s, double len) : start(s), length(len) {
  if (!(len >= 0.0 && len <= 1.0)) throw std::invalid_argument("arc length outside [0, 1]");
}

CircleDistance dist(CirclePoint x, CirclePoint y) {
  double diff = std::abs(y.value() - x.value());
  return CircleDistance(std::min(diff, 1.0 - diff));
}

CirclePoint rotate(CirclePoint x, double s) { return CirclePoint(x.value() + s); }

CircleDistance dist_add(CircleDistance s1, CircleDistance s2) {
  double sum = s1.value() + s2.value();
  return CircleDistance(std::min(sum, 1.0 - sum));
}

Arc arc_complement(const Arc& a) { return Arc(a.end(), 1.0 - a.length); }

bool arc_contains(const Arc& a, CirclePoint x) {
  if (a.length >= 1.0) return true;
  return ccw_length(a.start, x) < a.length;
}

}  // namespace circlesync
