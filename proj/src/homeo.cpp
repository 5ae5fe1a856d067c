#include "circlesync/homeo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace circlesync {

namespace {

constexpr double kBreakpointMargin = 1e-9;

double mod_positive(double a, double m) { return a - m * std::floor(a / m); }

CirclePoint projective_apply(const std::array<double, 4>& m, double x) {
  const double theta = std::numbers::pi * x;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double w1 = m[0] * c + m[1] * s;
  const double w2 = m[2] * c + m[3] * s;
  return CirclePoint(std::atan2(w2, w1) / std::numbers::pi);
}

// Index i with v[i] <= x < v[i+1] for increasing v, clamped to a valid segment.
std::size_t segment_of(const std::vector<double>& v, double x) {
  auto it = std::upper_bound(v.begin(), v.end(), x);
  std::size_t i = it == v.begin() ? 0 : static_cast<std::size_t>(it - v.begin()) - 1;
  return std::min(i, v.size() - 2);
}

double interpolate(double x0, double x1, double y0, double y1, double x) {
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

CirclePoint pl_evaluate(const PiecewiseLinearMap& m, double x) {
  double xl = x < m.xs.front() ? x + 1.0 : x;
  std::size_t i = segment_of(m.xs, xl);
  return CirclePoint(interpolate(m.xs[i], m.xs[i + 1], m.ys[i], m.ys[i + 1], xl));
}

CirclePoint pl_evaluate_inverse(const PiecewiseLinearMap& m, double y) {
  const double y0 = m.ys.front();
  if (m.orientation > 0) {
    double yl = y0 + wrap01(y - y0);
    std::size_t i = segment_of(m.ys, yl);
    return CirclePoint(interpolate(m.ys[i], m.ys[i + 1], m.xs[i], m.xs[i + 1], yl));
  }
  double yl = y0 - wrap01(y0 - y);
  auto it = std::upper_bound(m.ys.begin(), m.ys.end(), yl, std::greater<>());
  std::size_t i = it == m.ys.begin() ? 0 : static_cast<std::size_t>(it - m.ys.begin()) - 1;
  i = std::min(i, m.ys.size() - 2);
  return CirclePoint(interpolate(m.ys[i], m.ys[i + 1], m.xs[i], m.xs[i + 1], yl));
}

CirclePoint klift_evaluate(const KLiftMap& m, double x) {
  const double t = m.k * x;
  double q = std::floor(t);
  double u = std::clamp(t - q, 0.0, std::nextafter(1.0, 0.0));
  const double g = m.base.evaluate(CirclePoint(u)).value();
  if (m.base.orientation() > 0) {
    double lifted = m.base_at_zero + wrap01(g - m.base_at_zero);
    return CirclePoint((lifted + q) / m.k);
  }
  double lifted = m.base_at_zero - wrap01(m.base_at_zero - g);
  return CirclePoint((lifted - q) / m.k);
}

CirclePoint klift_evaluate_inverse(const KLiftMap& m, double y) {
  const double k = m.k;
  const double g0 = m.base_at_zero;
  if (m.base.orientation() > 0) {
    double z = g0 + mod_positive(k * y - g0, k);
    double q = std::clamp(std::floor(z - g0), 0.0, k - 1.0);
    double u = m.base.evaluate_inverse(CirclePoint(z - q)).value();
    return CirclePoint((q + u) / k);
  }
  double z = g0 - mod_positive(g0 - k * y, k);
  double q = std::clamp(std::floor(g0 - z), 0.0, k - 1.0);
  double u = m.base.evaluate_inverse(CirclePoint(z + q)).value();
  return CirclePoint((q + u) / k);
}

}  // namespace

CdfMap::CdfMap(std::vector<double> knots) {
  if (knots.size() < 2) throw std::invalid_argument("cdf map needs at least one cell");
  if (knots.front() != 0.0 || std::abs(knots.back() - 1.0) > 1e-12) {
    throw std::invalid_argument("cdf map must run from 0 to 1");
  }
  knots.back() = 1.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (!(knots[i + 1] > knots[i])) {
      throw std::invalid_argument("cdf map is not strictly increasing at knot " + std::to_string(i));
    }
  }
  knots_ = std::make_shared<const std::vector<double>>(std::move(knots));
}

CirclePoint CdfMap::evaluate(CirclePoint x) const {
  const auto& k = *knots_;
  const double n = static_cast<double>(grid_size());
  const double pos = x.value() * n;
  std::size_t i = std::min(static_cast<std::size_t>(pos), grid_size() - 1);
  return CirclePoint(k[i] + (k[i + 1] - k[i]) * (pos - static_cast<double>(i)));
}

CirclePoint CdfMap::evaluate_inverse(CirclePoint y) const {
  const auto& k = *knots_;
  std::size_t i = segment_of(k, y.value());
  double frac = (y.value() - k[i]) / (k[i + 1] - k[i]);
  return CirclePoint((static_cast<double>(i) + frac) / static_cast<double>(grid_size()));
}

Homeomorphism Homeomorphism::rotation(double angle) {
  return Homeomorphism(std::make_shared<const MapNode>(MapNode{RotationMap{angle}, +1}));
}

Homeomorphism Homeomorphism::projective(double a, double b, double c, double d) {
  const double det = a * d - b * c;
  if (!std::isfinite(det) || det == 0.0) {
    throw std::invalid_argument("projective map needs an invertible matrix");
  }
  return Homeomorphism(
      std::make_shared<const MapNode>(MapNode{ProjectiveMap{{a, b, c, d}}, det > 0 ? +1 : -1}));
}

Homeomorphism Homeomorphism::piecewise_linear(std::vector<std::pair<double, double>> breakpoints,
                                              int orientation) {
  if (orientation != 1 && orientation != -1) {
    throw std::invalid_argument("piecewise linear orientation must be +1 or -1");
  }
  if (breakpoints.empty()) throw std::invalid_argument("piecewise linear map needs breakpoints");
  const std::size_t n = breakpoints.size();
  PiecewiseLinearMap m{breakpoints, orientation, {}, {}};
  m.xs.reserve(n + 1);
  m.ys.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto [x, y] = breakpoints[i];
    if (!(x >= 0.0 && x < 1.0) || !(y >= 0.0 && y < 1.0)) {
      throw std::invalid_argument("piecewise linear breakpoints must lie in [0, 1)");
    }
    if (i > 0 && !(x - breakpoints[i - 1].first >= kBreakpointMargin)) {
      throw std::invalid_argument("piecewise linear breakpoints must be strictly increasing in x");
    }
    m.xs.push_back(x);
    if (i == 0) {
      m.ys.push_back(y);
    } else {
      double step = wrap01(orientation * (y - breakpoints[i - 1].second));
      if (step < kBreakpointMargin) {
        throw std::invalid_argument("piecewise linear images are not strictly monotone");
      }
      m.ys.push_back(m.ys.back() + orientation * step);
    }
  }
  m.xs.push_back(m.xs.front() + 1.0);
  m.ys.push_back(m.ys.front() + orientation * 1.0);
  if (orientation * (m.ys[n] - m.ys[n - 1]) < kBreakpointMargin) {
    throw std::invalid_argument("piecewise linear images must wind around the circle exactly once");
  }
  return Homeomorphism(std::make_shared<const MapNode>(MapNode{std::move(m), orientation}));
}

Homeomorphism Homeomorphism::flip() {
  return Homeomorphism(std::make_shared<const MapNode>(MapNode{FlipMap{}, -1}));
}

Homeomorphism Homeomorphism::klift(Homeomorphism base, int k) {
  if (k < 1) throw std::invalid_argument("lift order must be positive");
  const int o = base.orientation();
  const double g0 = base.evaluate(CirclePoint(0.0)).value();
  return Homeomorphism(std::make_shared<const MapNode>(MapNode{KLiftMap{std::move(base), k, g0}, o}));
}

Homeomorphism Homeomorphism::kfactor(Homeomorphism base, int k) {
  if (k < 1) throw std::invalid_argument("factor order must be positive");
  const int o = base.orientation();
  return Homeomorphism(std::make_shared<const MapNode>(MapNode{KFactorMap{std::move(base), k}, o}));
}

Homeomorphism Homeomorphism::cdf_conjugate(CdfMap phi, Homeomorphism inner,
                                           ConjugateDirection direction) {
  const int o = inner.orientation();
  return Homeomorphism(std::make_shared<const MapNode>(
      MapNode{CdfConjugateMap{std::move(phi), std::move(inner), direction}, o}));
}

Homeomorphism Homeomorphism::compose(Homeomorphism outer, Homeomorphism inner) {
  const int o = outer.orientation() * inner.orientation();
  return Homeomorphism(
      std::make_shared<const MapNode>(MapNode{ComposedMap{std::move(outer), std::move(inner)}, o}));
}

Homeomorphism Homeomorphism::inverse_of(Homeomorphism f) {
  if (const auto* inv = std::get_if<InverseMap>(&f.node().spec)) return inv->of;
  const int o = f.orientation();
  return Homeomorphism(std::make_shared<const MapNode>(MapNode{InverseMap{std::move(f)}, o}));
}

int Homeomorphism::orientation() const { return node_->orientation; }

CirclePoint Homeomorphism::evaluate(CirclePoint x) const {
  return std::visit(
      [&](const auto& m) -> CirclePoint {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RotationMap>) {
          return rotate(x, m.angle);
        } else if constexpr (std::is_same_v<T, ProjectiveMap>) {
          return projective_apply(m.matrix, x.value());
        } else if constexpr (std::is_same_v<T, PiecewiseLinearMap>) {
          return pl_evaluate(m, x.value());
        } else if constexpr (std::is_same_v<T, FlipMap>) {
          return CirclePoint(-x.value());
        } else if constexpr (std::is_same_v<T, KLiftMap>) {
          return klift_evaluate(m, x.value());
        } else if constexpr (std::is_same_v<T, KFactorMap>) {
          return CirclePoint(m.k * m.base.evaluate(CirclePoint(x.value() / m.k)).value());
        } else if constexpr (std::is_same_v<T, CdfConjugateMap>) {
          if (m.direction == ConjugateDirection::forward) {
            return m.phi.evaluate(m.inner.evaluate(m.phi.evaluate_inverse(x)));
          }
          return m.phi.evaluate_inverse(m.inner.evaluate(m.phi.evaluate(x)));
        } else if constexpr (std::is_same_v<T, ComposedMap>) {
          return m.outer.evaluate(m.inner.evaluate(x));
        } else {
          return m.of.evaluate_inverse(x);
        }
      },
      node_->spec);
}

CirclePoint Homeomorphism::evaluate_inverse(CirclePoint y) const {
  return std::visit(
      [&](const auto& m) -> CirclePoint {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RotationMap>) {
          return rotate(y, -m.angle);
        } else if constexpr (std::is_same_v<T, ProjectiveMap>) {
          const auto& a = m.matrix;
          return projective_apply({a[3], -a[1], -a[2], a[0]}, y.value());
        } else if constexpr (std::is_same_v<T, PiecewiseLinearMap>) {
          return pl_evaluate_inverse(m, y.value());
        } else if constexpr (std::is_same_v<T, FlipMap>) {
          return CirclePoint(-y.value());
        } else if constexpr (std::is_same_v<T, KLiftMap>) {
          return klift_evaluate_inverse(m, y.value());
        } else if constexpr (std::is_same_v<T, KFactorMap>) {
          return CirclePoint(m.k * m.base.evaluate_inverse(CirclePoint(y.value() / m.k)).value());
        } else if constexpr (std::is_same_v<T, CdfConjugateMap>) {
          if (m.direction == ConjugateDirection::forward) {
            return m.phi.evaluate(m.inner.evaluate_inverse(m.phi.evaluate_inverse(y)));
          }
          return m.phi.evaluate_inverse(m.inner.evaluate_inverse(m.phi.evaluate(y)));
        } else if constexpr (std::is_same_v<T, ComposedMap>) {
          return m.inner.evaluate_inverse(m.outer.evaluate_inverse(y));
        } else {
          return m.of.evaluate(y);
        }
      },
      node_->spec);
}

int cyclic_order_sign(const Homeomorphism& f, double a, double b, double c) {
  CirclePoint fa = f(CirclePoint(a));
  CirclePoint fb = f(CirclePoint(b));
  CirclePoint fc = f(CirclePoint(c));
  return ccw_length(fa, fb) < ccw_length(fa, fc) ? +1 : -1;
}

}  // namespace circlesync
