// Metrics on the circle: the standard metric d and the measure metric
// rho(x, y) = min(mu[x, y], mu[y, x]) of a nonatomic, fully supported measure.
#pragma once

#include <optional>
#include <string>

#include "circlesync/circle.hpp"
#include "circlesync/homeo.hpp"

namespace circlesync {

class Metric {
public:
  static Metric euclidean() { return Metric(std::nullopt); }
  static Metric rho_of(CdfMap phi) { return Metric(std::move(phi)); }

  bool is_euclidean() const { return !phi_.has_value(); }
  const std::optional<CdfMap>& phi() const { return phi_; }
  std::string tag() const { return is_euclidean() ? "euclidean_d" : "rho_of_mu_minus"; }

  /// rho(x, y) = d(Phi(x), Phi(y)) with Phi the distribution function.
  double distance(CirclePoint x, CirclePoint y) const {
    if (!phi_) return dist(x, y).value();
    return dist(phi_->evaluate(x), phi_->evaluate(y)).value();
  }

  /// The point at metric distance s counterclockwise from x.
  CirclePoint point_at(CirclePoint x, double s) const {
    if (!phi_) return rotate(x, s);
    return phi_->evaluate_inverse(rotate(phi_->evaluate(x), s));
  }

private:
  explicit Metric(std::optional<CdfMap> phi) : phi_(std::move(phi)) {}
  std::optional<CdfMap> phi_;
};

}  // namespace circlesync
