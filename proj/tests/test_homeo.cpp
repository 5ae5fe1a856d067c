#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "circlesync/homeo.hpp"

using namespace circlesync;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent oracle for the diagonal projective map diag(a, d): the line at
// angle pi x goes to the line at angle atan(tan(pi x) d / a).
double diag_projective(double a, double d, double x) {
  return wrap01(std::atan(std::tan(kPi * x) * d / a) / kPi);
}

std::vector<double> sample_points(std::size_t n, unsigned seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(n);
  for (auto& x : xs) x = u(rng);
  return xs;
}

// Cyclic order of three images: +1 counterclockwise.
int cyclic_sign(const Homeomorphism& f, double a, double b, double c) {
  const double fa = f(a).value();
  const double ab = wrap01(f(b).value() - fa);
  const double ac = wrap01(f(c).value() - fa);
  return ab < ac ? 1 : -1;
}

CdfMap bumpy_cdf(std::size_t grid) {
  std::vector<double> knots(grid + 1);
  for (std::size_t i = 0; i <= grid; ++i) {
    const double x = static_cast<double>(i) / grid;
    knots[i] = x + 0.1 * std::sin(2 * kPi * x) / (2 * kPi);
  }
  knots.back() = 1.0;
  return CdfMap(knots);
}

std::vector<std::pair<const char*, Homeomorphism>> family() {
  const auto proj = Homeomorphism::projective(2, 0, 0, 0.5);
  const auto skew = Homeomorphism::projective(1, 2, -0.5, 3);
  const auto neg = Homeomorphism::projective(1, 0.3, 0.2, -1);  // det < 0
  const auto pl = Homeomorphism::piecewise_linear({{0.0, 0.1}, {0.3, 0.2}, {0.6, 0.7}}, 1);
  const auto plr = Homeomorphism::piecewise_linear({{0.1, 0.9}, {0.4, 0.5}, {0.8, 0.3}}, -1);
  const auto rot = Homeomorphism::rotation(std::sqrt(2.0) - 1.0);
  return {
      {"rotation", rot},
      {"projective diag", proj},
      {"projective skew", skew},
      {"projective reversing", neg},
      {"piecewise preserving", pl},
      {"piecewise reversing", plr},
      {"flip", Homeomorphism::flip()},
      {"klift projective 2", Homeomorphism::klift(proj, 2)},
      {"klift skew 3", Homeomorphism::klift(skew, 3)},
      {"klift rotation 2", Homeomorphism::klift(rot, 2)},
      {"klift reversing 2", Homeomorphism::klift(neg, 2)},
      {"kfactor", Homeomorphism::kfactor(Homeomorphism::klift(skew, 2), 2)},
      {"cdf forward", Homeomorphism::cdf_conjugate(bumpy_cdf(256), proj, ConjugateDirection::forward)},
      {"cdf inverse", Homeomorphism::cdf_conjugate(bumpy_cdf(256), plr, ConjugateDirection::inverse)},
      {"compose", Homeomorphism::compose(skew, plr)},
      {"inverse", Homeomorphism::inverse_of(skew)},
  };
}

}  // namespace

TEST_CASE("evaluate examples") {
  const auto p = Homeomorphism::projective(2, 0, 0, 0.5);
  CHECK(std::abs(p(0.25).value() - diag_projective(2, 0.5, 0.25)) < 1e-12);
  CHECK(std::abs(p(0.25).value() - 0.0779791303773694) < 1e-12);
  CHECK(std::abs(p(0.0).value()) < 1e-12);
  CHECK(std::abs(Homeomorphism::rotation(0.25)(0.9).value() - 0.15) < 1e-12);
}

TEST_CASE("evaluate_inverse examples") {
  CHECK(std::abs(Homeomorphism::rotation(0.25).evaluate_inverse(0.15).value() - 0.9) < 1e-12);
  CHECK(std::abs(Homeomorphism::flip().evaluate_inverse(0.3).value() - 0.7) < 1e-12);
  const auto p = Homeomorphism::projective(2, 0, 0, 0.5);
  // the inverse matrix diag(1/2, 2), applied through the oracle
  CHECK(dist(p.evaluate_inverse(0.0779791), diag_projective(0.5, 2, 0.0779791)).value() < 1e-12);
  CHECK(dist(p.evaluate_inverse(0.0779791303773694), 0.25).value() < 1e-12);
}

TEST_CASE("orientation") {
  CHECK(Homeomorphism::rotation(0.3).orientation() == 1);
  CHECK(Homeomorphism::flip().orientation() == -1);
  const auto kf = Homeomorphism::klift(Homeomorphism::flip(), 2);
  CHECK(kf.orientation() == -1);
  CHECK(cyclic_sign(kf, 0.0, 0.1, 0.2) == -1);
  for (const auto& [name, f] : family()) {
    INFO(name);
    CHECK(f.orientation() == cyclic_sign(f, 0.0, 1.0 / 3.0, 2.0 / 3.0));
    CHECK(f.orientation() == cyclic_order_sign(f));
  }
  // composition rule
  const auto a = Homeomorphism::projective(1, 0.3, 0.2, -1);
  const auto b = Homeomorphism::flip();
  CHECK(Homeomorphism::compose(a, b).orientation() == 1);
  CHECK(Homeomorphism::compose(a, Homeomorphism::rotation(0.2)).orientation() == -1);
}

TEST_CASE("round trip for every family member") {
  const auto xs = sample_points(1000);
  for (const auto& [name, f] : family()) {
    INFO(name);
    double worst = 0.0;
    double worst_back = 0.0;
    for (double x : xs) {
      worst = std::max(worst, dist(f.evaluate_inverse(f(x)), x).value());
      worst_back = std::max(worst_back, dist(f(f.evaluate_inverse(x)), x).value());
    }
    CHECK(worst < 1e-9);
    CHECK(worst_back < 1e-9);
  }
}

TEST_CASE("sampled monotonicity") {
  for (const auto& [name, f] : family()) {
    INFO(name);
    const int o = f.orientation();
    const std::size_t n = 4096;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = f(static_cast<double>(i) / n).value();
      const double b = f(static_cast<double>(i + 1) / n).value();
      const double step = o > 0 ? wrap01(b - a) : wrap01(a - b);
      CHECK(step < 0.5);
      total += step;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);  // winds exactly once
  }
}

TEST_CASE("klift equivariance") {
  const auto xs = sample_points(1000, 11);
  for (int k : {2, 3, 5}) {
    for (const auto& base : {Homeomorphism::projective(1, 2, -0.5, 3), Homeomorphism::projective(2, 0, 0, 0.5),
                             Homeomorphism::rotation(0.3)}) {
      const auto f = Homeomorphism::klift(base, k);
      double worst = 0.0;
      for (double x : xs) worst = std::max(worst, dist(f(rotate(x, 1.0 / k)), rotate(f(x), 1.0 / k)).value());
      CHECK(worst < 1e-12);
    }
  }
  // reversing base: conjugates R_{1/k} to R_{-1/k}
  const auto g = Homeomorphism::klift(Homeomorphism::projective(1, 0.3, 0.2, -1), 3);
  double worst = 0.0;
  for (double x : xs) worst = std::max(worst, dist(g(rotate(x, 1.0 / 3)), rotate(g(x), -1.0 / 3)).value());
  CHECK(worst < 1e-12);
}

TEST_CASE("klift special cases") {
  const auto xs = sample_points(200, 3);
  const auto r = Homeomorphism::klift(Homeomorphism::rotation(0.3), 3);
  const auto f = Homeomorphism::klift(Homeomorphism::flip(), 2);
  for (double x : xs) {
    CHECK(dist(r(x), rotate(x, 0.1)).value() < 1e-12);
    CHECK(dist(f(x), Homeomorphism::flip()(x)).value() < 1e-12);
  }
  // With g(0) = 0 the lift is (g(kx mod 1) + floor(kx)) / k.
  const auto g = Homeomorphism::projective(2, 0, 0, 0.5);
  const auto kg = Homeomorphism::klift(g, 2);
  for (double x : xs) {
    const double t = 2 * x;
    const double expected = (g(wrap01(t)).value() + std::floor(t)) / 2;
    CHECK(dist(kg(x), expected).value() < 1e-12);
  }
}

TEST_CASE("kfactor inverts klift") {
  const auto g = Homeomorphism::projective(1, 2, -0.5, 3);
  for (int k : {2, 3}) {
    const auto back = Homeomorphism::kfactor(Homeomorphism::klift(g, k), k);
    for (double x : sample_points(1000, 5)) CHECK(dist(back(x), g(x)).value() < 1e-8);
  }
}

TEST_CASE("cdf conjugate") {
  const CdfMap phi = bumpy_cdf(512);
  const auto r = Homeomorphism::rotation(0.25);
  const auto fwd = Homeomorphism::cdf_conjugate(phi, r, ConjugateDirection::forward);
  const auto inv = Homeomorphism::cdf_conjugate(phi, r, ConjugateDirection::inverse);
  for (double x : sample_points(100)) {
    CHECK(dist(fwd(x), phi.evaluate(r(phi.evaluate_inverse(x)))).value() < 1e-12);
    CHECK(dist(inv(x), phi.evaluate_inverse(r(phi.evaluate(x)))).value() < 1e-12);
  }
  // identity cdf leaves the inner map alone
  std::vector<double> id(65);
  for (std::size_t i = 0; i <= 64; ++i) id[i] = i / 64.0;
  const auto same = Homeomorphism::cdf_conjugate(CdfMap(id), Homeomorphism::projective(2, 0, 0, 0.5),
                                                 ConjugateDirection::forward);
  CHECK(dist(same(0.25), 0.0779791303773694).value() < 1e-12);
}

TEST_CASE("construction invariants") {
  CHECK_THROWS_AS(Homeomorphism::projective(1, 2, 2, 4), std::invalid_argument);
  CHECK_THROWS_AS(Homeomorphism::piecewise_linear({{0.0, 0.1}, {0.3, 0.05}, {0.6, 0.7}}, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(Homeomorphism::piecewise_linear({{0.3, 0.1}, {0.2, 0.2}}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Homeomorphism::klift(Homeomorphism::rotation(0.1), 0), std::invalid_argument);
  CHECK_THROWS_AS(CdfMap({0.0, 0.5, 0.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(CdfMap({0.0, 0.6, 0.4, 1.0}), std::invalid_argument);
}
