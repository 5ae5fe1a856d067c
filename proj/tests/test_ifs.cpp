#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "circlesync/ifs.hpp"

using namespace circlesync;

namespace {

double diag_projective(double a, double d, double x) {
  return wrap01(std::atan(std::tan(std::numbers::pi * x) * d / a) / std::numbers::pi);
}

IfsWithProbabilities mobius_pair() {
  return IfsWithProbabilities({Homeomorphism::rotation(std::sqrt(2.0) - 1.0),
                               Homeomorphism::projective(2, 0, 0, 0.5)},
                              {0.5, 0.5});
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    worst = std::max(worst, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return worst;
}

}  // namespace

TEST_CASE("ifs construction") {
  const auto r = Homeomorphism::rotation(0.1);
  CHECK_THROWS_AS(IfsWithProbabilities({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(IfsWithProbabilities({r, r}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(IfsWithProbabilities({r, r}, {1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(IfsWithProbabilities({r, r}, {1.2, -0.2}), std::invalid_argument);
  CHECK_THROWS_AS(IfsWithProbabilities({r, r}, {0.5, 0.6}), std::invalid_argument);
  CHECK_NOTHROW(IfsWithProbabilities({r, r}, {0.3, 0.7}));
  const auto inv = mobius_pair().inverse();
  CHECK(dist(inv.map(1)(0.0779791303773694), 0.25).value() < 1e-12);
}

TEST_CASE("splitmix64 reference outputs") {
  SplitMix64 g{0};
  CHECK(g.next() == 0xe220a8397b1dcdafULL);
  CHECK(g.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(g.next() == 0x06c45d188009454fULL);
  CHECK(SplitMix64::to_unit(~0ULL) < 1.0);
}

TEST_CASE("symbol streams") {
  const std::vector<double> p{0.2, 0.8};
  const SymbolStream a(42, 3, p), b(42, 3, p), c(42, 4, p), d(43, 3, p);
  bool differs_c = false, differs_d = false;
  for (std::size_t k = 1; k <= 200; ++k) {
    CHECK(a.symbol(k) == b.symbol(k));
    differs_c |= a.symbol(k) != c.symbol(k);
    differs_d |= a.symbol(k) != d.symbol(k);
  }
  CHECK(differs_c);
  CHECK(differs_d);

  const auto s = a.shift();
  const auto s5 = a.shift(5);
  for (std::size_t k = 1; k <= 100; ++k) {
    CHECK(s.symbol(k) == a.symbol(k + 1));
    CHECK(s5.symbol(k) == a.symbol(k + 5));
    CHECK(s.shift(4).symbol(k) == s5.symbol(k));
  }
  CHECK(s5.offset() == 5);

  std::size_t ones = 0;
  const std::size_t n = 100000;
  for (std::size_t k = 1; k <= n; ++k) ones += a.symbol(k);
  CHECK(std::abs(double(ones) / n - 0.8) < 0.01);
  CHECK_THROWS(a.symbol(0));
}

TEST_CASE("forward orbit examples") {
  const IfsWithProbabilities quarter({Homeomorphism::rotation(0.25)}, {1.0});
  const SymbolStream w(1, 0, quarter.probs());
  const auto t = forward_orbit(quarter, 0.0, w, 3);
  REQUIRE(t.points.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(t.points[i].value() - 0.25 * i) < 1e-12);
  CHECK(forward_orbit(mobius_pair(), 0.3, SymbolStream(1, 0, mobius_pair().probs()), 0).points.size() == 1);

  const IfsWithProbabilities proj({Homeomorphism::projective(2, 0, 0, 0.5)}, {1.0});
  const auto u = forward_orbit(proj, 0.25, SymbolStream(1, 0, proj.probs()), 2);
  const double x1 = diag_projective(2, 0.5, 0.25);
  CHECK(std::abs(u.points[1].value() - x1) < 1e-12);
  CHECK(std::abs(u.points[2].value() - diag_projective(2, 0.5, x1)) < 1e-12);
  CHECK(std::abs(u.points[2].value() - 0.0198685) < 1e-7);
}

TEST_CASE("reversed and inverse orbits") {
  const IfsWithProbabilities proj({Homeomorphism::projective(1, 2, -0.5, 3)}, {1.0});
  const SymbolStream w1(2, 0, proj.probs());
  const auto f = forward_orbit(proj, 0.3, w1, 15);
  const auto r = reversed_orbit(proj, 0.3, w1, 15);
  for (std::size_t i = 0; i < f.points.size(); ++i) CHECK(dist(f.points[i], r.points[i]).value() < 1e-12);

  const IfsWithProbabilities rots({Homeomorphism::rotation(0.1), Homeomorphism::rotation(0.37)}, {0.5, 0.5});
  const SymbolStream w2(9, 1, rots.probs());
  CHECK(dist(forward_point(rots, 0.2, w2, 50), reversed_point(rots, 0.2, w2, 50)).value() < 1e-12);

  const auto S = mobius_pair();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SymbolStream w(5, s, S.probs());
    const CirclePoint z = forward_point(S, 0.3, w, 20);
    CHECK(dist(inverse_reversed_point(S, z, w, 20), 0.3).value() < 1e-8);
    const CirclePoint zr = reversed_point(S, 0.3, w, 20);
    CHECK(dist(inverse_forward_point(S, zr, w, 20), 0.3).value() < 1e-8);
    // unrolled composition: Zhat^-_n(x, w) = f_{w1}^-1(Zhat^-_{n-1}(x, shift w))
    const CirclePoint lhs = inverse_reversed_point(S, 0.3, w, 20);
    const CirclePoint rhs = S.map(w.symbol(1)).evaluate_inverse(inverse_reversed_point(S, 0.3, w.shift(), 19));
    CHECK(dist(lhs, rhs).value() < 1e-9);
  }

  // trajectories end where the endpoint functions do
  const SymbolStream w(3, 0, S.probs());
  CHECK(forward_orbit(S, 0.1, w, 30).points.back().value() == forward_point(S, 0.1, w, 30).value());
  CHECK(reversed_orbit(S, 0.1, w, 30).points.back().value() == reversed_point(S, 0.1, w, 30).value());
  CHECK(inverse_forward_orbit(S, 0.1, w, 30).points.back().value() ==
        inverse_forward_point(S, 0.1, w, 30).value());
  CHECK(inverse_reversed_orbit(S, 0.1, w, 30).points.back().value() ==
        inverse_reversed_point(S, 0.1, w, 30).value());

  std::vector<double> streamed;
  for_each_forward(S, 0.1, w, 30, [&](std::size_t, CirclePoint z, std::size_t) { streamed.push_back(z); });
  const auto t = forward_orbit(S, 0.1, w, 30);
  REQUIRE(streamed.size() == t.points.size());
  for (std::size_t i = 0; i < streamed.size(); ++i) CHECK(streamed[i] == t.points[i].value());
}

TEST_CASE("forward and reversed compositions have the same law") {
  const auto S = mobius_pair();
  std::vector<double> fwd, rev;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const SymbolStream w(77, s, S.probs());
    fwd.push_back(forward_point(S, 0.3, w, 10));
    rev.push_back(reversed_point(S, 0.3, w, 10));
  }
  CHECK(ks(fwd, rev) < 0.05);
}

TEST_CASE("interval image length") {
  const IfsWithProbabilities rots({Homeomorphism::rotation(0.1), Homeomorphism::rotation(0.37)}, {0.5, 0.5});
  const SymbolStream w(1, 0, rots.probs());
  for (double y : {0.0, 0.1, 0.45, 0.8}) CHECK(std::abs(interval_image_length(rots, y, w, 100) - y) < 1e-12);

  const auto S = mobius_pair();
  for (std::uint64_t s = 0; s < 10; ++s) {
    const SymbolStream ws(4, s, S.probs());
    const double len = interval_image_length(S, 0.5, ws, 200);
    CHECK((len < 1e-3 || len > 1 - 1e-3));
    // oracle: the endpoint images have merged
    CHECK(dist(forward_point(S, 0.0, ws, 200), forward_point(S, 0.5, ws, 200)).value() < 1e-3);
    CHECK(interval_image_length(S, 0.0, ws, 200) == 0.0);
  }
  // short horizon: length follows the endpoint images
  const SymbolStream ws(4, 0, S.probs());
  const double expected = ccw_length(forward_point(S, 0.0, ws, 3), forward_point(S, 0.2, ws, 3));
  CHECK(std::abs(interval_image_length(S, 0.2, ws, 3) - expected) < 1e-12);
}

TEST_CASE("minimality certificate") {
  const IfsWithProbabilities third({Homeomorphism::rotation(1.0 / 3.0)}, {1.0});
  CHECK_FALSE(minimality_certificate(third, 768).forward);
  const IfsWithProbabilities irr({Homeomorphism::rotation(std::sqrt(2.0) - 1.0)}, {1.0});
  const auto c = minimality_certificate(irr, 1024);
  CHECK(c.forward);
  CHECK(c.backward);
  const auto m = minimality_certificate(mobius_pair(), 1024);
  CHECK(m.forward);
  CHECK(m.backward);
  CHECK(m.grid_size == 1024);
  const IfsWithProbabilities proj({Homeomorphism::projective(2, 0, 0, 0.5)}, {1.0});
  CHECK_FALSE(minimality_certificate(proj, 256).forward);  // fixed points
  CHECK_THROWS_AS(minimality_certificate(irr, 8), std::invalid_argument);
}
