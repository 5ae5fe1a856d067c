#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "circlesync/errors.hpp"
#include "circlesync/preserved.hpp"

using namespace circlesync;

namespace {

IfsWithProbabilities mobius_pair() {
  return IfsWithProbabilities({Homeomorphism::rotation(std::sqrt(2.0) - 1.0),
                               Homeomorphism::projective(2, 0, 0, 0.5)},
                              {0.5, 0.5});
}

IfsWithProbabilities klift_pair() {
  const auto S = mobius_pair();
  return IfsWithProbabilities({Homeomorphism::klift(S.map(0), 2), Homeomorphism::klift(S.map(1), 2)},
                              {0.5, 0.5});
}

IfsWithProbabilities two_rotations() {
  return IfsWithProbabilities({Homeomorphism::rotation(std::sqrt(2.0) - 1.0),
                               Homeomorphism::rotation(2.0 / (1.0 + std::sqrt(5.0)))},
                              {0.5, 0.5});
}

}  // namespace

TEST_CASE("preservation defect") {
  const auto d = Metric::euclidean();
  for (double s : {0.0, 0.1, 0.25, 0.5}) CHECK(preservation_defect(two_rotations(), d, s) < 1e-12);
  CHECK(preservation_defect(mobius_pair(), d, 0.25) > 0.05);
  CHECK(preservation_defect(klift_pair(), d, 0.5) < 1e-9);
  CHECK(preservation_defect(klift_pair(), d, 0.25) > 0.01);
  // the flip preserves every distance
  const IfsWithProbabilities flip({Homeomorphism::flip()}, {1.0});
  CHECK(preservation_defect(flip, d, 0.3) < 1e-12);
}

TEST_CASE("estimate L") {
  const auto d = Metric::euclidean();
  CHECK(estimate_L(two_rotations(), d).all_distances());

  const auto s = estimate_L(mobius_pair(), d);
  REQUIRE(s.k.has_value());
  CHECK(*s.k == 1);
  CHECK(s.fitted_set == std::vector<double>{0.0});

  const auto k2 = estimate_L(klift_pair(), d);
  REQUIRE(k2.k.has_value());
  CHECK(*k2.k == 2);
  REQUIRE(k2.fitted_set.size() == 2);
  CHECK(k2.fitted_set[1] == 0.5);
  CHECK(k2.oplus_closed);
  CHECK(k2.s_values.size() == k2.defects.size());

  // a third-lift keeps 1/3
  const auto S = mobius_pair();
  const IfsWithProbabilities k3({Homeomorphism::klift(S.map(0), 3), Homeomorphism::klift(S.map(1), 3)},
                                {0.5, 0.5});
  const auto r3 = estimate_L(k3, d);
  REQUIRE(r3.k.has_value());
  CHECK(*r3.k == 3);
}

TEST_CASE("rho metric") {
  const auto leb = GridMeasure::lebesgue(256);
  const Metric rho = rho_metric(leb);
  CHECK(std::abs(rho.distance(0.1, 0.4) - 0.3) < 1e-12);
  CHECK(std::abs(rho.distance(0.9, 0.1) - 0.2) < 1e-12);
  std::vector<double> cdf(257, 1.0);
  cdf[0] = 0.0;
  CHECK_THROWS_AS(rho_metric(GridMeasure(cdf)), MetricDegenerate);
}

TEST_CASE("factor IFS") {
  const auto S = mobius_pair();
  const auto same = factor_ifs(S, 1);
  for (double x : {0.0, 0.2, 0.77}) CHECK(same.map(1)(x).value() == S.map(1)(x).value());

  const IfsWithProbabilities rot({Homeomorphism::rotation(0.1)}, {1.0});
  const auto f3 = factor_ifs(rot, 3);
  CHECK(std::abs(f3.map(0)(0.5).value() - 0.8) < 1e-12);

  const auto back = factor_ifs(klift_pair(), 2);
  for (double x : {0.05, 0.3, 0.61, 0.9}) {
    for (std::size_t j = 0; j < 2; ++j) CHECK(dist(back.map(j)(x), S.map(j)(x)).value() < 1e-8);
  }
  CHECK_THROWS_AS(factor_ifs(S, 2), NotEquivariant);
}
