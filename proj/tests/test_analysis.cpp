#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "circlesync/analysis.hpp"
#include "circlesync/errors.hpp"

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

// mu_- of S, shared by the fiber tests
const GridMeasure& mu_minus_S() {
  static const GridMeasure m = invariant_measure(mobius_pair().inverse()).measure;
  return m;
}

}  // namespace

TEST_CASE("conjugation of rotations is trivial") {
  const auto sys = conjugate_system(two_rotations(), AnalysisConfig{});
  CHECK(wasserstein(sys.mu_minus, GridMeasure::lebesgue(sys.mu_minus.grid_size())) < 1e-9);
  for (double x : {0.0, 0.3, 0.71}) {
    CHECK(dist(sys.phi_minus.evaluate(x), x).value() < 1e-9);
    CHECK(dist(sys.conjugated.map(0)(x), two_rotations().map(0)(x)).value() < 1e-9);
  }
  CHECK(sys.certificate.forward);
  CHECK(sys.certificate.backward);
}

TEST_CASE("conjugation rejects an atomic stationary measure") {
  // a single contracting map: mu_- is a point mass
  const IfsWithProbabilities single({Homeomorphism::projective(2, 0, 0, 0.5)}, {1.0});
  CHECK_THROWS_AS(conjugate_system(single, AnalysisConfig{}), DegenerateConjugation);
}

TEST_CASE("nonexpansive audit") {
  const auto a = nonexpansive_audit(two_rotations(), Metric::euclidean(), 2000);
  CHECK(a.pairs == 2000);
  CHECK(std::abs(a.max_defect) < 1e-12);
  CHECK(std::abs(a.mean_ratio - 1.0) < 1e-9);
  CHECK(nonexpansive_audit(mobius_pair(), Metric::euclidean(), 2000).max_defect > 0.01);
}

TEST_CASE("random pairs are reproducible") {
  const auto a = random_pairs(7, 10);
  const auto b = random_pairs(7, 10);
  const auto c = random_pairs(8, 10);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(a[i].first.value() == b[i].first.value());
    CHECK(a[i].second.value() == b[i].second.value());
  }
  CHECK(a[0].first.value() != c[0].first.value());
}

TEST_CASE("supermartingale check") {
  // replicas x (steps + 1), row-major
  const std::vector<double> down{0.4, 0.3, 0.2, 0.5, 0.3, 0.1, 0.3, 0.3, 0.15};
  const auto ok = supermartingale_check(down, 3, 2);
  CHECK(ok.ok);
  REQUIRE(ok.mean_path.size() == 3);
  CHECK(std::abs(ok.mean_path[0] - 0.4) < 1e-15);
  CHECK(std::abs(ok.mean_path[2] - 0.15) < 1e-15);
  // se of {0.4, 0.5, 0.3} is sd / sqrt(3) = 0.1 / sqrt(3)
  CHECK(std::abs(ok.standard_errors[0] - 0.1 / std::sqrt(3.0)) < 1e-12);

  const std::vector<double> up{0.1, 0.4, 0.1, 0.45, 0.1, 0.5};
  const auto bad = supermartingale_check(up, 3, 1);
  CHECK_FALSE(bad.ok);
  CHECK(bad.worst_step == 0);
  CHECK_THROWS_AS(supermartingale_check(up, 1, 5), std::invalid_argument);
}

TEST_CASE("sync experiments") {
  const auto d = Metric::euclidean();
  const auto rot = sync_experiment(two_rotations(), d, 500, 20, 1, {}, 1e-3, 3);
  const auto pairs = random_pairs(3, 20);
  REQUIRE(rot.limit_samples.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(std::abs(rot.limit_samples[i] - dist(pairs[i].first, pairs[i].second).value()) < 1e-9);
  }

  const auto s = sync_experiment(mobius_pair(), d, 2000, 100, 1, {0.0}, 1e-3, 1);
  REQUIRE(s.assignment.size() == 1);
  CHECK(s.assignment[0] >= 0.95);
  CHECK(s.n_used == 2000);

  const auto k2 = sync_experiment(klift_pair(), d, 2000, 100, 1, {0.0, 0.5}, 1e-3, 1);
  CHECK(k2.assignment[0] > 0.2);
  CHECK(k2.assignment[1] > 0.2);
  CHECK(std::abs(k2.assignment[0] + k2.assignment[1] + k2.unassigned - 1.0) < 1e-12);

  const auto fixed = sync_experiment_fixed_pair(mobius_pair(), d, 0.1, 0.6, 200, 50, {0.0}, 1e-3, 1);
  CHECK(fixed.seeds_used == 50);
  CHECK(fixed.supermartingale.mean_path.size() == 201);
  CHECK(std::abs(fixed.supermartingale.mean_path[0] - 0.5) < 1e-12);
}

TEST_CASE("trichotomy on the reference systems") {
  const AnalysisConfig cfg;
  const auto r = classify_trichotomy(two_rotations(), cfg);
  CHECK(r.label == TrichotomyLabel::invariance);
  CHECK(r.k == 0);
  REQUIRE(r.common_measure.has_value());
  CHECK(wasserstein(*r.common_measure, GridMeasure::lebesgue(r.common_measure->grid_size())) < 1e-6);

  const auto s = classify_trichotomy(mobius_pair(), cfg);
  CHECK(s.label == TrichotomyLabel::synchronization);
  CHECK(s.k == 1);
  CHECK_FALSE(s.psi.has_value());

  const auto k2 = classify_trichotomy(klift_pair(), cfg);
  CHECK(k2.label == TrichotomyLabel::factorization);
  CHECK(k2.k == 2);
  REQUIRE(k2.psi.has_value());
  CHECK(k2.psi_order_error < 1e-6);
  CHECK(k2.psi_commutation_error < 1e-6);
  CHECK(k2.factor_map_error < 1e-6);
  // psi is a fixed point free involution here
  for (double x : {0.1, 0.45, 0.8}) {
    CHECK(dist((*k2.psi)((*k2.psi)(x)), x).value() < 1e-6);
    CHECK(dist((*k2.psi)(x), x).value() > 0.1);
  }
  CHECK(to_string(TrichotomyLabel::factorization) == "factorization");
}

TEST_CASE("hatZ minus by arc contraction") {
  AnalysisConfig cfg;
  const SymbolStream w0(1, 0, std::vector<double>{0.5, 0.5});
  CHECK_THROWS_AS(estimate_hatZ_minus(two_rotations(), w0, 500, 1, 1e-6), NoContraction);
  CHECK_THROWS_AS(estimate_hatZ_minus_adaptive(two_rotations(), w0, 1, cfg), NoContraction);

  // the law of hatZ^- is mu_-: compare the mass of [0, 1/2)
  const auto S = mobius_pair();
  const double p = mu_minus_S().cdf_at(0.5);
  const std::size_t seeds = 100;
  double hits = 0.0;
  for (std::size_t s = 0; s < seeds; ++s) {
    const SymbolStream w(1, s, S.probs());
    if (estimate_hatZ_minus(S, w, 2000, 1, 1e-6).value.value() < 0.5) hits += 1.0;
  }
  const double sigma = std::sqrt(p * (1 - p) / seeds);
  CHECK(std::abs(hits / seeds - p) < 4 * sigma);

  const auto K = klift_pair();
  const SymbolStream w(1, 3, K.probs());
  const auto e = estimate_hatZ_minus(K, w, 2000, 2, 1e-6);
  REQUIRE(e.atoms.size() == 2);
  CHECK(std::abs(ccw_length(e.atoms[0], e.atoms[1]) - 0.5) < 1e-3);
  CHECK(std::abs(e.value.value() - wrap01(2 * e.atoms[0].value())) < 1e-15);
}

TEST_CASE("fiber measures") {
  AnalysisConfig cfg;
  const auto S = mobius_pair();
  const SymbolStream w(1, 4, S.probs());
  const auto f = fiber_measure(S, w, mu_minus_S(), 1, 500, 2000, cfg);
  REQUIRE(f.atoms.size() == 1);
  CHECK(f.atoms[0].second == 1.0);
  CHECK(f.weights_ok);
  const auto arc = estimate_hatZ_minus(S, w, 2000, 1, 1e-6);
  CHECK(dist(f.hatZ_minus, arc.value).value() < cfg.cluster_tol);
  CHECK(fiber_equivariance_error(S, w, mu_minus_S(), 1, 200, 2000, cfg) < 1e-6);

  const auto K = klift_pair();
  const auto mK = invariant_measure(K.inverse()).measure;
  const SymbolStream wk(1, 4, K.probs());
  const auto fk = fiber_measure(K, wk, mK, 2, 1000, 2000, cfg);
  REQUIRE(fk.atoms.size() == 2);
  CHECK(std::abs(ccw_length(fk.atoms[0].first, fk.atoms[1].first) - 0.5) < cfg.cluster_tol);
  CHECK(std::abs(fk.atoms[0].second + fk.atoms[1].second - 1.0) < 1e-12);
  CHECK(fiber_equivariance_error(K, wk, mK, 2, 200, 2000, cfg) < 1e-6);

  // samplers that are atomic or not 1/2-invariant are refused
  const auto atom = EmpiricalMeasure({{0.3, 1.0}}).binned(4096);
  CHECK_THROWS_AS(fiber_measure(K, wk, atom, 2, 100, 500, cfg), InvalidSampler);
  CHECK_THROWS_AS(fiber_measure(K, wk, mu_minus_S(), 2, 100, 500, cfg), InvalidSampler);
  // asking for two clusters where the fiber is a single point
  CHECK_THROWS_AS(fiber_measure(S, w, GridMeasure::lebesgue(4096), 2, 200, 2000, cfg),
                  ClusterCountMismatch);
}

TEST_CASE("mu minus from fibers") {
  AnalysisConfig cfg;
  const auto S = mobius_pair();
  const auto one = mu_minus_from_fibers(S, mu_minus_S(), 1, 1, cfg);
  CHECK(one.low_confidence);
  CHECK(one.fibers.size() == 1);
  CHECK(one.seeds_requested == 1);

  cfg.mu_minus_samples = 400;
  const auto K = klift_pair();
  const auto mK = invariant_measure(K.inverse()).measure;
  const auto avg = mu_minus_from_fibers(K, mK, 2, 50, cfg);
  CHECK_FALSE(avg.low_confidence);
  CHECK(avg.fibers.size() == 50);
  CHECK(s_invariance_defect(avg.measure, 0.5) < 0.02);

  // rotations never contract, so every seed fails
  CHECK_THROWS_AS(mu_minus_from_fibers(two_rotations(), GridMeasure::lebesgue(4096), 1, 5, cfg),
                  ClusterCountMismatch);
}
