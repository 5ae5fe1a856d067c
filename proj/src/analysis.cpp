#include "circlesync/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>

#include "circlesync/errors.hpp"
#include "circlesync/kernels.hpp"

namespace circlesync {

namespace {

// Stream tags keep auxiliary randomness (pair draws, sampler draws) disjoint
// from the symbol streams of the same seed.
constexpr std::uint64_t kPairTag = 0x70616972735f5f31ULL;
constexpr std::uint64_t kSamplerTag = 0x73616d706c65725fULL;

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

struct Cluster {
  CirclePoint center;
  std::size_t count = 0;
};

// Points closer than tol along the circle belong to the same cluster.
std::vector<Cluster> cluster_circular(std::vector<CirclePoint> points, double tol) {
  std::vector<Cluster> out;
  if (points.empty()) return out;
  std::sort(points.begin(), points.end(),
            [](CirclePoint a, CirclePoint b) { return a.value() < b.value(); });
  const std::size_t n = points.size();
  auto gap_after = [&](std::size_t i) { return ccw_length(points[i], points[(i + 1) % n]); };

  std::size_t start = 0;
  bool split = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (gap_after(i) > tol) {
      start = (i + 1) % n;
      split = true;
      break;
    }
  }
  if (!split || n == 1) {
    double offset = 0.0;
    for (const auto& p : points) offset += dist(points[0], p).value() *
                                           (ccw_length(points[0], p) <= 0.5 ? 1.0 : -1.0);
    out.push_back({rotate(points[0], offset / static_cast<double>(n)), n});
    return out;
  }

  CirclePoint first = points[start];
  double offsets = 0.0;
  std::size_t count = 0;
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t i = (start + step) % n;
    if (step > 0 && gap_after((i + n - 1) % n) > tol) {
      out.push_back({rotate(first, offsets / static_cast<double>(count)), count});
      first = points[i];
      offsets = 0.0;
      count = 0;
    }
    offsets += ccw_length(first, points[i]);
    ++count;
  }
  out.push_back({rotate(first, offsets / static_cast<double>(count)), count});
  return out;
}

double max_error_over_samples(std::size_t samples, const std::function<double(CirclePoint)>& err) {
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    worst = std::max(worst, err(CirclePoint((static_cast<double>(i) + 0.5) / samples)));
  }
  return worst;
}

SynchronizationReport run_sync(const IfsWithProbabilities& ifs, const Metric& metric,
                               const std::vector<std::pair<CirclePoint, CirclePoint>>& pairs,
                               std::size_t pairs_per_seed, std::size_t n, std::size_t seeds,
                               const std::vector<double>& L_values, double cluster_tol,
                               std::uint64_t seed) {
  SynchronizationReport report;
  report.n_used = n;
  report.seeds_used = seeds;
  report.pairs_per_seed = pairs_per_seed;
  report.L_values = L_values;

  const auto paths = kernels::distance_paths(ifs, metric, seed, pairs, n, kernels::default_backend(),
                                             pairs_per_seed);
  const std::size_t replicas = pairs.size();
  report.limit_samples.resize(replicas);
  for (std::size_t r = 0; r < replicas; ++r) report.limit_samples[r] = paths[r * (n + 1) + n];
  report.supermartingale = supermartingale_check(paths, replicas, n);
  if (!report.supermartingale.ok) {
    report.warnings.push_back("mean distance increased by " +
                              fmt(report.supermartingale.worst_z) + " standard errors at step " +
                              std::to_string(report.supermartingale.worst_step));
  }

  const auto audit = nonexpansive_audit(ifs, metric, 2000, seed);
  if (audit.max_defect > 1e-2) {
    report.warnings.push_back("metric is not non-expansive on average (defect " +
                              fmt(audit.max_defect) + ")");
  }

  if (!L_values.empty()) {
    report.assignment.assign(L_values.size(), 0.0);
    std::size_t unassigned = 0;
    for (double s : report.limit_samples) {
      std::size_t best = 0;
      double best_gap = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < L_values.size(); ++i) {
        const double gap = std::abs(s - L_values[i]);
        if (gap < best_gap) {
          best_gap = gap;
          best = i;
        }
      }
      if (best_gap <= cluster_tol) {
        report.assignment[best] += 1.0;
      } else {
        ++unassigned;
      }
    }
    for (double& a : report.assignment) a /= static_cast<double>(replicas);
    report.unassigned = static_cast<double>(unassigned) / static_cast<double>(replicas);
  }
  return report;
}

}  // namespace

ConjugatedSystem conjugate_system(const IfsWithProbabilities& ifs, const AnalysisConfig& config) {
  std::vector<std::string> warnings;
  const MinimalityCertificate cert = minimality_certificate(ifs, config.minimality_grid);
  if (!cert.forward) warnings.push_back("forward minimality certificate failed");
  if (!cert.backward) warnings.push_back("backward minimality certificate failed");

  const auto solved =
      invariant_measure(ifs.inverse(), config.grid_size, config.solver_tol, config.solver_max_iter);
  const SupportAudit audit = support_and_atom_audit(solved.measure);
  if (audit.atomic() || !audit.full_support()) {
    throw DegenerateConjugation("stationary measure of the inverse system is " +
                                std::string(audit.atomic() ? "atomic" : "not fully supported"));
  }
  std::optional<CdfMap> phi;
  try {
    phi = solved.measure.to_cdf_map();
  } catch (const std::invalid_argument& e) {
    throw DegenerateConjugation(e.what());
  }

  std::vector<Homeomorphism> maps;
  for (const auto& f : ifs.maps()) {
    maps.push_back(Homeomorphism::cdf_conjugate(*phi, f, ConjugateDirection::forward));
  }
  IfsWithProbabilities conjugated(std::move(maps),
                                  std::vector<double>(ifs.probs().begin(), ifs.probs().end()));
  return ConjugatedSystem{ifs,
                          solved.measure,
                          *phi,
                          Metric::rho_of(*phi),
                          std::move(conjugated),
                          cert,
                          solved.iterations,
                          solved.residual,
                          std::move(warnings)};
}

std::vector<std::pair<CirclePoint, CirclePoint>> random_pairs(std::uint64_t seed, std::size_t count) {
  SplitMix64 rng{stream_state(seed ^ kPairTag, 0)};
  std::vector<std::pair<CirclePoint, CirclePoint>> pairs(count);
  for (auto& p : pairs) {
    const double x = rng.next_unit();
    const double y = rng.next_unit();
    p = {CirclePoint(x), CirclePoint(y)};
  }
  return pairs;
}

NonexpansiveAudit nonexpansive_audit(const IfsWithProbabilities& ifs, const Metric& metric,
                                     std::size_t pair_samples, std::uint64_t seed) {
  const auto pairs = random_pairs(seed, pair_samples);
  std::vector<double> defect(pairs.size(), 0.0);
  std::vector<double> ratio(pairs.size(), -1.0);
  kernels::parallel_for(kernels::default_backend(), pairs.size(), [&](std::size_t i) {
    const auto [x, y] = pairs[i];
    double after = 0.0;
    for (std::size_t j = 0; j < ifs.size(); ++j) {
      after += ifs.probs()[j] * metric.distance(ifs.map(j)(x), ifs.map(j)(y));
    }
    const double before = metric.distance(x, y);
    defect[i] = after - before;
    if (before > 1e-12) ratio[i] = after / before;
  });
  NonexpansiveAudit audit;
  audit.pairs = pairs.size();
  audit.max_defect = pairs.empty() ? 0.0 : *std::max_element(defect.begin(), defect.end());
  double sum = 0.0;
  std::size_t used = 0;
  for (double r : ratio) {
    if (r >= 0.0) {
      sum += r;
      ++used;
    }
  }
  audit.mean_ratio = used ? sum / static_cast<double>(used) : 0.0;
  return audit;
}

SupermartingaleCheck supermartingale_check(const std::vector<double>& paths, std::size_t replicas,
                                           std::size_t steps) {
  if (replicas < 2) throw std::invalid_argument("supermartingale check needs at least 2 replicas");
  if (paths.size() != replicas * (steps + 1)) throw std::invalid_argument("path table has wrong size");
  const std::size_t width = steps + 1;
  const double R = static_cast<double>(replicas);
  SupermartingaleCheck check;
  check.mean_path.assign(width, 0.0);
  check.standard_errors.assign(width, 0.0);
  for (std::size_t m = 0; m <= steps; ++m) {
    double s = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) s += paths[r * width + m];
    const double mean = s / R;
    double var = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
      const double d = paths[r * width + m] - mean;
      var += d * d;
    }
    check.mean_path[m] = mean;
    check.standard_errors[m] = std::sqrt(var / (R - 1.0) / R);
  }

  auto zscore = [](double rise, double se) {
    if (se > 0.0) return rise / se;
    return rise > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  check.worst_z = steps ? -std::numeric_limits<double>::infinity() : 0.0;
  check.worst_paired_z = check.worst_z;
  for (std::size_t m = 0; m < steps; ++m) {
    const double rise = check.mean_path[m + 1] - check.mean_path[m];
    const double se = std::max(check.standard_errors[m], check.standard_errors[m + 1]);
    if (rise > 2.0 * se + 1e-12) check.ok = false;
    const double z = zscore(rise, se);
    if (z > check.worst_z) {
      check.worst_z = z;
      check.worst_step = m;
    }
    double var = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
      const double d = paths[r * width + m + 1] - paths[r * width + m] - rise;
      var += d * d;
    }
    check.worst_paired_z = std::max(check.worst_paired_z, zscore(rise, std::sqrt(var / (R - 1.0) / R)));
  }
  return check;
}

SynchronizationReport sync_experiment(const IfsWithProbabilities& ifs, const Metric& metric,
                                      std::size_t n, std::size_t seeds, std::size_t pairs,
                                      const std::vector<double>& L_values, double cluster_tol,
                                      std::uint64_t seed) {
  if (seeds * pairs < 2) throw std::invalid_argument("sync experiment needs at least 2 replicas");
  return run_sync(ifs, metric, random_pairs(seed, seeds * pairs), pairs, n, seeds, L_values,
                  cluster_tol, seed);
}

SynchronizationReport sync_experiment_fixed_pair(const IfsWithProbabilities& ifs,
                                                 const Metric& metric, CirclePoint x, CirclePoint y,
                                                 std::size_t n, std::size_t seeds,
                                                 const std::vector<double>& L_values,
                                                 double cluster_tol, std::uint64_t seed) {
  if (seeds < 2) throw std::invalid_argument("sync experiment needs at least 2 seeds");
  std::vector<std::pair<CirclePoint, CirclePoint>> pairs(seeds, {x, y});
  return run_sync(ifs, metric, pairs, 1, n, seeds, L_values, cluster_tol, seed);
}

std::string to_string(TrichotomyLabel label) {
  switch (label) {
    case TrichotomyLabel::synchronization: return "synchronization";
    case TrichotomyLabel::factorization: return "factorization";
    case TrichotomyLabel::invariance: return "invariance";
  }
  return "unknown";
}

TrichotomyResult classify_trichotomy(const IfsWithProbabilities& ifs, const AnalysisConfig& config) {
  const ConjugatedSystem sys = conjugate_system(ifs, config);
  TrichotomyResult result;
  result.certificate = sys.certificate;
  result.solver_iterations = sys.solver_iterations;
  result.warnings = sys.warnings;

  try {
    result.preserved = estimate_L(sys.conjugated, Metric::euclidean(), config.preserved);
  } catch (const StructureMismatch& e) {
    throw Inconclusive(std::string("preserved distances: ") + e.what());
  }
  if (!result.preserved.oplus_closed) result.warnings.push_back("fitted L is not closed under oplus");

  constexpr double kCheckTol = 1e-6;
  constexpr std::size_t kCheckPoints = 1000;

  if (result.preserved.all_distances()) {
    result.label = TrichotomyLabel::invariance;
    result.k = 0;
    // (Phi^-1)_* Leb has distribution function Phi: Leb(Phi[0, y]) = Phi(y).
    std::vector<double> knots(sys.phi_minus.knots().begin(), sys.phi_minus.knots().end());
    GridMeasure common(std::move(knots));
    for (const auto& f : ifs.maps()) {
      result.common_measure_residual =
          std::max(result.common_measure_residual, wasserstein(pushforward(common, f), common));
    }
    if (result.common_measure_residual > config.invariance_tol) {
      throw Inconclusive("no common invariant measure (residual " +
                         fmt(result.common_measure_residual) + ")");
    }
    result.common_measure = std::move(common);
    result.sync = sync_experiment(ifs, sys.rho, config.horizon, config.sync_seeds, config.sync_pairs,
                                  {}, config.cluster_tol, config.seed);
    return result;
  }

  const int k = *result.preserved.k;
  result.k = k;
  if (k == 1) {
    result.label = TrichotomyLabel::synchronization;
  } else {
    result.label = TrichotomyLabel::factorization;
    const Homeomorphism psi = Homeomorphism::cdf_conjugate(
        sys.phi_minus, Homeomorphism::rotation(1.0 / k), ConjugateDirection::inverse);
    const Homeomorphism psi_inv = psi.inverse();

    result.psi_order_error = max_error_over_samples(kCheckPoints, [&](CirclePoint x) {
      CirclePoint y = x;
      for (int i = 0; i < k; ++i) y = psi(y);
      return dist(x, y).value();
    });
    // A reversing map conjugates R_{1/k} to R_{-1/k}, so it intertwines psi
    // with psi^-1 (the same map when k = 2).
    result.psi_commutation_error = max_error_over_samples(kCheckPoints, [&](CirclePoint x) {
      double worst = 0.0;
      for (const auto& f : ifs.maps()) {
        const Homeomorphism& target = f.orientation() > 0 ? psi : psi_inv;
        worst = std::max(worst, dist(f(psi(x)), target(f(x))).value());
      }
      return worst;
    });

    IfsWithProbabilities factor = [&] {
      try {
        return factor_ifs(sys.conjugated, k, config.preserved.tol);
      } catch (const NotEquivariant& e) {
        throw Inconclusive(std::string("factor system: ") + e.what());
      }
    }();
    // pi o Phi semiconjugates F to the factor system.
    result.factor_map_error = max_error_over_samples(kCheckPoints, [&](CirclePoint x) {
      const auto pi_phi = [&](CirclePoint z) { return CirclePoint(k * sys.phi_minus.evaluate(z).value()); };
      double worst = 0.0;
      for (std::size_t j = 0; j < ifs.size(); ++j) {
        worst = std::max(worst, dist(pi_phi(ifs.map(j)(x)), factor.map(j)(pi_phi(x))).value());
      }
      return worst;
    });
    try {
      result.factor_preserved = estimate_L(factor, Metric::euclidean(), config.preserved);
    } catch (const StructureMismatch& e) {
      throw Inconclusive(std::string("factor system: ") + e.what());
    }
    if (result.psi_order_error > kCheckTol || result.psi_commutation_error > kCheckTol ||
        result.factor_map_error > kCheckTol) {
      throw Inconclusive("order-" + std::to_string(k) + " symmetry checks failed (order " +
                         fmt(result.psi_order_error) + ", commutation " +
                         fmt(result.psi_commutation_error) + ", factor map " +
                         fmt(result.factor_map_error) + ")");
    }
    if (result.factor_preserved->all_distances() || *result.factor_preserved->k != 1) {
      throw Inconclusive("factor system does not synchronize");
    }
    result.psi = psi;
  }
  result.sync = sync_experiment(ifs, sys.rho, config.horizon, config.sync_seeds, config.sync_pairs,
                                result.preserved.fitted_set, config.cluster_tol, config.seed);
  return result;
}

namespace {

constexpr std::size_t kScanPoints = 1024;
constexpr int kBisections = 60;

double period_sup(const IfsWithProbabilities& ifs, const SymbolStream& omega, std::size_t n, int k,
                  int period, double contraction_tol) {
  const double width = 1.0 / k;
  const CirclePoint base(period * width);
  auto length = [&](double y) { return arc_image_length(ifs, base, y, omega, n); };
  auto contracts = [&](double y) { return length(y) < contraction_tol; };

  std::vector<double> lengths(kScanPoints);
  kernels::parallel_for(kernels::default_backend(), kScanPoints - 1, [&](std::size_t i) {
    lengths[i + 1] = length(width * static_cast<double>(i + 1) / kScanPoints);
  });
  std::size_t last = 0;
  for (std::size_t i = 1; i < kScanPoints; ++i) {
    if (lengths[i] < contraction_tol) last = i;
  }
  const bool first_expanded = lengths[1] > width * (1.0 - 1e-3);
  if (last == 0 && !first_expanded) {
    throw NoContraction("no arc from " + fmt(base.value()) + " contracts below " +
                        fmt(contraction_tol) + " within n = " + std::to_string(n));
  }
  double lo = width * static_cast<double>(last) / kScanPoints;
  double hi = width * static_cast<double>(last + 1) / kScanPoints;
  for (int it = 0; it < kBisections; ++it) {
    const double mid = 0.5 * (lo + hi);
    (contracts(mid) ? lo : hi) = mid;
  }
  return base.value() + lo;
}

}  // namespace

HatZMinusEstimate estimate_hatZ_minus(const IfsWithProbabilities& ifs, const SymbolStream& omega,
                                      std::size_t n, int k, double contraction_tol) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  HatZMinusEstimate est;
  est.n_used = n;
  for (int p = 0; p < k; ++p) est.atoms.emplace_back(period_sup(ifs, omega, n, k, p, contraction_tol));
  est.value = CirclePoint(k * est.atoms[0].value());
  return est;
}

HatZMinusEstimate estimate_hatZ_minus_adaptive(const IfsWithProbabilities& ifs,
                                               const SymbolStream& omega, int k,
                                               const AnalysisConfig& config) {
  std::size_t n = config.horizon;
  HatZMinusEstimate est = estimate_hatZ_minus(ifs, omega, n, k, config.contraction_tol);
  while (2 * n <= config.max_horizon) {
    n *= 2;
    HatZMinusEstimate next = estimate_hatZ_minus(ifs, omega, n, k, config.contraction_tol);
    const bool stable = dist(next.value, est.value).value() < config.cluster_tol;
    est = std::move(next);
    if (stable) break;
  }
  return est;
}

FiberMeasure fiber_measure(const IfsWithProbabilities& ifs, const SymbolStream& omega,
                           const GridMeasure& m, int k, std::size_t samples, std::size_t n,
                           const AnalysisConfig& config) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (samples == 0) throw std::invalid_argument("fiber measure needs samples");
  const SupportAudit audit = support_and_atom_audit(m);
  if (audit.atomic() || !audit.full_support()) {
    throw InvalidSampler("sampler measure is atomic or not fully supported");
  }
  if (k >= 2) {
    const double defect = s_invariance_defect(m, 1.0 / k);
    if (defect > config.invariance_tol) {
      throw InvalidSampler("sampler measure is not 1/" + std::to_string(k) + "-invariant (defect " +
                           fmt(defect) + ")");
    }
  }

  SplitMix64 rng{stream_state(omega.seed() ^ kSamplerTag, omega.stream_id()) ^
                 SplitMix64::mix(omega.offset())};
  std::vector<CirclePoint> starts(samples);
  for (auto& x : starts) x = m.quantile(rng.next_unit());
  const auto ends = kernels::inverse_reversed_endpoints(ifs, omega, starts, n, kernels::default_backend());

  auto clusters = cluster_circular(ends, config.cluster_tol);
  if (clusters.size() != static_cast<std::size_t>(k)) {
    throw ClusterCountMismatch("expected " + std::to_string(k) + " clusters, found " +
                               std::to_string(clusters.size()));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.center.value() < b.center.value(); });
  if (k >= 2) {
    for (int i = 0; i < k; ++i) {
      const double gap = ccw_length(clusters[i].center, clusters[(i + 1) % k].center);
      if (std::abs(gap - 1.0 / k) > config.cluster_tol) {
        throw ClusterCountMismatch("clusters are not spaced 1/" + std::to_string(k) + " apart (gap " +
                                   fmt(gap) + ")");
      }
    }
  }

  FiberMeasure fiber;
  fiber.seed = omega.seed();
  fiber.stream_id = omega.stream_id();
  fiber.offset = omega.offset();
  fiber.samples = samples;
  fiber.n_used = n;
  const double p = 1.0 / k;
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  fiber.weights_ok = true;
  for (const auto& c : clusters) {
    const double w = static_cast<double>(c.count) / static_cast<double>(samples);
    if (std::abs(w - p) > 3.0 * sigma + 1e-15) fiber.weights_ok = false;
    fiber.atoms.emplace_back(c.center, w);
  }
  fiber.hatZ_minus = CirclePoint(k * clusters[0].center.value());
  return fiber;
}

double fiber_equivariance_error(const IfsWithProbabilities& ifs, const SymbolStream& omega,
                                const GridMeasure& m, int k, std::size_t samples, std::size_t n,
                                const AnalysisConfig& config) {
  const FiberMeasure here = fiber_measure(ifs, omega, m, k, samples, n, config);
  const FiberMeasure shifted = fiber_measure(ifs, omega.shift(1), m, k, samples, n, config);
  const Homeomorphism& f = ifs.map(omega.symbol(1));
  double worst = 0.0;
  for (const auto& [a, w] : shifted.atoms) {
    const CirclePoint image = f.evaluate_inverse(a);
    double nearest = 1.0;
    for (const auto& [b, v] : here.atoms) nearest = std::min(nearest, dist(image, b).value());
    worst = std::max(worst, nearest);
  }
  return worst;
}

FiberAverage mu_minus_from_fibers(const IfsWithProbabilities& ifs, const GridMeasure& m, int k,
                                  std::size_t seeds, const AnalysisConfig& config) {
  if (seeds == 0) throw std::invalid_argument("fiber average needs seeds");
  std::vector<FiberMeasure> fibers;
  std::vector<std::string> failures;
  std::exception_ptr last_error;
  for (std::size_t s = 0; s < seeds; ++s) {
    const SymbolStream omega(config.seed, s, ifs.probs());
    try {
      fibers.push_back(fiber_measure(ifs, omega, m, k, config.mu_minus_samples, config.horizon, config));
    } catch (const AnalysisError& e) {
      failures.push_back("stream " + std::to_string(s) + ": " + e.name() + ": " + e.what());
      last_error = std::current_exception();
    }
  }
  if (static_cast<double>(fibers.size()) < 0.9 * static_cast<double>(seeds)) {
    std::rethrow_exception(last_error);
  }

  std::vector<std::pair<CirclePoint, double>> atoms;
  double total = 0.0;
  for (const auto& f : fibers) {
    for (const auto& [x, w] : f.atoms) {
      atoms.emplace_back(x, w);
      total += w;
    }
  }
  for (auto& a : atoms) a.second /= total;
  GridMeasure measure = EmpiricalMeasure(std::move(atoms)).binned(config.grid_size);
  // Too few fibers to average, or some streams had to be dropped.
  const bool low = fibers.size() < 10 || !failures.empty();
  return FiberAverage{std::move(measure), std::move(fibers), std::move(failures), seeds, low};
}

}  // namespace circlesync
