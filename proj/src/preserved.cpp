#include "circlesync/preserved.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "circlesync/errors.hpp"
#include "circlesync/kernels.hpp"

namespace circlesync {

double default_preservation_tol(const Metric& metric) { return metric.is_euclidean() ? 1e-4 : 1e-3; }

Metric rho_metric(const GridMeasure& mu) {
  const SupportAudit audit = support_and_atom_audit(mu);
  if (audit.atomic() || !audit.full_support()) {
    std::ostringstream msg;
    msg << "measure fails the audit (max cell mass " << audit.max_cell_mass << ", min window mass "
        << audit.min_window_mass << ")";
    throw MetricDegenerate(msg.str());
  }
  try {
    return Metric::rho_of(mu.to_cdf_map());
  } catch (const std::invalid_argument& e) {
    throw MetricDegenerate(e.what());
  }
}

double preservation_defect(const IfsWithProbabilities& ifs, const Metric& metric, double s,
                           std::size_t x_samples) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x_samples; ++i) {
    const CirclePoint x(static_cast<double>(i) / static_cast<double>(x_samples));
    const CirclePoint y = metric.point_at(x, s);
    for (const auto& f : ifs.maps()) {
      worst = std::max(worst, std::abs(metric.distance(f(x), f(y)) - s));
    }
  }
  return worst;
}

PreservedDistanceReport estimate_L(const IfsWithProbabilities& ifs, const Metric& metric,
                                   const PreservedDistanceOptions& options) {
  if (options.s_grid < 256) throw std::invalid_argument("estimate_L needs s_grid >= 256");
  PreservedDistanceReport report;
  report.metric_tag = metric.tag();
  report.tol_used = options.tol;
  const std::size_t m = options.s_grid;
  const double step = 0.5 / static_cast<double>(m);
  report.s_values.resize(m + 1);
  report.defects.resize(m + 1);
  for (std::size_t i = 0; i <= m; ++i) report.s_values[i] = static_cast<double>(i) * step;
  kernels::parallel_for(kernels::default_backend(), m + 1, [&](std::size_t i) {
    report.defects[i] = preservation_defect(ifs, metric, report.s_values[i], options.x_samples);
  });

  std::vector<double> low;
  for (std::size_t i = 0; i <= m; ++i) {
    if (report.defects[i] < options.tol) low.push_back(report.s_values[i]);
  }
  if (static_cast<double>(low.size()) >= 0.99 * static_cast<double>(m + 1)) {
    report.oplus_closed = true;
    return report;
  }

  auto defect_at = [&](double s) { return preservation_defect(ifs, metric, s, options.x_samples); };
  // 1/k' preserved forces k' | k, so the largest k whose members all pass is
  // the answer; members off the s grid (1/3, 1/5, ...) are evaluated exactly.
  for (int k = options.k_max; k >= 1; --k) {
    std::vector<double> members;
    for (int i = 0; i <= k / 2; ++i) members.push_back(static_cast<double>(i) / k);
    bool members_low = std::all_of(members.begin(), members.end(),
                                   [&](double s) { return defect_at(s) < options.tol; });
    if (!members_low) continue;
    bool covers = std::all_of(low.begin(), low.end(), [&](double s) {
      return std::any_of(members.begin(), members.end(),
                         [&](double t) { return std::abs(s - t) <= 2.0 * step; });
    });
    if (!covers) break;
    report.k = k;
    report.fitted_set = members;
    bool closed = true;
    for (double a : members) {
      for (double b : members) {
        if (defect_at(dist_add(CircleDistance(a), CircleDistance(b)).value()) >= options.tol) {
          closed = false;
        }
      }
    }
    report.oplus_closed = closed;
    return report;
  }

  std::ostringstream msg;
  msg << "low-defect distances fit no k <= " << options.k_max << ":";
  for (std::size_t i = 0; i < low.size() && i < 16; ++i) msg << ' ' << low[i];
  throw StructureMismatch(msg.str());
}

IfsWithProbabilities factor_ifs(const IfsWithProbabilities& ifs, int k, double tol) {
  if (k < 1) throw std::invalid_argument("factor order must be positive");
  if (k == 1) return ifs;
  const Metric d = Metric::euclidean();
  const double defect = preservation_defect(ifs, d, 1.0 / k);
  if (defect >= tol) {
    std::ostringstream msg;
    msg << "distance 1/" << k << " is not preserved (defect " << defect << ")";
    throw NotEquivariant(msg.str());
  }
  std::vector<Homeomorphism> maps;
  for (const auto& f : ifs.maps()) maps.push_back(Homeomorphism::kfactor(f, k));
  IfsWithProbabilities factor(maps, std::vector<double>(ifs.probs().begin(), ifs.probs().end()));

  constexpr std::size_t kChecks = 1000;
  for (std::size_t i = 0; i < kChecks; ++i) {
    const CirclePoint x((static_cast<double>(i) + 0.5) / kChecks);
    const CirclePoint px(k * x.value());
    for (std::size_t j = 0; j < ifs.size(); ++j) {
      const CirclePoint lhs(k * ifs.map(j)(x).value());
      const CirclePoint rhs = factor.map(j)(px);
      if (dist(lhs, rhs).value() >= 1e-8) {
        std::ostringstream msg;
        msg << "semiconjugacy fails at x = " << x.value() << " for map " << j;
        throw NotEquivariant(msg.str());
      }
    }
  }
  return factor;
}

}  // namespace circlesync
