#include "circlesync/measure.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "circlesync/errors.hpp"
#include "circlesync/kernels.hpp"

namespace circlesync {

namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

constexpr std::size_t kCesaroWindow = 32;

}  // namespace

GridMeasure::GridMeasure(std::vector<double> cdf) : cdf_(std::move(cdf)) {
  if (!is_power_of_two(cdf_.size() - 1)) {
    throw std::invalid_argument("grid size must be a power of two >= 2");
  }
  if (cdf_.front() != 0.0) throw std::invalid_argument("cdf must start at 0");
  if (std::abs(cdf_.back() - 1.0) > 1e-9) throw std::invalid_argument("cdf must end at 1");
  cdf_.back() = 1.0;
  for (std::size_t i = 1; i < cdf_.size(); ++i) {
    if (!std::isfinite(cdf_[i]) || cdf_[i] < cdf_[i - 1] - 1e-12) {
      throw std::invalid_argument("cdf must be non-decreasing");
    }
    cdf_[i] = std::max(cdf_[i], cdf_[i - 1]);
  }
}

GridMeasure GridMeasure::lebesgue(std::size_t grid_size) {
  std::vector<double> cdf(grid_size + 1);
  for (std::size_t i = 0; i <= grid_size; ++i) cdf[i] = static_cast<double>(i) / grid_size;
  return GridMeasure(std::move(cdf));
}

double GridMeasure::cdf_at(double x) const {
  const std::size_t g = grid_size();
  const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(g);
  std::size_t i = std::min(static_cast<std::size_t>(pos), g - 1);
  return cdf_[i] + (cdf_[i + 1] - cdf_[i]) * (pos - static_cast<double>(i));
}

double GridMeasure::arc_mass(CirclePoint a, CirclePoint b) const {
  const double fa = cdf_at(a.value());
  const double fb = cdf_at(b.value());
  return b.value() >= a.value() ? fb - fa : 1.0 - fa + fb;
}

CirclePoint GridMeasure::quantile(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  auto it = std::lower_bound(cdf_.begin() + 1, cdf_.end(), u);
  std::size_t i = static_cast<std::size_t>(it - cdf_.begin()) - 1;
  i = std::min(i, grid_size() - 1);
  const double mass = cdf_[i + 1] - cdf_[i];
  const double frac = mass > 0.0 ? (u - cdf_[i]) / mass : 0.0;
  return CirclePoint((static_cast<double>(i) + std::clamp(frac, 0.0, 1.0)) / grid_size());
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<std::pair<CirclePoint, double>> atoms)
    : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw std::invalid_argument("empirical measure needs at least one atom");
  double total = 0.0;
  for (const auto& [x, w] : atoms_) {
    if (!(w > 0.0)) throw std::invalid_argument("atom weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("atom weights must sum to 1");
}

GridMeasure EmpiricalMeasure::binned(std::size_t grid_size) const {
  std::vector<double> mass(grid_size, 0.0);
  for (const auto& [x, w] : atoms_) {
    mass[std::min(static_cast<std::size_t>(x.value() * grid_size), grid_size - 1)] += w;
  }
  std::vector<double> cdf(grid_size + 1, 0.0);
  std::partial_sum(mass.begin(), mass.end(), cdf.begin() + 1);
  cdf.back() = 1.0;
  return GridMeasure(std::move(cdf));
}

double GridFunction::operator()(CirclePoint x) const {
  const std::size_t g = values.size();
  const double pos = x.value() * static_cast<double>(g);
  std::size_t i = std::min(static_cast<std::size_t>(pos), g - 1);
  return values[i] + (values[(i + 1) % g] - values[i]) * (pos - static_cast<double>(i));
}

GridMeasure pushforward(const GridMeasure& mu, const Homeomorphism& f) {
  return GridMeasure(kernels::pushforward_cdf(mu.cdf(), f, kernels::default_backend()));
}

GridMeasure transfer_apply(const IfsWithProbabilities& ifs, const GridMeasure& mu) {
  return GridMeasure(kernels::transfer_cdf(mu.cdf(), ifs, kernels::default_backend()));
}

GridFunction transfer_dual_apply(const IfsWithProbabilities& ifs, const GridFunction& h) {
  return GridFunction{kernels::transfer_dual(h.values, ifs, kernels::default_backend())};
}

double integrate(const GridFunction& h, const GridMeasure& mu) {
  if (h.grid_size() != mu.grid_size()) throw std::invalid_argument("grid sizes differ");
  const std::size_t g = mu.grid_size();
  double acc = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    acc += mu.cell_mass(i) * 0.5 * (h.values[i] + h.values[(i + 1) % g]);
  }
  return acc;
}

double wasserstein(const GridMeasure& mu, const GridMeasure& nu) {
  if (mu.grid_size() != nu.grid_size()) throw std::invalid_argument("grid sizes differ");
  const std::size_t g = mu.grid_size();
  std::vector<double> diff(g);
  for (std::size_t i = 0; i < g; ++i) diff[i] = mu.cdf()[i] - nu.cdf()[i];
  std::vector<double> sorted = diff;
  auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(g / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double shift = *mid;
  double acc = 0.0;
  for (double d : diff) acc += std::abs(d - shift);
  return acc / static_cast<double>(g);
}

InvariantMeasureResult solve_invariant_measure(const IfsWithProbabilities& ifs, std::size_t grid_size,
                                               double tol, std::size_t max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  GridMeasure mu = GridMeasure::lebesgue(grid_size);
  std::deque<GridMeasure> recent;
  double best_step = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  double step = std::numeric_limits<double>::infinity();

  for (std::size_t it = 1; it <= max_iter; ++it) {
    GridMeasure next = transfer_apply(ifs, mu);
    step = wasserstein(next, mu);
    mu = std::move(next);
    if (step < tol) return {mu, it, step, true, false};

    recent.push_back(mu);
    if (recent.size() > kCesaroWindow) recent.pop_front();
    if (step < best_step) {
      best_step = step;
      since_best = 0;
    } else if (++since_best >= kCesaroWindow && recent.size() == kCesaroWindow) {
      // Stagnating or oscillating: try the Cesaro average of the window.
      std::vector<double> avg(grid_size + 1, 0.0);
      for (const auto& m : recent) {
        for (std::size_t i = 0; i <= grid_size; ++i) avg[i] += m.cdf()[i];
      }
      for (double& v : avg) v /= static_cast<double>(kCesaroWindow);
      GridMeasure averaged(std::move(avg));
      const double residual = wasserstein(transfer_apply(ifs, averaged), averaged);
      if (residual < tol) return {averaged, it, residual, true, true};
      since_best = 0;
    }
  }
  return {mu, max_iter, step, false, false};
}

InvariantMeasureResult invariant_measure(const IfsWithProbabilities& ifs, std::size_t grid_size,
                                         double tol, std::size_t max_iter) {
  auto result = solve_invariant_measure(ifs, grid_size, tol, max_iter);
  if (!result.converged) {
    std::ostringstream msg;
    msg << "no fixed point after " << result.iterations << " iterations, last step "
        << result.residual << " >= " << tol;
    throw NonConvergence(msg.str());
  }
  return result;
}

EmpiricalMeasure empirical_measure(const IfsWithProbabilities& ifs, CirclePoint x,
                                   const SymbolStream& omega, std::size_t n) {
  if (n == 0) throw std::invalid_argument("empirical measure needs n >= 1");
  std::vector<std::pair<CirclePoint, double>> atoms;
  atoms.reserve(n);
  const double w = 1.0 / static_cast<double>(n);
  for_each_forward(ifs, x, omega, n - 1,
                   [&](std::size_t, CirclePoint z, std::size_t) { atoms.emplace_back(z, w); });
  // Renormalize away the rounding of n * (1/n).
  double total = 0.0;
  for (const auto& a : atoms) total += a.second;
  for (auto& a : atoms) a.second /= total;
  return EmpiricalMeasure(std::move(atoms));
}

double s_invariance_defect(const GridMeasure& mu, double s) {
  return wasserstein(mu, pushforward(mu, Homeomorphism::rotation(s)));
}

SupportAudit support_and_atom_audit(const GridMeasure& mu, double window) {
  const std::size_t g = mu.grid_size();
  SupportAudit audit;
  audit.window = window;
  for (std::size_t i = 0; i < g; ++i) audit.max_cell_mass = std::max(audit.max_cell_mass, mu.cell_mass(i));
  const std::size_t block = std::min<std::size_t>(16, g);
  for (std::size_t i = 0; i < g; i += block) {
    audit.coarse_max_cell_mass =
        std::max(audit.coarse_max_cell_mass, mu.cdf()[std::min(i + block, g)] - mu.cdf()[i]);
  }
  auto cells = static_cast<std::size_t>(std::llround(window * static_cast<double>(g)));
  cells = std::clamp<std::size_t>(cells, 1, g);
  double min_mass = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t j = i + cells;
    const double m = j <= g ? mu.cdf()[j] - mu.cdf()[i] : 1.0 - mu.cdf()[i] + mu.cdf()[j - g];
    min_mass = std::min(min_mass, m);
  }
  audit.min_window_mass = min_mass;
  return audit;
}

void write_csv(std::ostream& out, const GridMeasure& mu) {
  const std::size_t g = mu.grid_size();
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << "knot,cdf\n" << std::setprecision(17);
  for (std::size_t i = 0; i <= g; ++i) {
    buf << static_cast<double>(i) / g << ',' << mu.cdf()[i] << '\n';
  }
  out << buf.str();
}

GridMeasure read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "knot,cdf") {
    throw std::invalid_argument("measure csv must start with the header knot,cdf");
  }
  std::vector<double> cdf;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    row.imbue(std::locale::classic());
    double knot = 0.0;
    double value = 0.0;
    char comma = 0;
    if (!(row >> knot >> comma >> value) || comma != ',') {
      throw std::invalid_argument("malformed measure csv row: " + line);
    }
    cdf.push_back(value);
  }
  if (cdf.size() < 3) throw std::invalid_argument("measure csv has too few knots");
  return GridMeasure(std::move(cdf));
}

}  // namespace circlesync
