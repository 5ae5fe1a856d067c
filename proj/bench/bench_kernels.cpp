// Serial reference vs OpenMP kernels on the reference Mobius-pair system.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "circlesync/analysis.hpp"
#include "circlesync/kernels.hpp"
#include "circlesync/measure.hpp"

using namespace circlesync;
using Clock = std::chrono::steady_clock;

namespace {

double seconds(const std::function<void()>& f, int reps) {
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double>(Clock::now() - t0).count() / reps;
}

void row(const char* name, const std::function<void(kernels::Backend)>& body, int reps) {
  const double ts = seconds([&] { body(kernels::Backend::serial); }, reps);
  const double tp = seconds([&] { body(kernels::Backend::omp); }, reps);
  std::printf("%-28s serial %9.4f s   omp %9.4f s   speedup %5.2fx\n", name, ts, tp, ts / tp);
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
  const IfsWithProbabilities S({Homeomorphism::rotation(std::sqrt(2.0) - 1.0),
                                Homeomorphism::projective(2, 0, 0, 0.5)},
                               {0.5, 0.5});
  const auto lebesgue = GridMeasure::lebesgue(1 << 14);
  const auto pairs = random_pairs(1, 512);
  std::vector<CirclePoint> starts(4096);
  for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = CirclePoint(i / 4096.0);
  const SymbolStream omega(1, 0, S.probs());

  row("transfer_cdf (grid 16384)", [&](kernels::Backend b) { kernels::transfer_cdf(lebesgue.cdf(), S, b); }, reps);
  row("terminal_distances (512x2000)",
      [&](kernels::Backend b) { kernels::terminal_distances(S, Metric::euclidean(), 1, pairs, 2000, b); }, reps);
  row("inverse_endpoints (4096x2000)",
      [&](kernels::Backend b) { kernels::inverse_reversed_endpoints(S, omega, starts, 2000, b); }, reps);
  row("empirical_cdfs (8x100000)",
      [&](kernels::Backend b) {
        kernels::empirical_cdfs(S, 1, std::span(starts).first(8), 100000, 4096, b);
      },
      reps);
  return 0;
}
