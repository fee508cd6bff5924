// Times the OpenMP day-fanout against the serial reference on a synthetic
// workload and checks that both produce identical trials.
#include <chrono>
#include <cstdlib>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bounce/pipeline.hpp"

using namespace bounce;
namespace chrono = std::chrono;

namespace {

double seconds_since(chrono::steady_clock::time_point t0) {
  return chrono::duration<double>(chrono::steady_clock::now() - t0).count();
}

std::size_t total_trials(const std::vector<std::vector<TrialRecord>>& per_day) {
  std::size_t n = 0;
  for (const auto& d : per_day) n += d.size();
  return n;
}

bool same_results(const std::vector<std::vector<TrialRecord>>& a,
                  const std::vector<std::vector<TrialRecord>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      const auto& x = a[i][j];
      const auto& y = b[i][j];
      if (x.level_value != y.level_value || x.kind != y.kind || x.b_prev != y.b_prev ||
          x.outcome != y.outcome || x.enter_index != y.enter_index ||
          x.exit_index != y.exit_index) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n_days = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 64;

  RunConfig cfg;
  cfg.surrogate.emplace();
  cfg.surrogate->kind = SurrogateKind::StickyLevel;
  cfg.surrogate->sticky.bounce_bias = 0.8;
  cfg.surrogate->length = 16384;
  cfg.scales = {1};
  cfg.mode = ResampleMode::EventTicks;
  cfg.trade_interval = 1.0;
  cfg.surrogate_days = n_days;
  cfg.seed = 7;

  std::cout << "generating " << n_days << " sticky days of "
            << cfg.surrogate->length << " trades...\n";
  const auto days = gen_surrogate_days(cfg);

  auto t0 = chrono::steady_clock::now();
  const auto serial = run_days_serial(days, cfg);
  const double t_serial = seconds_since(t0);

  t0 = chrono::steady_clock::now();
  const auto parallel = run_days(days, cfg);
  const double t_parallel = seconds_since(t0);

  int threads = effective_threads(cfg.threads);
  std::cout << "trials: " << total_trials(serial) << "\n"
            << "serial:   " << t_serial << " s\n"
            << "parallel: " << t_parallel << " s  (" << threads << " thread(s), "
            << t_serial / t_parallel << "x)\n";

  if (!same_results(serial, parallel)) {
    std::cerr << "MISMATCH between serial and parallel results\n";
    return 1;
  }
  std::cout << "serial and parallel results identical\n";
  return 0;
}
