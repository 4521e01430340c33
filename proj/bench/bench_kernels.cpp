// Timing comparison of the serial reference kernels against the OpenMP
// variants. Not a correctness test (tests/test_kernels.cpp asserts the two
// modes agree bit-for-bit); run it manually: ./bench_kernels [--quick]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>

#include "synctl/kernels.hpp"
#include "synctl/stabilizer.hpp"

using namespace synctl;

namespace {

double time_once(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(const char* name, double serial_s, double parallel_s) {
  std::printf("%-28s serial %8.3f s   parallel %8.3f s   speedup %.2fx\n", name, serial_s,
              parallel_s, serial_s / parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  const PotentialConfig cfg(UnitVector{0.0, 0.0, 1.0}, 1.0, -0.5, 0.1);
  std::printf("threads available: %d\n", max_threads(Exec::parallel));

  {
    const long long n = quick ? 200'000 : 2'000'000;
    double s = 0.0, p = 0.0;
    s = time_once([&] { kernels::run_property_suite(cfg, n, 0, Exec::serial); });
    p = time_once([&] { kernels::run_property_suite(cfg, n, 0, Exec::parallel); });
    report("property suite", s, p);
  }
  {
    const auto grid = kernels::fibonacci_cap(cfg.r, cfg.gamma, quick ? 200'000 : 2'000'000);
    double s = time_once([&] { kernels::min_sticky_gap(cfg, grid, Exec::serial); });
    double p = time_once([&] { kernels::min_sticky_gap(cfg, grid, Exec::parallel); });
    report("sticky-gap grid min", s, p);
  }
  {
    const int nx = quick ? 4000 : 20000;
    double s = time_once([&] { kernels::max_potential_on_flow_set(cfg, nx, 200, 50, 0, Exec::serial); });
    double p = time_once([&] { kernels::max_potential_on_flow_set(cfg, nx, 200, 50, 0, Exec::parallel); });
    report("flow-set max of V", s, p);
  }
  {
    SolverConfig solver;
    solver.max_time = quick ? 5.0 : 20.0;
    solver.record_stride = 100;
    std::vector<std::pair<UnitVector, UnitVector>> ics;
    const auto xs = kernels::random_sphere(3, 8, 1);
    const auto ys = kernels::random_cap(cfg.r, cfg.gamma, 8, 2);
    for (int i = 0; i < 8; ++i) ics.emplace_back(xs[i], ys[i]);
    double s = time_once([&] { simulate_batch(cfg, ics, solver, Exec::serial); });
    double p = time_once([&] { simulate_batch(cfg, ics, solver, Exec::parallel); });
    report("8-solution batch sweep", s, p);
  }
  return 0;
}
