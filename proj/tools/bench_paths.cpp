// Times the path-parallel pair engine against the serial reference and
// checks that both produce byte-identical summaries.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "filtstab/model.hpp"
#include "filtstab/wonham.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace filtstab;

namespace {

double run_ms(RunPairResult& out, const FiniteHmm& m, const InitialPair& init,
              const SimConfig& cfg, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  out = threads == 0 ? run_pair_serial(m, init, cfg)
                     : run_pair(m, init, cfg, 0, threads);
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  // bench_paths [n_paths] [threads] [t_max] [preset]
  const int n_paths = argc > 1 ? std::atoi(argv[1]) : 200;
  int threads = argc > 2 ? std::atoi(argv[2]) : 0;
  const double t_max = argc > 3 ? std::atof(argv[3]) : 5.0;
  const std::string preset_name = argc > 4 ? argv[4] : "E2";
#ifdef _OPENMP
  if (threads <= 0) threads = omp_get_max_threads();
#else
  if (threads <= 0) threads = 1;
#endif

  const Preset* p = find_preset(preset_name);
  if (!p || n_paths < 1 || !(t_max > 0.0)) {
    std::fprintf(stderr,
                 "usage: bench_paths [n_paths] [threads] [t_max] [preset]\n");
    return 2;
  }

  SimConfig cfg;
  cfg.t_max = t_max;
  cfg.dt = 1e-3;
  cfg.n_paths = n_paths;
  cfg.seed = 1;

  std::printf("preset %s, %d paths, %ld steps each\n", preset_name.c_str(),
              n_paths, std::lround(cfg.t_max / cfg.dt));

  RunPairResult serial, parallel;
  const double ms_serial = run_ms(serial, p->model, p->init, cfg, 0);
  const double ms_parallel = run_ms(parallel, p->model, p->init, cfg, threads);

  std::printf("serial reference   %10.1f ms\n", ms_serial);
  std::printf("parallel (%2d thr)  %10.1f ms   speedup %.2fx\n", threads,
              ms_parallel, ms_serial / ms_parallel);

  const std::string a = summary_to_json_string(serial.summary);
  const std::string b = summary_to_json_string(parallel.summary);
  if (a != b) {
    std::printf("summaries identical: NO\n");
    return 1;
  }
  std::printf("summaries identical: yes\n");
  return 0;
}
