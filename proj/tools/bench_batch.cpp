// Times the batch runner with and without OpenMP on a small configuration
// grid and confirms both schedules produce identical results.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hornsim/batch.hpp"

using namespace hornsim;

namespace {

std::vector<BatchJob> make_jobs(int n_seeds, double duration) {
  const char* names[] = {"full_soft", "half_soft", "full_hard"};
  std::vector<BatchJob> jobs;
  for (const char* name : names) {
    for (int s = 1; s <= n_seeds; ++s) {
      ExperimentConfig cfg;
      cfg.configuration = name;
      cfg.duration = duration;
      cfg.seed = static_cast<std::uint64_t>(s);
      jobs.push_back({std::string(name) + "_seed" + std::to_string(s), cfg});
    }
  }
  return jobs;
}

double run_timed(const std::vector<BatchJob>& jobs, bool parallel,
                 std::vector<RunResult>& out) {
  const auto t0 = std::chrono::steady_clock::now();
  out = run_batch(jobs, parallel);
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  int n_seeds = 2;
  double duration = 8.0;
  if (argc > 1) n_seeds = std::atoi(argv[1]);
  if (argc > 2) duration = std::atof(argv[2]);

  const std::vector<BatchJob> jobs = make_jobs(n_seeds, duration);
  std::printf("jobs: %zu (%.1f s simulated each)\n", jobs.size(), duration);
#ifdef _OPENMP
  std::printf("OpenMP: %d thread(s)\n", omp_get_max_threads());
#else
  std::printf("OpenMP: not compiled in\n");
#endif

  std::vector<RunResult> serial, parallel;
  const double ts = run_timed(jobs, false, serial);
  const double tp = run_timed(jobs, true, parallel);

  std::printf("serial:   %.3f s\n", ts);
  std::printf("parallel: %.3f s\n", tp);
  std::printf("ratio:    %.2fx\n", tp > 0 ? ts / tp : 0.0);

  // Identity matters more than speed: a single-core box shows no speedup but
  // must still get bit-identical answers.
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string a = metrics_to_json(serial[i].report).dump();
    const std::string b = metrics_to_json(parallel[i].report).dump();
    if (a != b) {
      std::printf("MISMATCH in %s\n", jobs[i].label.c_str());
      return 1;
    }
  }
  std::printf("serial and parallel results identical\n");
  return 0;
}
