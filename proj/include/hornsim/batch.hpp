#pragma once

#include <string>
#include <vector>

#include "hornsim/harness.hpp"

namespace hornsim {

struct BatchJob {
  std::string label;
  ExperimentConfig cfg;
};

// Runs independent experiments, optionally OpenMP-parallel across jobs.
// Results land in slots indexed by job order, so the parallel path is
// bit-identical to the serial reference (asserted by tests). A run that
// diverges is a result, not an error; exceptions are collected and rethrown
// with the job label after all jobs finish.
std::vector<RunResult> run_batch(const std::vector<BatchJob>& jobs, bool parallel);

}  // namespace hornsim
