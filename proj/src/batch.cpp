#include "hornsim/batch.hpp"

#include <cstdint>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hornsim {

std::vector<RunResult> run_batch(const std::vector<BatchJob>& jobs, bool parallel) {
  std::vector<RunResult> out(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const std::int64_t n = static_cast<std::int64_t>(jobs.size());

  // Each job is an isolated state bundle writing only its own slot, so the
  // parallel schedule cannot change the results, only their timing.
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#else
  (void)parallel;
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = run_experiment(jobs[static_cast<std::size_t>(i)].cfg);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = "unknown error";
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty())
      throw std::runtime_error("job " + jobs[i].label + ": " + errors[i]);
  return out;
}

CompareOutcome compare_configs(const CompareRequest& req) {
  if (req.configurations.size() < 2)
    throw std::invalid_argument("compare needs at least two configurations");
  if (req.seeds.empty()) throw std::invalid_argument("compare needs seeds");

  std::vector<BatchJob> jobs;
  for (const std::string& name : req.configurations)
    for (std::uint64_t seed : req.seeds) {
      ExperimentConfig cfg = req.base;
      cfg.configuration = name;
      cfg.seed = seed;
      jobs.push_back({name + "_seed" + std::to_string(seed), std::move(cfg)});
    }

  CompareOutcome out;
  out.runs = run_batch(jobs, req.parallel);

  CompareReport& rep = out.report;
  rep.configurations = req.configurations;
  rep.seeds = req.seeds;
  for (const RunResult& r : out.runs) {
    CompareEntry e;
    e.configuration = r.cfg.configuration;
    e.seed = r.cfg.seed;
    e.diverged = r.diverged;
    e.rmse_mean_deg = r.report.rmse_mean_deg;
    e.delay_mean_ms = r.report.delay_mean_ms;
    e.collision_count = r.report.collision_count;
    rep.entries.push_back(std::move(e));
  }

  for (const std::string& name : req.configurations) {
    if (rep.mean_rmse_deg.count(name)) continue;
    double s = 0.0;
    int n_ok = 0;
    for (const CompareEntry& e : rep.entries)
      if (e.configuration == name && !e.diverged) {
        s += e.rmse_mean_deg;
        ++n_ok;
      }
    if (n_ok) rep.mean_rmse_deg[name] = s / n_ok;
  }

  for (std::size_t a = 0; a < req.configurations.size(); ++a)
    for (std::size_t b = 0; b < req.configurations.size(); ++b) {
      if (a == b) continue;
      const std::string& na = req.configurations[a];
      const std::string& nb = req.configurations[b];
      const std::string key = na + "_vs_" + nb;
      if (rep.reduction_pct.count(key)) continue;
      const auto ia = rep.mean_rmse_deg.find(na);
      const auto ib = rep.mean_rmse_deg.find(nb);
      if (ia == rep.mean_rmse_deg.end() || ib == rep.mean_rmse_deg.end()) continue;
      if (ib->second == 0.0) continue;
      rep.reduction_pct[key] = 100.0 * (1.0 - ia->second / ib->second);
    }
  return out;
}

}  // namespace hornsim
