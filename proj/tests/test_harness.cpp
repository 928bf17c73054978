#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hornsim/batch.hpp"
#include "hornsim/harness.hpp"

using namespace hornsim;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig hover_config() {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::Scripted;
  cfg.profile.script = {{0.0, 0.0, 1.0}};
  cfg.duration = 6.0;
  return cfg;
}

TimeSeries flat_series(double t_end, double theta, double pitch_sp, double fn_from,
                       double fn_to) {
  TimeSeries s;
  s.horns.resize(1);
  s.horns[0].id = "upper";
  for (int i = 0;; ++i) {
    const double t = i * 0.01;
    if (t > t_end + 1e-9) break;
    s.t.push_back(t);
    s.x.push_back(0.0);
    s.z.push_back(1.0);
    s.theta.push_back(theta);
    s.q.push_back(0.0);
    s.thrust.push_back(6.867);
    s.torque.push_back(0.0);
    s.pitch_sp.push_back(pitch_sp);
    s.z_sp.push_back(1.0);
    s.horns[0].deflection.push_back(0.0);
    s.horns[0].normal_force.push_back(t >= fn_from && t <= fn_to ? 5.0 : 0.0);
    s.horns[0].code.push_back(0.0);
    s.horns[0].resistance.push_back(25000.0);
    s.horns[0].filtered.push_back(0.0);
    s.horns[0].in_event.push_back(0);
    s.work_actuation.push_back(0.0);
    s.diss_damping.push_back(0.0);
    s.diss_clamp.push_back(0.0);
    s.diss_friction.push_back(0.0);
    s.e_spring.push_back(0.0);
    s.e_vehicle.push_back(0.0);
  }
  return s;
}

}  // namespace

TEST_CASE("hover script does nothing") {
  const RunResult r = run_experiment(hover_config());
  CHECK_FALSE(r.diverged);
  CHECK(r.report.collision_count == 0);
  CHECK(r.events.empty());
  CHECK(r.episodes.empty());
  CHECK(r.report.rmse_mean_deg == 0.0);
  CHECK(r.report.stability == StabilityVerdict::NotEvaluated);
  CHECK(r.report.horn_failures.empty());

  REQUIRE(r.series.rows() == 601);
  CHECK(r.series.t.front() == 0.0);
  CHECK(r.series.t.back() == doctest::Approx(6.0).epsilon(1e-12));
  for (std::size_t i = 1; i < r.series.rows(); ++i)
    CHECK(r.series.t[i] - r.series.t[i - 1] == doctest::Approx(0.01).epsilon(1e-9));
  for (double e : r.series.e_spring) CHECK(e == 0.0);
  for (double z : r.series.z) CHECK(std::abs(z - 1.0) < 0.01);
  REQUIRE(r.sensors.size() == 2);
  CHECK(r.sensors[0].samples.size() == 300);
}

TEST_CASE("touch and go completes its bumps and balances the books") {
  ExperimentConfig cfg;
  cfg.seed = 1;
  const RunResult r = run_experiment(cfg);

  CHECK_FALSE(r.diverged);
  CHECK(r.report.scenario == "touch_and_go");
  CHECK(r.report.configuration == "full_soft");
  CHECK(r.report.approach_phases == 3);
  CHECK(r.report.collision_count == 3);
  REQUIRE(r.report.bumps.size() == 3);
  CHECK(r.report.rmse_mean_deg > 0.0);
  CHECK(r.report.rmse_mean_deg < 20.0);
  CHECK(r.report.horn_failures.empty());

  int upper_eps = 0;
  for (const GtEpisode& e : r.episodes) {
    CHECK(e.release_t > e.onset_t);
    if (e.horn_id == "upper") ++upper_eps;
  }
  CHECK(upper_eps >= 3);

  for (const BumpMetrics& b : r.report.bumps) {
    CHECK(b.window_end > b.window_begin);
    CHECK(b.energy_absorbed_j >= 0.0);
  }

  // Energy audit: everything the actuators put in either remains as vehicle
  // or spring energy or shows up in a dissipation channel.
  const TimeSeries& s = r.series;
  const double start = s.e_vehicle.front() + s.e_spring.front();
  const double end = s.e_vehicle.back() + s.e_spring.back() + s.diss_damping.back() +
                     s.diss_clamp.back() + s.diss_friction.back() +
                     s.diss_drag.back() - s.work_actuation.back();
  const double scale =
      std::max(1.0, std::abs(s.work_actuation.back()) + s.diss_damping.back() +
                        s.diss_friction.back() + s.diss_drag.back());
  CHECK(std::abs(end - start) < 0.02 * scale);

  CHECK(r.report.energy_dissipated_j > 0.0);
  CHECK(r.report.actuation_work_j != 0.0);
}

TEST_CASE("identical runs produce identical files") {
  ExperimentConfig cfg;
  cfg.seed = 2;
  cfg.duration = 10.0;
  const RunResult a = run_experiment(cfg);
  const RunResult b = run_experiment(cfg);

  const std::string da = "tmp_det_a", db_ = "tmp_det_b";
  write_run_outputs(a, da);
  write_run_outputs(b, db_);
  for (const char* f : {"series.csv", "sensors.csv", "metrics.json", "config.ini"})
    CHECK(slurp(da + "/" + f) == slurp(db_ + "/" + f));
  std::filesystem::remove_all(da);
  std::filesystem::remove_all(db_);
}

TEST_CASE("seed changes the sensed stream but not the physics contract") {
  ExperimentConfig cfg;
  cfg.duration = 8.0;
  cfg.seed = 1;
  const RunResult a = run_experiment(cfg);
  cfg.seed = 9;
  const RunResult b = run_experiment(cfg);

  bool codes_differ = false;
  for (std::size_t i = 0; i < a.sensors[0].samples.size(); ++i)
    if (a.sensors[0].samples[i].code != b.sensors[0].samples[i].code)
      codes_differ = true;
  CHECK(codes_differ);
}

TEST_CASE("series csv round-trips through parse and re-print") {
  ExperimentConfig cfg;
  cfg.duration = 6.0;
  const RunResult r = run_experiment(cfg);
  write_series_csv(r.series, "tmp_series_a.csv");
  const TimeSeries back = read_series_csv("tmp_series_a.csv");
  REQUIRE(back.rows() == r.series.rows());
  REQUIRE(back.horns.size() == r.series.horns.size());
  CHECK(back.horns[0].id == r.series.horns[0].id);
  write_series_csv(back, "tmp_series_b.csv");
  CHECK(slurp("tmp_series_a.csv") == slurp("tmp_series_b.csv"));
  std::filesystem::remove("tmp_series_a.csv");
  std::filesystem::remove("tmp_series_b.csv");
}

TEST_CASE("run outputs land in the requested directory") {
  ExperimentConfig cfg = hover_config();
  cfg.duration = 2.0;
  const RunResult r = run_experiment(cfg);
  const std::string dir = "tmp_outputs";
  write_run_outputs(r, dir);
  for (const char* f : {"series.csv", "sensors.csv", "metrics.json", "config.ini"}) {
    CHECK(std::filesystem::exists(dir + "/" + f));
    CHECK(std::filesystem::file_size(dir + "/" + f) > 0);
  }
  const ExperimentConfig round = load_config(dir + "/config.ini");
  CHECK(round.duration == 2.0);
  CHECK(round.scenario == Scenario::Scripted);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pushing run reaches a verdict and releases") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::Pushing;
  cfg.seed = 1;
  const RunResult r = run_experiment(cfg);

  CHECK_FALSE(r.diverged);
  CHECK(r.report.collision_count >= 1);
  CHECK(r.report.stability != StabilityVerdict::NotEvaluated);
  CHECK(r.report.contact_span_end > r.report.contact_span_begin);
}

TEST_CASE("runaway state is reported as divergence, not an exception") {
  ExperimentConfig cfg = hover_config();
  cfg.duration = 6.0;
  cfg.initial.z = -900.0;
  cfg.initial.vz = -99.0;
  const RunResult r = run_experiment(cfg);
  CHECK(r.diverged);
  CHECK(r.report.diverged);
  REQUIRE(r.report.divergence_t.has_value());
  CHECK(*r.report.divergence_t < 4.0);
  CHECK(r.report.stability == StabilityVerdict::Unstable);
  CHECK(r.series.t.back() < 5.9);
}

TEST_CASE("batch parallel schedule equals the serial reference") {
  std::vector<BatchJob> jobs;
  for (const char* name : {"full_soft", "half_soft", "full_hard"}) {
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      ExperimentConfig cfg;
      cfg.configuration = name;
      cfg.duration = 8.0;
      cfg.seed = seed;
      jobs.push_back({std::string(name) + "_" + std::to_string(seed), cfg});
    }
  }
  const auto serial = run_batch(jobs, false);
  const auto parallel = run_batch(jobs, true);
  REQUIRE(serial.size() == jobs.size());
  REQUIRE(parallel.size() == jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i)
    CHECK(metrics_to_json(serial[i].report).dump() ==
          metrics_to_json(parallel[i].report).dump());
}

TEST_CASE("batch surfaces job errors with their label") {
  std::vector<BatchJob> jobs;
  ExperimentConfig bad;
  bad.dt = -1.0;
  jobs.push_back({"broken_job", bad});
  try {
    run_batch(jobs, false);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("broken_job") != std::string::npos);
  }
}

TEST_CASE("compare grid aggregates and reduces") {
  CompareRequest req;
  req.base.duration = 10.0;
  req.configurations = {"full_soft", "half_soft", "full_hard"};
  req.seeds = {1, 2};
  const CompareOutcome out = compare_configs(req);

  REQUIRE(out.report.entries.size() == 6);
  REQUIRE(out.runs.size() == 6);
  CHECK(out.report.entries[0].configuration == "full_soft");
  CHECK(out.report.entries[0].seed == 1);
  CHECK(out.report.entries[1].seed == 2);
  CHECK(out.report.entries[2].configuration == "half_soft");
  CHECK(out.report.mean_rmse_deg.size() == 3);
  CHECK(out.report.reduction_pct.size() == 6);
  CHECK(out.report.reduction_pct.count("full_soft_vs_full_hard") == 1);

  const nlohmann::ordered_json j = compare_to_json(out.report);
  CHECK(j["schema_version"] == 1);
  CHECK(j["entries"].size() == 6);

  CHECK_THROWS(compare_configs(CompareRequest{}));
}

TEST_CASE("compare outputs serialize the whole grid") {
  CompareRequest req;
  req.base.duration = 6.0;
  req.base.scenario = Scenario::Scripted;
  req.base.profile.script = {{0.0, 0.0, 1.0}};
  req.configurations = {"full_soft", "full_hard"};
  req.seeds = {1};
  const CompareOutcome out = compare_configs(req);
  const std::string dir = "tmp_compare";
  write_compare_outputs(out, dir);
  CHECK(std::filesystem::exists(dir + "/compare.json"));
  CHECK(std::filesystem::exists(dir + "/runs/full_soft_seed1/series.csv"));
  CHECK(std::filesystem::exists(dir + "/runs/full_hard_seed1/metrics.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("metrics json carries the documented fields") {
  ExperimentConfig cfg;
  cfg.duration = 10.0;
  const RunResult r = run_experiment(cfg);
  const nlohmann::ordered_json j = metrics_to_json(r.report);
  for (const char* k :
       {"schema_version", "scenario", "configuration", "seed", "diverged",
        "collision_count", "approach_phases", "bumps", "rmse_mean_deg",
        "stability", "energy_dissipated_j", "actuation_work_j"})
    CHECK(j.contains(k));
  CHECK(j["schema_version"] == 1);
  if (!j["bumps"].empty()) {
    const auto& b = j["bumps"][0];
    for (const char* k : {"onset_t", "window", "rmse_deg", "q_min", "q_max",
                          "net_excursion_rad", "delay_ms", "energy_absorbed_j"})
      CHECK(b.contains(k));
  }
}

TEST_CASE("pitch rmse against the logged setpoint") {
  TimeSeries s = flat_series(3.0, 0.1 + 1.0 * 3.14159265358979 / 180.0, 0.1, 99, 99);
  const auto rmse = pitch_rmse_deg(s, {1.0});
  REQUIRE(rmse.size() == 1);
  CHECK(rmse[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("contact delay pairing") {
  GtEpisode u;
  u.horn_id = "upper";
  u.onset_t = 1.0;
  u.peak_t = 1.05;
  u.release_t = 1.30;
  GtEpisode l;
  l.horn_id = "lower";
  l.onset_t = 1.08;
  l.peak_t = 1.10;
  l.release_t = 1.25;

  auto d = contact_delay_ms({u}, {l});
  REQUIRE(d.size() == 1);
  REQUIRE(d[0].has_value());
  CHECK(*d[0] == doctest::Approx(30.0));

  u.saturation_t = 1.02;  // saturation becomes the reference instant
  d = contact_delay_ms({u}, {l});
  CHECK(*d[0] == doctest::Approx(60.0));

  d = contact_delay_ms({u}, {});
  REQUIRE(d.size() == 1);
  CHECK_FALSE(d[0].has_value());

  // A lower onset far outside the pairing window does not count.
  l.onset_t = 3.0;
  d = contact_delay_ms({u}, {l});
  CHECK_FALSE(d[0].has_value());
}

TEST_CASE("pushing stability verdicts") {
  SUBCASE("inside the band with sustained contact") {
    const TimeSeries s = flat_series(10.0, 0.25, 0.26, 2.5, 8.5);
    const auto a = pushing_stability(s, 0.26, 0.1222, 3.0, 8.0);
    CHECK(a.verdict == StabilityVerdict::Stable);
    CHECK(a.sustained_contact_s >= 2.0);
    CHECK_FALSE(a.first_exit_t.has_value());
  }
  SUBCASE("theta outside the band") {
    const TimeSeries s = flat_series(10.0, 0.45, 0.26, 2.5, 8.5);
    const auto a = pushing_stability(s, 0.26, 0.1222, 3.0, 8.0);
    CHECK(a.verdict == StabilityVerdict::Unstable);
    REQUIRE(a.first_exit_t.has_value());
    CHECK(*a.first_exit_t == doctest::Approx(3.0).epsilon(0.01));
  }
  SUBCASE("contact lost mid-span") {
    const TimeSeries s = flat_series(10.0, 0.25, 0.26, 2.5, 5.0);
    const auto a = pushing_stability(s, 0.26, 0.1222, 3.0, 8.0);
    CHECK(a.verdict == StabilityVerdict::Unstable);
  }
  SUBCASE("not enough contact to judge") {
    const TimeSeries s = flat_series(10.0, 0.25, 0.26, 4.0, 4.5);
    const auto a = pushing_stability(s, 0.26, 0.1222, 3.0, 8.0);
    CHECK(a.verdict == StabilityVerdict::NotEvaluated);
  }
}
