// Batch CLI: single runs, configuration comparisons, parameter sweeps and
// invariant validation of finished run directories.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hornsim/batch.hpp"
#include "hornsim/csv.hpp"
#include "hornsim/harness.hpp"

namespace {

using namespace hornsim;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::string> scenario;
  std::optional<long long> seed;
  std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Config file (key = value sections)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--scenario", o.scenario,
                  "Scenario override: touch_and_go | pushing | scripted");
  cmd->add_option("--seed", o.seed, "Seed override");
  cmd->add_option("--set", o.overrides,
                  "Config override as section.key=value (repeatable)");
}

ExperimentConfig make_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  if (o.scenario) cfg.scenario = scenario_from_name(*o.scenario);
  if (o.seed) {
    if (*o.seed < 0) throw std::runtime_error("seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(*o.seed);
  }
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got: " + kv);
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const long long a = std::stoll(text.substr(0, dots));
    const long long b = std::stoll(text.substr(dots + 2));
    if (a < 0 || b < a) throw std::runtime_error("bad seed range: " + text);
    for (long long s = a; s <= b; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    return seeds;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const long long s = std::stoll(text.substr(pos, comma - pos));
    if (s < 0) throw std::runtime_error("seed must be >= 0");
    seeds.push_back(static_cast<std::uint64_t>(s));
    pos = comma + 1;
  }
  if (seeds.empty()) throw std::runtime_error("no seeds in: " + text);
  return seeds;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    if (comma > pos) out.push_back(text.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

void print_run_summary(const RunResult& r) {
  const MetricsReport& m = r.report;
  std::printf("scenario=%s configuration=%s seed=%llu\n", m.scenario.c_str(),
              m.configuration.c_str(), static_cast<unsigned long long>(m.seed));
  if (m.diverged)
    std::printf("DIVERGED at t=%.3f s\n", m.divergence_t.value_or(0.0));
  std::printf("collisions=%d approaches=%d rmse_mean=%.3f deg", m.collision_count,
              m.approach_phases, m.rmse_mean_deg);
  if (m.delay_mean_ms) std::printf(" delay_mean=%.1f ms", *m.delay_mean_ms);
  std::printf(" stability=%s", verdict_name(m.stability).c_str());
  if (m.stability_exit_t) std::printf(" exit_t=%.3f", *m.stability_exit_t);
  std::printf("\n");
  for (const auto& [id, t] : m.horn_failures)
    std::printf("horn failure: %s at t=%.3f s\n", id.c_str(), t);
}

int cmd_run(const CommonOpts& o) {
  const ExperimentConfig cfg = make_config(o);
  const RunResult r = run_experiment(cfg);
  write_run_outputs(r, o.out_dir);
  print_run_summary(r);
  std::printf("outputs: %s/{series.csv,sensors.csv,metrics.json,config.ini}\n",
              o.out_dir.c_str());
  return r.diverged ? 2 : 0;
}

int cmd_compare(const CommonOpts& o, const std::string& configset,
                const std::string& seeds_text, bool serial) {
  CompareRequest req;
  req.base = make_config(o);
  req.configurations = split_commas(configset);
  req.seeds = parse_seeds(seeds_text);
  req.parallel = !serial;
  const CompareOutcome out = compare_configs(req);
  write_compare_outputs(out, o.out_dir);

  int diverged = 0;
  for (const CompareEntry& e : out.report.entries) diverged += e.diverged ? 1 : 0;
  for (const auto& [name, rmse] : out.report.mean_rmse_deg)
    std::printf("%-12s mean rmse %.3f deg\n", name.c_str(), rmse);
  for (const auto& [key, pct] : out.report.reduction_pct)
    std::printf("%-28s %+6.1f %%\n", key.c_str(), pct);
  if (diverged) std::printf("diverged runs: %d (recorded in compare.json)\n", diverged);
  std::printf("outputs: %s/compare.json\n", o.out_dir.c_str());
  return 0;
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == '.' || c == '=' || c == '/' || c == ' ') c = '_';
  return out;
}

int cmd_sweep(const CommonOpts& o, const std::string& param,
              const std::string& values_text, bool serial) {
  const std::vector<std::string> values = split_commas(values_text);
  if (values.empty()) throw std::runtime_error("--values is empty");

  std::vector<BatchJob> jobs;
  for (const std::string& v : values) {
    ExperimentConfig cfg = make_config(o);
    apply_override(cfg, param, v);
    jobs.push_back({sanitize(param) + "_" + sanitize(v), cfg});
  }
  const std::vector<RunResult> runs = run_batch(jobs, !serial);

  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["parameter"] = param;
  j["values"] = values;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const MetricsReport& m = runs[i].report;
    nlohmann::ordered_json e;
    e["value"] = values[i];
    e["seed"] = m.seed;
    e["diverged"] = m.diverged;
    e["rmse_mean_deg"] = m.rmse_mean_deg;
    e["delay_mean_ms"] = m.delay_mean_ms ? nlohmann::ordered_json(*m.delay_mean_ms)
                                         : nlohmann::ordered_json(nullptr);
    e["collision_count"] = m.collision_count;
    e["stability"] = verdict_name(m.stability);
    entries.push_back(std::move(e));
    write_run_outputs(runs[i], o.out_dir + "/runs/" + jobs[i].label);
    std::printf("%s = %-10s rmse %.3f deg collisions %d%s\n", param.c_str(),
                values[i].c_str(), m.rmse_mean_deg, m.collision_count,
                m.diverged ? " DIVERGED" : "");
  }
  j["entries"] = std::move(entries);
  std::filesystem::create_directories(o.out_dir);
  std::ofstream out(o.out_dir + "/sweep.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sweep.json");
  out << j.dump(2) << '\n';
  std::printf("outputs: %s/sweep.json\n", o.out_dir.c_str());
  return 0;
}

// ---- validate ---------------------------------------------------------------

struct Checker {
  int failures = 0;
  void check(bool ok, const std::string& what) {
    std::printf("%-52s %s\n", what.c_str(), ok ? "PASS" : "FAIL");
    if (!ok) ++failures;
  }
};

int cmd_validate(const std::string& dir) {
  Checker c;
  const std::string series_path = dir + "/series.csv";
  const std::string sensors_path = dir + "/sensors.csv";
  const std::string metrics_path = dir + "/metrics.json";
  const std::string config_path = dir + "/config.ini";

  TimeSeries s;
  bool series_ok = true;
  try {
    s = read_series_csv(series_path);
  } catch (const std::exception& e) {
    std::printf("error: %s\n", e.what());
    series_ok = false;
  }
  c.check(series_ok && s.rows() >= 2, "series.csv readable with >= 2 rows");
  if (!series_ok || s.rows() < 2) return 1;

  bool increasing = true;
  bool uniform = true;
  const double dt0 = s.t[1] - s.t[0];
  for (std::size_t i = 1; i < s.rows(); ++i) {
    if (!(s.t[i] > s.t[i - 1])) increasing = false;
    const bool last = i + 1 == s.rows();
    const double d = s.t[i] - s.t[i - 1];
    if (!last && std::abs(d - dt0) > 1e-9) uniform = false;
    if (last && d > dt0 + 1e-9) uniform = false;
  }
  c.check(increasing, "series time strictly increasing");
  c.check(uniform, "series rows on a constant clock");

  bool finite = true, nonneg = true, flags = true;
  auto scan = [&](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) finite = false;
  };
  scan(s.t); scan(s.x); scan(s.z); scan(s.theta); scan(s.q);
  scan(s.thrust); scan(s.torque); scan(s.pitch_sp); scan(s.z_sp);
  scan(s.work_actuation); scan(s.diss_damping); scan(s.diss_clamp);
  scan(s.diss_friction); scan(s.diss_drag); scan(s.e_spring); scan(s.e_vehicle);
  for (const auto& h : s.horns) {
    scan(h.deflection); scan(h.normal_force); scan(h.code);
    scan(h.resistance); scan(h.filtered);
    for (double x : h.deflection)
      if (x < 0.0) nonneg = false;
    for (double x : h.normal_force)
      if (x < 0.0) nonneg = false;
    for (std::uint8_t f : h.in_event)
      if (f > 1) flags = false;
  }
  c.check(finite, "all series values finite");
  c.check(nonneg, "deflections and normal forces non-negative");
  c.check(flags, "event flags are 0/1");

  bool nondecreasing_diss = true;
  auto mono = [&](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] < v[i - 1] - 1e-12) nondecreasing_diss = false;
  };
  mono(s.diss_damping);
  mono(s.diss_clamp);
  mono(s.diss_friction);
  mono(s.diss_drag);
  c.check(nondecreasing_diss, "dissipation channels non-decreasing");

  // The audit channels integrate power with the same quadrature as the state,
  // so the budget closes far tighter than the 2% bound checked here.
  double res0 = s.e_vehicle.front() + s.e_spring.front();
  double res1 = s.e_vehicle.back() + s.e_spring.back() + s.diss_damping.back() +
                s.diss_clamp.back() + s.diss_friction.back() + s.diss_drag.back() -
                s.work_actuation.back();
  const double scale = std::max({1e-3, std::abs(s.work_actuation.back()),
                                 s.diss_damping.back() + s.diss_clamp.back() +
                                     s.diss_friction.back() + s.diss_drag.back()});
  c.check(std::abs(res1 - res0) <= 0.02 * scale, "energy budget closes within 2%");

  bool metrics_ok = true;
  nlohmann::json m;
  try {
    std::ifstream in(metrics_path);
    if (!in) throw std::runtime_error("cannot open " + metrics_path);
    in >> m;
  } catch (const std::exception& e) {
    std::printf("error: %s\n", e.what());
    metrics_ok = false;
  }
  c.check(metrics_ok, "metrics.json parses");
  if (metrics_ok) {
    const char* required[] = {"schema_version", "scenario", "configuration",
                              "seed", "diverged", "collision_count",
                              "approach_phases", "bumps", "rmse_mean_deg",
                              "stability"};
    bool have_all = true;
    for (const char* k : required)
      if (!m.contains(k)) have_all = false;
    c.check(have_all && m.value("schema_version", 0) == 1,
            "metrics schema v1 with required fields");
  }

  bool sensors_ok = true;
  CsvTable sensors;
  try {
    sensors = read_csv(sensors_path);
  } catch (const std::exception& e) {
    std::printf("error: %s\n", e.what());
    sensors_ok = false;
  }
  c.check(sensors_ok, "sensors.csv readable");

  if (sensors_ok && metrics_ok && std::filesystem::exists(config_path)) {
    const ExperimentConfig cfg = load_config(config_path);
    const int c_t = sensors.column("t"), c_id = sensors.column("horn_id"),
              c_f = sensors.column("filtered_ohm"), c_code = sensors.column("code");
    bool cols = c_t >= 0 && c_id >= 0 && c_f >= 0 && c_code >= 0;
    c.check(cols, "sensors.csv has the documented columns");
    if (cols) {
      std::vector<SensorSample> upper;
      bool codes_ok = true;
      for (const auto& row : sensors.rows) {
        const double code = csv_number(row[c_code]);
        if (code < 0 || code > cfg.sensing.adc.max_code() ||
            code != std::floor(code))
          codes_ok = false;
        if (row[c_id] == "upper") {
          SensorSample smp;
          smp.t = csv_number(row[c_t]);
          smp.filtered = csv_number(row[c_f]);
          upper.push_back(smp);
        }
      }
      c.check(codes_ok, "ADC codes integral and in range");
      const auto events = detect_contact_events(
          upper, "upper", cfg.sensing.on_threshold, cfg.sensing.off_threshold,
          cfg.sensing.min_event_duration);
      c.check(static_cast<int>(events.size()) == m.value("collision_count", -1),
              "collision_count matches re-detected events");
    }
  } else {
    c.check(false, "config.ini present for detector cross-check");
  }

  std::printf("%s\n", c.failures ? "FAILED" : "OK");
  return c.failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar wall-interaction simulator"};
  app.require_subcommand(1);

  CommonOpts run_o, cmp_o, sweep_o;
  std::string configset = "full_soft,half_soft,full_hard";
  std::string seeds_text = "1..5";
  bool cmp_serial = false, sweep_serial = false;
  std::string sweep_param, sweep_values;
  std::string validate_dir = "out";

  CLI::App* runc = app.add_subcommand("run", "Run one experiment");
  add_common(runc, run_o);

  CLI::App* cmpc = app.add_subcommand("compare", "Run a configuration grid");
  add_common(cmpc, cmp_o);
  cmpc->add_option("--configset", configset, "Comma-separated configuration names");
  cmpc->add_option("--seeds", seeds_text, "Seed range N..M or comma list");
  cmpc->add_flag("--serial", cmp_serial, "Disable parallel execution");

  CLI::App* sweepc = app.add_subcommand("sweep", "Sweep one config key");
  add_common(sweepc, sweep_o);
  sweepc->add_option("--param", sweep_param, "Dotted config key, e.g. wall.mu")
      ->required();
  sweepc->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweepc->add_flag("--serial", sweep_serial, "Disable parallel execution");

  CLI::App* valc = app.add_subcommand("validate", "Check a finished run directory");
  valc->add_option("--out", validate_dir, "Run directory to validate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (runc->parsed()) return cmd_run(run_o);
    if (cmpc->parsed()) return cmd_compare(cmp_o, configset, seeds_text, cmp_serial);
    if (sweepc->parsed()) return cmd_sweep(sweep_o, sweep_param, sweep_values, sweep_serial);
    if (valc->parsed()) return cmd_validate(validate_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
