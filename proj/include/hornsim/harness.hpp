#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hornsim/config.hpp"
#include "hornsim/contact.hpp"
#include "hornsim/sensing.hpp"

namespace hornsim {

// State rows are logged on a fixed 100 Hz clock regardless of dt.
inline constexpr double kStateLogPeriod = 0.01;

// Column-oriented run log. All state vectors share one 100 Hz time base;
// sensor values carry the latest 50 Hz sample. Cumulative audit columns allow
// energy bookkeeping over any window by differencing.
struct TimeSeries {
  std::vector<double> t, x, z, theta, q, thrust, torque, pitch_sp, z_sp;
  struct HornTrack {
    std::string id;
    std::vector<double> deflection, normal_force;
    std::vector<double> code, resistance, filtered;
    std::vector<std::uint8_t> in_event;
  };
  std::vector<HornTrack> horns;
  std::vector<double> work_actuation;   // J, thrust plus torque work
  std::vector<double> diss_damping;     // J
  std::vector<double> diss_clamp;       // J
  std::vector<double> diss_friction;    // J
  std::vector<double> diss_drag;        // J
  std::vector<double> e_spring;         // J, instantaneous
  std::vector<double> e_vehicle;        // J, kinetic + gravitational
  std::size_t rows() const { return t.size(); }
};

// Ground-truth contact episode from ContactState transitions at the physics
// clock. saturation_t is the first instant deflection reached max_deflection,
// -1 if it never did.
struct GtEpisode {
  std::string horn_id;
  double onset_t = 0.0;
  double peak_t = 0.0;
  double peak_deflection = 0.0;
  double saturation_t = -1.0;
  double release_t = 0.0;
  bool open_at_end = false;
};

enum class StabilityVerdict { Stable, Unstable, NotEvaluated };
std::string verdict_name(StabilityVerdict v);

struct BumpMetrics {
  double onset_t = 0.0;        // detected upper event onset anchoring the window
  double window_begin = 0.0;
  double window_end = 0.0;
  double rmse_deg = 0.0;       // pitch against the instantaneous setpoint
  double q_min = 0.0, q_max = 0.0;
  double t_q_min = 0.0, t_q_max = 0.0;
  double net_excursion_rad = 0.0;  // mean(theta - pitch_sp), onset to release + 0.5 s
  std::optional<double> delay_ms;  // upper peak/saturation to lower onset
  double energy_absorbed_j = 0.0;  // horn + friction dissipation over the window
};

struct MetricsReport {
  int schema_version = 1;
  std::string scenario;
  std::string configuration;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::optional<double> divergence_t;
  int collision_count = 0;   // detected upper-horn events
  int approach_phases = 0;
  std::vector<BumpMetrics> bumps;
  double rmse_mean_deg = 0.0;
  std::optional<double> delay_mean_ms;
  StabilityVerdict stability = StabilityVerdict::NotEvaluated;
  std::optional<double> stability_exit_t;  // first band exit when Unstable
  double theta_min_deg = 0.0, theta_max_deg = 0.0;  // over the pushing span
  double contact_span_begin = 0.0, contact_span_end = 0.0;
  std::vector<std::pair<std::string, double>> horn_failures;  // (horn id, time)
  double energy_dissipated_j = 0.0;
  double actuation_work_j = 0.0;
};

struct RunResult {
  ExperimentConfig cfg;
  TimeSeries series;
  struct SensorTrack {
    std::string horn_id;
    std::vector<SensorSample> samples;
    std::vector<std::uint8_t> in_event;
  };
  std::vector<SensorTrack> sensors;
  std::vector<ContactEvent> events;    // detector output, all horns
  std::vector<GtEpisode> episodes;     // ground truth, chatter-merged
  std::vector<Horn> final_horns;       // damage state at end of run
  MetricsReport report;
  bool diverged = false;
};

RunResult run_experiment(const ExperimentConfig& cfg);

// ---- metrics -------------------------------------------------------------

struct RmseWindow {
  double pre = 0.2;
  double post = 1.5;
};

// Per bump onset: RMSE in degrees of theta against the logged pitch setpoint
// over [onset - pre, onset + post].
std::vector<double> pitch_rmse_deg(const TimeSeries& s,
                                   const std::vector<double>& onsets,
                                   const RmseWindow& w = {});

// Pairs each upper episode with the first lower onset that follows within
// pair_window; reference instant is the saturation time when the upper horn
// saturated, its peak-deflection time otherwise. Milliseconds; nullopt when no
// lower contact follows (half configurations).
std::vector<std::optional<double>> contact_delay_ms(
    const std::vector<GtEpisode>& upper, const std::vector<GtEpisode>& lower,
    double pair_window = 0.5);

struct PushingAssessment {
  StabilityVerdict verdict = StabilityVerdict::NotEvaluated;
  std::optional<double> first_exit_t;
  double theta_min = 0.0, theta_max = 0.0;  // rad over the span
  double sustained_contact_s = 0.0;
};

// Stable iff theta stays within setpoint +- band over [span_begin, span_end]
// and the total normal force is positive throughout; requires at least
// min_contact seconds of contact within the span to evaluate at all.
PushingAssessment pushing_stability(const TimeSeries& s, double setpoint_rad,
                                    double band_rad, double span_begin,
                                    double span_end, double min_contact = 2.0);

// ---- comparison grid ------------------------------------------------------

struct CompareRequest {
  ExperimentConfig base;
  std::vector<std::string> configurations;
  std::vector<std::uint64_t> seeds;
  bool parallel = true;
};

struct CompareEntry {
  std::string configuration;
  std::uint64_t seed = 0;
  bool diverged = false;
  double rmse_mean_deg = 0.0;
  std::optional<double> delay_mean_ms;
  int collision_count = 0;
};

struct CompareReport {
  int schema_version = 1;
  std::vector<CompareEntry> entries;  // configuration-major, seed-minor
  std::vector<std::string> configurations;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, double> mean_rmse_deg;       // over non-diverged runs
  std::map<std::string, double> reduction_pct;       // "a_vs_b": 100*(1 - a/b)
};

struct CompareOutcome {
  CompareReport report;
  std::vector<RunResult> runs;  // same order as report.entries
};

CompareOutcome compare_configs(const CompareRequest& req);

// ---- export ---------------------------------------------------------------

void write_series_csv(const TimeSeries& s, const std::string& path);
TimeSeries read_series_csv(const std::string& path);
void write_sensors_csv(const RunResult& r, const std::string& path);
nlohmann::ordered_json metrics_to_json(const MetricsReport& m);
void write_metrics_json(const MetricsReport& m, const std::string& path);
// series.csv, sensors.csv and metrics.json under out_dir (created if needed).
void write_run_outputs(const RunResult& r, const std::string& out_dir);
nlohmann::ordered_json compare_to_json(const CompareReport& r);
void write_compare_outputs(const CompareOutcome& o, const std::string& out_dir,
                           bool per_run_outputs = true);

}  // namespace hornsim
