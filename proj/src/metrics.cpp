#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hornsim/harness.hpp"

namespace hornsim {

std::string verdict_name(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::Stable: return "stable";
    case StabilityVerdict::Unstable: return "unstable";
    case StabilityVerdict::NotEvaluated: return "not_evaluated";
  }
  throw std::invalid_argument("unknown verdict");
}

namespace {
constexpr double kRadToDeg = 180.0 / M_PI;
}

std::vector<double> pitch_rmse_deg(const TimeSeries& s,
                                   const std::vector<double>& onsets,
                                   const RmseWindow& w) {
  if (!(w.pre + w.post > 0.0)) throw std::invalid_argument("empty RMSE window");
  std::vector<double> out;
  for (const double onset : onsets) {
    const double a = onset - w.pre;
    const double b = onset + w.post;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.rows(); ++i) {
      if (s.t[i] < a || s.t[i] > b) continue;
      const double e = (s.theta[i] - s.pitch_sp[i]) * kRadToDeg;
      sum += e * e;
      ++n;
    }
    if (n == 0) throw std::invalid_argument("RMSE window contains no samples");
    out.push_back(std::sqrt(sum / static_cast<double>(n)));
  }
  return out;
}

std::vector<std::optional<double>> contact_delay_ms(
    const std::vector<GtEpisode>& upper, const std::vector<GtEpisode>& lower,
    double pair_window) {
  std::vector<std::optional<double>> out;
  for (const GtEpisode& u : upper) {
    const double ref = u.saturation_t >= 0.0 ? u.saturation_t : u.peak_t;
    std::optional<double> delay;
    for (const GtEpisode& l : lower) {
      if (l.onset_t < u.onset_t) continue;
      if (l.onset_t > u.release_t + pair_window) break;
      delay = (l.onset_t - ref) * 1000.0;
      break;
    }
    out.push_back(delay);
  }
  return out;
}

PushingAssessment pushing_stability(const TimeSeries& s, double setpoint_rad,
                                    double band_rad, double span_begin,
                                    double span_end, double min_contact) {
  PushingAssessment a;
  if (!(span_end > span_begin) || s.rows() == 0) return a;

  double contact_time = 0.0;
  double prev_t = -1.0;
  bool any = false;
  double tmin = 0.0, tmax = 0.0;
  std::optional<double> exit_t;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double t = s.t[i];
    if (t < span_begin || t > span_end) continue;
    double fn = 0.0;
    for (const auto& h : s.horns) fn += h.normal_force[i];
    if (fn > 0.0 && prev_t >= 0.0) contact_time += t - prev_t;
    prev_t = t;
    if (!any) {
      tmin = tmax = s.theta[i];
      any = true;
    } else {
      tmin = std::min(tmin, s.theta[i]);
      tmax = std::max(tmax, s.theta[i]);
    }
    const bool in_band = std::abs(s.theta[i] - setpoint_rad) <= band_rad;
    if ((!in_band || fn <= 0.0) && !exit_t) exit_t = t;
  }
  if (!any) return a;
  a.theta_min = tmin;
  a.theta_max = tmax;
  a.sustained_contact_s = contact_time;
  if (contact_time < min_contact) return a;  // NotEvaluated
  if (exit_t) {
    a.verdict = StabilityVerdict::Unstable;
    a.first_exit_t = exit_t;
  } else {
    a.verdict = StabilityVerdict::Stable;
  }
  return a;
}

nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["schema_version"] = m.schema_version;
  j["scenario"] = m.scenario;
  j["configuration"] = m.configuration;
  j["seed"] = m.seed;
  j["diverged"] = m.diverged;
  j["divergence_t"] = m.divergence_t ? nlohmann::ordered_json(*m.divergence_t)
                                     : nlohmann::ordered_json(nullptr);
  j["collision_count"] = m.collision_count;
  j["approach_phases"] = m.approach_phases;
  nlohmann::ordered_json bumps = nlohmann::ordered_json::array();
  for (const BumpMetrics& b : m.bumps) {
    nlohmann::ordered_json jb;
    jb["onset_t"] = b.onset_t;
    jb["window"] = {b.window_begin, b.window_end};
    jb["rmse_deg"] = b.rmse_deg;
    jb["q_min"] = b.q_min;
    jb["q_max"] = b.q_max;
    jb["t_q_min"] = b.t_q_min;
    jb["t_q_max"] = b.t_q_max;
    jb["net_excursion_rad"] = b.net_excursion_rad;
    jb["delay_ms"] = b.delay_ms ? nlohmann::ordered_json(*b.delay_ms)
                                : nlohmann::ordered_json(nullptr);
    jb["energy_absorbed_j"] = b.energy_absorbed_j;
    bumps.push_back(std::move(jb));
  }
  j["bumps"] = std::move(bumps);
  j["rmse_mean_deg"] = m.rmse_mean_deg;
  j["delay_mean_ms"] = m.delay_mean_ms ? nlohmann::ordered_json(*m.delay_mean_ms)
                                       : nlohmann::ordered_json(nullptr);
  j["stability"] = verdict_name(m.stability);
  j["stability_exit_t"] = m.stability_exit_t
                              ? nlohmann::ordered_json(*m.stability_exit_t)
                              : nlohmann::ordered_json(nullptr);
  j["theta_min_deg"] = m.theta_min_deg;
  j["theta_max_deg"] = m.theta_max_deg;
  j["contact_span"] = {m.contact_span_begin, m.contact_span_end};
  nlohmann::ordered_json fails = nlohmann::ordered_json::array();
  for (const auto& [id, t] : m.horn_failures)
    fails.push_back({{"horn_id", id}, {"t", t}});
  j["horn_failures"] = std::move(fails);
  j["energy_dissipated_j"] = m.energy_dissipated_j;
  j["actuation_work_j"] = m.actuation_work_j;
  return j;
}

nlohmann::ordered_json compare_to_json(const CompareReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = r.schema_version;
  j["configurations"] = r.configurations;
  j["seeds"] = r.seeds;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const CompareEntry& e : r.entries) {
    nlohmann::ordered_json je;
    je["configuration"] = e.configuration;
    je["seed"] = e.seed;
    je["diverged"] = e.diverged;
    je["rmse_mean_deg"] = e.rmse_mean_deg;
    je["delay_mean_ms"] = e.delay_mean_ms ? nlohmann::ordered_json(*e.delay_mean_ms)
                                          : nlohmann::ordered_json(nullptr);
    je["collision_count"] = e.collision_count;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  j["mean_rmse_deg"] = r.mean_rmse_deg;
  j["reduction_pct"] = r.reduction_pct;
  return j;
}

}  // namespace hornsim
