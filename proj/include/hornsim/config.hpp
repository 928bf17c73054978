#pragma once

#include <cstdint>
#include <string>

#include "hornsim/contact.hpp"
#include "hornsim/control.hpp"
#include "hornsim/dynamics.hpp"
#include "hornsim/sensing.hpp"

namespace hornsim {

enum class Scenario { TouchAndGo, Pushing, Scripted };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

// Per-physical-horn material constants and tip geometry; the planar builder
// doubles k, c and failure_energy when it merges a left/right pair.
struct ContactParams {
  double soft_k = 300.0;
  double soft_c = 4.0;
  double hard_k = 2000.0;
  double hard_c = 30.0;
  double hard_failure_energy = 0.48;  // J
  double max_deflection = 0.006;     // m
  Vec2 upper_tip{0.12, 0.10};
  Vec2 lower_tip{0.13, -0.05};
  double friction_reg_vel = 0.01;    // m/s, tanh regularization knee
};

struct SensingParams {
  AdcConfig adc;
  double noise_sigma = 10.0;
  double neutral_resistance = 25000.0;
  int filter_order = 2;
  double filter_cutoff = 0.8;
  double on_threshold = 40.0;
  double off_threshold = 20.0;
  double min_event_duration = 0.06;
  double baseline_window = 0.5;
  double creep_gain = 1.0;
  double creep_decay_tau = 30.0;
};

struct ControlParams {
  // Attitude gains frozen against the hover recovery requirement (0.1 rad
  // offset settles below 0.01 rad within 1.5 s, overshoot within half the
  // offset). Deliberately compliant so wall reactions dominate the bump
  // response; the horns, not the controller, decide how a bump plays out.
  PidGains pitch{0.45, 0.8, 0.05,
                 std::numeric_limits<double>::infinity(), 0.25};
  PidGains altitude{6.0, 3.0, 4.0, 8.0, 1.0};
};

struct ProfileParams {
  double approach_pitch = 0.26;
  int n_bumps = 3;
  double approach_start = 1.0;
  double separation_hold = 0.3;
  double hold_duration = 10.0;
  double release_pitch = -0.17;
  double release_hold = 2.0;
  double z_setpoint = 1.0;
  std::vector<ScriptedPoint> script;
};

struct InitialState {
  double x = 0.0;
  double z = 1.0;
  double theta = 0.0;
  double vx = 0.0;
  double vz = 0.0;
  double q = 0.0;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::TouchAndGo;
  std::string configuration = "full_soft";
  VehicleParams vehicle;
  Wall wall{0.5, 0.3};
  ContactParams contact;
  SensingParams sensing;
  ControlParams control;
  ProfileParams profile;
  InitialState initial;
  double drag = 0.3;  // N.s/m translational, applied by the harness wrench
  double dt = 0.001;
  double duration = 24.0;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::runtime_error on bad combinations
};

// Flat "key = value" sections. Unknown sections or keys are hard errors with
// the offending line reported.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Dotted "section.key" override, same key set as the file format.
void apply_override(ExperimentConfig& cfg, const std::string& dotted_key,
                    const std::string& value);

// Serializes every key with its current value; parse_config_text round-trips it.
std::string config_to_text(const ExperimentConfig& cfg);

// Builds the planar horn set for cfg.configuration from cfg.contact.
HornConfiguration build_horn_configuration(const ExperimentConfig& cfg);

CommandProfile make_profile(const ExperimentConfig& cfg);

}  // namespace hornsim
