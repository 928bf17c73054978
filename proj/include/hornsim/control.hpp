#pragma once

#include <limits>
#include <variant>
#include <vector>

#include "hornsim/dynamics.hpp"

namespace hornsim {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double output_limit = std::numeric_limits<double>::infinity();
  double integral_limit = std::numeric_limits<double>::infinity();
};

struct PidState {
  double integral = 0.0;
};

// output = clamp(kp*e + ki*integral(e) - kd*measured_rate, +-output_limit),
// with the integral clamped to +-integral_limit. Derivative acts on the
// measurement so setpoint steps do not kick.
double pid_step(const PidGains& g, double setpoint, double measured,
                double measured_rate, double dt, PidState& st);

// Repeated wall taps: lean in until contact is sensed, level out, lean in
// again once the horns have been clear for separation_hold, n_bumps times.
struct TouchAndGoProfile {
  double approach_pitch = 0.26;  // rad
  int n_bumps = 3;
  double approach_start = 1.0;   // s of free hover before the first approach
  double separation_hold = 0.3;  // s clear of contact before re-approach
  double z_setpoint = 1.0;       // m
  // Watchdog: an approach that produces no contact cue within this window
  // still counts as a bump and levels out. A stiff horn can settle on the
  // wall without the force ever dropping, and the cue never fires; without
  // the timeout that pins the vehicle against the wall for the rest of the
  // run.
  double approach_timeout = 2.0;  // s
};

// Sustained press: hold approach_pitch for hold_duration after first sensed
// contact, then command release_pitch (negative, tipping away) to disengage.
struct PushingProfile {
  double approach_pitch = 0.26;
  double hold_duration = 10.0;
  double release_pitch = -0.17;
  double release_hold = 2.0;
  double approach_start = 1.0;
  double z_setpoint = 1.0;
};

struct ScriptedPoint {
  double t = 0.0;
  double pitch_sp = 0.0;
  double z_sp = 1.0;
};

// Zero-order hold over an explicit setpoint table.
struct ScriptedProfile {
  std::vector<ScriptedPoint> points;
};

using CommandProfile = std::variant<TouchAndGoProfile, PushingProfile, ScriptedProfile>;

struct Setpoints {
  double pitch_sp = 0.0;
  double z_sp = 1.0;
};

// Pure setpoint map. first_contact_seen refers to the current bump (touch and
// go) or to the whole run (pushing); first_contact_t feeds the pushing hold
// timer and may stay +inf until contact.
Setpoints command(const CommandProfile& profile, double t, bool first_contact_seen,
                  int bumps_completed,
                  double first_contact_t = std::numeric_limits<double>::infinity());

// Drives command() from the contact cue, tracking bump phases, separation
// timing and the pushing hold/release sequence.
class CommandTracker {
 public:
  explicit CommandTracker(const CommandProfile& profile);
  Setpoints update(double t, bool contact_sensed);

  int bumps_completed() const { return bumps_completed_; }
  int approach_phases() const { return approach_phases_; }
  bool done() const { return done_; }
  double release_command_t() const { return release_t_; }  // pushing only, -1 before
  double first_contact_t() const { return first_contact_t_; }

 private:
  CommandProfile profile_;
  bool first_contact_seen_ = false;
  double first_contact_t_ = std::numeric_limits<double>::infinity();
  int bumps_completed_ = 0;
  int approach_phases_ = 0;
  bool in_approach_ = false;
  double approach_began_t_ = 0.0;
  bool timed_out_bump_ = false;  // last bump completed via watchdog
  double clear_since_ = -1.0;  // start of the current out-of-contact stretch
  bool done_ = false;
  double release_t_ = -1.0;
};

// thrust = clamp((m g + pid(z)) / max(cos(theta), 0.5), 0, thrust_max).
// The cosine floor keeps the altitude loop sane at large tilt.
double altitude_hold(const PidGains& g, double z_setpoint, double z, double vz,
                     const VehicleParams& veh, double theta, double dt, PidState& st);

}  // namespace hornsim
