#include "hornsim/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hornsim {

double pid_step(const PidGains& g, double setpoint, double measured,
                double measured_rate, double dt, PidState& st) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double e = setpoint - measured;
  st.integral = std::clamp(st.integral + e * dt, -g.integral_limit, g.integral_limit);
  const double u = g.kp * e + g.ki * st.integral - g.kd * measured_rate;
  return std::clamp(u, -g.output_limit, g.output_limit);
}

namespace {

Setpoints scripted_at(const ScriptedProfile& p, double t) {
  if (p.points.empty()) throw std::invalid_argument("scripted profile has no points");
  Setpoints sp{p.points.front().pitch_sp, p.points.front().z_sp};
  for (const ScriptedPoint& pt : p.points) {
    if (pt.t > t) break;
    sp = {pt.pitch_sp, pt.z_sp};
  }
  return sp;
}

}  // namespace

Setpoints command(const CommandProfile& profile, double t, bool first_contact_seen,
                  int bumps_completed, double first_contact_t) {
  if (t < 0.0) throw std::invalid_argument("negative time");
  if (const auto* tg = std::get_if<TouchAndGoProfile>(&profile)) {
    Setpoints sp{0.0, tg->z_setpoint};
    if (t < tg->approach_start) return sp;
    if (bumps_completed >= tg->n_bumps) return sp;
    // Level out the moment contact is sensed; the tracker re-arms the
    // approach once the horns have stayed clear long enough.
    sp.pitch_sp = first_contact_seen ? 0.0 : tg->approach_pitch;
    return sp;
  }
  if (const auto* ps = std::get_if<PushingProfile>(&profile)) {
    Setpoints sp{0.0, ps->z_setpoint};
    if (t < ps->approach_start) return sp;
    if (!first_contact_seen) {
      sp.pitch_sp = ps->approach_pitch;
      return sp;
    }
    if (t < first_contact_t + ps->hold_duration)
      sp.pitch_sp = ps->approach_pitch;
    else if (t < first_contact_t + ps->hold_duration + ps->release_hold)
      sp.pitch_sp = ps->release_pitch;
    return sp;
  }
  return scripted_at(std::get<ScriptedProfile>(profile), t);
}

CommandTracker::CommandTracker(const CommandProfile& profile) : profile_(profile) {
  if (const auto* tg = std::get_if<TouchAndGoProfile>(&profile_)) {
    if (tg->n_bumps < 1) throw std::invalid_argument("n_bumps must be >= 1");
  }
  if (const auto* ps = std::get_if<PushingProfile>(&profile_)) {
    if (!(ps->hold_duration > 0.0))
      throw std::invalid_argument("hold_duration must be positive");
  }
}

Setpoints CommandTracker::update(double t, bool contact_sensed) {
  if (const auto* tg = std::get_if<TouchAndGoProfile>(&profile_)) {
    if (t >= tg->approach_start && approach_phases_ == 0) {
      approach_phases_ = 1;
      in_approach_ = true;
      approach_began_t_ = t;
    }
    const bool timed_out =
        in_approach_ && t - approach_began_t_ >= tg->approach_timeout;
    if (in_approach_ && (contact_sensed || timed_out)) {
      // Contact ends this approach; level out. The timeout stands in for a
      // cue that never fires (see approach_timeout).
      in_approach_ = false;
      first_contact_seen_ = true;
      timed_out_bump_ = timed_out && !contact_sensed;
      if (first_contact_t_ == std::numeric_limits<double>::infinity())
        first_contact_t_ = t;
      ++bumps_completed_;
      clear_since_ = -1.0;
    }
    if (!in_approach_ && first_contact_seen_) {
      if (contact_sensed) {
        // A cue after a blind bump means contact really broke; the sensed
        // clear hold is trustworthy again.
        clear_since_ = -1.0;
        timed_out_bump_ = false;
      } else {
        if (clear_since_ < 0.0) clear_since_ = t;
        // After a timed-out bump the clear clock starts blind (nothing was
        // sensed), so wait out the full watchdog window before re-arming;
        // the sensed-clear hold would re-approach while still in contact.
        const double wait =
            timed_out_bump_ ? tg->approach_timeout : tg->separation_hold;
        if (t - clear_since_ >= wait) {
          if (bumps_completed_ < tg->n_bumps) {
            in_approach_ = true;
            first_contact_seen_ = false;
            timed_out_bump_ = false;
            ++approach_phases_;
            approach_began_t_ = t;
          } else {
            done_ = true;
          }
        }
      }
    }
  } else if (const auto* ps = std::get_if<PushingProfile>(&profile_)) {
    if (t >= ps->approach_start && approach_phases_ == 0) approach_phases_ = 1;
    if (!first_contact_seen_ && contact_sensed && t >= ps->approach_start) {
      first_contact_seen_ = true;
      first_contact_t_ = t;
      bumps_completed_ = 1;
      release_t_ = first_contact_t_ + ps->hold_duration;
    }
    if (first_contact_seen_ &&
        t >= first_contact_t_ + ps->hold_duration + ps->release_hold)
      done_ = true;
  }
  return command(profile_, t, first_contact_seen_, bumps_completed_,
                 first_contact_t_);
}

double altitude_hold(const PidGains& g, double z_setpoint, double z, double vz,
                     const VehicleParams& veh, double theta, double dt, PidState& st) {
  const double u = pid_step(g, z_setpoint, z, vz, dt, st);
  const double tilt = std::max(std::cos(theta), 0.5);
  const double thrust = (veh.mass * veh.gravity + u) / tilt;
  return std::clamp(thrust, 0.0, veh.thrust_max);
}

}  // namespace hornsim
