#include "hornsim/dynamics.hpp"

#include <cmath>

namespace hornsim {

bool VehicleState::finite() const {
  return std::isfinite(t) && std::isfinite(x) && std::isfinite(z) &&
         std::isfinite(theta) && std::isfinite(vx) && std::isfinite(vz) &&
         std::isfinite(q);
}

void VehicleParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw std::invalid_argument("vehicle mass must be positive");
  if (!(inertia_yy > 0.0) || !std::isfinite(inertia_yy))
    throw std::invalid_argument("vehicle inertia must be positive");
  if (!(gravity > 0.0) || !std::isfinite(gravity))
    throw std::invalid_argument("gravity must be positive");
  if (!(pitch_torque_max > 0.0))
    throw std::invalid_argument("pitch torque limit must be positive");
  if (!(thrust_max > mass * gravity))
    throw std::invalid_argument("thrust_max must exceed hover weight");
}

double normalize_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

Vec2 body_to_world(const Vec2& p, const VehicleState& s) {
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  return {s.x + p.x * c + p.z * sn, s.z - p.x * sn + p.z * c};
}

Vec2 body_point_velocity(const Vec2& p, const VehicleState& s) {
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  const double rx = p.x * c + p.z * sn;
  const double rz = -p.x * sn + p.z * c;
  return {s.vx + s.q * rz, s.vz - s.q * rx};
}

double total_energy(const VehicleState& s, const VehicleParams& p) {
  return 0.5 * p.mass * (s.vx * s.vx + s.vz * s.vz) +
         0.5 * p.inertia_yy * s.q * s.q + p.mass * p.gravity * s.z;
}

Accel acceleration(const VehicleState& s, const VehicleParams& p, double thrust,
                   double pitch_torque, const Wrench& w) {
  Accel a;
  a.ax = (thrust * std::sin(s.theta) + w.fx) / p.mass;
  a.az = (thrust * std::cos(s.theta) + w.fz) / p.mass - p.gravity;
  a.aq = (pitch_torque + w.my) / p.inertia_yy;
  return a;
}

namespace detail {
void check_step_inputs(const VehicleState& s, const VehicleParams& p,
                       double thrust, double pitch_torque, double dt) {
  if (!s.finite()) throw std::invalid_argument("non-finite vehicle state");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("dt must be positive");
  if (!std::isfinite(thrust) || thrust < 0.0 || thrust > p.thrust_max)
    throw std::invalid_argument("thrust outside [0, thrust_max]");
  if (!std::isfinite(pitch_torque) || std::abs(pitch_torque) > p.pitch_torque_max)
    throw std::invalid_argument("pitch torque outside limits");
}
}  // namespace detail

VehicleState step(const VehicleState& s, const VehicleParams& p, double thrust,
                  double pitch_torque, const Wrench& external, double dt) {
  return step_with(s, p, thrust, pitch_torque,
                   [&](const VehicleState&) { return StageEval{external, {}}; }, dt)
      .next;
}

}  // namespace hornsim
