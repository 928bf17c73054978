#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace hornsim {

struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

// Planar rigid body: x toward the wall, z up, theta > 0 leans toward the wall.
struct VehicleState {
  double t = 0.0;
  double x = 0.0;
  double z = 0.0;
  double theta = 0.0;  // rad, normalized to (-pi, pi]
  double vx = 0.0;
  double vz = 0.0;
  double q = 0.0;      // pitch rate, rad/s
  bool finite() const;
};

struct VehicleParams {
  double mass = 0.7;              // kg
  double inertia_yy = 0.005;      // kg m^2
  double gravity = 9.81;          // m/s^2
  double thrust_max = 14.0;       // N, must exceed mass*gravity
  double pitch_torque_max = 0.5;  // N m
  void validate() const;          // throws std::invalid_argument
};

struct Wrench {
  double fx = 0.0;  // N, world x
  double fz = 0.0;  // N, world z
  double my = 0.0;  // N m, pitch torque conjugate to theta
};

struct Wall {
  double x_wall = 0.5;  // plane location, m
  double mu = 0.3;      // Coulomb friction coefficient
};

// Wraps to (-pi, pi].
double normalize_angle(double a);

// x_w = x + px cos(theta) + pz sin(theta)
// z_w = z - px sin(theta) + pz cos(theta)
Vec2 body_to_world(const Vec2& p_body, const VehicleState& s);

// World-frame velocity of a body-fixed point: (vx + q*r_z, vz - q*r_x)
// with r the world-frame offset of the point from the center of mass.
Vec2 body_point_velocity(const Vec2& p_body, const VehicleState& s);

// Kinetic plus gravitational potential energy of the rigid body.
double total_energy(const VehicleState& s, const VehicleParams& p);

struct Accel {
  double ax = 0.0;
  double az = 0.0;
  double aq = 0.0;
};

// xdd = (T sin(theta) + fx) / m
// zdd = (T cos(theta) + fz) / m - g
// qd  = (torque + my) / I
Accel acceleration(const VehicleState& s, const VehicleParams& p, double thrust,
                   double pitch_torque, const Wrench& external);

// One RK4 step with the external wrench held constant over the step.
VehicleState step(const VehicleState& s, const VehicleParams& p, double thrust,
                  double pitch_torque, const Wrench& external, double dt);

// Stage evaluation for step_with: the wrench at a stage state plus up to four
// power terms (caller-defined meaning) integrated with the same RK4 weights.
struct StageEval {
  Wrench wrench;
  std::array<double, 4> powers{};
};

struct StepResult {
  VehicleState next;
  double thrust_work = 0.0;          // actuator work over the step, J
  std::array<double, 4> integrals{}; // integrated power terms, J
};

namespace detail {
void check_step_inputs(const VehicleState& s, const VehicleParams& p,
                       double thrust, double pitch_torque, double dt);
}

// RK4 with the external wrench re-evaluated at every stage. Required whenever
// the wrench depends on state (contact springs); holding it constant drops the
// contact coupling to first order.
template <class F>
StepResult step_with(const VehicleState& s0, const VehicleParams& p, double thrust,
                     double pitch_torque, F&& eval, double dt) {
  detail::check_step_inputs(s0, p, thrust, pitch_torque, dt);

  struct Deriv {
    double dx, dz, dth, dvx, dvz, dq;
    std::array<double, 4> pw;
    double pthr;
  };
  auto f = [&](const VehicleState& s) -> Deriv {
    StageEval e = eval(static_cast<const VehicleState&>(s));
    Accel a = acceleration(s, p, thrust, pitch_torque, e.wrench);
    double pthr = thrust * (s.vx * std::sin(s.theta) + s.vz * std::cos(s.theta)) +
                  pitch_torque * s.q;
    return {s.vx, s.vz, s.q, a.ax, a.az, a.aq, e.powers, pthr};
  };
  auto shifted = [&](const Deriv& d, double h) {
    VehicleState r = s0;
    r.t += h;
    r.x += h * d.dx;
    r.z += h * d.dz;
    r.theta += h * d.dth;
    r.vx += h * d.dvx;
    r.vz += h * d.dvz;
    r.q += h * d.dq;
    return r;
  };

  const Deriv k1 = f(s0);
  const Deriv k2 = f(shifted(k1, 0.5 * dt));
  const Deriv k3 = f(shifted(k2, 0.5 * dt));
  const Deriv k4 = f(shifted(k3, dt));

  auto mix = [&](double a, double b, double c, double d) {
    return dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
  };

  StepResult out;
  out.next = s0;
  out.next.t = s0.t + dt;
  out.next.x += mix(k1.dx, k2.dx, k3.dx, k4.dx);
  out.next.z += mix(k1.dz, k2.dz, k3.dz, k4.dz);
  out.next.theta = normalize_angle(out.next.theta + mix(k1.dth, k2.dth, k3.dth, k4.dth));
  out.next.vx += mix(k1.dvx, k2.dvx, k3.dvx, k4.dvx);
  out.next.vz += mix(k1.dvz, k2.dvz, k3.dvz, k4.dvz);
  out.next.q += mix(k1.dq, k2.dq, k3.dq, k4.dq);
  out.thrust_work = mix(k1.pthr, k2.pthr, k3.pthr, k4.pthr);
  for (int i = 0; i < 4; ++i)
    out.integrals[i] = mix(k1.pw[i], k2.pw[i], k3.pw[i], k4.pw[i]);
  return out;
}

}  // namespace hornsim
