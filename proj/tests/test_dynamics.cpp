#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hornsim/dynamics.hpp"

using namespace hornsim;

namespace {
constexpr double kPi = 3.14159265358979323846;

VehicleState ballistic_start() {
  VehicleState s;
  s.x = 0.2;
  s.z = 5.0;
  s.vx = 0.4;
  s.vz = 1.5;
  return s;
}

double ballistic_error(double dt, int steps) {
  const VehicleParams p;
  VehicleState s = ballistic_start();
  for (int i = 0; i < steps; ++i) s = step(s, p, 0.0, 0.0, {}, dt);
  const double x_ref = 0.2 + 0.4 * s.t;
  const double z_ref = 5.0 + 1.5 * s.t - 0.5 * p.gravity * s.t * s.t;
  const double vz_ref = 1.5 - p.gravity * s.t;
  return std::max({std::abs(s.x - x_ref), std::abs(s.z - z_ref),
                   std::abs(s.vx - 0.4), std::abs(s.vz - vz_ref)});
}

// Horizontal spring through step_with; vertical free fall rides along.
double oscillator_error(double dt, int steps) {
  VehicleParams p;
  p.mass = 1.0;
  VehicleState s;
  s.x = 1.0;
  const double w = 5.0;
  auto eval = [&](const VehicleState& st) {
    StageEval e;
    e.wrench.fx = -w * w * st.x;
    return e;
  };
  for (int i = 0; i < steps; ++i) s = step_with(s, p, 0.0, 0.0, eval, dt).next;
  const double x_ref = std::cos(w * s.t);
  const double vx_ref = -w * std::sin(w * s.t);
  return std::hypot(s.x - x_ref, (s.vx - vx_ref) / w);
}
}  // namespace

TEST_CASE("angle normalization lands in (-pi, pi]") {
  CHECK(normalize_angle(0.0) == doctest::Approx(0.0));
  CHECK(normalize_angle(kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(1.5 * kPi) == doctest::Approx(-0.5 * kPi));
  CHECK(normalize_angle(-7.5 * kPi) == doctest::Approx(0.5 * kPi));
  for (double a = -20.0; a < 20.0; a += 0.37) {
    const double n = normalize_angle(a);
    CHECK(n > -kPi);
    CHECK(n <= kPi);
    CHECK(std::abs(std::remainder(n - a, 2.0 * kPi)) < 1e-9);
  }
}

TEST_CASE("body to world rotation") {
  VehicleState s;
  s.x = 1.0;
  s.z = 2.0;

  SUBCASE("identity at zero pitch") {
    const Vec2 w = body_to_world({0.12, 0.05}, s);
    CHECK(w.x == doctest::Approx(1.12));
    CHECK(w.z == doctest::Approx(2.05));
  }
  SUBCASE("positive pitch swings a forward point toward the wall and down") {
    s.theta = 0.5 * kPi;
    const Vec2 w = body_to_world({0.12, 0.05}, s);
    CHECK(w.x == doctest::Approx(1.05));
    CHECK(w.z == doctest::Approx(2.0 - 0.12));
  }
  SUBCASE("rotation preserves distance") {
    for (double th = -3.0; th < 3.0; th += 0.17) {
      s.theta = th;
      const Vec2 w = body_to_world({0.12, 0.05}, s);
      const double r = std::hypot(w.x - s.x, w.z - s.z);
      CHECK(r == doctest::Approx(std::hypot(0.12, 0.05)).epsilon(1e-12));
    }
  }
}

TEST_CASE("body point velocity matches the finite-difference tip motion") {
  VehicleState s;
  s.x = 0.3;
  s.z = 1.1;
  s.theta = 0.4;
  s.vx = 0.7;
  s.vz = -0.2;
  s.q = 1.3;
  const Vec2 p{0.12, -0.05};

  const Vec2 v = body_point_velocity(p, s);
  const double h = 1e-7;
  VehicleState s2 = s;
  s2.x += h * s.vx;
  s2.z += h * s.vz;
  s2.theta += h * s.q;
  const Vec2 a = body_to_world(p, s);
  const Vec2 b = body_to_world(p, s2);
  CHECK(v.x == doctest::Approx((b.x - a.x) / h).epsilon(1e-6));
  CHECK(v.z == doctest::Approx((b.z - a.z) / h).epsilon(1e-6));
}

TEST_CASE("hover is an equilibrium") {
  const VehicleParams p;
  VehicleState s;
  s.z = 1.0;
  const double hover = p.mass * p.gravity;
  for (int i = 0; i < 2000; ++i) s = step(s, p, hover, 0.0, {}, 0.001);
  CHECK(std::abs(s.z - 1.0) < 1e-12);
  CHECK(std::abs(s.vz) < 1e-12);
  CHECK(std::abs(s.x) < 1e-12);
  CHECK(std::abs(s.theta) < 1e-12);
}

TEST_CASE("ballistic flight is integrated to roundoff") {
  CHECK(ballistic_error(0.004, 250) < 1e-9);
  CHECK(ballistic_error(0.002, 500) < 1e-9);
  CHECK(ballistic_error(0.001, 1000) < 1e-9);
}

TEST_CASE("fourth-order convergence on an oscillating wrench") {
  const double e4 = oscillator_error(0.004, 300);
  const double e2 = oscillator_error(0.002, 600);
  const double e1 = oscillator_error(0.001, 1200);
  CHECK(e4 > 1e-12);  // above the roundoff floor, so the ratios mean something
  CHECK(e4 / e2 > 12.0);
  CHECK(e2 / e1 > 12.0);
  CHECK(e1 < 1e-6);
}

TEST_CASE("free fall conserves total energy") {
  const VehicleParams p;
  VehicleState s = ballistic_start();
  const double e0 = total_energy(s, p);
  for (int i = 0; i < 3000; ++i) s = step(s, p, 0.0, 0.0, {}, 0.001);
  CHECK(std::abs(total_energy(s, p) - e0) < 1e-6);
}

TEST_CASE("vertical thrust work matches the energy gain") {
  const VehicleParams p;
  VehicleState s;
  s.z = 1.0;
  const double thrust = 9.0;
  double work = 0.0;
  const double e0 = total_energy(s, p);
  for (int i = 0; i < 1000; ++i) {
    auto r = step_with(s, p, thrust, 0.0, [](const VehicleState&) { return StageEval{}; },
                       0.001);
    work += r.thrust_work;
    s = r.next;
  }
  CHECK(total_energy(s, p) - e0 == doctest::Approx(work).epsilon(1e-9));
}

TEST_CASE("stage power integrals use the same quadrature as the state") {
  const VehicleParams p;
  VehicleState s = ballistic_start();
  double i0 = 0.0, i1 = 0.0;
  const double z0 = s.z;
  for (int i = 0; i < 500; ++i) {
    auto r = step_with(s, p, 0.0, 0.0,
                       [](const VehicleState& st) {
                         StageEval e;
                         e.powers[0] = 1.0;
                         e.powers[1] = st.vz;
                         return e;
                       },
                       0.002);
    i0 += r.integrals[0];
    i1 += r.integrals[1];
    s = r.next;
  }
  CHECK(i0 == doctest::Approx(s.t).epsilon(1e-12));
  CHECK(i1 == doctest::Approx(s.z - z0).epsilon(1e-9));
}

TEST_CASE("total energy formula") {
  VehicleParams p;
  VehicleState s;
  s.z = 2.0;
  s.vx = 3.0;
  s.vz = 4.0;
  s.q = 10.0;
  const double want = 0.5 * p.mass * 25.0 + 0.5 * p.inertia_yy * 100.0 +
                      p.mass * p.gravity * 2.0;
  CHECK(total_energy(s, p) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("step input validation") {
  const VehicleParams p;
  VehicleState s;
  CHECK_THROWS_AS(step(s, p, 0.0, 0.0, {}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step(s, p, -1.0, 0.0, {}, 0.001), std::invalid_argument);
  CHECK_THROWS_AS(step(s, p, p.thrust_max + 1.0, 0.0, {}, 0.001), std::invalid_argument);
  CHECK_THROWS_AS(step(s, p, 0.0, p.pitch_torque_max + 0.1, {}, 0.001),
                  std::invalid_argument);
  s.vx = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step(s, p, 0.0, 0.0, {}, 0.001), std::invalid_argument);
}

TEST_CASE("vehicle parameter validation") {
  VehicleParams p;
  CHECK_NOTHROW(p.validate());
  p.thrust_max = 5.0;  // below hover weight
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.mass = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.inertia_yy = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
