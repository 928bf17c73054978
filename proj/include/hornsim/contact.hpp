#pragma once

#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "hornsim/dynamics.hpp"

namespace hornsim {

enum class Material { Soft, Hard };
enum class HornRow { Upper, Lower };

struct MaterialProps {
  double k;               // N/m, single physical horn
  double c;               // N s/m
  double failure_energy;  // J, infinity when the material does not fail
};

// Soft: compliant printed elastomer, heavy damping, does not fail.
// Hard: stiff printed plastic, light damping, limited absorbed energy.
MaterialProps material_preset(Material m);

// One planar horn. The planar model merges the left/right pair of a physical
// row into a single element, so k, c and failure_energy are twice the
// single-horn preset values.
struct Horn {
  std::string id;
  HornRow row = HornRow::Upper;
  Vec2 attach_body;             // tip position in the body frame, m
  double k = 0.0;               // N/m
  double c = 0.0;               // N s/m
  double max_deflection = 0.03; // m, saturation marker, force keeps growing past it
  Material material = Material::Soft;
  double failure_energy = std::numeric_limits<double>::infinity();  // J
  double absorbed_energy = 0.0; // J, compression work accumulated so far
  bool failed = false;
  void validate() const;
};

struct HornConfiguration {
  std::string name;
  std::vector<Horn> horns;
  // "full_soft", "half_soft" (upper row only) or "full_hard".
  static HornConfiguration preset(std::string_view name);
};

struct HornContactState {
  double deflection = 0.0;       // m, geometric tip penetration, not capped
  double deflection_rate = 0.0;  // m/s, zero when out of contact
  double normal_force = 0.0;     // N, >= 0
  bool in_contact = false;       // deflection > 0
  bool saturated = false;        // deflection >= max_deflection
};

struct ContactState {
  std::vector<HornContactState> horns;  // parallel to HornConfiguration::horns
};

struct Deflection {
  double delta = 0.0;
  double rate = 0.0;
  bool saturated = false;
};

// delta = max(0, tip_x - x_wall) against a vertical wall plane; rate is the
// horizontal tip velocity while penetrating, zero otherwise.
Deflection compute_deflection(const Horn& h, const VehicleState& s, const Wall& w);

struct ContactEval {
  Wrench wrench;
  ContactState state;
  double damping_power = 0.0;   // W, dissipated in horn dampers
  double clamp_power = 0.0;     // W, spring energy dropped while the unilateral force is clamped at zero
  double friction_power = 0.0;  // W, dissipated against the wall surface
  double spring_energy = 0.0;   // J, sum of 0.5 k delta^2 over penetrating horns
};

// Sums per-horn spring-damper normal forces (compression only) plus regularized
// Coulomb friction along the wall. Failed horns contribute geometry but no force.
// Torque about the pitch axis uses the lever arm r from center of mass to tip:
// my = r_z*Fx - r_x*Fz, the generalized torque conjugate to theta for the
// body_to_world convention (checked by the energy conservation tests).
ContactEval contact_wrench(const HornConfiguration& cfg, const VehicleState& s,
                           const Wall& w, double friction_reg_vel = 0.01);

// absorbed_energy += max(0, F_n * deflection_rate) * dt; crossing
// failure_energy latches failed (the wrench then drops this horn).
void update_damage(Horn& h, double normal_force, double deflection_rate, double dt);

}  // namespace hornsim
