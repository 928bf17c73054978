#include "hornsim/contact.hpp"

#include <cmath>
#include <stdexcept>

namespace hornsim {

MaterialProps material_preset(Material m) {
  switch (m) {
    case Material::Soft:
      return {300.0, 4.0, std::numeric_limits<double>::infinity()};
    case Material::Hard:
      return {2000.0, 30.0, 0.48};
  }
  throw std::invalid_argument("unknown material");
}

void Horn::validate() const {
  if (id.empty()) throw std::invalid_argument("horn id must not be empty");
  if (!(k > 0.0) || !std::isfinite(k))
    throw std::invalid_argument("horn stiffness must be positive");
  if (!(c >= 0.0) || !std::isfinite(c))
    throw std::invalid_argument("horn damping must be non-negative");
  if (!(max_deflection > 0.0))
    throw std::invalid_argument("max_deflection must be positive");
  if (!(failure_energy > 0.0))
    throw std::invalid_argument("failure_energy must be positive");
  if (!(absorbed_energy >= 0.0))
    throw std::invalid_argument("absorbed_energy must be non-negative");
}

namespace {

Horn make_horn(std::string id, HornRow row, Vec2 tip, Material m) {
  const MaterialProps props = material_preset(m);
  Horn h;
  h.id = std::move(id);
  h.row = row;
  h.attach_body = tip;
  // The planar element stands in for the left/right pair of a row.
  h.k = 2.0 * props.k;
  h.c = 2.0 * props.c;
  h.material = m;
  h.failure_energy = 2.0 * props.failure_energy;
  return h;
}

}  // namespace

HornConfiguration HornConfiguration::preset(std::string_view name) {
  // The upper row sits high so a tilted approach meets it first and the
  // reaction moment pitches the vehicle away; the lower row reaches a touch
  // further out so the rotation brings it onto the wall while the upper
  // spring is still loaded.
  const Vec2 upper{0.12, 0.10};
  const Vec2 lower{0.13, -0.05};
  HornConfiguration cfg;
  cfg.name = std::string(name);
  if (name == "full_soft") {
    cfg.horns.push_back(make_horn("upper", HornRow::Upper, upper, Material::Soft));
    cfg.horns.push_back(make_horn("lower", HornRow::Lower, lower, Material::Soft));
  } else if (name == "half_soft") {
    cfg.horns.push_back(make_horn("upper", HornRow::Upper, upper, Material::Soft));
  } else if (name == "full_hard") {
    cfg.horns.push_back(make_horn("upper", HornRow::Upper, upper, Material::Hard));
    cfg.horns.push_back(make_horn("lower", HornRow::Lower, lower, Material::Hard));
  } else {
    throw std::invalid_argument("unknown horn configuration: " + cfg.name);
  }
  return cfg;
}

Deflection compute_deflection(const Horn& h, const VehicleState& s, const Wall& w) {
  const Vec2 tip = body_to_world(h.attach_body, s);
  Deflection d;
  const double pen = tip.x - w.x_wall;
  if (pen <= 0.0) return d;
  d.delta = pen;
  d.rate = body_point_velocity(h.attach_body, s).x;
  d.saturated = pen >= h.max_deflection;
  return d;
}

ContactEval contact_wrench(const HornConfiguration& cfg, const VehicleState& s,
                           const Wall& w, double friction_reg_vel) {
  ContactEval out;
  out.state.horns.resize(cfg.horns.size());
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  for (std::size_t i = 0; i < cfg.horns.size(); ++i) {
    const Horn& h = cfg.horns[i];
    const Deflection d = compute_deflection(h, s, w);
    HornContactState& hc = out.state.horns[i];
    hc.deflection = d.delta;
    hc.deflection_rate = d.rate;
    hc.in_contact = d.delta > 0.0;
    hc.saturated = d.saturated;
    if (!hc.in_contact || h.failed) continue;

    const double raw = h.k * d.delta + h.c * d.rate;
    const double fn = std::max(0.0, raw);  // wall can only push
    hc.normal_force = fn;

    // Lever arm from center of mass to the tip, world frame.
    const double rx = h.attach_body.x * c + h.attach_body.z * sn;
    const double rz = -h.attach_body.x * sn + h.attach_body.z * c;

    // Tangential (vertical) tip velocity drives regularized Coulomb friction.
    const Vec2 vtip = body_point_velocity(h.attach_body, s);
    const double ft = -w.mu * fn * std::tanh(vtip.z / friction_reg_vel);

    const double fx = -fn;  // wall pushes back along -x
    out.wrench.fx += fx;
    out.wrench.fz += ft;
    out.wrench.my += rz * fx - rx * ft;

    out.spring_energy += 0.5 * h.k * d.delta * d.delta;
    if (raw > 0.0) {
      out.damping_power += h.c * d.rate * d.rate;
    } else {
      // Force clamped at zero: the spring keeps relaxing but does no work on
      // the body, so the stored energy it sheds is lost from the budget.
      out.clamp_power += -h.k * d.delta * d.rate;
    }
    out.friction_power += -ft * vtip.z;
  }
  return out;
}

void update_damage(Horn& h, double normal_force, double deflection_rate, double dt) {
  if (h.failed) return;
  const double p = normal_force * deflection_rate;
  if (p > 0.0) h.absorbed_energy += p * dt;
  if (h.absorbed_energy >= h.failure_energy) h.failed = true;
}

}  // namespace hornsim
