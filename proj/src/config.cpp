#include "hornsim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace hornsim {

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::TouchAndGo: return "touch_and_go";
    case Scenario::Pushing: return "pushing";
    case Scenario::Scripted: return "scripted";
  }
  throw std::invalid_argument("unknown scenario");
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "touch_and_go") return Scenario::TouchAndGo;
  if (name == "pushing") return Scenario::Pushing;
  if (name == "scripted") return Scenario::Scripted;
  throw std::runtime_error("unknown scenario: " + name);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v) {
  std::size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("bad number: " + v);
  }
  if (pos != v.size()) throw std::runtime_error("bad number: " + v);
  return d;
}

long long parse_int(const std::string& v) {
  std::size_t pos = 0;
  long long i;
  try {
    i = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("bad integer: " + v);
  }
  if (pos != v.size()) throw std::runtime_error("bad integer: " + v);
  return i;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string script_to_text(const std::vector<ScriptedPoint>& pts) {
  std::string out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ';';
    out += fmt(pts[i].t) + ':' + fmt(pts[i].pitch_sp) + ':' + fmt(pts[i].z_sp);
  }
  return out;
}

std::vector<ScriptedPoint> script_from_text(const std::string& text) {
  std::vector<ScriptedPoint> pts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    std::stringstream ps(item);
    std::string a, b, c;
    if (!std::getline(ps, a, ':') || !std::getline(ps, b, ':') ||
        !std::getline(ps, c))
      throw std::runtime_error("script point needs t:pitch:z, got: " + item);
    pts.push_back({parse_double(trim(a)), parse_double(trim(b)), parse_double(trim(c))});
  }
  return pts;
}

struct Key {
  std::string name;  // "section.key" or bare "key"
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::vector<Key> key_table() {
  std::vector<Key> t;
  auto dbl = [&t](std::string name, auto member) {
    t.push_back({std::move(name),
                 [member](ExperimentConfig& c, const std::string& v) { c.*member = parse_double(v); },
                 [member](const ExperimentConfig& c) { return fmt(c.*member); }});
  };
  auto sub = [&t](std::string name, auto outer, auto inner) {
    t.push_back({std::move(name),
                 [outer, inner](ExperimentConfig& c, const std::string& v) { (c.*outer).*inner = parse_double(v); },
                 [outer, inner](const ExperimentConfig& c) { return fmt((c.*outer).*inner); }});
  };

  t.push_back({"scenario",
               [](ExperimentConfig& c, const std::string& v) { c.scenario = scenario_from_name(v); },
               [](const ExperimentConfig& c) { return scenario_name(c.scenario); }});
  t.push_back({"configuration",
               [](ExperimentConfig& c, const std::string& v) { c.configuration = v; },
               [](const ExperimentConfig& c) { return c.configuration; }});
  dbl("dt", &ExperimentConfig::dt);
  dbl("duration", &ExperimentConfig::duration);
  dbl("drag", &ExperimentConfig::drag);
  t.push_back({"seed",
               [](ExperimentConfig& c, const std::string& v) {
                 const long long i = parse_int(v);
                 if (i < 0) throw std::runtime_error("seed must be >= 0");
                 c.seed = static_cast<std::uint64_t>(i);
               },
               [](const ExperimentConfig& c) { return std::to_string(c.seed); }});

  sub("vehicle.mass", &ExperimentConfig::vehicle, &VehicleParams::mass);
  sub("vehicle.inertia_yy", &ExperimentConfig::vehicle, &VehicleParams::inertia_yy);
  sub("vehicle.gravity", &ExperimentConfig::vehicle, &VehicleParams::gravity);
  sub("vehicle.thrust_max", &ExperimentConfig::vehicle, &VehicleParams::thrust_max);
  sub("vehicle.pitch_torque_max", &ExperimentConfig::vehicle, &VehicleParams::pitch_torque_max);

  sub("wall.x", &ExperimentConfig::wall, &Wall::x_wall);
  sub("wall.mu", &ExperimentConfig::wall, &Wall::mu);

  sub("contact.soft_k", &ExperimentConfig::contact, &ContactParams::soft_k);
  sub("contact.soft_c", &ExperimentConfig::contact, &ContactParams::soft_c);
  sub("contact.hard_k", &ExperimentConfig::contact, &ContactParams::hard_k);
  sub("contact.hard_c", &ExperimentConfig::contact, &ContactParams::hard_c);
  sub("contact.hard_failure_energy", &ExperimentConfig::contact, &ContactParams::hard_failure_energy);
  sub("contact.max_deflection", &ExperimentConfig::contact, &ContactParams::max_deflection);
  sub("contact.friction_reg_vel", &ExperimentConfig::contact, &ContactParams::friction_reg_vel);
  t.push_back({"contact.upper_tip_x",
               [](ExperimentConfig& c, const std::string& v) { c.contact.upper_tip.x = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.contact.upper_tip.x); }});
  t.push_back({"contact.upper_tip_z",
               [](ExperimentConfig& c, const std::string& v) { c.contact.upper_tip.z = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.contact.upper_tip.z); }});
  t.push_back({"contact.lower_tip_x",
               [](ExperimentConfig& c, const std::string& v) { c.contact.lower_tip.x = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.contact.lower_tip.x); }});
  t.push_back({"contact.lower_tip_z",
               [](ExperimentConfig& c, const std::string& v) { c.contact.lower_tip.z = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.contact.lower_tip.z); }});

  t.push_back({"sensing.adc_bits",
               [](ExperimentConfig& c, const std::string& v) { c.sensing.adc.bits = static_cast<int>(parse_int(v)); },
               [](const ExperimentConfig& c) { return std::to_string(c.sensing.adc.bits); }});
  t.push_back({"sensing.adc_full_scale",
               [](ExperimentConfig& c, const std::string& v) { c.sensing.adc.full_scale = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.sensing.adc.full_scale); }});
  t.push_back({"sensing.sample_rate",
               [](ExperimentConfig& c, const std::string& v) { c.sensing.adc.sample_rate = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.sensing.adc.sample_rate); }});
  t.push_back({"sensing.v_in",
               [](ExperimentConfig& c, const std::string& v) { c.sensing.adc.v_in = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.sensing.adc.v_in); }});
  t.push_back({"sensing.r_fixed",
               [](ExperimentConfig& c, const std::string& v) { c.sensing.adc.r_fixed = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.sensing.adc.r_fixed); }});
  sub("sensing.noise_sigma", &ExperimentConfig::sensing, &SensingParams::noise_sigma);
  sub("sensing.neutral_resistance", &ExperimentConfig::sensing, &SensingParams::neutral_resistance);
  t.push_back({"sensing.filter_order",
               [](ExperimentConfig& c, const std::string& v) { c.sensing.filter_order = static_cast<int>(parse_int(v)); },
               [](const ExperimentConfig& c) { return std::to_string(c.sensing.filter_order); }});
  sub("sensing.filter_cutoff", &ExperimentConfig::sensing, &SensingParams::filter_cutoff);
  sub("sensing.on_threshold", &ExperimentConfig::sensing, &SensingParams::on_threshold);
  sub("sensing.off_threshold", &ExperimentConfig::sensing, &SensingParams::off_threshold);
  sub("sensing.min_event_duration", &ExperimentConfig::sensing, &SensingParams::min_event_duration);
  sub("sensing.baseline_window", &ExperimentConfig::sensing, &SensingParams::baseline_window);
  sub("sensing.creep_gain", &ExperimentConfig::sensing, &SensingParams::creep_gain);
  sub("sensing.creep_decay_tau", &ExperimentConfig::sensing, &SensingParams::creep_decay_tau);

  auto gain = [&t](const char* name, auto member) {
    t.push_back({std::string("control.pitch_") + name,
                 [member](ExperimentConfig& c, const std::string& v) { c.control.pitch.*member = parse_double(v); },
                 [member](const ExperimentConfig& c) { return fmt(c.control.pitch.*member); }});
    t.push_back({std::string("control.alt_") + name,
                 [member](ExperimentConfig& c, const std::string& v) { c.control.altitude.*member = parse_double(v); },
                 [member](const ExperimentConfig& c) { return fmt(c.control.altitude.*member); }});
  };
  gain("kp", &PidGains::kp);
  gain("ki", &PidGains::ki);
  gain("kd", &PidGains::kd);
  gain("output_limit", &PidGains::output_limit);
  gain("integral_limit", &PidGains::integral_limit);

  sub("profile.approach_pitch", &ExperimentConfig::profile, &ProfileParams::approach_pitch);
  t.push_back({"profile.n_bumps",
               [](ExperimentConfig& c, const std::string& v) { c.profile.n_bumps = static_cast<int>(parse_int(v)); },
               [](const ExperimentConfig& c) { return std::to_string(c.profile.n_bumps); }});
  sub("profile.approach_start", &ExperimentConfig::profile, &ProfileParams::approach_start);
  sub("profile.separation_hold", &ExperimentConfig::profile, &ProfileParams::separation_hold);
  sub("profile.hold_duration", &ExperimentConfig::profile, &ProfileParams::hold_duration);
  sub("profile.release_pitch", &ExperimentConfig::profile, &ProfileParams::release_pitch);
  sub("profile.release_hold", &ExperimentConfig::profile, &ProfileParams::release_hold);
  sub("profile.z_setpoint", &ExperimentConfig::profile, &ProfileParams::z_setpoint);
  t.push_back({"profile.script",
               [](ExperimentConfig& c, const std::string& v) { c.profile.script = script_from_text(v); },
               [](const ExperimentConfig& c) { return script_to_text(c.profile.script); }});

  t.push_back({"initial.x",
               [](ExperimentConfig& c, const std::string& v) { c.initial.x = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.initial.x); }});
  t.push_back({"initial.z",
               [](ExperimentConfig& c, const std::string& v) { c.initial.z = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.initial.z); }});
  t.push_back({"initial.theta",
               [](ExperimentConfig& c, const std::string& v) { c.initial.theta = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.initial.theta); }});
  t.push_back({"initial.vx",
               [](ExperimentConfig& c, const std::string& v) { c.initial.vx = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.initial.vx); }});
  t.push_back({"initial.vz",
               [](ExperimentConfig& c, const std::string& v) { c.initial.vz = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.initial.vz); }});
  t.push_back({"initial.q",
               [](ExperimentConfig& c, const std::string& v) { c.initial.q = parse_double(v); },
               [](const ExperimentConfig& c) { return fmt(c.initial.q); }});
  return t;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> t = key_table();
  return t;
}

const Key* find_key(const std::string& name) {
  for (const Key& k : keys())
    if (k.name == name) return &k;
  return nullptr;
}

}  // namespace

void ExperimentConfig::validate() const {
  vehicle.validate();
  if (!(dt > 0.0)) throw std::runtime_error("dt must be positive");
  if (!(duration > 0.0)) throw std::runtime_error("duration must be positive");
  if (!(drag >= 0.0)) throw std::runtime_error("drag must be >= 0");
  if (!(wall.mu >= 0.0)) throw std::runtime_error("wall.mu must be >= 0");
  build_horn_configuration(*this);  // validates configuration name and horn params
  if (!(sensing.adc.sample_rate > 0.0))
    throw std::runtime_error("sensing.sample_rate must be positive");
  const double per = 1.0 / (sensing.adc.sample_rate * dt);
  if (std::abs(per - std::round(per)) > 1e-6)
    throw std::runtime_error("sensor period must be an integer multiple of dt");
  if (!(sensing.on_threshold > sensing.off_threshold) || !(sensing.off_threshold > 0.0))
    throw std::runtime_error("need on_threshold > off_threshold > 0");
  if (sensing.filter_order < 1) throw std::runtime_error("filter_order must be >= 1");
  if (!(sensing.filter_cutoff > 0.0) ||
      !(sensing.filter_cutoff < 0.5 * sensing.adc.sample_rate))
    throw std::runtime_error("filter_cutoff must sit below Nyquist");
  if (scenario == Scenario::Scripted) {
    if (profile.script.empty())
      throw std::runtime_error("scripted scenario needs profile.script points");
    for (std::size_t i = 1; i < profile.script.size(); ++i)
      if (!(profile.script[i].t > profile.script[i - 1].t))
        throw std::runtime_error("script times must be strictly increasing");
  }
  if (profile.n_bumps < 1) throw std::runtime_error("profile.n_bumps must be >= 1");
  if (!(profile.hold_duration > 0.0))
    throw std::runtime_error("profile.hold_duration must be positive");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    const Key* k = find_key(full);
    if (!k)
      throw std::runtime_error("line " + std::to_string(lineno) + ": unknown key '" + full + "'");
    try {
      k->set(cfg, value);
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(lineno) + " (" + full + "): " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& dotted_key,
                    const std::string& value) {
  const Key* k = find_key(dotted_key);
  if (!k) throw std::runtime_error("unknown config key: " + dotted_key);
  k->set(cfg, value);
}

std::string config_to_text(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const Key& k : keys()) {
    const auto dot = k.name.find('.');
    const std::string sec = dot == std::string::npos ? "" : k.name.substr(0, dot);
    const std::string leaf = dot == std::string::npos ? k.name : k.name.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += leaf + " = " + k.get(cfg) + "\n";
  }
  return out;
}

HornConfiguration build_horn_configuration(const ExperimentConfig& cfg) {
  const ContactParams& cp = cfg.contact;
  auto make = [&](const char* id, HornRow row, Vec2 tip, Material m) {
    Horn h;
    h.id = id;
    h.row = row;
    h.attach_body = tip;
    const bool hard = m == Material::Hard;
    h.k = 2.0 * (hard ? cp.hard_k : cp.soft_k);
    h.c = 2.0 * (hard ? cp.hard_c : cp.soft_c);
    h.max_deflection = cp.max_deflection;
    h.material = m;
    h.failure_energy = hard ? 2.0 * cp.hard_failure_energy
                            : std::numeric_limits<double>::infinity();
    h.validate();
    return h;
  };
  HornConfiguration hc;
  hc.name = cfg.configuration;
  if (cfg.configuration == "full_soft") {
    hc.horns.push_back(make("upper", HornRow::Upper, cp.upper_tip, Material::Soft));
    hc.horns.push_back(make("lower", HornRow::Lower, cp.lower_tip, Material::Soft));
  } else if (cfg.configuration == "half_soft") {
    hc.horns.push_back(make("upper", HornRow::Upper, cp.upper_tip, Material::Soft));
  } else if (cfg.configuration == "full_hard") {
    hc.horns.push_back(make("upper", HornRow::Upper, cp.upper_tip, Material::Hard));
    hc.horns.push_back(make("lower", HornRow::Lower, cp.lower_tip, Material::Hard));
  } else {
    throw std::runtime_error("unknown horn configuration: " + cfg.configuration);
  }
  return hc;
}

CommandProfile make_profile(const ExperimentConfig& cfg) {
  const ProfileParams& p = cfg.profile;
  switch (cfg.scenario) {
    case Scenario::TouchAndGo:
      return TouchAndGoProfile{p.approach_pitch, p.n_bumps, p.approach_start,
                               p.separation_hold, p.z_setpoint};
    case Scenario::Pushing:
      return PushingProfile{p.approach_pitch, p.hold_duration, p.release_pitch,
                            p.release_hold, p.approach_start, p.z_setpoint};
    case Scenario::Scripted:
      return ScriptedProfile{p.script};
  }
  throw std::runtime_error("unknown scenario");
}

}  // namespace hornsim
