#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "hornsim/config.hpp"
#include "hornsim/csv.hpp"

using namespace hornsim;

TEST_CASE("scenario names round-trip") {
  for (Scenario s : {Scenario::TouchAndGo, Scenario::Pushing, Scenario::Scripted})
    CHECK(scenario_from_name(scenario_name(s)) == s);
  CHECK(scenario_name(Scenario::TouchAndGo) == "touch_and_go");
  CHECK_THROWS(scenario_from_name("hovering"));
}

TEST_CASE("defaults validate") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config text round-trips byte-identically") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::Pushing;
  cfg.seed = 77;
  cfg.wall.mu = 0.4567890123456789;
  cfg.sensing.noise_sigma = 3.25;
  cfg.profile.approach_pitch = 0.2617993877991494;

  const std::string text = config_to_text(cfg);
  const ExperimentConfig back = parse_config_text(text);
  CHECK(config_to_text(back) == text);
  CHECK(back.scenario == Scenario::Pushing);
  CHECK(back.seed == 77);
  CHECK(back.wall.mu == cfg.wall.mu);
  CHECK(back.profile.approach_pitch == cfg.profile.approach_pitch);
}

TEST_CASE("scripted profile survives the round trip") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::Scripted;
  cfg.profile.script = {{0.0, 0.0, 1.0}, {2.0, 0.1, 1.2}};
  const ExperimentConfig back = parse_config_text(config_to_text(cfg));
  REQUIRE(back.profile.script.size() == 2);
  CHECK(back.profile.script[1].t == 2.0);
  CHECK(back.profile.script[1].pitch_sp == 0.1);
  CHECK(back.profile.script[1].z_sp == 1.2);
  CHECK_NOTHROW(back.validate());
}

TEST_CASE("unknown keys are hard errors with a line number") {
  const std::string text = "[wall]\nx = 0.3\nbogus = 1\n";
  try {
    parse_config_text(text);
    FAIL("expected a parse error");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("wall.bogus") != std::string::npos);
  }
  CHECK_THROWS(parse_config_text("[wall]\nmu = fast\n"));
  CHECK_THROWS(parse_config_text("[nonsense]\nx = 1\n"));
}

TEST_CASE("comments and blank lines are ignored") {
  const std::string text =
      "# header comment\n\nseed = 9\n[wall]\n# mid comment\nmu = 0.25\n";
  const ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.seed == 9);
  CHECK(cfg.wall.mu == 0.25);
}

TEST_CASE("overrides hit every section") {
  ExperimentConfig cfg;
  apply_override(cfg, "scenario", "pushing");
  apply_override(cfg, "duration", "12.5");
  apply_override(cfg, "seed", "4");
  apply_override(cfg, "configuration", "full_hard");
  apply_override(cfg, "vehicle.mass", "0.8");
  apply_override(cfg, "wall.x", "0.4");
  apply_override(cfg, "contact.soft_k", "350");
  apply_override(cfg, "sensing.noise_sigma", "0");
  apply_override(cfg, "control.pitch_kp", "0.9");
  apply_override(cfg, "profile.n_bumps", "5");
  apply_override(cfg, "initial.z", "1.5");

  CHECK(cfg.scenario == Scenario::Pushing);
  CHECK(cfg.duration == 12.5);
  CHECK(cfg.seed == 4);
  CHECK(cfg.configuration == "full_hard");
  CHECK(cfg.vehicle.mass == 0.8);
  CHECK(cfg.wall.x_wall == 0.4);
  CHECK(cfg.contact.soft_k == 350.0);
  CHECK(cfg.sensing.noise_sigma == 0.0);
  CHECK(cfg.control.pitch.kp == 0.9);
  CHECK(cfg.profile.n_bumps == 5);
  CHECK(cfg.initial.z == 1.5);

  CHECK_THROWS(apply_override(cfg, "wall.bogus", "1"));
  CHECK_THROWS(apply_override(cfg, "duration", "fast"));
}

TEST_CASE("validation rejects broken combinations") {
  ExperimentConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS(cfg.validate());

  cfg = {};
  cfg.dt = 0.0007;  // 50 Hz sampling is not a multiple
  CHECK_THROWS(cfg.validate());

  cfg = {};
  cfg.sensing.on_threshold = 10.0;  // below the off threshold
  CHECK_THROWS(cfg.validate());

  cfg = {};
  cfg.sensing.filter_cutoff = 30.0;  // above Nyquist
  CHECK_THROWS(cfg.validate());

  cfg = {};
  cfg.configuration = "half_hard";
  CHECK_THROWS(cfg.validate());

  cfg = {};
  cfg.scenario = Scenario::Scripted;  // empty script
  CHECK_THROWS(cfg.validate());

  cfg = {};
  cfg.profile.n_bumps = 0;
  CHECK_THROWS(cfg.validate());

  cfg = {};
  cfg.scenario = Scenario::Scripted;
  cfg.profile.script = {{1.0, 0.0, 1.0}, {1.0, 0.1, 1.0}};  // not increasing
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("horn configuration builder applies material overrides") {
  ExperimentConfig cfg;
  cfg.contact.soft_k = 400.0;
  cfg.contact.upper_tip = {0.10, 0.04};
  HornConfiguration horns = build_horn_configuration(cfg);
  REQUIRE(horns.horns.size() == 2);
  CHECK(horns.horns[0].k == 800.0);  // merged pair
  CHECK(horns.horns[0].attach_body.x == 0.10);

  cfg.configuration = "half_soft";
  horns = build_horn_configuration(cfg);
  CHECK(horns.horns.size() == 1);

  cfg.configuration = "full_hard";
  cfg.contact.hard_failure_energy = 0.7;
  horns = build_horn_configuration(cfg);
  CHECK(horns.horns[0].failure_energy == doctest::Approx(1.4));
}

TEST_CASE("profile factory matches the scenario") {
  ExperimentConfig cfg;
  cfg.profile.approach_pitch = 0.3;
  CommandProfile p = make_profile(cfg);
  REQUIRE(std::holds_alternative<TouchAndGoProfile>(p));
  CHECK(std::get<TouchAndGoProfile>(p).approach_pitch == 0.3);

  cfg.scenario = Scenario::Pushing;
  p = make_profile(cfg);
  REQUIRE(std::holds_alternative<PushingProfile>(p));

  cfg.scenario = Scenario::Scripted;
  cfg.profile.script = {{0.0, 0.0, 1.0}};
  p = make_profile(cfg);
  REQUIRE(std::holds_alternative<ScriptedProfile>(p));
  CHECK(std::get<ScriptedProfile>(p).points.size() == 1);
}

TEST_CASE("load_config reads a file") {
  const std::string path = "test_config_tmp.ini";
  {
    std::ofstream out(path);
    out << "duration = 6\n[profile]\nn_bumps = 2\n";
  }
  const ExperimentConfig cfg = load_config(path);
  CHECK(cfg.duration == 6.0);
  CHECK(cfg.profile.n_bumps == 2);
  std::remove(path.c_str());
  CHECK_THROWS(load_config("does_not_exist.ini"));
}

TEST_CASE("g9 formatting is idempotent through a parse cycle") {
  for (double v : {1.0 / 3.0, 0.1, 123456.789, -2.5e-7, 0.0, 1e18}) {
    const std::string a = format_g9(v);
    const std::string b = format_g9(csv_number(a));
    CHECK(a == b);
  }
}

TEST_CASE("csv reader round-trips a small table") {
  const std::string path = "test_csv_tmp.csv";
  {
    std::ofstream out(path);
    out << "a,b,c\n1,2.5,x\n3,-4,y\n";
  }
  const CsvTable t = read_csv(path);
  REQUIRE(t.columns.size() == 3);
  CHECK(t.column("b") == 1);
  CHECK(t.column("nope") == -1);
  REQUIRE(t.rows.size() == 2);
  CHECK(csv_number(t.rows[0][1]) == 2.5);
  CHECK(t.rows[1][2] == "y");
  std::remove(path.c_str());

  {
    std::ofstream out(path);
    out << "a,b\n1\n";
  }
  CHECK_THROWS(read_csv(path));
  std::remove(path.c_str());

  CHECK_THROWS(csv_number("1.2x"));
  CHECK_THROWS(csv_number(""));
}
