#include <doctest.h>

#include <cmath>

#include "romgait/biped_env.hpp"
#include "romgait/rng.hpp"
#include "romgait/rom_env.hpp"

using namespace romgait;

namespace {

BipedAction random_action(Rng& rng) {
  BipedAction a;
  for (auto& t : a.joint_torques) t = rng.uniform(-1.0, 1.0);
  return a;
}

}  // namespace

TEST_SUITE("biped_env") {

TEST_CASE("reset with the same seed is identical") {
  BipedEnv a, b;
  const Eigen::VectorXd va = a.reset(42).vec();
  const Eigen::VectorXd vb = b.reset(42).vec();
  REQUIRE(va.size() == BipedObservation::kDim);
  for (Eigen::Index i = 0; i < va.size(); ++i) CHECK(va(i) == vb(i));
}

TEST_CASE("reset stands at the nominal root height with both feet planted") {
  BipedEnv env;
  const BipedObservation o = env.reset(5);
  const double nominal = env.params().nominal_root_height();
  CHECK(o.root_height >= 0.9 * nominal);
  CHECK(o.root_height <= 1.1 * nominal);
  CHECK(o.foot_contact_flags[0]);
  CHECK(o.foot_contact_flags[1]);
  CHECK(o.root_pitch == doctest::Approx(0.0));
  for (const double q : o.joint_angles) CHECK(q == doctest::Approx(0.0));
}

TEST_CASE("passive biped falls from standing") {
  BipedEpisodeConfig cfg;
  cfg.max_steps = 900;
  BipedEnv env(BipedParams{}, cfg);
  env.reset(3);
  int steps = 0;
  bool done = false;
  while (!done) {
    const auto res = env.step(BipedAction{});  // zero torques
    done = res.done;
    ++steps;
    REQUIRE(steps <= cfg.max_steps);
  }
  // termination must come from the fall threshold, not the step limit
  CHECK(steps < cfg.max_steps);
  CHECK(env.observation().root_height < cfg.fall_threshold);
}

TEST_CASE("stepping a finished episode throws") {
  BipedEpisodeConfig cfg;
  cfg.max_steps = 1;
  BipedEnv env(BipedParams{}, cfg);
  env.reset(9);
  env.step(BipedAction{});
  CHECK(env.done());
  CHECK_THROWS_AS(env.step(BipedAction{}), SteppedAfterDone);
}

TEST_CASE("velocity-matching reward is 1 at the target and based on the whole-body COM") {
  BipedEpisodeConfig cfg;
  cfg.target_speed = 0.0;  // standing still matches a zero command
  BipedEnv env(BipedParams{}, cfg);
  env.reset(12);
  const auto res = env.step(BipedAction{});
  CHECK(res.reward > 0.95);  // near exp(0), small residue from reset noise
  CHECK(res.reward <= 1.0);
}

TEST_CASE("gait feature layout matches the ROM extractor convention") {
  RomEnv rom;
  rom.reset(1);
  BipedEnv biped;
  biped.reset(1);
  const GaitFeature fr = rom.normalized_gait_feature();
  const GaitFeature fb = biped.normalized_gait_feature();

  // standing, both mechanisms: height near 1, feet under the body, feet below
  for (const GaitFeature& f : {fr, fb}) {
    CHECK(f.y_com() == doctest::Approx(1.0).epsilon(0.08));
    CHECK(std::abs(f.x_l()) < 0.15);
    CHECK(std::abs(f.x_r()) < 0.15);
    CHECK(f.y_l() < -0.8);
    CHECK(f.y_r() < -0.8);
  }
  // componentwise agreement across embodiments at the shared standing pose
  for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(fr[c] - fb[c]) < 0.15);
}

TEST_CASE("gait feature matches an independent ankle recomputation") {
  BipedEnv env;
  env.reset(33);
  Rng rng(2);
  for (int i = 0; i < 30 && !env.done(); ++i) env.step(random_action(rng));

  const BipedParams& p = env.params();
  const World& w = env.world();
  const Body& torso = w.body(BipedEnv::kTorso);
  const GaitFeature f = env.gait_feature();
  const double h = env.nominal_height();

  for (int side = 0; side < 2; ++side) {
    const Body& foot = w.body(BipedEnv::kFootL + 3 * side);
    // the ankle sits a quarter rod behind the foot center, ankle_height up
    const Vec2 ankle = foot.world_point({-0.25 * p.foot_length, p.ankle_height});
    CHECK(std::abs(f[1 + 2 * static_cast<std::size_t>(side)] -
                   (ankle.x - torso.state.position.x)) < 1e-9);
    CHECK(std::abs(f[2 + 2 * static_cast<std::size_t>(side)] -
                   (ankle.y - torso.state.position.y)) < 1e-9);
  }
  const GaitFeature norm = env.normalized_gait_feature();
  for (std::size_t c = 0; c < 5; ++c) CHECK(norm[c] == doctest::Approx(f[c] / h));
}

TEST_CASE("observation packs 24 finite components") {
  BipedEnv env;
  env.reset(77);
  Rng rng(4);
  for (int i = 0; i < 25 && !env.done(); ++i) {
    const Eigen::VectorXd v = env.observation().vec();
    REQUIRE(v.size() == 24);
    CHECK(v.allFinite());
    env.step(random_action(rng));
  }
}

TEST_CASE("contact flags reflect foot height") {
  BipedEnv env;
  env.reset(8);
  CHECK(env.observation().foot_contact_flags[0]);
  CHECK(env.observation().foot_contact_flags[1]);
  // geometric consistency with the physics contact tolerance
  const World& w = env.world();
  const BipedParams& p = env.params();
  for (int side = 0; side < 2; ++side) {
    const Body& foot = w.body(BipedEnv::kFootL + 3 * side);
    const double heel = foot.world_point({-0.5 * p.foot_length, 0.0}).y;
    const double toe = foot.world_point({0.5 * p.foot_length, 0.0}).y;
    const bool touching = heel <= w.config().contact_tolerance || toe <= w.config().contact_tolerance;
    CHECK(env.observation().foot_contact_flags[static_cast<std::size_t>(side)] == touching);
  }
}

TEST_CASE("invalid configuration names the key") {
  BipedEpisodeConfig cfg;
  cfg.max_steps = 0;
  try {
    BipedEnv env(BipedParams{}, cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("max_steps") != std::string::npos);
  }
}

}  // TEST_SUITE
