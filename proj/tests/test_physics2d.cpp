#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "romgait/physics2d.hpp"

using namespace romgait;

namespace {

// hub + single spring-mass oscillator, no gravity
World make_oscillator(double mass, double k, double damping, double displacement, double dt,
                      int substeps) {
  WorldConfig wc;
  wc.gravity = {0.0, 0.0};
  wc.dt = dt;
  wc.substeps = substeps;
  wc.ground_height = -100.0;
  World w(wc);
  const int hub = w.add_static_body({0.0, 0.0});
  const int foot = w.add_body(mass, 1e-4, {0.0, -(1.0 + displacement)});
  SpringLegParams leg;
  leg.hub = hub;
  leg.foot = foot;
  leg.rest_length = 1.0;
  leg.stiffness = k;
  leg.damping = damping;
  leg.hip_damping = 0.0;
  w.add_spring_leg(leg);
  return w;
}

}  // namespace

TEST_SUITE("physics2d") {

TEST_CASE("spring_force at rest length is zero") {
  SpringLeg leg;
  leg.params.rest_length = 1.0;
  leg.params.stiffness = 100.0;
  leg.params.damping = 5.0;
  leg.current_length = 1.0;
  leg.length_rate = 0.0;
  leg.axis = {0.0, -1.0};
  const Vec2 f = spring_force(leg);
  CHECK(f.x == 0.0);
  CHECK(f.y == 0.0);
}

TEST_CASE("spring_force follows Hooke's law outward") {
  SpringLeg leg;
  leg.params.rest_length = 1.0;
  leg.params.stiffness = 100.0;
  leg.params.damping = 0.0;
  leg.current_length = 0.9;
  leg.length_rate = 0.0;
  leg.axis = {0.0, -1.0};  // vertical leg, foot below
  const Vec2 f = spring_force(leg);
  CHECK(f.norm() == doctest::Approx(10.0));
  CHECK(f.y == doctest::Approx(-10.0));  // pushes the foot outward, away from the hub
}

TEST_CASE("spring_force pure damping resists extension") {
  SpringLeg leg;
  leg.params.rest_length = 1.0;
  leg.params.stiffness = 100.0;
  leg.params.damping = 5.0;
  leg.current_length = 1.0;
  leg.length_rate = 0.2;
  leg.axis = {0.0, -1.0};
  const Vec2 f = spring_force(leg);
  CHECK(f.norm() == doctest::Approx(1.0));
  // extension means the foot moves along +axis; the force opposes it
  CHECK(f.dot(leg.axis) == doctest::Approx(-1.0));
}

TEST_CASE("spring_force raises DegenerateLeg below the length clamp") {
  SpringLeg leg;
  leg.params.rest_length = 1.0;
  leg.params.min_length_factor = 0.1;
  leg.current_length = 0.05;
  CHECK_THROWS_AS(spring_force(leg), DegenerateLeg);
}

TEST_CASE("spring at rest, zero gravity, zero torque: state unchanged") {
  World w = make_oscillator(1.0, 100.0, 0.0, 0.0, 1e-3, 4);
  const Vec2 p0 = w.body(1).state.position;
  for (int i = 0; i < 200; ++i) w.step(std::vector<double>{});
  CHECK(w.body(1).state.position.x == p0.x);
  CHECK(w.body(1).state.position.y == p0.y);
  CHECK(w.body(1).state.linear_velocity.norm() == 0.0);
}

TEST_CASE("gravity integrates velocity exactly (semi-implicit Euler)") {
  for (const int substeps : {1, 8}) {
    WorldConfig wc;
    wc.dt = 1e-3;
    wc.substeps = substeps;
    wc.ground_height = -1000.0;
    World w(wc);
    w.add_body(1.0, 0.1, {0.0, 0.0});
    for (int i = 0; i < 1000; ++i) w.step(std::vector<double>{});
    CHECK(std::abs(w.body(0).state.linear_velocity.y - (-9.81)) < 1e-9);
  }
}

TEST_CASE("undamped spring-mass period matches 2*pi*sqrt(m/k) within 1%") {
  // m = 1 kg, k = 100 N/m -> omega = 10 rad/s
  World w = make_oscillator(1.0, 100.0, 0.0, 0.1, 1e-3, 1);
  const double rest = 1.0;
  std::vector<double> crossing_times;
  double prev = w.spring_leg(0).current_length - rest;
  double t = 0.0;
  const double dt = 1e-3;
  while (t < 8.0 && crossing_times.size() < 12) {
    w.step(std::vector<double>{});
    t += dt;
    const double cur = w.spring_leg(0).current_length - rest;
    if (prev < 0.0 && cur >= 0.0) {
      crossing_times.push_back(t - dt * cur / (cur - prev));
    }
    prev = cur;
  }
  REQUIRE(crossing_times.size() >= 11);
  const double period = (crossing_times[10] - crossing_times[0]) / 10.0;
  const double expected = 2.0 * M_PI / 10.0;
  CHECK(std::abs(period - expected) / expected < 0.01);
}

TEST_CASE("mechanical energy datum cases") {
  WorldConfig wc;
  World w(wc);
  w.add_body(1.0, 0.1, {0.0, 0.0});  // at ground height, at rest
  CHECK(w.mechanical_energy() == doctest::Approx(0.0));
  w.body(0).state.position.y = 1.0;
  CHECK(w.mechanical_energy() == doctest::Approx(9.81));
}

TEST_CASE("conservative flight: energy drift < 1% over 1000 steps at dt=1e-3") {
  WorldConfig wc;
  wc.dt = 1e-3;
  wc.substeps = 4;
  wc.ground_height = 0.0;
  World w(wc);
  const int body = w.add_body(1.0, 0.05, {0.0, 10.0}, 0.0, true);
  const int fl = w.add_body(0.5, 1e-4, {-0.3, 9.0});
  const int fr = w.add_body(0.5, 1e-4, {0.3, 9.0});
  for (const int foot : {fl, fr}) {
    SpringLegParams leg;
    leg.hub = body;
    leg.foot = foot;
    leg.rest_length = 1.0;
    leg.stiffness = 100.0;
    leg.damping = 0.0;
    leg.hip_damping = 0.0;
    w.add_spring_leg(leg);
  }
  w.body(body).state.linear_velocity = {1.0, 0.5};

  const double e0 = w.mechanical_energy();
  double max_rel = 0.0;
  for (int i = 0; i < 1000; ++i) {
    w.step(std::vector<double>{});
    max_rel = std::max(max_rel, std::abs(w.mechanical_energy() - e0) / e0);
  }
  CHECK(max_rel < 0.01);
}

TEST_CASE("no penetration and contact complementarity during a drop") {
  WorldConfig wc;
  World w(wc);
  w.add_body(1.0, 0.01, {0.0, 0.5});
  w.add_contact_point(0, {0.0, 0.0});
  bool landed = false;
  for (int i = 0; i < 120; ++i) {
    w.step(std::vector<double>{});
    const double h = w.body(0).state.position.y - wc.ground_height;
    CHECK(h >= -1e-4);
    const ContactState& c = w.contacts()[0];
    if (c.normal_force > 0.0) {
      CHECK(c.in_contact);
      landed = true;
    }
  }
  REQUIRE(landed);
  // resting normal force carries the weight
  const ContactState& c = w.contacts()[0];
  CHECK(c.normal_force == doctest::Approx(9.81).epsilon(0.05));
  CHECK(w.body(0).state.linear_velocity.norm() < 1e-3);
}

TEST_CASE("identical state and torques give bitwise-identical trajectories") {
  auto build = [] {
    WorldConfig wc;
    wc.dt = 1.0 / 60.0;
    wc.substeps = 16;
    World w(wc);
    const int hub = w.add_body(10.0, 0.5, {0.0, 0.98}, 0.0, true);
    const int fl = w.add_body(0.01, 1e-6, {-0.05, 0.0});
    const int fr = w.add_body(0.01, 1e-6, {0.05, 0.0});
    for (const int foot : {fl, fr}) {
      SpringLegParams leg;
      leg.hub = hub;
      leg.foot = foot;
      leg.rest_length = 1.0;
      leg.stiffness = 2000.0;
      leg.damping = 10.0;
      const int li = w.add_spring_leg(leg);
      w.add_hip_actuator(li);
      w.add_contact_point(foot, {0.0, 0.0});
    }
    return w;
  };
  World a = build();
  World b = build();
  for (int i = 0; i < 300; ++i) {
    const double tau = 20.0 * std::sin(0.05 * i);
    const std::vector<double> torques{tau, -tau};
    a.step(torques);
    b.step(torques);
  }
  for (int i = 0; i < a.body_count(); ++i) {
    CHECK(a.body(i).state.position.x == b.body(i).state.position.x);
    CHECK(a.body(i).state.position.y == b.body(i).state.position.y);
    CHECK(a.body(i).state.linear_velocity.x == b.body(i).state.linear_velocity.x);
    CHECK(a.body(i).state.linear_velocity.y == b.body(i).state.linear_velocity.y);
  }
}

TEST_CASE("torque vector length must match actuator count") {
  World w = make_oscillator(1.0, 100.0, 0.0, 0.0, 1e-3, 1);
  w.add_hip_actuator(0);
  CHECK_THROWS_AS(w.step(std::vector<double>{1.0, 2.0}), TorqueDimensionMismatch);
  CHECK_NOTHROW(w.step(std::vector<double>{0.0}));
}

TEST_CASE("non-finite state is detected") {
  WorldConfig wc;
  World w(wc);
  w.add_body(1.0, 0.1, {0.0, 1.0});
  w.body(0).state.linear_velocity.x = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(w.step(std::vector<double>{}), NonFiniteState);
}

TEST_CASE("revolute joint holds its anchors together") {
  WorldConfig wc;
  wc.substeps = 16;
  wc.ground_height = -100.0;
  World w(wc);
  // double pendulum of two 1 m rods
  const int a = w.add_static_body({0.0, 0.0});
  const int b = w.add_body(1.0, 1.0 / 12.0, {0.5, 0.0});
  const int c = w.add_body(1.0, 1.0 / 12.0, {1.5, 0.0});
  w.add_revolute_joint(a, b, {0.0, 0.0});
  w.add_revolute_joint(b, c, {1.0, 0.0});
  for (int i = 0; i < 600; ++i) {
    w.step(std::vector<double>{});
    const Vec2 anchor_b = w.body(b).world_point({0.5, 0.0});
    const Vec2 anchor_c = w.body(c).world_point({-0.5, 0.0});
    CHECK((anchor_b - anchor_c).norm() < 1e-5);
  }
}

TEST_CASE("joint actuator applies equal and opposite torques") {
  WorldConfig wc;
  wc.gravity = {0.0, 0.0};
  wc.substeps = 1;
  wc.ground_height = -100.0;
  World w(wc);
  const int a = w.add_body(1.0, 2.0, {0.0, 0.0});
  const int b = w.add_body(1.0, 0.5, {0.0, 0.0});
  const int j = w.add_revolute_joint(a, b, {0.0, 0.0});  // concentric
  w.add_joint_actuator(j, 50.0);
  for (int i = 0; i < 100; ++i) w.step(std::vector<double>{10.0});
  const double la = 2.0 * w.body(a).state.angular_velocity;
  const double lb = 0.5 * w.body(b).state.angular_velocity;
  CHECK(la + lb == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(w.body(b).state.angular_velocity > 0.0);
}

}  // TEST_SUITE
