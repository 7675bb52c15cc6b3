#pragma once

#include <optional>
#include <span>
#include <vector>

#include "romgait/errors.hpp"
#include "romgait/vec2.hpp"

namespace romgait {

struct RigidBodyState {
  Vec2 position;
  double angle = 0.0;  // rad
  Vec2 linear_velocity;
  double angular_velocity = 0.0;  // rad/s
  double mass = 1.0;              // kg
  double inertia = 1.0;           // kg·m²
};

struct Body {
  RigidBodyState state;
  double inv_mass = 1.0;
  double inv_inertia = 1.0;
  bool fixed_rotation = false;
  bool is_static = false;
  bool massless_proxy = false;  // small-mass stand-in for an ideal massless foot
  Vec2 force;                   // accumulator, cleared every substep
  double torque = 0.0;

  Vec2 world_point(const Vec2& local) const { return state.position + local.rotated(state.angle); }
  Vec2 velocity_at(const Vec2& r) const {
    // r is the world-frame offset from the COM
    return state.linear_velocity + state.angular_velocity * r.perp();
  }
};

struct SpringLegParams {
  int hub = -1;   // body carrying the hip joint (anchored at its COM)
  int foot = -1;  // point-foot body
  double rest_length = 1.0;        // m
  double stiffness = 2000.0;       // N/m
  double damping = 10.0;           // N·s/m along the leg axis
  double hip_damping = 2.0;        // N·m·s about the hip
  double hip_torque_limit = 100.0; // N·m
  double min_length_factor = 0.1;  // of rest_length; shorter than this is an error
};

// A linear spring leg between a hub body and a point foot. Kinematic fields
// are refreshed from body state every substep; hip_angle is measured in the
// hub frame with 0 pointing straight down and positive swinging forward (+x).
struct SpringLeg {
  SpringLegParams params;
  double current_length = 1.0;
  double length_rate = 0.0;
  double hip_angle = 0.0;
  double hip_angular_velocity = 0.0;
  Vec2 axis{0.0, -1.0};  // unit vector hub -> foot, world frame
  double applied_torque = 0.0;  // last commanded hip torque after clamping
};

// Axial spring force on the foot body (outward positive along leg.axis).
Vec2 spring_force(const SpringLeg& leg);

struct JointLimit {
  double lower = 0.0;  // rad, relative to the joint's reference angle
  double upper = 0.0;
  double stiffness = 200.0;  // N·m/rad restoring torque beyond the range
  double damping = 5.0;      // N·m·s
};

struct RevoluteJoint {
  int body_a = -1;
  int body_b = -1;
  Vec2 local_anchor_a;
  Vec2 local_anchor_b;
  double reference_angle = 0.0;  // (b.angle - a.angle) at creation
  std::optional<JointLimit> limit;
};

struct ContactState {
  bool in_contact = false;
  Vec2 contact_point;            // world frame
  double normal_force = 0.0;     // N, averaged over the last control step
  double friction_coefficient = 1.0;
};

struct WorldConfig {
  Vec2 gravity{0.0, -9.81};
  double dt = 1.0 / 60.0;  // control step, s
  int substeps = 8;
  double ground_height = 0.0;
  double contact_tolerance = 1e-4;  // m
  double friction = 1.0;
  double baumgarte = 0.2;
  int velocity_iterations = 10;
  int position_iterations = 3;
  double contact_slop = 1e-5;
};

// Planar rigid-body world: bodies, revolute joints, spring legs and ground
// contact at y = ground_height. Integration is semi-implicit Euler over
// `substeps` substeps; contacts are impulse-based with Coulomb friction and
// Baumgarte position correction. Stepping is strictly deterministic: the same
// config, state and torque sequence reproduce trajectories bit for bit.
class World {
 public:
  explicit World(const WorldConfig& config = WorldConfig{}) : config_(config) {}

  int add_body(double mass, double inertia, const Vec2& position, double angle = 0.0,
               bool fixed_rotation = false);
  int add_static_body(const Vec2& position);
  // Marks a small-mass proxy for an ideal massless foot.
  int add_point_foot(double mass, const Vec2& position);
  int add_spring_leg(const SpringLegParams& params);
  int add_revolute_joint(int body_a, int body_b, const Vec2& world_anchor,
                         std::optional<JointLimit> limit = std::nullopt);
  void add_contact_point(int body, const Vec2& local);

  // Actuator bindings define the meaning and order of the torque vector
  // passed to step().
  void add_hip_actuator(int spring_leg);
  void add_joint_actuator(int joint, double torque_limit);

  // Advances by one control step (dt). Torques are in N·m, one entry per
  // actuator, clamped to the actuator's limit.
  void step(std::span<const double> torques);

  double mechanical_energy() const;

  int body_count() const { return static_cast<int>(bodies_.size()); }
  const Body& body(int i) const { return bodies_[static_cast<std::size_t>(i)]; }
  Body& body(int i) { return bodies_[static_cast<std::size_t>(i)]; }

  int spring_leg_count() const { return static_cast<int>(legs_.size()); }
  const SpringLeg& spring_leg(int i) const { return legs_[static_cast<std::size_t>(i)]; }

  int joint_count() const { return static_cast<int>(joints_.size()); }
  const RevoluteJoint& joint(int i) const { return joints_[static_cast<std::size_t>(i)]; }
  double joint_angle(int i) const;
  double joint_speed(int i) const;
  Vec2 joint_world_anchor(int i) const;  // anchor as carried by body_b

  std::size_t actuator_count() const { return actuators_.size(); }
  const std::vector<ContactState>& contacts() const { return contact_report_; }
  const WorldConfig& config() const { return config_; }

  // Recomputes spring-leg kinematics from body state (also done during step).
  void refresh_leg_kinematics();

 private:
  struct ContactPoint {
    int body = -1;
    Vec2 local;
    // per-substep solver state
    bool active = false;
    Vec2 r;  // world offset from COM
    Vec2 point;
    double bias = 0.0;
    double mass_n = 0.0, mass_t = 0.0;
    double normal_impulse = 0.0;
    double tangent_impulse = 0.0;
    // per-control-step accumulation for force reporting
    double step_normal_impulse = 0.0;
    bool touched = false;
  };
  struct Actuator {
    enum class Kind { hip, joint };
    Kind kind;
    int index = -1;
    double torque_limit = 0.0;
  };

  void apply_forces(std::span<const double> torques, double h);
  void prepare_contacts(double h);
  void solve_velocity_constraints();
  void integrate_positions(double h);
  void correct_joint_positions();
  void project_feet();
  void check_finite() const;

  WorldConfig config_;
  std::vector<Body> bodies_;
  std::vector<SpringLeg> legs_;
  std::vector<RevoluteJoint> joints_;
  std::vector<ContactPoint> points_;
  std::vector<Actuator> actuators_;
  std::vector<ContactState> contact_report_;
};

}  // namespace romgait
