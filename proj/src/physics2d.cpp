#include "romgait/physics2d.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace romgait {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

Vec2 spring_force(const SpringLeg& leg) {
  const auto& p = leg.params;
  if (leg.current_length < p.min_length_factor * p.rest_length) {
    throw DegenerateLeg("length " + std::to_string(leg.current_length) + " below clamp " +
                        std::to_string(p.min_length_factor * p.rest_length));
  }
  const double magnitude =
      p.stiffness * (p.rest_length - leg.current_length) - p.damping * leg.length_rate;
  return magnitude * leg.axis;
}

int World::add_body(double mass, double inertia, const Vec2& position, double angle,
                    bool fixed_rotation) {
  Body b;
  b.state.mass = mass;
  b.state.inertia = inertia;
  b.state.position = position;
  b.state.angle = angle;
  b.inv_mass = 1.0 / mass;
  b.inv_inertia = fixed_rotation ? 0.0 : 1.0 / inertia;
  b.fixed_rotation = fixed_rotation;
  bodies_.push_back(b);
  return static_cast<int>(bodies_.size()) - 1;
}

int World::add_static_body(const Vec2& position) {
  Body b;
  b.state.mass = 1.0;
  b.state.inertia = 1.0;
  b.state.position = position;
  b.inv_mass = 0.0;
  b.inv_inertia = 0.0;
  b.is_static = true;
  b.fixed_rotation = true;
  bodies_.push_back(b);
  return static_cast<int>(bodies_.size()) - 1;
}

int World::add_point_foot(double mass, const Vec2& position) {
  // tiny inertia keeps the state well defined; point feet receive no torques
  const int i = add_body(mass, mass * 1e-4, position);
  bodies_.back().massless_proxy = true;
  return i;
}

int World::add_spring_leg(const SpringLegParams& params) {
  SpringLeg leg;
  leg.params = params;
  legs_.push_back(leg);
  refresh_leg_kinematics();
  return static_cast<int>(legs_.size()) - 1;
}

int World::add_revolute_joint(int body_a, int body_b, const Vec2& world_anchor,
                              std::optional<JointLimit> limit) {
  RevoluteJoint j;
  j.body_a = body_a;
  j.body_b = body_b;
  const Body& a = bodies_[static_cast<std::size_t>(body_a)];
  const Body& b = bodies_[static_cast<std::size_t>(body_b)];
  j.local_anchor_a = (world_anchor - a.state.position).rotated(-a.state.angle);
  j.local_anchor_b = (world_anchor - b.state.position).rotated(-b.state.angle);
  j.reference_angle = b.state.angle - a.state.angle;
  j.limit = limit;
  joints_.push_back(j);
  return static_cast<int>(joints_.size()) - 1;
}

void World::add_contact_point(int body, const Vec2& local) {
  ContactPoint cp;
  cp.body = body;
  cp.local = local;
  points_.push_back(cp);
  contact_report_.resize(points_.size());
}

void World::add_hip_actuator(int spring_leg) {
  actuators_.push_back({Actuator::Kind::hip, spring_leg,
                        legs_[static_cast<std::size_t>(spring_leg)].params.hip_torque_limit});
}

void World::add_joint_actuator(int joint, double torque_limit) {
  actuators_.push_back({Actuator::Kind::joint, joint, torque_limit});
}

double World::joint_angle(int i) const {
  const auto& j = joints_[static_cast<std::size_t>(i)];
  return bodies_[static_cast<std::size_t>(j.body_b)].state.angle -
         bodies_[static_cast<std::size_t>(j.body_a)].state.angle - j.reference_angle;
}

double World::joint_speed(int i) const {
  const auto& j = joints_[static_cast<std::size_t>(i)];
  return bodies_[static_cast<std::size_t>(j.body_b)].state.angular_velocity -
         bodies_[static_cast<std::size_t>(j.body_a)].state.angular_velocity;
}

Vec2 World::joint_world_anchor(int i) const {
  const auto& j = joints_[static_cast<std::size_t>(i)];
  return bodies_[static_cast<std::size_t>(j.body_b)].world_point(j.local_anchor_b);
}

void World::refresh_leg_kinematics() {
  for (auto& leg : legs_) {
    const Body& hub = bodies_[static_cast<std::size_t>(leg.params.hub)];
    const Body& foot = bodies_[static_cast<std::size_t>(leg.params.foot)];
    const Vec2 d = foot.state.position - hub.state.position;
    const double len = d.norm();
    leg.current_length = len;
    if (len <= 0.0) continue;  // force phase raises DegenerateLeg
    leg.axis = d / len;
    const Vec2 vrel = foot.state.linear_velocity - hub.state.linear_velocity;
    leg.length_rate = leg.axis.dot(vrel);
    const Vec2 d_local = d.rotated(-hub.state.angle);
    leg.hip_angle = std::atan2(d_local.x, -d_local.y);
    leg.hip_angular_velocity = d.cross(vrel) / (len * len) - hub.state.angular_velocity;
  }
}

void World::apply_forces(std::span<const double> torques, double) {
  for (auto& b : bodies_) {
    b.force = b.is_static ? Vec2{} : config_.gravity * b.state.mass;
    b.torque = 0.0;
  }

  refresh_leg_kinematics();

  // actuation
  std::size_t idx = 0;
  for (const auto& act : actuators_) {
    const double cmd = clamp(torques[idx++], -act.torque_limit, act.torque_limit);
    if (act.kind == Actuator::Kind::hip) {
      legs_[static_cast<std::size_t>(act.index)].applied_torque = cmd;
    } else {
      auto& j = joints_[static_cast<std::size_t>(act.index)];
      bodies_[static_cast<std::size_t>(j.body_b)].torque += cmd;
      bodies_[static_cast<std::size_t>(j.body_a)].torque -= cmd;
    }
  }

  // spring legs: axial spring-damper plus hip torque as a force pair
  for (auto& leg : legs_) {
    Body& hub = bodies_[static_cast<std::size_t>(leg.params.hub)];
    Body& foot = bodies_[static_cast<std::size_t>(leg.params.foot)];
    const Vec2 axial = spring_force(leg);
    foot.force += axial;
    hub.force -= axial;

    const double tau = leg.applied_torque - leg.params.hip_damping * leg.hip_angular_velocity;
    const Vec2 d = foot.state.position - hub.state.position;
    const double len_sq = d.norm_sq();
    const Vec2 tangential = (tau / len_sq) * d.perp();
    foot.force += tangential;
    hub.force -= tangential;
    hub.torque -= tau;
  }

  // joint limits: restoring spring-damper beyond the allowed range
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const auto& j = joints_[i];
    if (!j.limit) continue;
    const double angle = joint_angle(static_cast<int>(i));
    const double speed = joint_speed(static_cast<int>(i));
    double tau = 0.0;
    if (angle < j.limit->lower) {
      tau = j.limit->stiffness * (j.limit->lower - angle) - j.limit->damping * speed;
    } else if (angle > j.limit->upper) {
      tau = j.limit->stiffness * (j.limit->upper - angle) - j.limit->damping * speed;
    }
    if (tau != 0.0) {
      bodies_[static_cast<std::size_t>(j.body_b)].torque += tau;
      bodies_[static_cast<std::size_t>(j.body_a)].torque -= tau;
    }
  }
}

void World::prepare_contacts(double h) {
  for (auto& cp : points_) {
    Body& b = bodies_[static_cast<std::size_t>(cp.body)];
    cp.point = b.world_point(cp.local);
    cp.r = cp.point - b.state.position;
    const double separation = cp.point.y - config_.ground_height;
    cp.active = separation <= config_.contact_tolerance;
    cp.normal_impulse = 0.0;
    cp.tangent_impulse = 0.0;
    if (!cp.active) continue;
    cp.touched = true;
    const double penetration = std::max(0.0, -separation - config_.contact_slop);
    cp.bias = config_.baumgarte / h * penetration;
    // n = (0,1): r×n = r.x ; t = (1,0): r×t = -r.y
    cp.mass_n = 1.0 / (b.inv_mass + b.inv_inertia * cp.r.x * cp.r.x);
    cp.mass_t = 1.0 / (b.inv_mass + b.inv_inertia * cp.r.y * cp.r.y);
  }
}

void World::solve_velocity_constraints() {
  for (int it = 0; it < config_.velocity_iterations; ++it) {
    // joints: drive relative anchor velocity to zero
    for (auto& j : joints_) {
      Body& a = bodies_[static_cast<std::size_t>(j.body_a)];
      Body& b = bodies_[static_cast<std::size_t>(j.body_b)];
      const Vec2 ra = j.local_anchor_a.rotated(a.state.angle);
      const Vec2 rb = j.local_anchor_b.rotated(b.state.angle);
      const Vec2 vrel = b.velocity_at(rb) - a.velocity_at(ra);
      const double k11 = a.inv_mass + b.inv_mass + a.inv_inertia * ra.y * ra.y +
                         b.inv_inertia * rb.y * rb.y;
      const double k22 = a.inv_mass + b.inv_mass + a.inv_inertia * ra.x * ra.x +
                         b.inv_inertia * rb.x * rb.x;
      const double k12 = -a.inv_inertia * ra.x * ra.y - b.inv_inertia * rb.x * rb.y;
      const double det = k11 * k22 - k12 * k12;
      if (det == 0.0) continue;
      const Vec2 impulse{(-vrel.x * k22 + vrel.y * k12) / det,
                         (vrel.x * k12 - vrel.y * k11) / det};
      a.state.linear_velocity -= impulse * a.inv_mass;
      a.state.angular_velocity -= a.inv_inertia * ra.cross(impulse);
      b.state.linear_velocity += impulse * b.inv_mass;
      b.state.angular_velocity += b.inv_inertia * rb.cross(impulse);
    }

    // ground contacts: non-penetration then Coulomb friction
    for (auto& cp : points_) {
      if (!cp.active) continue;
      Body& b = bodies_[static_cast<std::size_t>(cp.body)];
      const double vn = b.velocity_at(cp.r).y;
      const double dn = -cp.mass_n * (vn - cp.bias);
      const double new_n = std::max(0.0, cp.normal_impulse + dn);
      const double apply_n = new_n - cp.normal_impulse;
      cp.normal_impulse = new_n;
      b.state.linear_velocity.y += apply_n * b.inv_mass;
      b.state.angular_velocity += b.inv_inertia * cp.r.x * apply_n;

      const double vt = b.velocity_at(cp.r).x;
      const double dt_imp = -cp.mass_t * vt;
      const double max_f = config_.friction * cp.normal_impulse;
      const double new_t = clamp(cp.tangent_impulse + dt_imp, -max_f, max_f);
      const double apply_t = new_t - cp.tangent_impulse;
      cp.tangent_impulse = new_t;
      b.state.linear_velocity.x += apply_t * b.inv_mass;
      b.state.angular_velocity += b.inv_inertia * (-cp.r.y) * apply_t;
    }
  }
}

void World::integrate_positions(double h) {
  for (auto& b : bodies_) {
    if (b.is_static) continue;
    b.state.position += b.state.linear_velocity * h;
    b.state.angle += b.state.angular_velocity * h;
  }
}

void World::correct_joint_positions() {
  for (int it = 0; it < config_.position_iterations; ++it) {
    for (auto& j : joints_) {
      Body& a = bodies_[static_cast<std::size_t>(j.body_a)];
      Body& b = bodies_[static_cast<std::size_t>(j.body_b)];
      const Vec2 ra = j.local_anchor_a.rotated(a.state.angle);
      const Vec2 rb = j.local_anchor_b.rotated(b.state.angle);
      const Vec2 error = (b.state.position + rb) - (a.state.position + ra);
      const double k11 = a.inv_mass + b.inv_mass + a.inv_inertia * ra.y * ra.y +
                         b.inv_inertia * rb.y * rb.y;
      const double k22 = a.inv_mass + b.inv_mass + a.inv_inertia * ra.x * ra.x +
                         b.inv_inertia * rb.x * rb.x;
      const double k12 = -a.inv_inertia * ra.x * ra.y - b.inv_inertia * rb.x * rb.y;
      const double det = k11 * k22 - k12 * k12;
      if (det == 0.0) continue;
      const Vec2 impulse{(-error.x * k22 + error.y * k12) / det,
                         (error.x * k12 - error.y * k11) / det};
      a.state.position -= impulse * a.inv_mass;
      a.state.angle -= a.inv_inertia * ra.cross(impulse);
      b.state.position += impulse * b.inv_mass;
      b.state.angle += b.inv_inertia * rb.cross(impulse);
    }
  }
}

void World::project_feet() {
  // Hard no-penetration guarantee: lift bodies whose contact points ended the
  // substep below ground. Joint drift this introduces is removed by the next
  // substep's position correction.
  for (auto& cp : points_) {
    Body& b = bodies_[static_cast<std::size_t>(cp.body)];
    if (b.is_static) continue;
    const Vec2 p = b.world_point(cp.local);
    const double pen = config_.ground_height - p.y;
    if (pen > 0.0) b.state.position.y += pen;
  }
}

void World::step(std::span<const double> torques) {
  if (torques.size() != actuators_.size()) {
    throw TorqueDimensionMismatch(torques.size(), actuators_.size());
  }
  for (auto& cp : points_) {
    cp.step_normal_impulse = 0.0;
    cp.touched = false;
  }

  const double h = config_.dt / config_.substeps;
  for (int s = 0; s < config_.substeps; ++s) {
    apply_forces(torques, h);
    for (auto& b : bodies_) {
      if (b.is_static) continue;
      b.state.linear_velocity += b.force * (b.inv_mass * h);
      b.state.angular_velocity += b.torque * (b.inv_inertia * h);
    }
    prepare_contacts(h);
    solve_velocity_constraints();
    integrate_positions(h);
    correct_joint_positions();
    project_feet();
    for (auto& cp : points_) cp.step_normal_impulse += cp.normal_impulse;
  }

  refresh_leg_kinematics();
  check_finite();

  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& cp = points_[i];
    const Body& b = bodies_[static_cast<std::size_t>(cp.body)];
    ContactState cs;
    cs.contact_point = b.world_point(cp.local);
    cs.in_contact = cs.contact_point.y - config_.ground_height <= config_.contact_tolerance;
    cs.normal_force = cp.step_normal_impulse / config_.dt;
    cs.friction_coefficient = config_.friction;
    contact_report_[i] = cs;
  }
}

void World::check_finite() const {
  for (std::size_t i = 0; i < bodies_.size(); ++i) {
    const auto& s = bodies_[i].state;
    if (!s.position.finite() || !s.linear_velocity.finite() || !std::isfinite(s.angle) ||
        !std::isfinite(s.angular_velocity)) {
      throw NonFiniteState("body " + std::to_string(i));
    }
  }
}

double World::mechanical_energy() const {
  double e = 0.0;
  for (const auto& b : bodies_) {
    if (b.is_static) continue;
    const auto& s = b.state;
    e += 0.5 * s.mass * s.linear_velocity.norm_sq();
    if (!b.fixed_rotation) e += 0.5 * s.inertia * s.angular_velocity * s.angular_velocity;
    // gravitational potential with the ground line as datum
    const Vec2 rel = s.position - Vec2{0.0, config_.ground_height};
    e -= s.mass * config_.gravity.dot(rel);
  }
  for (const auto& leg : legs_) {
    const double stretch = leg.current_length - leg.params.rest_length;
    e += 0.5 * leg.params.stiffness * stretch * stretch;
  }
  return e;
}

}  // namespace romgait
