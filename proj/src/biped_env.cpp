#include "romgait/biped_env.hpp"

#include <algorithm>
#include <cmath>

#include "romgait/errors.hpp"
#include "romgait/logging.hpp"
#include "romgait/rng.hpp"

namespace romgait {

namespace {
constexpr double kHalfPi = 1.5707963267948966;

double rod_inertia(double mass, double length) { return mass * length * length / 12.0; }
}  // namespace

void BipedEpisodeConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("biped_episode.alpha must be > 0");
  if (max_steps < 1) throw ConfigError("biped_episode.max_steps must be >= 1");
  if (!(fall_threshold >= 0.0)) throw ConfigError("biped_episode.fall_threshold must be >= 0");
}

Eigen::VectorXd BipedObservation::vec() const {
  Eigen::VectorXd v(kDim);
  v(0) = root_height;
  v(1) = root_pitch;
  v(2) = root_linear_velocity.x;
  v(3) = root_linear_velocity.y;
  v(4) = root_angular_velocity;
  for (int i = 0; i < 6; ++i) {
    v(5 + i) = joint_angles[static_cast<std::size_t>(i)];
    v(11 + i) = joint_velocities[static_cast<std::size_t>(i)];
  }
  v(17) = ankle_positions_rel_com[0].x;
  v(18) = ankle_positions_rel_com[0].y;
  v(19) = ankle_positions_rel_com[1].x;
  v(20) = ankle_positions_rel_com[1].y;
  v(21) = foot_contact_flags[0] ? 1.0 : 0.0;
  v(22) = foot_contact_flags[1] ? 1.0 : 0.0;
  v(23) = target_speed;
  return v;
}

BipedEnv::BipedEnv(const BipedParams& params, const BipedEpisodeConfig& episode)
    : params_(params), episode_(episode) {
  episode_.validate();
}

// Links are rods with the local +x axis along their length. Standing pose:
// torso points up (angle +pi/2), thigh and shin point down (angle -pi/2),
// feet lie flat (angle 0). Anchors sit at the rod ends; the ankle anchor is
// ankle_height above the sole on the foot link.
void BipedEnv::rebuild_world() {
  WorldConfig wc;
  wc.dt = params_.dt;
  wc.substeps = params_.substeps;
  wc.friction = params_.friction;
  world_ = World(wc);

  const double ankle_y = params_.ankle_height;
  const double knee_y = ankle_y + params_.shin_length;
  const double hip_y = knee_y + params_.thigh_length;
  const double torso_c = hip_y + 0.5 * params_.torso_length;

  world_.add_body(params_.torso_mass, rod_inertia(params_.torso_mass, params_.torso_length),
                  {0.0, torso_c}, kHalfPi);

  for (int side = 0; side < 2; ++side) {
    world_.add_body(params_.thigh_mass, rod_inertia(params_.thigh_mass, params_.thigh_length),
                    {0.0, hip_y - 0.5 * params_.thigh_length}, -kHalfPi);
    world_.add_body(params_.shin_mass, rod_inertia(params_.shin_mass, params_.shin_length),
                    {0.0, knee_y - 0.5 * params_.shin_length}, -kHalfPi);
    // foot rod on the ground; ankle joint sits 1/4 of the rod behind center
    world_.add_body(params_.foot_mass, rod_inertia(params_.foot_mass, params_.foot_length),
                    {0.25 * params_.foot_length, 0.0}, 0.0);
  }

  JointLimit hip{params_.hip_lower, params_.hip_upper, params_.limit_stiffness,
                 params_.limit_damping};
  JointLimit knee{params_.knee_lower, params_.knee_upper, params_.limit_stiffness,
                  params_.limit_damping};
  JointLimit ankle{params_.ankle_lower, params_.ankle_upper, params_.limit_stiffness,
                   params_.limit_damping};

  for (int side = 0; side < 2; ++side) {
    const int thigh = 1 + 3 * side;
    const int shin = thigh + 1;
    const int foot = thigh + 2;
    const int hip_j = world_.add_revolute_joint(kTorso, thigh, {0.0, hip_y}, hip);
    const int knee_j = world_.add_revolute_joint(thigh, shin, {0.0, knee_y}, knee);
    const int ankle_j = world_.add_revolute_joint(shin, foot, {0.0, ankle_y}, ankle);
    world_.add_joint_actuator(hip_j, params_.hip_torque_limit);
    world_.add_joint_actuator(knee_j, params_.knee_torque_limit);
    world_.add_joint_actuator(ankle_j, params_.ankle_torque_limit);
    // heel and toe
    world_.add_contact_point(foot, {-0.5 * params_.foot_length, 0.0});
    world_.add_contact_point(foot, {0.5 * params_.foot_length, 0.0});
  }
}

BipedObservation BipedEnv::reset(std::uint64_t seed) { return reset(episode_, seed); }

BipedObservation BipedEnv::reset(const BipedEpisodeConfig& episode, std::uint64_t seed) {
  episode.validate();
  episode_ = episode;
  rebuild_world();

  // exact standing pose (both feet planted), perturbation on velocities only
  Rng rng(Rng::derive(seed, 0x424950));
  for (int i = 1; i < world_.body_count(); ++i) {
    Body& b = world_.body(i);
    b.state.angular_velocity = rng.uniform(-0.01, 0.01);
  }
  Body& torso = world_.body(kTorso);
  torso.state.linear_velocity = {rng.uniform(-0.01, 0.01), 0.0};
  torso.state.angular_velocity = rng.uniform(-0.01, 0.01);

  steps_ = 0;
  done_ = false;
  abnormal_ = false;
  refresh_observation();
  return obs_;
}

StepResult<BipedObservation> BipedEnv::step(const BipedAction& action) {
  if (done_) throw SteppedAfterDone();
  std::array<double, 6> torques{};
  const std::array<double, 6> limits{params_.hip_torque_limit, params_.knee_torque_limit,
                                     params_.ankle_torque_limit, params_.hip_torque_limit,
                                     params_.knee_torque_limit, params_.ankle_torque_limit};
  for (std::size_t i = 0; i < 6; ++i) {
    torques[i] = std::clamp(action.joint_torques[i], -1.0, 1.0) * limits[i];
  }
  try {
    world_.step(torques);
    refresh_observation();
  } catch (const Error& e) {
    log_debug(std::string("biped episode aborted: ") + e.what());
    abnormal_ = true;
    done_ = true;
    return {obs_, 0.0, true};
  }
  ++steps_;
  const double vx = com_velocity_x();
  const double reward = std::exp(-episode_.alpha * std::abs(vx - episode_.target_speed));
  if (obs_.root_height < episode_.fall_threshold || steps_ >= episode_.max_steps) done_ = true;
  return {obs_, reward, done_};
}

double BipedEnv::com_velocity_x() const {
  double m = 0.0, mv = 0.0;
  for (int i = 0; i < world_.body_count(); ++i) {
    const Body& b = world_.body(i);
    m += b.state.mass;
    mv += b.state.mass * b.state.linear_velocity.x;
  }
  return mv / m;
}

void BipedEnv::refresh_observation() {
  const Body& torso = world_.body(kTorso);
  obs_.root_height = torso.state.position.y - world_.config().ground_height;
  obs_.root_pitch = torso.state.angle - kHalfPi;
  obs_.root_linear_velocity = torso.state.linear_velocity;
  obs_.root_angular_velocity = torso.state.angular_velocity;
  for (int j = 0; j < 6; ++j) {
    obs_.joint_angles[static_cast<std::size_t>(j)] = world_.joint_angle(j);
    obs_.joint_velocities[static_cast<std::size_t>(j)] = world_.joint_speed(j);
  }
  for (int side = 0; side < 2; ++side) {
    const Vec2 ankle = world_.joint_world_anchor(kAnkleL + 3 * side);
    obs_.ankle_positions_rel_com[static_cast<std::size_t>(side)] = ankle - torso.state.position;
  }
  for (int side = 0; side < 2; ++side) {
    const Body& foot = world_.body(kFootL + 3 * side);
    const double heel_y = foot.world_point({-0.5 * params_.foot_length, 0.0}).y;
    const double toe_y = foot.world_point({0.5 * params_.foot_length, 0.0}).y;
    const double limit = world_.config().ground_height + world_.config().contact_tolerance;
    obs_.foot_contact_flags[static_cast<std::size_t>(side)] = heel_y <= limit || toe_y <= limit;
  }
  obs_.target_speed = episode_.target_speed;
}

GaitFeature BipedEnv::gait_feature() const {
  const Body& torso = world_.body(kTorso);
  GaitFeature f;
  f[0] = torso.state.position.y - world_.config().ground_height;
  for (int side = 0; side < 2; ++side) {
    const Vec2 ankle = world_.joint_world_anchor(kAnkleL + 3 * side);
    f[1 + 2 * side] = ankle.x - torso.state.position.x;
    f[2 + 2 * side] = ankle.y - torso.state.position.y;
  }
  return f;
}

GaitFeature BipedEnv::normalized_gait_feature() const {
  GaitFeature f = gait_feature();
  const double h = nominal_height();
  for (auto& v : f.data) v /= h;
  return f;
}

}  // namespace romgait
