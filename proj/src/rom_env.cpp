#include "romgait/rom_env.hpp"

#include <algorithm>
#include <cmath>

#include "romgait/errors.hpp"
#include "romgait/logging.hpp"

namespace romgait {

void EpisodeConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("episode.alpha must be > 0");
  if (max_steps < 1) throw ConfigError("episode.max_steps must be >= 1");
  if (!(fall_threshold >= 0.0)) throw ConfigError("episode.fall_threshold must be >= 0");
}

Eigen::VectorXd RomObservation::vec() const {
  Eigen::VectorXd v(kDim);
  v << body_height, body_velocity.x, body_velocity.y, spring_lengths[0], spring_lengths[1],
      spring_length_rates[0], spring_length_rates[1], hip_angles[0], hip_angles[1],
      hip_angular_velocities[0], hip_angular_velocities[1], foot_positions_rel_com[0].x,
      foot_positions_rel_com[0].y, foot_positions_rel_com[1].x, foot_positions_rel_com[1].y,
      foot_velocities_rel_com[0].x, foot_velocities_rel_com[0].y, foot_velocities_rel_com[1].x,
      foot_velocities_rel_com[1].y, target_speed;
  return v;
}

RomEnv::RomEnv(const RomParams& params, const EpisodeConfig& episode)
    : params_(params), episode_(episode) {
  episode_.validate();
}

void RomEnv::rebuild_world(double body_y, const std::array<double, 2>& lengths,
                           const std::array<double, 2>& angles) {
  WorldConfig wc;
  wc.dt = params_.dt;
  wc.substeps = params_.substeps;
  wc.friction = params_.friction;
  world_ = World(wc);

  // body rotation is locked: the central mass stands in for the COM
  const double body_inertia = params_.body_mass * 0.05;
  world_.add_body(params_.body_mass, body_inertia, {0.0, body_y}, 0.0, true);
  const double foot_mass = params_.foot_mass_ratio * params_.body_mass;
  for (int i = 0; i < 2; ++i) {
    const Vec2 foot{lengths[static_cast<std::size_t>(i)] * std::sin(angles[static_cast<std::size_t>(i)]),
                    body_y - lengths[static_cast<std::size_t>(i)] * std::cos(angles[static_cast<std::size_t>(i)])};
    world_.add_point_foot(foot_mass, foot);
  }

  for (int i = 0; i < 2; ++i) {
    SpringLegParams leg;
    leg.hub = kBody;
    leg.foot = kFootL + i;
    leg.rest_length = params_.rest_length;
    leg.stiffness = params_.stiffness;
    leg.damping = params_.damping;
    leg.hip_damping = params_.hip_damping;
    leg.hip_torque_limit = params_.hip_torque_limit;
    const int idx = world_.add_spring_leg(leg);
    world_.add_hip_actuator(idx);
  }

  world_.add_contact_point(kFootL, {0.0, 0.0});
  world_.add_contact_point(kFootR, {0.0, 0.0});
  world_.add_contact_point(kBody, {0.0, 0.0});  // tunneling guard, never hit in practice
}

RomObservation RomEnv::reset(std::uint64_t seed) { return reset(episode_, seed); }

RomObservation RomEnv::reset(const EpisodeConfig& episode, std::uint64_t seed) {
  episode.validate();
  episode_ = episode;
  Rng rng(Rng::derive(seed, 0x524f4d));

  // standing pose with small perturbations on the joint-level states
  std::array<double, 2> angles{};
  std::array<double, 2> lengths{};
  for (auto& a : angles) a = rng.uniform(-0.01, 0.01);
  for (auto& l : lengths) l = params_.rest_length + rng.uniform(-0.01, 0.01);
  // drop the body so the lower foot rests exactly on the ground
  double body_y = 0.0;
  for (int i = 0; i < 2; ++i) {
    const auto li = static_cast<std::size_t>(i);
    body_y = std::max(body_y, lengths[li] * std::cos(angles[li]));
  }
  rebuild_world(body_y, lengths, angles);

  steps_ = 0;
  done_ = false;
  abnormal_ = false;
  refresh_observation();
  return obs_;
}

StepResult<RomObservation> RomEnv::step(const RomAction& action) {
  if (done_) throw SteppedAfterDone();
  std::array<double, 2> torques{};
  for (int i = 0; i < 2; ++i) {
    const double a = std::clamp(action.hip_torques[static_cast<std::size_t>(i)], -1.0, 1.0);
    torques[static_cast<std::size_t>(i)] = a * params_.hip_torque_limit;
  }
  try {
    world_.step(torques);
    refresh_observation();
  } catch (const Error& e) {
    log_debug(std::string("rom episode aborted: ") + e.what());
    abnormal_ = true;
    done_ = true;
    return {obs_, 0.0, true};
  }
  ++steps_;
  const double reward = reward_for_state();
  if (obs_.body_height < episode_.fall_threshold || steps_ >= episode_.max_steps) done_ = true;
  return {obs_, reward, done_};
}

double RomEnv::reward_function(double vx, const EpisodeConfig& episode) {
  if (episode.reward_mode == RewardMode::raw_forward_velocity) return vx;
  return std::exp(-episode.alpha * std::abs(vx - episode.target_speed));
}

double RomEnv::reward_for_state() const {
  return reward_function(world_.body(kBody).state.linear_velocity.x, episode_);
}

double RomEnv::com_speed_error() const {
  return std::abs(world_.body(kBody).state.linear_velocity.x - episode_.target_speed);
}

void RomEnv::refresh_from_world() {
  world_.refresh_leg_kinematics();
  refresh_observation();
}

void RomEnv::refresh_observation() {
  const Body& body = world_.body(kBody);
  obs_.body_height = body.state.position.y - world_.config().ground_height;
  obs_.body_velocity = body.state.linear_velocity;
  for (int i = 0; i < 2; ++i) {
    const auto& leg = world_.spring_leg(i);
    const Body& foot = world_.body(kFootL + i);
    const auto li = static_cast<std::size_t>(i);
    obs_.spring_lengths[li] = leg.current_length;
    obs_.spring_length_rates[li] = leg.length_rate;
    obs_.hip_angles[li] = leg.hip_angle;
    obs_.hip_angular_velocities[li] = leg.hip_angular_velocity;
    obs_.foot_positions_rel_com[li] = foot.state.position - body.state.position;
    obs_.foot_velocities_rel_com[li] = foot.state.linear_velocity - body.state.linear_velocity;
  }
  obs_.target_speed = episode_.target_speed;
}

GaitFeature RomEnv::extract_gait_feature(const World& world) {
  const Body& body = world.body(kBody);
  const Body& foot_l = world.body(kFootL);
  const Body& foot_r = world.body(kFootR);
  GaitFeature f;
  f[0] = body.state.position.y - world.config().ground_height;
  f[1] = foot_l.state.position.x - body.state.position.x;
  f[2] = foot_l.state.position.y - body.state.position.y;
  f[3] = foot_r.state.position.x - body.state.position.x;
  f[4] = foot_r.state.position.y - body.state.position.y;
  return f;
}

GaitFeature RomEnv::normalized_gait_feature() const {
  GaitFeature f = gait_feature();
  const double h = nominal_height();
  for (auto& v : f.data) v /= h;
  return f;
}

}  // namespace romgait
