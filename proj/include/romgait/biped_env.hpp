#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>

#include "romgait/gaitdata.hpp"
#include "romgait/physics2d.hpp"
#include "romgait/rom_env.hpp"

namespace romgait {

// Planar 7-link biped: torso plus thigh/shin/foot per leg, six actuated
// revolute joints. The smallest sagittal mechanism with distinct swing,
// stance, knee flexion and ankle push-off.
struct BipedParams {
  double torso_mass = 10.0, torso_length = 0.6;
  double thigh_mass = 4.0, thigh_length = 0.45;
  double shin_mass = 3.0, shin_length = 0.5;
  double foot_mass = 1.0, foot_length = 0.2;
  double ankle_height = 0.05;  // sole to ankle joint

  double hip_torque_limit = 120.0;
  double knee_torque_limit = 100.0;
  double ankle_torque_limit = 60.0;

  // soft joint ranges (rad, relative to standing)
  double hip_lower = -0.9, hip_upper = 1.6;
  double knee_lower = -2.4, knee_upper = 0.02;
  double ankle_lower = -0.9, ankle_upper = 0.9;
  double limit_stiffness = 300.0;  // N·m/rad
  double limit_damping = 10.0;

  double dt = 1.0 / 60.0;
  int substeps = 16;
  double friction = 1.0;

  double nominal_root_height() const {
    return ankle_height + shin_length + thigh_length + 0.5 * torso_length;
  }
};

struct BipedEpisodeConfig {
  double target_speed = 1.0;
  double alpha = 2.0;
  int max_steps = 1000;
  double fall_threshold = 0.8;  // m, on the torso COM height

  void validate() const;
};

// 24-component observation; vec() packs:
// [0] root height, [1] root pitch, [2,3] root velocity, [4] root angular
// velocity, [5..10] joint angles, [11..16] joint velocities, [17..20] ankle
// positions rel root (xL,yL,xR,yR), [21,22] foot contact flags, [23] target
// speed. Joint order: hipL, kneeL, ankleL, hipR, kneeR, ankleR.
struct BipedObservation {
  double root_height = 0.0;
  double root_pitch = 0.0;
  Vec2 root_linear_velocity;
  double root_angular_velocity = 0.0;
  std::array<double, 6> joint_angles{};
  std::array<double, 6> joint_velocities{};
  std::array<Vec2, 2> ankle_positions_rel_com{};
  std::array<bool, 2> foot_contact_flags{};
  double target_speed = 0.0;

  static constexpr int kDim = 24;
  Eigen::VectorXd vec() const;
};

struct BipedAction {
  std::array<double, 6> joint_torques{};  // [-1,1], scaled per joint
  static constexpr int kDim = 6;
};

class BipedEnv {
 public:
  explicit BipedEnv(const BipedParams& params = BipedParams{},
                    const BipedEpisodeConfig& episode = BipedEpisodeConfig{});

  BipedObservation reset(std::uint64_t seed);
  BipedObservation reset(const BipedEpisodeConfig& episode, std::uint64_t seed);
  StepResult<BipedObservation> step(const BipedAction& action);

  const BipedObservation& observation() const { return obs_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }
  bool terminated_abnormally() const { return abnormal_; }

  // Same layout and conventions as the ROM extractor: [root height, ankle
  // positions relative to the root body], physical units.
  GaitFeature gait_feature() const;
  GaitFeature normalized_gait_feature() const;
  double nominal_height() const { return params_.nominal_root_height(); }

  const World& world() const { return world_; }
  const BipedParams& params() const { return params_; }
  const BipedEpisodeConfig& episode_config() const { return episode_; }

  // body indices
  static constexpr int kTorso = 0;
  static constexpr int kThighL = 1, kShinL = 2, kFootL = 3;
  static constexpr int kThighR = 4, kShinR = 5, kFootR = 6;
  // joint indices (also actuator order)
  static constexpr int kHipL = 0, kKneeL = 1, kAnkleL = 2;
  static constexpr int kHipR = 3, kKneeR = 4, kAnkleR = 5;

 private:
  void rebuild_world();
  void refresh_observation();
  double com_velocity_x() const;

  BipedParams params_;
  BipedEpisodeConfig episode_;
  World world_;
  BipedObservation obs_;
  int steps_ = 0;
  bool done_ = true;
  bool abnormal_ = false;
};

}  // namespace romgait
