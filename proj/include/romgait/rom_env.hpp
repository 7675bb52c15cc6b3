#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>

#include "romgait/gaitdata.hpp"
#include "romgait/physics2d.hpp"
#include "romgait/rng.hpp"

namespace romgait {

// Physical parameters of the 4-DOF reduced-order walker: a central mass with
// two spring legs on actuated hips. Defaults put passive spring compression
// under body weight at about 5%.
struct RomParams {
  double body_mass = 10.0;        // kg
  double rest_length = 1.0;       // m
  double stiffness = 2000.0;      // N/m
  double damping = 10.0;          // N·s/m
  double hip_damping = 2.0;       // N·m·s
  double hip_torque_limit = 100.0;  // N·m
  double foot_mass_ratio = 1e-3;  // proxy foot mass as a fraction of body mass
  double dt = 1.0 / 60.0;
  int substeps = 32;
  double friction = 1.0;
};

enum class RewardMode { exponential, raw_forward_velocity };

struct EpisodeConfig {
  double target_speed = 1.0;  // m/s
  double alpha = 2.0;         // reward sensitivity
  int max_steps = 1000;
  RewardMode reward_mode = RewardMode::raw_forward_velocity;
  double fall_threshold = 0.4;  // m, body height below this terminates

  void validate() const;
};

// 20-component observation; vec() packs the fields in this order:
// [0] body height, [1,2] body velocity, [3,4] spring lengths L/R,
// [5,6] spring length rates, [7,8] hip angles, [9,10] hip angular velocities,
// [11..14] foot positions rel body (xL,yL,xR,yR), [15..18] foot velocities
// rel body, [19] target speed.
struct RomObservation {
  double body_height = 0.0;
  Vec2 body_velocity;
  std::array<double, 2> spring_lengths{};
  std::array<double, 2> spring_length_rates{};
  std::array<double, 2> hip_angles{};
  std::array<double, 2> hip_angular_velocities{};
  std::array<Vec2, 2> foot_positions_rel_com{};
  std::array<Vec2, 2> foot_velocities_rel_com{};
  double target_speed = 0.0;

  static constexpr int kDim = 20;
  Eigen::VectorXd vec() const;
};

struct RomAction {
  std::array<double, 2> hip_torques{};  // [-1,1], scaled by hip_torque_limit
  static constexpr int kDim = 2;
};

template <typename Obs>
struct StepResult {
  Obs observation;
  double reward = 0.0;
  bool done = false;
};

// Episodic wrapper around the ROM mechanism. One instance per actor;
// instances are independent and safe to step in parallel with each other.
class RomEnv {
 public:
  explicit RomEnv(const RomParams& params = RomParams{},
                  const EpisodeConfig& episode = EpisodeConfig{});

  RomObservation reset(std::uint64_t seed);
  RomObservation reset(const EpisodeConfig& episode, std::uint64_t seed);
  StepResult<RomObservation> step(const RomAction& action);

  const RomObservation& observation() const { return obs_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }
  bool terminated_abnormally() const { return abnormal_; }
  double com_speed_error() const;  // |v_x - target|

  // the per-step reward as a function of forward COM velocity
  static double reward_function(double vx, const EpisodeConfig& episode);

  // [y_com, foot positions rel body], physical units.
  static GaitFeature extract_gait_feature(const World& world);
  GaitFeature gait_feature() const { return extract_gait_feature(world_); }
  GaitFeature normalized_gait_feature() const;
  double nominal_height() const { return params_.rest_length; }

  const World& world() const { return world_; }
  // direct state access for scripted setups; call refresh_from_world() after
  World& mutable_world() { return world_; }
  void refresh_from_world();
  const RomParams& params() const { return params_; }
  const EpisodeConfig& episode_config() const { return episode_; }

  static constexpr int kBody = 0;
  static constexpr int kFootL = 1;
  static constexpr int kFootR = 2;

 private:
  void rebuild_world(double body_y, const std::array<double, 2>& lengths,
                     const std::array<double, 2>& angles);
  void refresh_observation();
  double reward_for_state() const;

  RomParams params_;
  EpisodeConfig episode_;
  World world_;
  RomObservation obs_;
  int steps_ = 0;
  bool done_ = true;
  bool abnormal_ = false;
};

}  // namespace romgait
