#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "romgait/biped_env.hpp"
#include "romgait/checkpoint.hpp"
#include "romgait/gaitdata.hpp"
#include "romgait/neural.hpp"
#include "romgait/rng.hpp"

namespace romgait {

struct SacConfig {
  std::int64_t replay_capacity = 1'000'000;
  int batch_size = 256;
  double gamma = 0.99;
  double tau_polyak = 0.005;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  double entropy_target = 0.0;  // 0 = use -action_dim
  bool auto_alpha = true;
  double init_alpha = 0.2;
  double updates_per_env_step = 1.0;
  std::int64_t warmup_steps = 5000;
  int hidden_width = 256;
  int hidden_depth = 2;

  void validate() const;
  double resolved_entropy_target(int action_dim) const {
    return entropy_target != 0.0 ? entropy_target : -static_cast<double>(action_dim);
  }
};

// Off-policy transition record. The gait feature of the reached state is
// stored so the imitation bonus can be recomputed with the current
// discriminator at sample time.
struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward_env = 0.0;
  GaitFeature gait_feature;
  Eigen::VectorXd next_state;
  bool done = false;
};

// Fixed-capacity FIFO ring with uniform sampling. Index 0 is always the
// oldest stored record.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::int64_t capacity);

  void insert(Transition t);
  std::size_t size() const { return data_.size(); }
  std::int64_t capacity() const { return capacity_; }
  const Transition& at(std::size_t logical) const;
  std::vector<std::size_t> sample_indices(int n, Rng& rng) const;

 private:
  std::int64_t capacity_;
  std::vector<Transition> data_;
  std::size_t cursor_ = 0;  // next write slot once full
  bool full_ = false;
};

// y_i = r_i + gamma * (1 - done_i) * (min(q1,q2)_i - alpha * logp_i)
Eigen::VectorXd soft_targets(const Eigen::VectorXd& rewards,
                             const std::vector<std::uint8_t>& dones,
                             const Eigen::VectorXd& q1_next, const Eigen::VectorXd& q2_next,
                             const Eigen::VectorXd& next_log_prob, double alpha, double gamma);

// target <- tau * online + (1 - tau) * target
void polyak_update(nn::Mlp& target, const nn::Mlp& online, double tau);

// Maps a sampled transition to the scalar training reward (eta-blended).
using RewardFn = std::function<double(const Transition&)>;

struct SacUpdateStats {
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double mean_reward = 0.0;  // blended, over the sampled batch
  bool skipped = false;      // non-finite loss
};

// Twin-critic SAC with tanh-squashed Gaussian actor and optional automatic
// temperature tuning.
class SacAgent {
 public:
  SacAgent() = default;
  SacAgent(int obs_dim, int act_dim, const SacConfig& cfg, std::uint64_t seed);

  Eigen::VectorXd act_stochastic(const Eigen::VectorXd& obs, Rng& rng) const;
  Eigen::VectorXd act_deterministic(const Eigen::VectorXd& obs) const;

  SacUpdateStats update(ReplayBuffer& replay, const RewardFn& reward_fn, Rng& rng);

  double alpha() const { return std::exp(log_alpha_); }
  const nn::Mlp& actor() const { return actor_; }
  nn::Mlp& actor() { return actor_; }
  nn::Mlp& critic1() { return q1_; }
  nn::Mlp& critic2() { return q2_; }
  nn::Mlp& critic1_target() { return q1_target_; }
  nn::Mlp& critic2_target() { return q2_target_; }
  const SacConfig& config() const { return cfg_; }

  void save(const std::string& path, std::uint64_t steps, const std::string& config_json) const;

  // mean and soft-clamped log-std rows from the raw actor head
  struct PolicyHead {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd log_std;
    Eigen::MatrixXd raw;  // pre-clamp rows for the log-std half
  };
  PolicyHead policy_head(const Eigen::MatrixXd& raw_out) const;

 private:
  friend struct LoadedSacAgent;
  SacConfig cfg_;
  int obs_dim_ = 0, act_dim_ = 0;
  nn::Mlp actor_;  // obs -> [mean; raw log-std]
  nn::Mlp q1_, q2_, q1_target_, q2_target_;
  nn::Adam actor_adam_, q1_adam_, q2_adam_;
  double log_alpha_ = 0.0;
  nn::Adam alpha_adam_;
  double entropy_target_ = 0.0;
};

struct LoadedSacAgent {
  SacAgent agent;
  std::uint64_t steps = 0;
  std::string config_json;

  static LoadedSacAgent load(const std::string& path);
};

}  // namespace romgait
