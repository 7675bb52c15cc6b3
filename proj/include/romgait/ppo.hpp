#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "romgait/checkpoint.hpp"
#include "romgait/neural.hpp"
#include "romgait/rng.hpp"
#include "romgait/rom_env.hpp"

namespace romgait {

struct PpoConfig {
  int num_actors = 8;
  int rollout_length = 256;
  std::int64_t total_steps = 1'000'000;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  int epochs_per_batch = 4;
  int minibatch_size = 256;
  double value_loss_coeff = 0.5;
  double entropy_coeff = 0.0;
  double learning_rate = 1e-4;
  int hidden_width = 512;
  int hidden_depth = 2;
  int checkpoint_every_iters = 0;  // 0 = final checkpoint only

  void validate() const;
};

// Diagonal Gaussian with a state-independent log-std vector and tanh action
// squashing. The flat parameter vector is [mean-net params | log_std].
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, int act_dim, int width, int depth, Rng& init_rng);

  struct Sample {
    Eigen::MatrixXd pre_squash;  // act_dim x batch
    Eigen::MatrixXd action;     // tanh(pre_squash)
    Eigen::VectorXd log_prob;   // per column
  };
  Sample sample(const Eigen::MatrixXd& obs, Rng& rng) const;
  Eigen::VectorXd act_deterministic(const Eigen::VectorXd& obs) const;

  // log pi for stored pre-squash actions under the current parameters
  Eigen::VectorXd log_prob(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& pre_squash) const;

  nn::Mlp& mean_net() { return mean_net_; }
  const nn::Mlp& mean_net() const { return mean_net_; }
  const Eigen::VectorXd& log_std() const { return log_std_; }
  Eigen::VectorXd& log_std_grad() { return log_std_grad_; }
  int action_dim() const { return static_cast<int>(log_std_.size()); }

  int param_count() const { return mean_net_.param_count() + action_dim(); }
  Eigen::VectorXd params_flat() const;
  void set_params_flat(const Eigen::VectorXd& p);  // clamps log_std to [-5, 2]
  Eigen::VectorXd grads_flat() const;
  void zero_grad();

  void save(BinaryWriter& w) const;
  static GaussianPolicy load(BinaryReader& r);

 private:
  nn::Mlp mean_net_;
  Eigen::VectorXd log_std_;
  Eigen::VectorXd log_std_grad_;
};

// One rollout batch from synchronous parallel actors, actor-major layout:
// flat index = actor * length + t. Observations are stored normalized, the
// way the policy saw them.
struct RolloutBatch {
  int num_actors = 0;
  int length = 0;
  Eigen::MatrixXd obs;         // obs_dim x N
  Eigen::MatrixXd pre_squash;  // act_dim x N
  Eigen::VectorXd log_probs;
  Eigen::VectorXd values;
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> dones;
  Eigen::VectorXd bootstrap_values;  // per actor, value of the state after the last step

  // episode bookkeeping collected while stepping
  std::vector<double> finished_episode_rewards;
  std::vector<int> finished_episode_lengths;
  double speed_error_sum = 0.0;

  std::int64_t size() const { return static_cast<std::int64_t>(num_actors) * length; }
};

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

// GAE over one aligned (rewards, values, dones) sequence. `bootstrap_value`
// is V(s_T) for a rollout cut before episode end; it is masked away when the
// final transition is terminal.
GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                      const std::vector<std::uint8_t>& dones, double gamma, double lambda,
                      double bootstrap_value);

// In-place batch normalization to zero mean, unit std.
void normalize_advantages(Eigen::VectorXd& advantages);

struct PpoUpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  bool aborted = false;  // non-finite loss; parameters restored
};

PpoUpdateStats ppo_update(GaussianPolicy& policy, nn::Adam& policy_adam, nn::Mlp& value_net,
                          nn::Adam& value_adam, const RolloutBatch& batch,
                          const Eigen::VectorXd& advantages, const Eigen::VectorXd& returns,
                          const PpoConfig& cfg, Rng& rng);

// Trained teacher artifact: policy, value net, optimizer state and the
// observation normalizer it was trained with.
struct TeacherCheckpoint {
  GaussianPolicy policy;
  nn::Mlp value_net;
  nn::Adam policy_adam;
  nn::Adam value_adam;
  nn::RunningNormalizer obs_norm;
  std::uint64_t steps_done = 0;
  std::string config_json;

  void save(const std::string& path) const;
  static TeacherCheckpoint load(const std::string& path);

  Eigen::VectorXd act_deterministic(const RomObservation& obs) const;
};

struct PpoMetricsRow {
  std::int64_t step = 0;
  double mean_reward = 0.0;
  double mean_speed_error = 0.0;
  double episode_len = 0.0;
};

// Synchronous-parallel PPO on the ROM. Writes metrics to a CSV (append-only)
// and periodic checkpoints when out paths are provided.
class PpoTrainer {
 public:
  PpoTrainer(const RomParams& rom, const EpisodeConfig& episode, const PpoConfig& cfg,
             std::uint64_t seed);

  // Continue from a saved teacher; step counting resumes.
  void restore(const TeacherCheckpoint& ckpt);

  RolloutBatch collect_rollouts(int length);
  std::vector<PpoMetricsRow> train(const std::string& checkpoint_path,
                                   const std::string& metrics_csv_path);

  const TeacherCheckpoint& snapshot();
  std::int64_t steps_done() const { return steps_done_; }
  void set_config_json(std::string json) { config_json_ = std::move(json); }

 private:
  void append_metrics(const std::string& path, const PpoMetricsRow& row, bool header);

  RomParams rom_;
  EpisodeConfig episode_;
  PpoConfig cfg_;
  std::uint64_t seed_;
  std::vector<RomEnv> envs_;
  std::vector<std::uint64_t> episode_counters_;
  std::vector<double> running_episode_reward_;
  std::vector<int> running_episode_len_;
  GaussianPolicy policy_;
  nn::Mlp value_net_;
  nn::Adam policy_adam_;
  nn::Adam value_adam_;
  nn::RunningNormalizer obs_norm_;
  Rng rollout_rng_;
  Rng update_rng_;
  std::int64_t steps_done_ = 0;
  TeacherCheckpoint snapshot_;
  std::string config_json_;
};

}  // namespace romgait
