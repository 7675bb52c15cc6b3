#include "romgait/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "romgait/logging.hpp"

namespace romgait {

void PpoConfig::validate() const {
  if (num_actors < 1) throw ConfigError("ppo.num_actors must be >= 1");
  if (rollout_length < 1) throw ConfigError("ppo.rollout_length must be >= 1");
  if (total_steps < 0) throw ConfigError("ppo.total_steps must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must be in (0,1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo.gae_lambda must be in [0,1]");
  if (!(clip_ratio > 0.0)) throw ConfigError("ppo.clip_ratio must be > 0");
  if (epochs_per_batch < 1) throw ConfigError("ppo.epochs must be >= 1");
  if (minibatch_size < 1) throw ConfigError("ppo.minibatch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate must be > 0");
  if (hidden_width < 1 || hidden_depth < 1) throw ConfigError("ppo.hidden must be >= 1");
}

GaussianPolicy::GaussianPolicy(int obs_dim, int act_dim, int width, int depth, Rng& init_rng) {
  nn::MlpSpec spec;
  spec.input_dim = obs_dim;
  for (int i = 0; i < depth; ++i) spec.hidden.push_back({width, nn::Activation::relu, 0.0});
  spec.output_dim = act_dim;
  mean_net_ = nn::Mlp(spec);
  mean_net_.init_orthogonal(init_rng, std::sqrt(2.0), 0.01);
  log_std_ = Eigen::VectorXd::Constant(act_dim, -0.5);
  log_std_grad_ = Eigen::VectorXd::Zero(act_dim);
}

GaussianPolicy::Sample GaussianPolicy::sample(const Eigen::MatrixXd& obs, Rng& rng) const {
  const Eigen::MatrixXd mean = mean_net_.forward_eval_batch(obs);
  const Eigen::Index act_dim = log_std_.size();
  Sample s;
  s.pre_squash.resize(act_dim, mean.cols());
  for (Eigen::Index c = 0; c < mean.cols(); ++c) {
    for (Eigen::Index j = 0; j < act_dim; ++j) {
      s.pre_squash(j, c) = mean(j, c) + std::exp(log_std_(j)) * rng.normal();
    }
  }
  s.action = s.pre_squash.array().tanh();
  s.log_prob.resize(mean.cols());
  for (Eigen::Index c = 0; c < mean.cols(); ++c) {
    s.log_prob(c) = nn::tanh_gaussian_log_prob(s.pre_squash.col(c), mean.col(c), log_std_);
  }
  return s;
}

Eigen::VectorXd GaussianPolicy::act_deterministic(const Eigen::VectorXd& obs) const {
  return mean_net_.forward_eval(obs).array().tanh();
}

Eigen::VectorXd GaussianPolicy::log_prob(const Eigen::MatrixXd& mean,
                                         const Eigen::MatrixXd& pre_squash) const {
  Eigen::VectorXd lp(mean.cols());
  for (Eigen::Index c = 0; c < mean.cols(); ++c) {
    lp(c) = nn::tanh_gaussian_log_prob(pre_squash.col(c), mean.col(c), log_std_);
  }
  return lp;
}

Eigen::VectorXd GaussianPolicy::params_flat() const {
  Eigen::VectorXd p(param_count());
  p.head(mean_net_.param_count()) = mean_net_.params_flat();
  p.tail(action_dim()) = log_std_;
  return p;
}

void GaussianPolicy::set_params_flat(const Eigen::VectorXd& p) {
  if (p.size() != param_count()) throw ShapeMismatch("policy flat parameter size");
  Eigen::VectorXd net = p.head(mean_net_.param_count());
  nn::Mlp& m = mean_net_;
  m.set_params_flat(net);
  log_std_ = p.tail(action_dim()).cwiseMax(nn::kLogStdMin).cwiseMin(nn::kLogStdMax);
}

Eigen::VectorXd GaussianPolicy::grads_flat() const {
  Eigen::VectorXd g(param_count());
  g.head(mean_net_.param_count()) = mean_net_.grads_flat();
  g.tail(action_dim()) = log_std_grad_;
  return g;
}

void GaussianPolicy::zero_grad() {
  mean_net_.zero_grad();
  log_std_grad_.setZero();
}

void GaussianPolicy::save(BinaryWriter& w) const {
  mean_net_.save(w);
  save_vector(w, log_std_);
}

GaussianPolicy GaussianPolicy::load(BinaryReader& r) {
  GaussianPolicy p;
  p.mean_net_ = nn::Mlp::load(r);
  p.log_std_ = load_vector(r);
  p.log_std_grad_ = Eigen::VectorXd::Zero(p.log_std_.size());
  return p;
}

GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                      const std::vector<std::uint8_t>& dones, double gamma, double lambda,
                      double bootstrap_value) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n || static_cast<Eigen::Index>(dones.size()) != n) {
    throw LengthMismatch("gae sequences must have equal length");
  }
  GaeResult out;
  out.advantages.resize(n);
  double gae = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double nonterminal = dones[static_cast<std::size_t>(t)] ? 0.0 : 1.0;
    const double next_value = (t == n - 1) ? bootstrap_value : values(t + 1);
    const double delta = rewards(t) + gamma * next_value * nonterminal - values(t);
    gae = delta + gamma * lambda * nonterminal * gae;
    out.advantages(t) = gae;
  }
  out.returns = out.advantages + values;
  return out;
}

void normalize_advantages(Eigen::VectorXd& advantages) {
  const double mean = advantages.mean();
  const double var = (advantages.array() - mean).square().mean();
  advantages = (advantages.array() - mean) / (std::sqrt(var) + 1e-8);
}

PpoUpdateStats ppo_update(GaussianPolicy& policy, nn::Adam& policy_adam, nn::Mlp& value_net,
                          nn::Adam& value_adam, const RolloutBatch& batch,
                          const Eigen::VectorXd& advantages, const Eigen::VectorXd& returns,
                          const PpoConfig& cfg, Rng& rng) {
  const Eigen::Index n = batch.size();
  if (advantages.size() != n || returns.size() != n) {
    throw LengthMismatch("advantages/returns do not match the batch");
  }

  // snapshot for rollback on a non-finite loss
  const Eigen::VectorXd policy_backup = policy.params_flat();
  const Eigen::VectorXd value_backup = value_net.params_flat();
  const nn::Adam policy_adam_backup = policy_adam;
  const nn::Adam value_adam_backup = value_adam;

  const int act_dim = policy.action_dim();
  constexpr double kLog2Pi = 1.8378770664093454836;

  PpoUpdateStats stats;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  double last_policy_loss = 0.0, last_value_loss = 0.0, last_entropy = 0.0, last_kl = 0.0;
  for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    rng.shuffle(order);
    for (Eigen::Index start = 0; start < n; start += cfg.minibatch_size) {
      const Eigen::Index m = std::min<Eigen::Index>(cfg.minibatch_size, n - start);
      Eigen::MatrixXd obs(batch.obs.rows(), m);
      Eigen::MatrixXd pre(act_dim, m);
      Eigen::VectorXd old_lp(m), adv(m), ret(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index i = order[static_cast<std::size_t>(start + k)];
        obs.col(k) = batch.obs.col(i);
        pre.col(k) = batch.pre_squash.col(i);
        old_lp(k) = batch.log_probs(i);
        adv(k) = advantages(i);
        ret(k) = returns(i);
      }

      policy.zero_grad();
      value_net.zero_grad();

      const Eigen::MatrixXd mean = policy.mean_net().forward(obs, true);
      const Eigen::VectorXd& log_std = policy.log_std();
      Eigen::MatrixXd d_mean = Eigen::MatrixXd::Zero(act_dim, m);
      Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(act_dim);

      double policy_loss = 0.0, kl = 0.0;
      const double inv_m = 1.0 / static_cast<double>(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        double lp_new = 0.0;
        for (int j = 0; j < act_dim; ++j) {
          const double sigma = std::exp(log_std(j));
          const double xi = (pre(j, k) - mean(j, k)) / sigma;
          const double a = std::tanh(pre(j, k));
          lp_new += -0.5 * xi * xi - log_std(j) - 0.5 * kLog2Pi -
                    std::log(1.0 - a * a + nn::kSquashEps);
        }
        const double log_ratio = lp_new - old_lp(k);
        const double ratio = std::exp(log_ratio);
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio);
        const double obj_unclipped = ratio * adv(k);
        const double obj_clipped = clipped * adv(k);
        policy_loss += -std::min(obj_unclipped, obj_clipped) * inv_m;
        kl += ((ratio - 1.0) - log_ratio) * inv_m;

        // gradient flows only through the unclipped branch when it is the min
        if (obj_unclipped <= obj_clipped) {
          const double dl_dlp = -adv(k) * ratio * inv_m;
          for (int j = 0; j < act_dim; ++j) {
            const double sigma = std::exp(log_std(j));
            const double xi = (pre(j, k) - mean(j, k)) / sigma;
            d_mean(j, k) += dl_dlp * (xi / sigma);
            d_log_std(j) += dl_dlp * (xi * xi - 1.0);
          }
        }
      }

      // entropy bonus on the base Gaussian: d entropy / d log_std = 1 per dim
      double entropy = 0.0;
      for (int j = 0; j < act_dim; ++j) entropy += log_std(j) + 0.5 * (1.0 + kLog2Pi);
      if (cfg.entropy_coeff != 0.0) d_log_std.array() += -cfg.entropy_coeff;

      const Eigen::MatrixXd v = value_net.forward(obs, true);
      Eigen::MatrixXd d_v(1, m);
      double value_loss = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        const double err = v(0, k) - ret(k);
        value_loss += err * err * inv_m;
        d_v(0, k) = 2.0 * cfg.value_loss_coeff * err * inv_m;
      }

      const double total_loss =
          policy_loss + cfg.value_loss_coeff * value_loss - cfg.entropy_coeff * entropy;
      if (!std::isfinite(total_loss)) {
        policy.set_params_flat(policy_backup);
        value_net.set_params_flat(value_backup);
        policy_adam = policy_adam_backup;
        value_adam = value_adam_backup;
        stats.aborted = true;
        log_info("ppo update aborted on non-finite loss; parameters restored");
        return stats;
      }

      policy.mean_net().backward(d_mean);
      policy.log_std_grad() = d_log_std;
      value_net.backward(d_v);

      Eigen::VectorXd p = policy.params_flat();
      policy_adam.step(p, policy.grads_flat());
      policy.set_params_flat(p);
      Eigen::VectorXd vp = value_net.params_flat();
      value_adam.step(vp, value_net.grads_flat());
      value_net.set_params_flat(vp);

      last_policy_loss = policy_loss;
      last_value_loss = value_loss;
      last_entropy = entropy;
      last_kl = kl;
    }
  }
  stats.policy_loss = last_policy_loss;
  stats.value_loss = last_value_loss;
  stats.entropy = last_entropy;
  stats.approx_kl = last_kl;
  return stats;
}

void TeacherCheckpoint::save(const std::string& path) const {
  BinaryWriter w;
  write_checkpoint_header(w, CheckpointKind::teacher, steps_done, config_json);
  policy.save(w);
  value_net.save(w);
  policy_adam.save(w);
  value_adam.save(w);
  obs_norm.save(w);
  w.write_file_with_crc(path);
}

TeacherCheckpoint TeacherCheckpoint::load(const std::string& path) {
  BinaryReader r = BinaryReader::from_file(path);
  r.check_crc(path);
  const CheckpointHeader h = read_checkpoint_header(r, CheckpointKind::teacher);
  TeacherCheckpoint c;
  c.steps_done = h.steps;
  c.config_json = h.json;
  c.policy = GaussianPolicy::load(r);
  c.value_net = nn::Mlp::load(r);
  c.policy_adam = nn::Adam::load(r);
  c.value_adam = nn::Adam::load(r);
  c.obs_norm = nn::RunningNormalizer::load(r);
  return c;
}

Eigen::VectorXd TeacherCheckpoint::act_deterministic(const RomObservation& obs) const {
  return policy.act_deterministic(obs_norm.normalize(obs.vec()));
}

PpoTrainer::PpoTrainer(const RomParams& rom, const EpisodeConfig& episode, const PpoConfig& cfg,
                       std::uint64_t seed)
    : rom_(rom),
      episode_(episode),
      cfg_(cfg),
      seed_(seed),
      rollout_rng_(Rng::derive(seed, 1)),
      update_rng_(Rng::derive(seed, 2)) {
  cfg_.validate();
  episode_.validate();
  Rng init_rng(Rng::derive(seed, 0));
  policy_ = GaussianPolicy(RomObservation::kDim, RomAction::kDim, cfg_.hidden_width,
                           cfg_.hidden_depth, init_rng);
  nn::MlpSpec vspec;
  vspec.input_dim = RomObservation::kDim;
  for (int i = 0; i < cfg_.hidden_depth; ++i) {
    vspec.hidden.push_back({cfg_.hidden_width, nn::Activation::relu, 0.0});
  }
  vspec.output_dim = 1;
  value_net_ = nn::Mlp(vspec);
  value_net_.init_orthogonal(init_rng, std::sqrt(2.0), 1.0);
  policy_adam_ = nn::Adam({cfg_.learning_rate}, policy_.param_count());
  value_adam_ = nn::Adam({cfg_.learning_rate}, value_net_.param_count());
  obs_norm_ = nn::RunningNormalizer(RomObservation::kDim);

  envs_.reserve(static_cast<std::size_t>(cfg_.num_actors));
  for (int a = 0; a < cfg_.num_actors; ++a) {
    envs_.emplace_back(rom_, episode_);
    episode_counters_.push_back(0);
    running_episode_reward_.push_back(0.0);
    running_episode_len_.push_back(0);
    envs_.back().reset(Rng::derive(seed_, 100 + static_cast<std::uint64_t>(a)));
  }
}

void PpoTrainer::restore(const TeacherCheckpoint& ckpt) {
  policy_ = ckpt.policy;
  value_net_ = ckpt.value_net;
  policy_adam_ = ckpt.policy_adam;
  value_adam_ = ckpt.value_adam;
  obs_norm_ = ckpt.obs_norm;
  steps_done_ = static_cast<std::int64_t>(ckpt.steps_done);
}

RolloutBatch PpoTrainer::collect_rollouts(int length) {
  const int actors = cfg_.num_actors;
  const Eigen::Index n = static_cast<Eigen::Index>(actors) * length;
  RolloutBatch b;
  b.num_actors = actors;
  b.length = length;
  b.obs.resize(RomObservation::kDim, n);
  b.pre_squash.resize(RomAction::kDim, n);
  b.log_probs.resize(n);
  b.values.resize(n);
  b.rewards.resize(n);
  b.dones.assign(static_cast<std::size_t>(n), 0);
  b.bootstrap_values.resize(actors);

  Eigen::MatrixXd raw(RomObservation::kDim, actors);
  for (int t = 0; t < length; ++t) {
    for (int a = 0; a < actors; ++a) raw.col(a) = envs_[static_cast<std::size_t>(a)].observation().vec();
    for (int a = 0; a < actors; ++a) obs_norm_.observe(raw.col(a));
    const Eigen::MatrixXd norm = obs_norm_.normalize_cols(raw);
    const GaussianPolicy::Sample s = policy_.sample(norm, rollout_rng_);
    const Eigen::MatrixXd values = value_net_.forward_eval_batch(norm);

    for (int a = 0; a < actors; ++a) {
      auto& env = envs_[static_cast<std::size_t>(a)];
      const Eigen::Index idx = static_cast<Eigen::Index>(a) * length + t;
      b.obs.col(idx) = norm.col(a);
      b.pre_squash.col(idx) = s.pre_squash.col(a);
      b.log_probs(idx) = s.log_prob(a);
      b.values(idx) = values(0, a);

      RomAction act;
      act.hip_torques = {s.action(0, a), s.action(1, a)};
      const auto result = env.step(act);
      b.rewards(idx) = result.reward;
      b.dones[static_cast<std::size_t>(idx)] = result.done ? 1 : 0;
      b.speed_error_sum += env.com_speed_error();
      running_episode_reward_[static_cast<std::size_t>(a)] += result.reward;
      running_episode_len_[static_cast<std::size_t>(a)] += 1;
      if (result.done) {
        b.finished_episode_rewards.push_back(running_episode_reward_[static_cast<std::size_t>(a)]);
        b.finished_episode_lengths.push_back(running_episode_len_[static_cast<std::size_t>(a)]);
        running_episode_reward_[static_cast<std::size_t>(a)] = 0.0;
        running_episode_len_[static_cast<std::size_t>(a)] = 0;
        const std::uint64_t ep_seed = Rng::derive(
            seed_, 1000 + static_cast<std::uint64_t>(a) * 1000003 +
                       ++episode_counters_[static_cast<std::size_t>(a)]);
        env.reset(ep_seed);
      }
    }
  }

  for (int a = 0; a < actors; ++a) {
    const Eigen::VectorXd norm =
        obs_norm_.normalize(envs_[static_cast<std::size_t>(a)].observation().vec());
    b.bootstrap_values(a) = value_net_.forward_eval(norm)(0);
  }
  return b;
}

void PpoTrainer::append_metrics(const std::string& path, const PpoMetricsRow& row, bool header) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoFailure("cannot open " + path);
  if (header) out << "step,mean_reward,mean_speed_error,episode_len\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.10g\n",
                static_cast<long long>(row.step), row.mean_reward, row.mean_speed_error,
                row.episode_len);
  out << buf;
}

std::vector<PpoMetricsRow> PpoTrainer::train(const std::string& checkpoint_path,
                                             const std::string& metrics_csv_path) {
  const std::int64_t steps_per_iter =
      static_cast<std::int64_t>(cfg_.num_actors) * cfg_.rollout_length;
  const std::int64_t target = steps_done_ + cfg_.total_steps;
  bool need_header =
      !metrics_csv_path.empty() && !std::filesystem::exists(metrics_csv_path);

  std::vector<PpoMetricsRow> metrics;
  double last_mean_reward = 0.0, last_ep_len = 0.0;
  int iter = 0;
  const int checkpoint_every = cfg_.checkpoint_every_iters;

  while (steps_done_ < target) {
    RolloutBatch batch = collect_rollouts(cfg_.rollout_length);

    Eigen::VectorXd advantages(batch.size());
    Eigen::VectorXd returns(batch.size());
    for (int a = 0; a < batch.num_actors; ++a) {
      const Eigen::Index off = static_cast<Eigen::Index>(a) * batch.length;
      const Eigen::VectorXd r = batch.rewards.segment(off, batch.length);
      const Eigen::VectorXd v = batch.values.segment(off, batch.length);
      std::vector<std::uint8_t> d(batch.dones.begin() + off,
                                  batch.dones.begin() + off + batch.length);
      const GaeResult g = compute_gae(r, v, d, cfg_.gamma, cfg_.gae_lambda,
                                      batch.bootstrap_values(a));
      advantages.segment(off, batch.length) = g.advantages;
      returns.segment(off, batch.length) = g.returns;
    }
    normalize_advantages(advantages);

    ppo_update(policy_, policy_adam_, value_net_, value_adam_, batch, advantages, returns, cfg_,
               update_rng_);
    steps_done_ += steps_per_iter;
    ++iter;

    PpoMetricsRow row;
    row.step = steps_done_;
    if (!batch.finished_episode_rewards.empty()) {
      double sum = 0.0;
      for (double x : batch.finished_episode_rewards) sum += x;
      last_mean_reward = sum / static_cast<double>(batch.finished_episode_rewards.size());
      double lsum = 0.0;
      for (int x : batch.finished_episode_lengths) lsum += x;
      last_ep_len = lsum / static_cast<double>(batch.finished_episode_lengths.size());
    }
    row.mean_reward = last_mean_reward;
    row.episode_len = last_ep_len;
    row.mean_speed_error = batch.speed_error_sum / static_cast<double>(batch.size());
    append_metrics(metrics_csv_path, row, need_header);
    need_header = false;
    metrics.push_back(row);

    if (!checkpoint_path.empty() && checkpoint_every > 0 && iter % checkpoint_every == 0) {
      snapshot().save(checkpoint_path);
    }
    if (iter % 10 == 0) {
      log_info("ppo step " + std::to_string(steps_done_) + " mean_reward " +
               std::to_string(row.mean_reward) + " ep_len " + std::to_string(row.episode_len));
    }
  }

  if (!checkpoint_path.empty()) snapshot().save(checkpoint_path);
  return metrics;
}

const TeacherCheckpoint& PpoTrainer::snapshot() {
  snapshot_.policy = policy_;
  snapshot_.value_net = value_net_;
  snapshot_.policy_adam = policy_adam_;
  snapshot_.value_adam = value_adam_;
  snapshot_.obs_norm = obs_norm_;
  snapshot_.steps_done = static_cast<std::uint64_t>(steps_done_);
  snapshot_.config_json = config_json_;
  return snapshot_;
}

}  // namespace romgait
