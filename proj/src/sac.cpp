#include "romgait/sac.hpp"

#include <algorithm>
#include <cmath>

#include "romgait/logging.hpp"

namespace romgait {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

// soft clamp keeps the log-std head differentiable everywhere
double clamp_log_std(double raw) {
  return nn::kLogStdMin + 0.5 * (nn::kLogStdMax - nn::kLogStdMin) * (std::tanh(raw) + 1.0);
}
double clamp_log_std_derivative(double raw) {
  const double t = std::tanh(raw);
  return 0.5 * (nn::kLogStdMax - nn::kLogStdMin) * (1.0 - t * t);
}
}  // namespace

void SacConfig::validate() const {
  if (replay_capacity < 1) throw ConfigError("sac.replay_capacity must be >= 1");
  if (batch_size < 1) throw ConfigError("sac.batch_size must be >= 1");
  if (replay_capacity < batch_size) {
    throw ConfigError("sac.replay_capacity must be >= sac.batch_size");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("sac.gamma must be in (0,1]");
  if (!(tau_polyak > 0.0 && tau_polyak <= 1.0)) throw ConfigError("sac.tau must be in (0,1]");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0) || !(alpha_lr > 0.0)) {
    throw ConfigError("sac learning rates must be > 0");
  }
  if (!(updates_per_env_step > 0.0)) throw ConfigError("sac.updates_per_env_step must be > 0");
  if (warmup_steps < 0) throw ConfigError("sac.warmup_steps must be >= 0");
  if (!(init_alpha > 0.0)) throw ConfigError("sac.init_alpha must be > 0");
}

ReplayBuffer::ReplayBuffer(std::int64_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw ConfigError("replay capacity must be >= 1");
}

void ReplayBuffer::insert(Transition t) {
  if (!full_) {
    data_.push_back(std::move(t));
    if (static_cast<std::int64_t>(data_.size()) == capacity_) {
      full_ = true;
      cursor_ = 0;
    }
    return;
  }
  data_[cursor_] = std::move(t);
  cursor_ = (cursor_ + 1) % data_.size();
}

const Transition& ReplayBuffer::at(std::size_t logical) const {
  if (!full_) return data_[logical];
  return data_[(cursor_ + logical) % data_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(int n, Rng& rng) const {
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_index(data_.size()));
  return idx;
}

Eigen::VectorXd soft_targets(const Eigen::VectorXd& rewards,
                             const std::vector<std::uint8_t>& dones,
                             const Eigen::VectorXd& q1_next, const Eigen::VectorXd& q2_next,
                             const Eigen::VectorXd& next_log_prob, double alpha, double gamma) {
  const Eigen::Index n = rewards.size();
  if (q1_next.size() != n || q2_next.size() != n || next_log_prob.size() != n ||
      static_cast<Eigen::Index>(dones.size()) != n) {
    throw LengthMismatch("soft target inputs must have equal length");
  }
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double nonterminal = dones[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
    const double soft_q = std::min(q1_next(i), q2_next(i)) - alpha * next_log_prob(i);
    y(i) = rewards(i) + gamma * nonterminal * soft_q;
  }
  return y;
}

void polyak_update(nn::Mlp& target, const nn::Mlp& online, double tau) {
  Eigen::VectorXd p = target.params_flat();
  p = tau * online.params_flat() + (1.0 - tau) * p;
  target.set_params_flat(p);
}

SacAgent::SacAgent(int obs_dim, int act_dim, const SacConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), obs_dim_(obs_dim), act_dim_(act_dim) {
  cfg_.validate();
  Rng init(Rng::derive(seed, 0x534143));

  nn::MlpSpec actor_spec;
  actor_spec.input_dim = obs_dim;
  for (int i = 0; i < cfg.hidden_depth; ++i) {
    actor_spec.hidden.push_back({cfg.hidden_width, nn::Activation::relu, 0.0});
  }
  actor_spec.output_dim = 2 * act_dim;
  actor_ = nn::Mlp(actor_spec);
  actor_.init_orthogonal(init, std::sqrt(2.0), 0.01);

  nn::MlpSpec q_spec;
  q_spec.input_dim = obs_dim + act_dim;
  for (int i = 0; i < cfg.hidden_depth; ++i) {
    q_spec.hidden.push_back({cfg.hidden_width, nn::Activation::relu, 0.0});
  }
  q_spec.output_dim = 1;
  q1_ = nn::Mlp(q_spec);
  q2_ = nn::Mlp(q_spec);
  q1_.init_orthogonal(init, std::sqrt(2.0), 1.0);
  q2_.init_orthogonal(init, std::sqrt(2.0), 1.0);
  q1_target_ = q1_;
  q2_target_ = q2_;

  actor_adam_ = nn::Adam({cfg.actor_lr}, actor_.param_count());
  q1_adam_ = nn::Adam({cfg.critic_lr}, q1_.param_count());
  q2_adam_ = nn::Adam({cfg.critic_lr}, q2_.param_count());
  log_alpha_ = std::log(cfg.init_alpha);
  alpha_adam_ = nn::Adam({cfg.alpha_lr}, 1);
  entropy_target_ = cfg.resolved_entropy_target(act_dim);
}

SacAgent::PolicyHead SacAgent::policy_head(const Eigen::MatrixXd& raw_out) const {
  PolicyHead h;
  h.mean = raw_out.topRows(act_dim_);
  h.raw = raw_out.bottomRows(act_dim_);
  h.log_std.resize(act_dim_, raw_out.cols());
  for (Eigen::Index c = 0; c < raw_out.cols(); ++c) {
    for (int j = 0; j < act_dim_; ++j) h.log_std(j, c) = clamp_log_std(h.raw(j, c));
  }
  return h;
}

Eigen::VectorXd SacAgent::act_stochastic(const Eigen::VectorXd& obs, Rng& rng) const {
  const Eigen::VectorXd raw = actor_.forward_eval(obs);
  Eigen::VectorXd a(act_dim_);
  for (int j = 0; j < act_dim_; ++j) {
    const double sigma = std::exp(clamp_log_std(raw(act_dim_ + j)));
    a(j) = std::tanh(raw(j) + sigma * rng.normal());
  }
  return a;
}

Eigen::VectorXd SacAgent::act_deterministic(const Eigen::VectorXd& obs) const {
  const Eigen::VectorXd raw = actor_.forward_eval(obs);
  return raw.head(act_dim_).array().tanh();
}

SacUpdateStats SacAgent::update(ReplayBuffer& replay, const RewardFn& reward_fn, Rng& rng) {
  SacUpdateStats stats;
  const int bsz = cfg_.batch_size;
  const auto idx = replay.sample_indices(bsz, rng);

  Eigen::MatrixXd s(obs_dim_, bsz), a(act_dim_, bsz), s_next(obs_dim_, bsz);
  Eigen::VectorXd rewards(bsz);
  std::vector<std::uint8_t> dones(static_cast<std::size_t>(bsz));
  for (int i = 0; i < bsz; ++i) {
    const Transition& t = replay.at(idx[static_cast<std::size_t>(i)]);
    s.col(i) = t.state;
    a.col(i) = t.action;
    s_next.col(i) = t.next_state;
    rewards(i) = reward_fn(t);
    dones[static_cast<std::size_t>(i)] = t.done ? 1 : 0;
  }
  stats.mean_reward = rewards.mean();

  // --- critic targets from fresh next-state actions ---
  const Eigen::MatrixXd raw_next = actor_.forward_eval_batch(s_next);
  const PolicyHead head_next = policy_head(raw_next);
  Eigen::MatrixXd a_next(act_dim_, bsz);
  Eigen::VectorXd logp_next(bsz);
  for (int i = 0; i < bsz; ++i) {
    Eigen::VectorXd u(act_dim_);
    for (int j = 0; j < act_dim_; ++j) {
      u(j) = head_next.mean(j, i) + std::exp(head_next.log_std(j, i)) * rng.normal();
    }
    a_next.col(i) = u.array().tanh();
    logp_next(i) = nn::tanh_gaussian_log_prob(u, head_next.mean.col(i), head_next.log_std.col(i));
  }
  Eigen::MatrixXd sa_next(obs_dim_ + act_dim_, bsz);
  sa_next.topRows(obs_dim_) = s_next;
  sa_next.bottomRows(act_dim_) = a_next;
  const Eigen::VectorXd q1n = q1_target_.forward_eval_batch(sa_next).row(0).transpose();
  const Eigen::VectorXd q2n = q2_target_.forward_eval_batch(sa_next).row(0).transpose();
  const Eigen::VectorXd y =
      soft_targets(rewards, dones, q1n, q2n, logp_next, alpha(), cfg_.gamma);

  // --- critic updates ---
  Eigen::MatrixXd sa(obs_dim_ + act_dim_, bsz);
  sa.topRows(obs_dim_) = s;
  sa.bottomRows(act_dim_) = a;
  const double inv_b = 1.0 / static_cast<double>(bsz);

  for (int which = 0; which < 2; ++which) {
    nn::Mlp& q = which == 0 ? q1_ : q2_;
    nn::Adam& opt = which == 0 ? q1_adam_ : q2_adam_;
    q.zero_grad();
    const Eigen::MatrixXd pred = q.forward(sa, true);
    Eigen::MatrixXd dq(1, bsz);
    double loss = 0.0;
    for (int i = 0; i < bsz; ++i) {
      const double err = pred(0, i) - y(i);
      loss += err * err * inv_b;
      dq(0, i) = 2.0 * err * inv_b;
    }
    if (!std::isfinite(loss)) {
      log_info("sac critic update skipped on non-finite loss");
      stats.skipped = true;
      return stats;
    }
    q.backward(dq);
    nn::adam_update(q, opt);
    (which == 0 ? stats.critic1_loss : stats.critic2_loss) = loss;
  }

  // --- actor update (reparameterized) ---
  actor_.zero_grad();
  const Eigen::MatrixXd raw = actor_.forward(s, true);
  const PolicyHead head = policy_head(raw);
  Eigen::MatrixXd xi(act_dim_, bsz);
  for (int i = 0; i < bsz; ++i) {
    for (int j = 0; j < act_dim_; ++j) xi(j, i) = rng.normal();
  }
  Eigen::MatrixXd u = head.mean;
  Eigen::MatrixXd sigma(act_dim_, bsz);
  for (int i = 0; i < bsz; ++i) {
    for (int j = 0; j < act_dim_; ++j) {
      sigma(j, i) = std::exp(head.log_std(j, i));
      u(j, i) += sigma(j, i) * xi(j, i);
    }
  }
  const Eigen::MatrixXd a_pi = u.array().tanh();

  Eigen::MatrixXd sa_pi(obs_dim_ + act_dim_, bsz);
  sa_pi.topRows(obs_dim_) = s;
  sa_pi.bottomRows(act_dim_) = a_pi;
  const Eigen::MatrixXd q1_pi = q1_.forward(sa_pi, true);
  const Eigen::MatrixXd q2_pi = q2_.forward(sa_pi, true);

  // dQmin/da through whichever critic attains the min, without touching
  // critic parameter gradients
  Eigen::MatrixXd dq1 = Eigen::MatrixXd::Zero(1, bsz);
  Eigen::MatrixXd dq2 = Eigen::MatrixXd::Zero(1, bsz);
  for (int i = 0; i < bsz; ++i) {
    if (q1_pi(0, i) <= q2_pi(0, i)) {
      dq1(0, i) = 1.0;
    } else {
      dq2(0, i) = 1.0;
    }
  }
  const Eigen::MatrixXd dsa1 = q1_.input_backward(dq1);
  const Eigen::MatrixXd dsa2 = q2_.input_backward(dq2);
  const Eigen::MatrixXd dq_da = dsa1.bottomRows(act_dim_) + dsa2.bottomRows(act_dim_);

  const double alpha_v = alpha();
  Eigen::MatrixXd d_raw = Eigen::MatrixXd::Zero(2 * act_dim_, bsz);
  Eigen::VectorXd logp(bsz);
  double actor_loss = 0.0;
  for (int i = 0; i < bsz; ++i) {
    double lp = 0.0;
    for (int j = 0; j < act_dim_; ++j) {
      const double av = a_pi(j, i);
      const double one_m_a2 = 1.0 - av * av;
      const double denom = one_m_a2 + nn::kSquashEps;
      lp += -0.5 * xi(j, i) * xi(j, i) - head.log_std(j, i) - 0.5 * kLog2Pi - std::log(denom);

      // d logp / d mu and d logp / d log_std (xi held fixed)
      const double dlp_du = 2.0 * av * one_m_a2 / denom;
      const double dlp_dmu = dlp_du;
      const double dlp_dls = -1.0 + dlp_du * sigma(j, i) * xi(j, i);
      // dQ/da chained to mu and log_std
      const double da_dmu = one_m_a2;
      const double da_dls = one_m_a2 * sigma(j, i) * xi(j, i);
      const double g = dq_da(j, i);

      const double d_mu = inv_b * (alpha_v * dlp_dmu - g * da_dmu);
      const double d_ls = inv_b * (alpha_v * dlp_dls - g * da_dls);
      d_raw(j, i) += d_mu;
      d_raw(act_dim_ + j, i) += d_ls * clamp_log_std_derivative(head.raw(j, i));
    }
    logp(i) = lp;
    actor_loss += inv_b * (alpha_v * lp - std::min(q1_pi(0, i), q2_pi(0, i)));
  }
  stats.actor_loss = actor_loss;
  if (!std::isfinite(actor_loss)) {
    log_info("sac actor update skipped on non-finite loss");
    stats.skipped = true;
    return stats;
  }
  actor_.backward(d_raw);
  nn::adam_update(actor_, actor_adam_);

  // --- temperature ---
  if (cfg_.auto_alpha) {
    const double grad = -(logp.mean() + entropy_target_);
    Eigen::VectorXd la(1), g(1);
    la(0) = log_alpha_;
    g(0) = grad;
    alpha_adam_.step(la, g);
    log_alpha_ = la(0);
  }
  stats.alpha = alpha();

  // --- target smoothing ---
  polyak_update(q1_target_, q1_, cfg_.tau_polyak);
  polyak_update(q2_target_, q2_, cfg_.tau_polyak);
  return stats;
}

void SacAgent::save(const std::string& path, std::uint64_t steps,
                    const std::string& config_json) const {
  BinaryWriter w;
  write_checkpoint_header(w, CheckpointKind::student, steps, config_json);
  w.put_u32(static_cast<std::uint32_t>(obs_dim_));
  w.put_u32(static_cast<std::uint32_t>(act_dim_));
  actor_.save(w);
  q1_.save(w);
  q2_.save(w);
  q1_target_.save(w);
  q2_target_.save(w);
  actor_adam_.save(w);
  q1_adam_.save(w);
  q2_adam_.save(w);
  w.put_f64(log_alpha_);
  alpha_adam_.save(w);
  w.put_f64(entropy_target_);
  w.write_file_with_crc(path);
}

LoadedSacAgent LoadedSacAgent::load(const std::string& path) {
  BinaryReader r = BinaryReader::from_file(path);
  r.check_crc(path);
  const CheckpointHeader h = read_checkpoint_header(r, CheckpointKind::student);
  LoadedSacAgent out;
  out.steps = h.steps;
  out.config_json = h.json;
  SacAgent& a = out.agent;
  a.obs_dim_ = static_cast<int>(r.get_u32());
  a.act_dim_ = static_cast<int>(r.get_u32());
  a.actor_ = nn::Mlp::load(r);
  a.q1_ = nn::Mlp::load(r);
  a.q2_ = nn::Mlp::load(r);
  a.q1_target_ = nn::Mlp::load(r);
  a.q2_target_ = nn::Mlp::load(r);
  a.actor_adam_ = nn::Adam::load(r);
  a.q1_adam_ = nn::Adam::load(r);
  a.q2_adam_ = nn::Adam::load(r);
  a.log_alpha_ = r.get_f64();
  a.alpha_adam_ = nn::Adam::load(r);
  a.entropy_target_ = r.get_f64();
  return out;
}

}  // namespace romgait
