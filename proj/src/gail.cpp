#include "romgait/gail.hpp"

#include <algorithm>
#include <cmath>

#include "romgait/checkpoint.hpp"
#include "romgait/logging.hpp"

namespace romgait {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double softplus(double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); }

// BCE with target t on logit z: softplus(z) - t*z
double bce_from_logit(double z, double t) { return softplus(z) - t * z; }

}  // namespace

void DiscriminatorConfig::validate() const {
  if (hidden1 < 1 || hidden2 < 1) throw ConfigError("disc.hidden sizes must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("disc.dropout must be in [0,1)");
  if (!(input_noise_sigma >= 0.0)) throw ConfigError("disc.noise_sigma must be >= 0");
  if (!(label_real > 0.0 && label_real < 1.0)) throw ConfigError("disc.label_real must be in (0,1)");
  if (!(label_fake > 0.0 && label_fake < 1.0)) throw ConfigError("disc.label_fake must be in (0,1)");
  if (!(learning_rate > 0.0)) throw ConfigError("disc.learning_rate must be > 0");
  if (!(gradient_penalty_coeff >= 0.0)) throw ConfigError("disc.gradient_penalty must be >= 0");
  if (update_every < 1) throw ConfigError("disc.update_every must be >= 1");
  if (start_step < 0) throw ConfigError("disc.start_step must be >= 0");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("disc.holdout_fraction must be in (0,1)");
  }
  if (patience < 1) throw ConfigError("disc.patience must be >= 1");
  if (batch_size < 1) throw ConfigError("disc.batch_size must be >= 1");
}

void BlendConfig::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("blend.eta must be in [0,1]");
}

double blend_reward(double r_env, double r_im, double eta) {
  return eta * r_env + (1.0 - eta) * r_im;
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  nn::MlpSpec spec;
  spec.input_dim = GaitFeature::kDim;
  spec.hidden.push_back({cfg.hidden1, nn::Activation::leaky_relu, cfg.dropout});
  spec.hidden.push_back({cfg.hidden2, nn::Activation::leaky_relu, cfg.dropout});
  spec.output_dim = 1;
  net_ = nn::Mlp(spec);
  Rng rng(Rng::derive(seed, 0x474149));
  net_.init_uniform_fan_in(rng);
}

double Discriminator::probability(const GaitFeature& f) const {
  const double p = sigmoid(logit(f));
  // keep strictly inside (0,1)
  return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

double Discriminator::imitation_bonus(const GaitFeature& f) const {
  const double d = std::clamp(sigmoid(logit(f)), cfg_.bonus_clip, 1.0 - cfg_.bonus_clip);
  return -std::log(1.0 - d);
}

void Discriminator::save(BinaryWriter& w) const { net_.save(w); }

Discriminator Discriminator::load(BinaryReader& r, const DiscriminatorConfig& cfg) {
  Discriminator d;
  d.cfg_ = cfg;
  d.net_ = nn::Mlp::load(r);
  return d;
}

DiscLossStats discriminator_loss(nn::Mlp& net, const std::vector<GaitFeature>& real,
                                 const std::vector<GaitFeature>& fake,
                                 const DiscriminatorConfig& cfg, Rng& rng) {
  if (real.empty() || fake.empty()) throw EmptyBatch();
  const int nr = static_cast<int>(real.size());
  const int nf = static_cast<int>(fake.size());

  // noisy inputs, real columns first
  Eigen::MatrixXd x(GaitFeature::kDim, nr + nf);
  for (int i = 0; i < nr; ++i) {
    x.col(i) = real[static_cast<std::size_t>(i)].vec();
  }
  for (int i = 0; i < nf; ++i) {
    x.col(nr + i) = fake[static_cast<std::size_t>(i)].vec();
  }
  if (cfg.input_noise_sigma > 0.0) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (Eigen::Index r2 = 0; r2 < x.rows(); ++r2) {
        x(r2, c) += cfg.input_noise_sigma * rng.normal();
      }
    }
  }

  const Eigen::MatrixXd z = net.forward(x, true, &rng);
  Eigen::MatrixXd dz(1, nr + nf);
  DiscLossStats stats;
  for (int i = 0; i < nr + nf; ++i) {
    const bool is_real = i < nr;
    const double t = is_real ? cfg.label_real : cfg.label_fake;
    const double scale = is_real ? 1.0 / nr : 1.0 / nf;
    stats.bce += bce_from_logit(z(0, i), t) * scale;
    dz(0, i) = (sigmoid(z(0, i)) - t) * scale;
  }
  net.backward(dz);

  // gradient penalty on clean per-pair interpolants
  const int pairs = std::min(nr, nf);
  if (cfg.gradient_penalty_coeff > 0.0 && pairs > 0) {
    double pen_sum = 0.0;
    double norm_err_sum = 0.0;
    for (int i = 0; i < pairs; ++i) {
      const double u = rng.uniform();
      const Eigen::VectorXd mix = u * real[static_cast<std::size_t>(i)].vec() +
                                  (1.0 - u) * fake[static_cast<std::size_t>(i)].vec();
      const double pen = net.accumulate_gradient_penalty(
          mix, cfg.gradient_penalty_coeff / static_cast<double>(pairs));
      pen_sum += pen;
      norm_err_sum += std::sqrt(pen);
    }
    stats.penalty = cfg.gradient_penalty_coeff * pen_sum / static_cast<double>(pairs);
    stats.mean_grad_norm_err = norm_err_sum / static_cast<double>(pairs);
  }
  stats.total = stats.bce + stats.penalty;
  return stats;
}

DiscriminatorTrainer::DiscriminatorTrainer(const DiscriminatorConfig& cfg,
                                           const ReferenceDataset& reference, std::uint64_t seed)
    : cfg_(cfg), disc_(cfg, seed), rng_(Rng::derive(seed, 0x44495343)) {
  cfg_.validate();
  adam_ = nn::Adam({cfg.learning_rate}, disc_.net().param_count());

  const std::int64_t n = reference.frame_count();
  reference_frames_.reserve(static_cast<std::size_t>(n));
  for (std::int64_t t = 0; t < n; ++t) reference_frames_.push_back(reference.frame(t));

  // seeded split over reference frames
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(Rng::derive(seed, 0x53504c54));
  split_rng.shuffle(order);
  std::size_t holdout_n =
      static_cast<std::size_t>(std::max<double>(1.0, std::floor(cfg.holdout_fraction * n)));
  if (holdout_n >= order.size()) holdout_n = order.size() - 1;
  holdout_idx_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout_n));
  train_idx_.assign(order.begin() + static_cast<std::ptrdiff_t>(holdout_n), order.end());
}

std::vector<GaitFeature> DiscriminatorTrainer::sample_real(int n) {
  std::vector<GaitFeature> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(rng_.uniform_index(train_idx_.size()));
    out.push_back(reference_frames_[train_idx_[k]]);
  }
  return out;
}

double DiscriminatorTrainer::holdout_loss() const {
  double loss = 0.0;
  for (const std::size_t i : holdout_idx_) {
    const double z = disc_.net().forward_eval(reference_frames_[i].vec())(0);
    loss += bce_from_logit(z, cfg_.label_real) / static_cast<double>(holdout_idx_.size());
  }
  return loss;
}

DiscUpdateLog DiscriminatorTrainer::scheduled_update(std::int64_t global_step,
                                                     std::int64_t learner_update_count,
                                                     const FakeSampler& sample_fake) {
  DiscUpdateLog log;
  log.frozen = frozen_;
  if (frozen_) return log;
  if (global_step < cfg_.start_step) return log;
  if (learner_update_count % cfg_.update_every != 0) return log;
  if (learner_update_count == last_counted_update_) return log;

  std::vector<GaitFeature> fake = sample_fake(cfg_.batch_size);
  if (fake.empty()) return log;
  last_counted_update_ = learner_update_count;

  const std::vector<GaitFeature> real = sample_real(cfg_.batch_size);
  disc_.net().zero_grad();
  const DiscLossStats stats = discriminator_loss(disc_.net(), real, fake, cfg_, rng_);
  if (!std::isfinite(stats.total)) {
    log_info("discriminator update skipped on non-finite loss");
    return log;
  }
  nn::adam_update(disc_.net(), adam_);
  ++updates_done_;

  const double val = holdout_loss();
  if (!has_best_ || val < best_holdout_) {
    best_holdout_ = val;
    has_best_ = true;
    non_improving_ = 0;
  } else {
    ++non_improving_;
    if (non_improving_ >= cfg_.patience) {
      frozen_ = true;
      log_info("discriminator frozen after " + std::to_string(cfg_.patience) +
               " non-improving holdout evaluations (best " + std::to_string(best_holdout_) + ")");
    }
  }

  log.updated = true;
  log.train_loss = stats.total;
  log.holdout_loss = val;
  log.penalty = stats.penalty;
  log.mean_grad_norm_err = stats.mean_grad_norm_err;
  log.frozen = frozen_;
  return log;
}

void DiscriminatorTrainer::save(const std::string& path, std::uint64_t steps) const {
  BinaryWriter w;
  write_checkpoint_header(w, CheckpointKind::discriminator, steps, "{}");
  disc_.save(w);
  adam_.save(w);
  w.put_f64(best_holdout_);
  w.put_u8(has_best_ ? 1 : 0);
  w.put_u32(static_cast<std::uint32_t>(non_improving_));
  w.put_u8(frozen_ ? 1 : 0);
  w.put_u32(static_cast<std::uint32_t>(updates_done_));
  w.put_i64(last_counted_update_);
  w.put_string(rng_.serialize());
  w.write_file_with_crc(path);
}

void DiscriminatorTrainer::restore(const std::string& path, const ReferenceDataset& reference) {
  BinaryReader r = BinaryReader::from_file(path);
  r.check_crc(path);
  read_checkpoint_header(r, CheckpointKind::discriminator);
  disc_ = Discriminator::load(r, cfg_);
  adam_ = nn::Adam::load(r);
  best_holdout_ = r.get_f64();
  has_best_ = r.get_u8() != 0;
  non_improving_ = static_cast<int>(r.get_u32());
  frozen_ = r.get_u8() != 0;
  updates_done_ = static_cast<int>(r.get_u32());
  last_counted_update_ = r.get_i64();
  rng_.deserialize(r.get_string());
  (void)reference;
}

}  // namespace romgait
