#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "romgait/gaitdata.hpp"
#include "romgait/neural.hpp"
#include "romgait/rng.hpp"

namespace romgait {

struct DiscriminatorConfig {
  int hidden1 = 64;
  int hidden2 = 32;  // LeakyReLU throughout
  double dropout = 0.2;
  double input_noise_sigma = 0.05;
  double label_real = 0.9;
  double label_fake = 0.1;
  double learning_rate = 1e-5;
  double gradient_penalty_coeff = 10.0;
  int update_every = 5;        // learner updates per discriminator update
  std::int64_t start_step = 5000;
  double holdout_fraction = 0.1;
  int patience = 10;
  int batch_size = 256;
  double bonus_clip = 1e-6;  // probability clamp inside the bonus

  void validate() const;
};

struct BlendConfig {
  double eta = 0.5;
  void validate() const;
};

// eta * r_env + (1 - eta) * r_im
double blend_reward(double r_env, double r_im, double eta);

// Binary classifier over 5-D gait features with a sigmoid head; the network
// itself produces the logit. The gradient penalty is taken on the logit's
// input gradient (the pre-sigmoid surface carries the Lipschitz constraint).
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

  double logit(const GaitFeature& f) const { return net_.forward_eval(f.vec())(0); }
  double probability(const GaitFeature& f) const;  // strictly in (0,1)
  double imitation_bonus(const GaitFeature& f) const;

  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }
  const DiscriminatorConfig& config() const { return cfg_; }

  void save(BinaryWriter& w) const;
  static Discriminator load(BinaryReader& r, const DiscriminatorConfig& cfg);

 private:
  DiscriminatorConfig cfg_;
  nn::Mlp net_;
};

struct DiscLossStats {
  double total = 0.0;
  double bce = 0.0;
  double penalty = 0.0;           // lambda-weighted
  double mean_grad_norm_err = 0.0;  // mean | ||grad_x|| - 1 | over interpolants
};

// Smoothed-label BCE on noisy inputs plus the interpolant gradient penalty.
// Gradients accumulate into the network; the caller owns the optimizer step.
DiscLossStats discriminator_loss(nn::Mlp& net, const std::vector<GaitFeature>& real,
                                 const std::vector<GaitFeature>& fake,
                                 const DiscriminatorConfig& cfg, Rng& rng);

// Supplies `n` agent-generated gait features for the fake side.
using FakeSampler = std::function<std::vector<GaitFeature>(int)>;

struct DiscUpdateLog {
  bool updated = false;
  double train_loss = 0.0;
  double holdout_loss = 0.0;
  double penalty = 0.0;
  double mean_grad_norm_err = 0.0;
  bool frozen = false;
};

// Owns the reference train/holdout split, the update schedule and early
// stopping: one gradient step per `update_every` learner updates once
// global_step reaches start_step; frozen permanently after `patience`
// consecutive non-improving holdout evaluations. A frozen discriminator
// keeps serving the bonus from its last parameters.
class DiscriminatorTrainer {
 public:
  DiscriminatorTrainer() = default;
  DiscriminatorTrainer(const DiscriminatorConfig& cfg, const ReferenceDataset& reference,
                       std::uint64_t seed);

  DiscUpdateLog scheduled_update(std::int64_t global_step, std::int64_t learner_update_count,
                                 const FakeSampler& sample_fake);

  const Discriminator& disc() const { return disc_; }
  Discriminator& disc() { return disc_; }
  bool frozen() const { return frozen_; }
  int updates_done() const { return updates_done_; }
  double best_holdout_loss() const { return best_holdout_; }
  const std::vector<std::size_t>& train_indices() const { return train_idx_; }
  const std::vector<std::size_t>& holdout_indices() const { return holdout_idx_; }

  // validation loss: smoothed-label BCE over the held-out teacher frames,
  // eval mode, no noise, no penalty
  double holdout_loss() const;

  void save(const std::string& path, std::uint64_t steps) const;
  void restore(const std::string& path, const ReferenceDataset& reference);

 private:
  std::vector<GaitFeature> sample_real(int n);

  DiscriminatorConfig cfg_;
  Discriminator disc_;
  nn::Adam adam_;
  std::vector<GaitFeature> reference_frames_;
  std::vector<std::size_t> train_idx_, holdout_idx_;
  Rng rng_;
  double best_holdout_ = 0.0;
  bool has_best_ = false;
  int non_improving_ = 0;
  bool frozen_ = false;
  int updates_done_ = 0;
  std::int64_t last_counted_update_ = -1;
};

}  // namespace romgait
