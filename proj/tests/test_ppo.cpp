#include <doctest.h>

#include <cmath>
#include <vector>

#include "romgait/ppo.hpp"

using namespace romgait;

namespace {

// literal nested-sum GAE oracle: A_t = sum_k (gamma*lambda)^k delta_{t+k},
// chains cut at episode ends
Eigen::VectorXd gae_oracle(const Eigen::VectorXd& r, const Eigen::VectorXd& v,
                           const std::vector<std::uint8_t>& d, double gamma, double lambda,
                           double bootstrap) {
  const Eigen::Index n = r.size();
  Eigen::VectorXd adv(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double acc = 0.0;
    double fac = 1.0;
    for (Eigen::Index k = t; k < n; ++k) {
      const double next_v = (k == n - 1) ? bootstrap : v(k + 1);
      const double nonterm = d[static_cast<std::size_t>(k)] ? 0.0 : 1.0;
      const double delta = r(k) + gamma * next_v * nonterm - v(k);
      acc += fac * delta;
      if (d[static_cast<std::size_t>(k)]) break;
      fac *= gamma * lambda;
    }
    adv(t) = acc;
  }
  return adv;
}

}  // namespace

TEST_SUITE("ppo") {

TEST_CASE("gae: single terminal step reduces to r - v") {
  Eigen::VectorXd r(1), v(1);
  r << 2.5;
  v << 0.7;
  const GaeResult g = compute_gae(r, v, {1}, 0.99, 0.95, 123.0);
  CHECK(g.advantages(0) == doctest::Approx(2.5 - 0.7));
  CHECK(g.returns(0) == doctest::Approx(2.5));
}

TEST_CASE("gae: lambda = 0 reduces to one-step TD errors") {
  Rng rng(4);
  const int n = 12;
  Eigen::VectorXd r(n), v(n);
  std::vector<std::uint8_t> d(n, 0);
  for (int i = 0; i < n; ++i) {
    r(i) = rng.uniform(-1.0, 1.0);
    v(i) = rng.uniform(-1.0, 1.0);
  }
  d[5] = 1;
  const double bootstrap = 0.4;
  const GaeResult g = compute_gae(r, v, d, 0.9, 0.0, bootstrap);
  for (int t = 0; t < n; ++t) {
    const double next_v = (t == n - 1) ? bootstrap : v(t + 1);
    const double nonterm = d[static_cast<std::size_t>(t)] ? 0.0 : 1.0;
    CHECK(g.advantages(t) == doctest::Approx(r(t) + 0.9 * next_v * nonterm - v(t)).epsilon(1e-12));
  }
}

TEST_CASE("gae matches the brute-force nested sum") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 10;
    Eigen::VectorXd r(n), v(n);
    std::vector<std::uint8_t> d(n, 0);
    for (int i = 0; i < n; ++i) {
      r(i) = rng.uniform(-1.0, 1.0);
      v(i) = rng.uniform(-1.0, 1.0);
      d[static_cast<std::size_t>(i)] = rng.uniform() < 0.2 ? 1 : 0;
    }
    const double bootstrap = rng.uniform(-1.0, 1.0);
    const GaeResult g = compute_gae(r, v, d, 0.97, 0.9, bootstrap);
    const Eigen::VectorXd oracle = gae_oracle(r, v, d, 0.97, 0.9, bootstrap);
    CHECK((g.advantages - oracle).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.returns - (oracle + v)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gae with lambda = 1 and no terminations is the discounted return minus value") {
  Rng rng(5);
  const int n = 15;
  const double gamma = 0.95;
  Eigen::VectorXd r(n), v(n);
  std::vector<std::uint8_t> d(n, 0);
  for (int i = 0; i < n; ++i) {
    r(i) = rng.uniform(0.0, 1.0);
    v(i) = rng.uniform(-0.5, 0.5);
  }
  const double bootstrap = 0.3;
  const GaeResult g = compute_gae(r, v, d, gamma, 1.0, bootstrap);
  for (int t = 0; t < n; ++t) {
    double ret = 0.0;
    double fac = 1.0;
    for (int k = t; k < n; ++k) {
      ret += fac * r(k);
      fac *= gamma;
    }
    ret += fac * bootstrap;
    CHECK(g.advantages(t) == doctest::Approx(ret - v(t)).epsilon(1e-10));
  }
}

TEST_CASE("gae rejects mismatched lengths") {
  Eigen::VectorXd r(3), v(2);
  r.setZero();
  v.setZero();
  CHECK_THROWS_AS(compute_gae(r, v, {0, 0, 0}, 0.99, 0.95, 0.0), LengthMismatch);
}

TEST_CASE("advantage normalization hits zero mean, unit std") {
  Rng rng(6);
  Eigen::VectorXd a(257);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.uniform(-3.0, 7.0);
  normalize_advantages(a);
  CHECK(std::abs(a.mean()) < 1e-10);
  const double stddev = std::sqrt((a.array() - a.mean()).square().mean());
  CHECK(std::abs(stddev - 1.0) < 1e-6);
}

TEST_CASE("clipped surrogate is pessimistic per sample") {
  Rng rng(8);
  const double eps = 0.2;
  for (int i = 0; i < 2000; ++i) {
    const double ratio = std::exp(rng.uniform(-1.5, 1.5));
    const double adv = rng.uniform(-2.0, 2.0);
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    const double obj = std::min(ratio * adv, clipped * adv);
    CHECK(obj <= ratio * adv + 1e-15);
    if (adv < 0.0) CHECK(std::abs(obj) >= std::abs(ratio * adv) - 1e-15);
  }
}

TEST_CASE("ppo objective matches hand-worked clip arithmetic on a 3-sample batch") {
  Rng init(1);
  GaussianPolicy policy(RomObservation::kDim, 2, 8, 1, init);
  policy.mean_net().set_params_flat(Eigen::VectorXd::Zero(policy.mean_net().param_count()));

  nn::MlpSpec vspec = nn::MlpSpec::make(RomObservation::kDim, {8}, nn::Activation::relu, 1);
  nn::Mlp value_net(vspec);  // zero weights: v = 0 everywhere

  RolloutBatch batch;
  batch.num_actors = 1;
  batch.length = 3;
  batch.obs = Eigen::MatrixXd::Zero(RomObservation::kDim, 3);
  batch.pre_squash = Eigen::MatrixXd::Zero(2, 3);
  batch.pre_squash << 0.1, -0.4, 0.8, 0.3, 0.2, -0.5;
  batch.values = Eigen::VectorXd::Zero(3);
  batch.rewards = Eigen::VectorXd::Zero(3);
  batch.dones = {0, 0, 0};
  batch.bootstrap_values = Eigen::VectorXd::Zero(1);

  // choose old log-probs so the ratios come out exactly as planned
  const Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, 3);
  const Eigen::VectorXd lp_new = policy.log_prob(mean, batch.pre_squash);
  const double ratios[3] = {2.0, 1.0, 0.5};
  batch.log_probs.resize(3);
  for (int i = 0; i < 3; ++i) batch.log_probs(i) = lp_new(i) - std::log(ratios[i]);

  Eigen::VectorXd advantages(3), returns(3);
  advantages << 1.0, -1.0, 2.0;
  returns << 1.0, 2.0, 3.0;

  PpoConfig cfg;
  cfg.epochs_per_batch = 1;
  cfg.minibatch_size = 3;
  cfg.clip_ratio = 0.2;
  cfg.learning_rate = 1e-9;
  cfg.hidden_width = 8;
  cfg.hidden_depth = 1;

  nn::Adam policy_adam({cfg.learning_rate}, policy.param_count());
  nn::Adam value_adam({cfg.learning_rate}, value_net.param_count());
  Rng rng(2);
  const PpoUpdateStats stats =
      ppo_update(policy, policy_adam, value_net, value_adam, batch, advantages, returns, cfg, rng);

  // per sample: min(2*1, 1.2*1) = 1.2 ; min(1*-1, 1*-1) = -1 ; min(0.5*2, 0.8*2) = 1.0
  const double expected_obj = (1.2 - 1.0 + 1.0) / 3.0;
  CHECK(stats.policy_loss == doctest::Approx(-expected_obj).epsilon(1e-9));
  CHECK(stats.value_loss == doctest::Approx((1.0 + 4.0 + 9.0) / 3.0).epsilon(1e-9));
  CHECK(!stats.aborted);
}

TEST_CASE("ppo gradient is zero where the clip is active") {
  // single sample, ratio 2 with positive advantage: objective sits on the
  // clipped branch, so the policy gradient must vanish
  Rng init(3);
  GaussianPolicy policy(RomObservation::kDim, 2, 8, 1, init);
  policy.mean_net().set_params_flat(Eigen::VectorXd::Zero(policy.mean_net().param_count()));
  nn::Mlp value_net(nn::MlpSpec::make(RomObservation::kDim, {8}, nn::Activation::relu, 1));

  RolloutBatch batch;
  batch.num_actors = 1;
  batch.length = 1;
  batch.obs = Eigen::MatrixXd::Zero(RomObservation::kDim, 1);
  batch.pre_squash = Eigen::MatrixXd::Constant(2, 1, 0.3);
  batch.values = Eigen::VectorXd::Zero(1);
  batch.rewards = Eigen::VectorXd::Zero(1);
  batch.dones = {0};
  batch.bootstrap_values = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd lp_new =
      policy.log_prob(Eigen::MatrixXd::Zero(2, 1), batch.pre_squash);
  batch.log_probs.resize(1);
  batch.log_probs(0) = lp_new(0) - std::log(2.0);

  Eigen::VectorXd advantages(1), returns(1);
  advantages << 1.0;
  returns << 0.0;

  PpoConfig cfg;
  cfg.epochs_per_batch = 1;
  cfg.minibatch_size = 1;
  cfg.learning_rate = 1.0;  // any drift would show immediately
  cfg.value_loss_coeff = 0.0;
  cfg.hidden_width = 8;
  cfg.hidden_depth = 1;

  const Eigen::VectorXd before = policy.params_flat();
  nn::Adam policy_adam({cfg.learning_rate}, policy.param_count());
  nn::Adam value_adam({1e-8}, value_net.param_count());
  Rng rng(2);
  ppo_update(policy, policy_adam, value_net, value_adam, batch, advantages, returns, cfg, rng);
  CHECK((policy.params_flat() - before).norm() == doctest::Approx(0.0));
}

TEST_CASE("collecting 8 actors x 128 steps yields exactly 1024 transitions") {
  RomParams rom;
  EpisodeConfig episode;
  episode.max_steps = 50;
  PpoConfig cfg;
  cfg.num_actors = 8;
  cfg.rollout_length = 128;
  cfg.hidden_width = 16;
  cfg.hidden_depth = 1;
  PpoTrainer trainer(rom, episode, cfg, 42);
  const RolloutBatch b = trainer.collect_rollouts(128);
  CHECK(b.size() == 1024);
  CHECK(b.obs.cols() == 1024);
  CHECK(b.log_probs.size() == 1024);
  CHECK(b.bootstrap_values.size() == 8);

  // episodes are bounded by max_steps: dones can never be more than
  // max_steps apart within one actor's row
  for (int a = 0; a < 8; ++a) {
    int run = 0;
    for (int t = 0; t < 128; ++t) {
      ++run;
      REQUIRE(run <= episode.max_steps);
      if (b.dones[static_cast<std::size_t>(a * 128 + t)]) run = 0;
    }
  }
}

TEST_CASE("rollout collection is deterministic under a fixed seed") {
  RomParams rom;
  EpisodeConfig episode;
  PpoConfig cfg;
  cfg.num_actors = 4;
  cfg.rollout_length = 32;
  cfg.hidden_width = 16;
  cfg.hidden_depth = 1;
  PpoTrainer a(rom, episode, cfg, 7);
  PpoTrainer b(rom, episode, cfg, 7);
  const RolloutBatch ba = a.collect_rollouts(32);
  const RolloutBatch bb = b.collect_rollouts(32);
  CHECK((ba.obs - bb.obs).norm() == 0.0);
  CHECK((ba.pre_squash - bb.pre_squash).norm() == 0.0);
  CHECK((ba.rewards - bb.rewards).norm() == 0.0);
  CHECK((ba.log_probs - bb.log_probs).norm() == 0.0);
}

TEST_CASE("teacher checkpoints round-trip and training resumes the step count") {
  RomParams rom;
  EpisodeConfig episode;
  PpoConfig cfg;
  cfg.num_actors = 2;
  cfg.rollout_length = 16;
  cfg.total_steps = 64;  // two iterations
  cfg.hidden_width = 8;
  cfg.hidden_depth = 1;
  cfg.minibatch_size = 32;
  cfg.epochs_per_batch = 1;

  PpoTrainer trainer(rom, episode, cfg, 3);
  const auto metrics = trainer.train("/tmp/romgait_teacher_resume.ckpt", "");
  REQUIRE(metrics.size() == 2);
  CHECK(metrics.back().step == 64);

  const TeacherCheckpoint loaded = TeacherCheckpoint::load("/tmp/romgait_teacher_resume.ckpt");
  CHECK(loaded.steps_done == 64);

  PpoTrainer resumed(rom, episode, cfg, 3);
  resumed.restore(loaded);
  const auto more = resumed.train("", "");
  REQUIRE(more.size() == 2);
  CHECK(more.front().step == 96);  // continues, no reset to zero
  CHECK(more.back().step == 128);
}

TEST_CASE("total_steps = 0 emits only the initial checkpoint") {
  RomParams rom;
  EpisodeConfig episode;
  PpoConfig cfg;
  cfg.total_steps = 0;
  cfg.hidden_width = 8;
  cfg.hidden_depth = 1;
  PpoTrainer trainer(rom, episode, cfg, 1);
  const auto metrics = trainer.train("/tmp/romgait_teacher_zero.ckpt", "");
  CHECK(metrics.empty());
  const TeacherCheckpoint loaded = TeacherCheckpoint::load("/tmp/romgait_teacher_zero.ckpt");
  CHECK(loaded.steps_done == 0);
}

TEST_CASE("a short training run improves the velocity-tracking reward") {
  RomParams rom;
  EpisodeConfig episode;
  episode.reward_mode = RewardMode::exponential;
  episode.target_speed = 1.0;
  episode.max_steps = 300;
  PpoConfig cfg;
  cfg.num_actors = 8;
  cfg.rollout_length = 128;
  cfg.total_steps = 50000;
  cfg.hidden_width = 32;
  cfg.hidden_depth = 2;
  cfg.learning_rate = 3e-4;
  PpoTrainer trainer(rom, episode, cfg, 12345);
  const auto metrics = trainer.train("", "");
  REQUIRE(metrics.size() >= 8);
  const std::size_t q = metrics.size() / 4;
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < q; ++i) first += metrics[i].mean_reward;
  for (std::size_t i = metrics.size() - q; i < metrics.size(); ++i) last += metrics[i].mean_reward;
  CHECK(last / q > first / q);
}

}  // TEST_SUITE
