#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "romgait/binio.hpp"
#include "romgait/errors.hpp"
#include "romgait/rng.hpp"

namespace romgait::nn {

enum class Activation : std::uint8_t { identity = 0, relu = 1, leaky_relu = 2, tanh = 3 };

struct LayerSpec {
  int width = 0;
  Activation act = Activation::relu;
  double dropout = 0.0;  // probability of dropping a unit, [0,1)
};

struct MlpSpec {
  int input_dim = 0;
  std::vector<LayerSpec> hidden;
  int output_dim = 0;
  double leaky_slope = 0.01;

  static MlpSpec make(int input, std::initializer_list<int> widths, Activation act, int output,
                      double dropout = 0.0) {
    MlpSpec s;
    s.input_dim = input;
    for (int w : widths) s.hidden.push_back({w, act, dropout});
    s.output_dim = output;
    return s;
  }
};

// Fully connected network with a linear output layer. Columns of the input
// matrix are samples. Parameters and gradients live in per-layer matrices and
// can be viewed as one flat vector (weights column-major, then bias, per
// layer in order) for the optimizer.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(const MlpSpec& spec);

  const MlpSpec& spec() const { return spec_; }
  int layer_count() const { return static_cast<int>(w_.size()); }
  int param_count() const;

  void init_orthogonal(Rng& rng, double hidden_gain, double output_gain);
  void init_uniform_fan_in(Rng& rng);

  // Train mode applies dropout (rng required if any layer has dropout > 0)
  // and caches activations for backward().
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, bool train, Rng* rng = nullptr);
  Eigen::VectorXd forward_eval(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd forward_eval_batch(const Eigen::MatrixXd& input) const;

  // Accumulates parameter gradients from dL/doutput and returns dL/dinput.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& output_grad);
  // Same data flow but leaves parameter gradients untouched.
  Eigen::MatrixXd input_backward(const Eigen::MatrixXd& output_grad) const;

  // Gradient of the scalar output w.r.t. the input (eval mode, no dropout).
  Eigen::VectorXd input_gradient(const Eigen::VectorXd& input) const;

  // Adds scale * d/dtheta (||grad_x f(x)|| - 1)^2 to the parameter gradients
  // and returns (||grad_x f(x)|| - 1)^2. The second-order term through the
  // activation curvature is dropped, which is exact almost everywhere for
  // piecewise-linear activations (identity/relu/leaky_relu).
  double accumulate_gradient_penalty(const Eigen::VectorXd& input, double scale);

  void zero_grad();
  Eigen::VectorXd params_flat() const;
  void set_params_flat(const Eigen::VectorXd& p);
  Eigen::VectorXd grads_flat() const;

  Eigen::MatrixXd& weight(int layer) { return w_[static_cast<std::size_t>(layer)]; }
  const Eigen::MatrixXd& weight(int layer) const { return w_[static_cast<std::size_t>(layer)]; }
  Eigen::VectorXd& bias(int layer) { return b_[static_cast<std::size_t>(layer)]; }
  const Eigen::VectorXd& bias(int layer) const { return b_[static_cast<std::size_t>(layer)]; }

  void save(BinaryWriter& w) const;
  static Mlp load(BinaryReader& r);

 private:
  Eigen::ArrayXXd activate(const Eigen::MatrixXd& z, Activation act) const;
  Eigen::ArrayXXd activate_derivative(const Eigen::MatrixXd& z, Activation act) const;

  MlpSpec spec_;
  std::vector<Eigen::MatrixXd> w_, gw_;
  std::vector<Eigen::VectorXd> b_, gb_;

  // forward cache (train mode)
  bool has_cache_ = false;
  std::vector<Eigen::MatrixXd> cache_a_;     // cache_a_[0] is the input
  std::vector<Eigen::MatrixXd> cache_d_;     // act'(z) per hidden layer
  std::vector<Eigen::MatrixXd> cache_mask_;  // dropout masks (empty if unused)
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Standard Adam with bias correction.
class Adam {
 public:
  Adam() = default;
  Adam(const AdamConfig& cfg, int n)
      : cfg_(cfg), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grads);

  const AdamConfig& config() const { return cfg_; }
  AdamConfig& config() { return cfg_; }
  std::int64_t step_count() const { return t_; }

  void save(BinaryWriter& w) const;
  static Adam load(BinaryReader& r);

 private:
  AdamConfig cfg_;
  Eigen::VectorXd m_, v_;
  std::int64_t t_ = 0;
};

// One optimizer step from the network's accumulated gradients.
void adam_update(Mlp& net, Adam& opt);

// --- tanh-squashed diagonal Gaussian ---

inline constexpr double kSquashEps = 1e-6;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

// log N(u; mu, sigma) - log |d tanh(u)/du|, per dimension, summed.
double tanh_gaussian_log_prob(const Eigen::VectorXd& pre_squash, const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& log_std);

// Running mean/std tracker (Welford); normalize clips to +-10 sigma.
class RunningNormalizer {
 public:
  explicit RunningNormalizer(int dim = 0)
      : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}

  void observe(const Eigen::VectorXd& x);
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd normalize_cols(const Eigen::MatrixXd& x) const;
  double count() const { return count_; }
  int dim() const { return static_cast<int>(mean_.size()); }

  void save(BinaryWriter& w) const;
  static RunningNormalizer load(BinaryReader& r);

 private:
  Eigen::VectorXd variance() const;
  Eigen::VectorXd mean_, m2_;
  double count_ = 0.0;
};

}  // namespace romgait::nn
