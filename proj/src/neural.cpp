#include "romgait/neural.hpp"

#include <cmath>
#include <string>

namespace romgait::nn {

namespace {

std::vector<int> layer_dims(const MlpSpec& spec) {
  std::vector<int> dims;
  dims.push_back(spec.input_dim);
  for (const auto& h : spec.hidden) dims.push_back(h.width);
  dims.push_back(spec.output_dim);
  return dims;
}

}  // namespace

Mlp::Mlp(const MlpSpec& spec) : spec_(spec) {
  if (spec.input_dim < 1 || spec.output_dim < 1) {
    throw DimensionMismatch("mlp dims must be >= 1");
  }
  for (const auto& h : spec.hidden) {
    if (h.width < 1) throw DimensionMismatch("hidden width must be >= 1");
    if (h.dropout < 0.0 || h.dropout >= 1.0) throw DimensionMismatch("dropout must be in [0,1)");
  }
  const auto dims = layer_dims(spec);
  for (std::size_t l = 1; l < dims.size(); ++l) {
    w_.emplace_back(Eigen::MatrixXd::Zero(dims[l], dims[l - 1]));
    b_.emplace_back(Eigen::VectorXd::Zero(dims[l]));
    gw_.emplace_back(Eigen::MatrixXd::Zero(dims[l], dims[l - 1]));
    gb_.emplace_back(Eigen::VectorXd::Zero(dims[l]));
  }
}

int Mlp::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    n += static_cast<int>(w_[l].size() + b_[l].size());
  }
  return n;
}

void Mlp::init_orthogonal(Rng& rng, double hidden_gain, double output_gain) {
  for (std::size_t l = 0; l < w_.size(); ++l) {
    const int rows = static_cast<int>(w_[l].rows());
    const int cols = static_cast<int>(w_[l].cols());
    const int n = std::max(rows, cols);
    const int m = std::min(rows, cols);
    Eigen::MatrixXd g(n, m);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(m);
    for (int j = 0; j < m; ++j) {
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    const double gain = (l + 1 == w_.size()) ? output_gain : hidden_gain;
    w_[l] = gain * (rows >= cols ? q : Eigen::MatrixXd(q.transpose()));
    b_[l].setZero();
  }
}

void Mlp::init_uniform_fan_in(Rng& rng) {
  for (std::size_t l = 0; l < w_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w_[l].cols()));
    for (Eigen::Index j = 0; j < w_[l].cols(); ++j) {
      for (Eigen::Index i = 0; i < w_[l].rows(); ++i) w_[l](i, j) = rng.uniform(-bound, bound);
    }
    for (Eigen::Index i = 0; i < b_[l].size(); ++i) b_[l](i) = rng.uniform(-bound, bound);
  }
}

Eigen::ArrayXXd Mlp::activate(const Eigen::MatrixXd& z, Activation act) const {
  switch (act) {
    case Activation::identity:
      return z.array();
    case Activation::relu:
      return z.array().max(0.0);
    case Activation::leaky_relu:
      return (z.array() > 0.0).select(z.array(), spec_.leaky_slope * z.array());
    case Activation::tanh:
      return z.array().tanh();
  }
  return z.array();
}

Eigen::ArrayXXd Mlp::activate_derivative(const Eigen::MatrixXd& z, Activation act) const {
  switch (act) {
    case Activation::identity:
      return Eigen::ArrayXXd::Ones(z.rows(), z.cols());
    case Activation::relu:
      return (z.array() > 0.0).cast<double>();
    case Activation::leaky_relu:
      return (z.array() > 0.0).select(Eigen::ArrayXXd::Ones(z.rows(), z.cols()),
                                      Eigen::ArrayXXd::Constant(z.rows(), z.cols(),
                                                                spec_.leaky_slope));
    case Activation::tanh: {
      const Eigen::ArrayXXd t = z.array().tanh();
      return 1.0 - t.square();
    }
  }
  return Eigen::ArrayXXd::Ones(z.rows(), z.cols());
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, bool train, Rng* rng) {
  if (input.rows() != spec_.input_dim) {
    throw DimensionMismatch("forward input has " + std::to_string(input.rows()) +
                            " rows, expected " + std::to_string(spec_.input_dim));
  }
  const std::size_t layers = w_.size();
  if (train) {
    cache_a_.assign(layers + 1, Eigen::MatrixXd());
    cache_d_.assign(layers, Eigen::MatrixXd());
    cache_mask_.assign(layers, Eigen::MatrixXd());
    cache_a_[0] = input;
  }

  Eigen::MatrixXd a = input;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (w_[l] * a).colwise() + b_[l];
    if (l + 1 == layers) {
      a = std::move(z);  // linear output layer
    } else {
      const auto& hs = spec_.hidden[l];
      Eigen::MatrixXd h = activate(z, hs.act).matrix();
      if (train) cache_d_[l] = activate_derivative(z, hs.act).matrix();
      if (train && hs.dropout > 0.0) {
        if (!rng) throw Error("train-mode forward with dropout requires an rng");
        const double keep = 1.0 - hs.dropout;
        Eigen::MatrixXd mask(h.rows(), h.cols());
        for (Eigen::Index c = 0; c < mask.cols(); ++c) {
          for (Eigen::Index r = 0; r < mask.rows(); ++r) {
            mask(r, c) = rng->uniform() < keep ? 1.0 / keep : 0.0;
          }
        }
        h.array() *= mask.array();
        cache_mask_[l] = std::move(mask);
      }
      a = std::move(h);
    }
    if (train) cache_a_[l + 1] = a;
  }
  has_cache_ = train;
  return a;
}

Eigen::VectorXd Mlp::forward_eval(const Eigen::VectorXd& input) const {
  if (input.size() != spec_.input_dim) {
    throw DimensionMismatch("forward input has " + std::to_string(input.size()) +
                            " entries, expected " + std::to_string(spec_.input_dim));
  }
  const std::size_t layers = w_.size();
  Eigen::VectorXd a = input;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::VectorXd z = w_[l] * a + b_[l];
    a = (l + 1 == layers) ? z : Eigen::VectorXd(activate(z, spec_.hidden[l].act).matrix());
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_eval_batch(const Eigen::MatrixXd& input) const {
  if (input.rows() != spec_.input_dim) {
    throw DimensionMismatch("forward input has " + std::to_string(input.rows()) +
                            " rows, expected " + std::to_string(spec_.input_dim));
  }
  const std::size_t layers = w_.size();
  Eigen::MatrixXd a = input;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (w_[l] * a).colwise() + b_[l];
    a = (l + 1 == layers) ? std::move(z)
                          : Eigen::MatrixXd(activate(z, spec_.hidden[l].act).matrix());
  }
  return a;
}

Eigen::MatrixXd Mlp::backward(const Eigen::MatrixXd& output_grad) {
  if (!has_cache_) throw NoCachedForward();
  if (output_grad.rows() != spec_.output_dim || output_grad.cols() != cache_a_[0].cols()) {
    throw DimensionMismatch("backward gradient shape does not match cached forward");
  }
  const std::size_t layers = w_.size();
  Eigen::MatrixXd delta = output_grad;  // dL/dz at the output layer
  for (std::size_t li = layers; li-- > 0;) {
    gw_[li] += delta * cache_a_[li].transpose();
    gb_[li] += delta.rowwise().sum();
    if (li == 0) return w_[0].transpose() * delta;
    Eigen::MatrixXd da = w_[li].transpose() * delta;
    if (cache_mask_[li - 1].size() > 0) da.array() *= cache_mask_[li - 1].array();
    delta = da.array() * cache_d_[li - 1].array();
  }
  return {};
}

Eigen::MatrixXd Mlp::input_backward(const Eigen::MatrixXd& output_grad) const {
  if (!has_cache_) throw NoCachedForward();
  const std::size_t layers = w_.size();
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t li = layers; li-- > 0;) {
    if (li == 0) return w_[0].transpose() * delta;
    Eigen::MatrixXd da = w_[li].transpose() * delta;
    if (cache_mask_[li - 1].size() > 0) da.array() *= cache_mask_[li - 1].array();
    delta = da.array() * cache_d_[li - 1].array();
  }
  return {};
}

Eigen::VectorXd Mlp::input_gradient(const Eigen::VectorXd& input) const {
  if (spec_.output_dim != 1) throw NonScalarOutput();
  const std::size_t layers = w_.size();
  std::vector<Eigen::VectorXd> s(layers);  // act'(z) per hidden layer
  Eigen::VectorXd a = input;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Eigen::VectorXd z = w_[l] * a + b_[l];
    s[l] = activate_derivative(z, spec_.hidden[l].act).matrix();
    a = activate(z, spec_.hidden[l].act).matrix();
  }
  Eigen::VectorXd delta = w_[layers - 1].transpose() * Eigen::VectorXd::Ones(1);
  for (std::size_t li = layers - 1; li-- > 0;) {
    delta = delta.cwiseProduct(s[li]);
    delta = w_[li].transpose() * delta;
  }
  return delta;
}

double Mlp::accumulate_gradient_penalty(const Eigen::VectorXd& input, double scale) {
  if (spec_.output_dim != 1) throw NonScalarOutput();
  const std::size_t layers = w_.size();

  // eval-mode forward, keeping activations and slopes
  std::vector<Eigen::VectorXd> a(layers);  // a[l] feeds layer l
  std::vector<Eigen::VectorXd> s(layers);  // act'(z) per hidden layer
  a[0] = input;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Eigen::VectorXd z = w_[l] * a[l] + b_[l];
    s[l] = activate_derivative(z, spec_.hidden[l].act).matrix();
    a[l + 1] = activate(z, spec_.hidden[l].act).matrix();
  }

  // reverse pass: u = grad_x f
  Eigen::VectorXd delta = w_[layers - 1].transpose() * Eigen::VectorXd::Ones(1);
  for (std::size_t li = layers - 1; li-- > 0;) {
    delta = delta.cwiseProduct(s[li]);
    delta = w_[li].transpose() * delta;
  }
  const Eigen::VectorXd u = delta;
  const double norm = std::max(u.norm(), 1e-12);
  const double penalty = (norm - 1.0) * (norm - 1.0);

  // tangent pass: push v = u through the linearized network
  std::vector<Eigen::VectorXd> t(layers);
  Eigen::VectorXd tv = u;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    t[l] = tv;
    tv = (w_[l] * tv).cwiseProduct(s[l]);
  }
  t[layers - 1] = tv;

  // reverse over the tangent chain; biases get no first-order contribution
  const double coef = scale * 2.0 * (norm - 1.0) / norm;
  Eigen::VectorXd dt = Eigen::VectorXd::Constant(1, coef);
  for (std::size_t li = layers; li-- > 0;) {
    gw_[li] += dt * t[li].transpose();
    if (li == 0) break;
    dt = (w_[li].transpose() * dt).cwiseProduct(s[li - 1]);
  }
  return penalty;
}

void Mlp::zero_grad() {
  for (auto& g : gw_) g.setZero();
  for (auto& g : gb_) g.setZero();
  has_cache_ = false;
}

Eigen::VectorXd Mlp::params_flat() const {
  Eigen::VectorXd p(param_count());
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    p.segment(off, w_[l].size()) = Eigen::Map<const Eigen::VectorXd>(w_[l].data(), w_[l].size());
    off += w_[l].size();
    p.segment(off, b_[l].size()) = b_[l];
    off += b_[l].size();
  }
  return p;
}

void Mlp::set_params_flat(const Eigen::VectorXd& p) {
  if (p.size() != param_count()) throw ShapeMismatch("flat parameter vector size");
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(w_[l].data(), w_[l].size()) = p.segment(off, w_[l].size());
    off += w_[l].size();
    b_[l] = p.segment(off, b_[l].size());
    off += b_[l].size();
  }
}

Eigen::VectorXd Mlp::grads_flat() const {
  Eigen::VectorXd g(param_count());
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < gw_.size(); ++l) {
    g.segment(off, gw_[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(gw_[l].data(), gw_[l].size());
    off += gw_[l].size();
    g.segment(off, gb_[l].size()) = gb_[l];
    off += gb_[l].size();
  }
  return g;
}

void Mlp::save(BinaryWriter& out) const {
  out.put_u32(static_cast<std::uint32_t>(spec_.input_dim));
  out.put_u32(static_cast<std::uint32_t>(spec_.hidden.size()));
  for (const auto& h : spec_.hidden) {
    out.put_u32(static_cast<std::uint32_t>(h.width));
    out.put_u8(static_cast<std::uint8_t>(h.act));
    out.put_f64(h.dropout);
  }
  out.put_u32(static_cast<std::uint32_t>(spec_.output_dim));
  out.put_f64(spec_.leaky_slope);
  const Eigen::VectorXd p = params_flat();
  out.put_u64(static_cast<std::uint64_t>(p.size()));
  out.put_f64_array(p.data(), static_cast<std::size_t>(p.size()));
}

Mlp Mlp::load(BinaryReader& in) {
  MlpSpec spec;
  spec.input_dim = static_cast<int>(in.get_u32());
  const std::uint32_t nh = in.get_u32();
  for (std::uint32_t i = 0; i < nh; ++i) {
    LayerSpec h;
    h.width = static_cast<int>(in.get_u32());
    h.act = static_cast<Activation>(in.get_u8());
    h.dropout = in.get_f64();
    spec.hidden.push_back(h);
  }
  spec.output_dim = static_cast<int>(in.get_u32());
  spec.leaky_slope = in.get_f64();
  Mlp net(spec);
  const std::uint64_t n = in.get_u64();
  if (n != static_cast<std::uint64_t>(net.param_count())) {
    throw CheckpointVersionMismatch("parameter count does not match spec");
  }
  Eigen::VectorXd p(static_cast<Eigen::Index>(n));
  in.get_f64_array(p.data(), n);
  net.set_params_flat(p);
  return net;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeMismatch("adam state has " + std::to_string(m_.size()) + " entries, got params " +
                        std::to_string(params.size()) + ", grads " + std::to_string(grads.size()));
  }
  if (!grads.allFinite()) throw NonFiniteGradient();
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grads;
  v_ = cfg_.beta2 * v_.array().matrix() + (1.0 - cfg_.beta2) * grads.array().square().matrix();
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  params.array() -=
      cfg_.learning_rate * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + cfg_.epsilon);
}

void Adam::save(BinaryWriter& out) const {
  out.put_f64(cfg_.learning_rate);
  out.put_f64(cfg_.beta1);
  out.put_f64(cfg_.beta2);
  out.put_f64(cfg_.epsilon);
  out.put_i64(t_);
  out.put_u64(static_cast<std::uint64_t>(m_.size()));
  out.put_f64_array(m_.data(), static_cast<std::size_t>(m_.size()));
  out.put_f64_array(v_.data(), static_cast<std::size_t>(v_.size()));
}

Adam Adam::load(BinaryReader& in) {
  AdamConfig cfg;
  cfg.learning_rate = in.get_f64();
  cfg.beta1 = in.get_f64();
  cfg.beta2 = in.get_f64();
  cfg.epsilon = in.get_f64();
  const std::int64_t t = in.get_i64();
  const std::uint64_t n = in.get_u64();
  Adam a(cfg, static_cast<int>(n));
  in.get_f64_array(a.m_.data(), n);
  in.get_f64_array(a.v_.data(), n);
  a.t_ = t;
  return a;
}

void adam_update(Mlp& net, Adam& opt) {
  Eigen::VectorXd p = net.params_flat();
  opt.step(p, net.grads_flat());
  net.set_params_flat(p);
}

double tanh_gaussian_log_prob(const Eigen::VectorXd& pre_squash, const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& log_std) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  double lp = 0.0;
  for (Eigen::Index i = 0; i < pre_squash.size(); ++i) {
    const double sigma = std::exp(log_std(i));
    const double xi = (pre_squash(i) - mean(i)) / sigma;
    const double a = std::tanh(pre_squash(i));
    lp += -0.5 * xi * xi - log_std(i) - 0.5 * kLog2Pi - std::log(1.0 - a * a + kSquashEps);
  }
  return lp;
}

void RunningNormalizer::observe(const Eigen::VectorXd& x) {
  if (mean_.size() == 0) {
    mean_ = Eigen::VectorXd::Zero(x.size());
    m2_ = Eigen::VectorXd::Zero(x.size());
  }
  count_ += 1.0;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / count_;
  m2_ += delta.cwiseProduct(x - mean_);
}

Eigen::VectorXd RunningNormalizer::variance() const {
  if (count_ < 2.0) return Eigen::VectorXd::Ones(mean_.size());
  return m2_ / count_;
}

Eigen::VectorXd RunningNormalizer::normalize(const Eigen::VectorXd& x) const {
  if (count_ < 2.0) return x;
  const Eigen::ArrayXd sd = (variance().array() + 1e-8).sqrt();
  return ((x - mean_).array() / sd).min(10.0).max(-10.0).matrix();
}

Eigen::MatrixXd RunningNormalizer::normalize_cols(const Eigen::MatrixXd& x) const {
  if (count_ < 2.0) return x;
  const Eigen::ArrayXd sd = (variance().array() + 1e-8).sqrt();
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(c) = ((x.col(c) - mean_).array() / sd).min(10.0).max(-10.0).matrix();
  }
  return out;
}

void RunningNormalizer::save(BinaryWriter& out) const {
  out.put_u64(static_cast<std::uint64_t>(mean_.size()));
  out.put_f64(count_);
  out.put_f64_array(mean_.data(), static_cast<std::size_t>(mean_.size()));
  out.put_f64_array(m2_.data(), static_cast<std::size_t>(m2_.size()));
}

RunningNormalizer RunningNormalizer::load(BinaryReader& in) {
  const std::uint64_t n = in.get_u64();
  RunningNormalizer rn(static_cast<int>(n));
  rn.count_ = in.get_f64();
  in.get_f64_array(rn.mean_.data(), n);
  in.get_f64_array(rn.m2_.data(), n);
  return rn;
}

}  // namespace romgait::nn
