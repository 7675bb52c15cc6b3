#include "romgait/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "romgait/errors.hpp"

namespace romgait {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  ConfigMap cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = strip_quotes(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + it->second + "' is not a number");
  }
}

std::int64_t ConfigMap::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    // scientific notation is convenient for step counts
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return static_cast<std::int64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + it->second + "' is not an integer");
  }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": '" + it->second + "' is not a boolean");
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

const std::vector<KeyDoc>& config_reference() {
  static const std::vector<KeyDoc> docs = {
      {"rom.body_mass", "10.0", "central mass of the reduced-order walker (kg)"},
      {"rom.rest_length", "1.0", "spring leg rest length (m)"},
      {"rom.stiffness", "2000.0", "leg spring stiffness (N/m)"},
      {"rom.damping", "10.0", "axial spring damping (N·s/m)"},
      {"rom.hip_damping", "2.0", "hip rotary damping (N·m·s)"},
      {"rom.hip_torque_limit", "100.0", "hip torque limit (N·m)"},
      {"rom.foot_mass_ratio", "0.001", "proxy foot mass as a fraction of body mass"},
      {"rom.dt", "0.016666666666666666", "control step (s)"},
      {"rom.substeps", "32", "physics substeps per control step"},
      {"rom.friction", "1.0", "ground Coulomb friction coefficient"},
      {"episode.target_speed", "1.0", "commanded forward speed (m/s)"},
      {"episode.alpha", "2.0", "velocity reward sensitivity"},
      {"episode.max_steps", "1000", "episode step limit"},
      {"episode.reward_mode", "raw_forward_velocity",
       "teacher reward: exponential | raw_forward_velocity"},
      {"episode.fall_threshold", "0.4", "body height that terminates the episode (m)"},
      {"biped.torso_mass", "10.0", "torso mass (kg)"},
      {"biped.torso_length", "0.6", "torso length (m)"},
      {"biped.thigh_mass", "4.0", "thigh mass (kg)"},
      {"biped.thigh_length", "0.45", "thigh length (m)"},
      {"biped.shin_mass", "3.0", "shin mass (kg)"},
      {"biped.shin_length", "0.5", "shin length (m)"},
      {"biped.foot_mass", "1.0", "foot mass (kg)"},
      {"biped.foot_length", "0.2", "foot length (m)"},
      {"biped.ankle_height", "0.05", "sole-to-ankle offset (m)"},
      {"biped.hip_torque_limit", "120.0", "hip actuator limit (N·m)"},
      {"biped.knee_torque_limit", "100.0", "knee actuator limit (N·m)"},
      {"biped.ankle_torque_limit", "60.0", "ankle actuator limit (N·m)"},
      {"biped.dt", "0.016666666666666666", "control step (s)"},
      {"biped.substeps", "16", "physics substeps per control step"},
      {"biped.friction", "1.0", "ground Coulomb friction coefficient"},
      {"biped_episode.target_speed", "1.0", "commanded forward speed (m/s)"},
      {"biped_episode.alpha", "2.0", "velocity reward sensitivity"},
      {"biped_episode.max_steps", "1000", "episode step limit"},
      {"biped_episode.fall_threshold", "0.8", "torso height that terminates the episode (m)"},
      {"ppo.num_actors", "8", "parallel rollout environments"},
      {"ppo.rollout_length", "256", "steps per actor per iteration"},
      {"ppo.total_steps", "1000000", "environment steps to train for"},
      {"ppo.gamma", "0.99", "discount factor"},
      {"ppo.gae_lambda", "0.95", "GAE lambda"},
      {"ppo.clip_ratio", "0.2", "surrogate clipping ratio"},
      {"ppo.epochs", "4", "optimization epochs per batch"},
      {"ppo.minibatch_size", "256", "minibatch size"},
      {"ppo.value_loss_coeff", "0.5", "value loss weight"},
      {"ppo.entropy_coeff", "0.0", "entropy bonus weight"},
      {"ppo.learning_rate", "0.0001", "Adam learning rate"},
      {"ppo.hidden_width", "512", "policy/value hidden width"},
      {"ppo.hidden_depth", "2", "policy/value hidden depth"},
      {"ppo.checkpoint_every", "0", "checkpoint cadence in iterations (0 = final only)"},
      {"sac.replay_capacity", "1000000", "replay buffer capacity"},
      {"sac.batch_size", "256", "update batch size"},
      {"sac.gamma", "0.99", "discount factor"},
      {"sac.tau", "0.005", "Polyak smoothing coefficient"},
      {"sac.actor_lr", "0.0003", "actor learning rate"},
      {"sac.critic_lr", "0.0003", "critic learning rate"},
      {"sac.alpha_lr", "0.0003", "temperature learning rate"},
      {"sac.auto_alpha", "true", "tune the entropy temperature automatically"},
      {"sac.entropy_target", "0", "target entropy (0 = -action_dim)"},
      {"sac.init_alpha", "0.2", "initial entropy temperature"},
      {"sac.updates_per_env_step", "1.0", "gradient updates per environment step"},
      {"sac.warmup_steps", "5000", "random-action steps before updates"},
      {"sac.hidden_width", "256", "actor/critic hidden width"},
      {"sac.hidden_depth", "2", "actor/critic hidden depth"},
      {"disc.hidden1", "64", "discriminator first hidden width"},
      {"disc.hidden2", "32", "discriminator second hidden width"},
      {"disc.dropout", "0.2", "dropout probability after each hidden layer"},
      {"disc.noise_sigma", "0.05", "Gaussian input noise during training"},
      {"disc.label_real", "0.9", "smoothed label for teacher features"},
      {"disc.label_fake", "0.1", "smoothed label for student features"},
      {"disc.learning_rate", "0.00001", "discriminator Adam learning rate"},
      {"disc.gradient_penalty", "10.0", "interpolant gradient penalty coefficient"},
      {"disc.update_every", "5", "learner updates per discriminator update"},
      {"disc.start_step", "5000", "global step gating the first discriminator update"},
      {"disc.holdout_fraction", "0.1", "reference fraction held out for early stopping"},
      {"disc.patience", "10", "non-improving holdout evaluations before freezing"},
      {"disc.batch_size", "256", "discriminator batch size"},
      {"blend.eta", "0.5", "environment-reward weight in the blended objective"},
      {"record.frames", "2000", "reference rollout length (control steps)"},
      {"evaluate.episodes", "5", "seeded evaluation rollouts per policy"},
      {"evaluate.alignment", "none", "trajectory alignment: none | phase"},
      {"student.total_steps", "300000", "environment steps for student training"},
      {"student.checkpoint_every", "0", "checkpoint cadence in env steps (0 = final only)"},
  };
  return docs;
}

void ConfigMap::reject_unknown_keys() const {
  static const std::set<std::string> known = [] {
    std::set<std::string> s;
    for (const auto& d : config_reference()) s.insert(d.key);
    return s;
  }();
  for (const auto& [key, value] : values_) {
    if (known.find(key) == known.end()) {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
}

void print_config_defaults(std::ostream& os) {
  os << "# romgait configuration keys (flat key = value, '#' comments)\n";
  std::string section;
  for (const auto& d : config_reference()) {
    const std::string sec = d.key.substr(0, d.key.find('.'));
    if (sec != section) {
      os << "\n# --- " << sec << " ---\n";
      section = sec;
    }
    os << d.key << " = " << d.default_value << "  # " << d.description << "\n";
  }
}

RomParams rom_params_from_config(const ConfigMap& cfg) {
  RomParams p;
  p.body_mass = cfg.get_double("rom.body_mass", p.body_mass);
  p.rest_length = cfg.get_double("rom.rest_length", p.rest_length);
  p.stiffness = cfg.get_double("rom.stiffness", p.stiffness);
  p.damping = cfg.get_double("rom.damping", p.damping);
  p.hip_damping = cfg.get_double("rom.hip_damping", p.hip_damping);
  p.hip_torque_limit = cfg.get_double("rom.hip_torque_limit", p.hip_torque_limit);
  p.foot_mass_ratio = cfg.get_double("rom.foot_mass_ratio", p.foot_mass_ratio);
  p.dt = cfg.get_double("rom.dt", p.dt);
  p.substeps = static_cast<int>(cfg.get_int("rom.substeps", p.substeps));
  p.friction = cfg.get_double("rom.friction", p.friction);
  if (!(p.body_mass > 0.0)) throw ConfigError("rom.body_mass must be > 0");
  if (!(p.rest_length > 0.0)) throw ConfigError("rom.rest_length must be > 0");
  if (!(p.stiffness > 0.0)) throw ConfigError("rom.stiffness must be > 0");
  if (!(p.foot_mass_ratio > 0.0)) throw ConfigError("rom.foot_mass_ratio must be > 0");
  if (!(p.dt > 0.0)) throw ConfigError("rom.dt must be > 0");
  if (p.substeps < 1) throw ConfigError("rom.substeps must be >= 1");
  return p;
}

EpisodeConfig episode_from_config(const ConfigMap& cfg) {
  EpisodeConfig e;
  e.target_speed = cfg.get_double("episode.target_speed", e.target_speed);
  e.alpha = cfg.get_double("episode.alpha", e.alpha);
  e.max_steps = static_cast<int>(cfg.get_int("episode.max_steps", e.max_steps));
  const std::string mode = cfg.get_string("episode.reward_mode", "raw_forward_velocity");
  if (mode == "exponential") {
    e.reward_mode = RewardMode::exponential;
  } else if (mode == "raw_forward_velocity") {
    e.reward_mode = RewardMode::raw_forward_velocity;
  } else {
    throw ConfigError("episode.reward_mode: '" + mode +
                      "' is not one of exponential | raw_forward_velocity");
  }
  e.fall_threshold = cfg.get_double("episode.fall_threshold", e.fall_threshold);
  e.validate();
  return e;
}

BipedParams biped_params_from_config(const ConfigMap& cfg) {
  BipedParams p;
  p.torso_mass = cfg.get_double("biped.torso_mass", p.torso_mass);
  p.torso_length = cfg.get_double("biped.torso_length", p.torso_length);
  p.thigh_mass = cfg.get_double("biped.thigh_mass", p.thigh_mass);
  p.thigh_length = cfg.get_double("biped.thigh_length", p.thigh_length);
  p.shin_mass = cfg.get_double("biped.shin_mass", p.shin_mass);
  p.shin_length = cfg.get_double("biped.shin_length", p.shin_length);
  p.foot_mass = cfg.get_double("biped.foot_mass", p.foot_mass);
  p.foot_length = cfg.get_double("biped.foot_length", p.foot_length);
  p.ankle_height = cfg.get_double("biped.ankle_height", p.ankle_height);
  p.hip_torque_limit = cfg.get_double("biped.hip_torque_limit", p.hip_torque_limit);
  p.knee_torque_limit = cfg.get_double("biped.knee_torque_limit", p.knee_torque_limit);
  p.ankle_torque_limit = cfg.get_double("biped.ankle_torque_limit", p.ankle_torque_limit);
  p.dt = cfg.get_double("biped.dt", p.dt);
  p.substeps = static_cast<int>(cfg.get_int("biped.substeps", p.substeps));
  p.friction = cfg.get_double("biped.friction", p.friction);
  if (!(p.dt > 0.0)) throw ConfigError("biped.dt must be > 0");
  if (p.substeps < 1) throw ConfigError("biped.substeps must be >= 1");
  return p;
}

BipedEpisodeConfig biped_episode_from_config(const ConfigMap& cfg) {
  BipedEpisodeConfig e;
  e.target_speed = cfg.get_double("biped_episode.target_speed", e.target_speed);
  e.alpha = cfg.get_double("biped_episode.alpha", e.alpha);
  e.max_steps = static_cast<int>(cfg.get_int("biped_episode.max_steps", e.max_steps));
  e.fall_threshold = cfg.get_double("biped_episode.fall_threshold", e.fall_threshold);
  e.validate();
  return e;
}

PpoConfig ppo_from_config(const ConfigMap& cfg) {
  PpoConfig p;
  p.num_actors = static_cast<int>(cfg.get_int("ppo.num_actors", p.num_actors));
  p.rollout_length = static_cast<int>(cfg.get_int("ppo.rollout_length", p.rollout_length));
  p.total_steps = cfg.get_int("ppo.total_steps", p.total_steps);
  p.gamma = cfg.get_double("ppo.gamma", p.gamma);
  p.gae_lambda = cfg.get_double("ppo.gae_lambda", p.gae_lambda);
  p.clip_ratio = cfg.get_double("ppo.clip_ratio", p.clip_ratio);
  p.epochs_per_batch = static_cast<int>(cfg.get_int("ppo.epochs", p.epochs_per_batch));
  p.minibatch_size = static_cast<int>(cfg.get_int("ppo.minibatch_size", p.minibatch_size));
  p.value_loss_coeff = cfg.get_double("ppo.value_loss_coeff", p.value_loss_coeff);
  p.entropy_coeff = cfg.get_double("ppo.entropy_coeff", p.entropy_coeff);
  p.learning_rate = cfg.get_double("ppo.learning_rate", p.learning_rate);
  p.hidden_width = static_cast<int>(cfg.get_int("ppo.hidden_width", p.hidden_width));
  p.hidden_depth = static_cast<int>(cfg.get_int("ppo.hidden_depth", p.hidden_depth));
  p.checkpoint_every_iters =
      static_cast<int>(cfg.get_int("ppo.checkpoint_every", p.checkpoint_every_iters));
  p.validate();
  return p;
}

SacConfig sac_from_config(const ConfigMap& cfg) {
  SacConfig s;
  s.replay_capacity = cfg.get_int("sac.replay_capacity", s.replay_capacity);
  s.batch_size = static_cast<int>(cfg.get_int("sac.batch_size", s.batch_size));
  s.gamma = cfg.get_double("sac.gamma", s.gamma);
  s.tau_polyak = cfg.get_double("sac.tau", s.tau_polyak);
  s.actor_lr = cfg.get_double("sac.actor_lr", s.actor_lr);
  s.critic_lr = cfg.get_double("sac.critic_lr", s.critic_lr);
  s.alpha_lr = cfg.get_double("sac.alpha_lr", s.alpha_lr);
  s.auto_alpha = cfg.get_bool("sac.auto_alpha", s.auto_alpha);
  s.entropy_target = cfg.get_double("sac.entropy_target", s.entropy_target);
  s.init_alpha = cfg.get_double("sac.init_alpha", s.init_alpha);
  s.updates_per_env_step = cfg.get_double("sac.updates_per_env_step", s.updates_per_env_step);
  s.warmup_steps = cfg.get_int("sac.warmup_steps", s.warmup_steps);
  s.hidden_width = static_cast<int>(cfg.get_int("sac.hidden_width", s.hidden_width));
  s.hidden_depth = static_cast<int>(cfg.get_int("sac.hidden_depth", s.hidden_depth));
  s.validate();
  return s;
}

DiscriminatorConfig disc_from_config(const ConfigMap& cfg) {
  DiscriminatorConfig d;
  d.hidden1 = static_cast<int>(cfg.get_int("disc.hidden1", d.hidden1));
  d.hidden2 = static_cast<int>(cfg.get_int("disc.hidden2", d.hidden2));
  d.dropout = cfg.get_double("disc.dropout", d.dropout);
  d.input_noise_sigma = cfg.get_double("disc.noise_sigma", d.input_noise_sigma);
  d.label_real = cfg.get_double("disc.label_real", d.label_real);
  d.label_fake = cfg.get_double("disc.label_fake", d.label_fake);
  d.learning_rate = cfg.get_double("disc.learning_rate", d.learning_rate);
  d.gradient_penalty_coeff = cfg.get_double("disc.gradient_penalty", d.gradient_penalty_coeff);
  d.update_every = static_cast<int>(cfg.get_int("disc.update_every", d.update_every));
  d.start_step = cfg.get_int("disc.start_step", d.start_step);
  d.holdout_fraction = cfg.get_double("disc.holdout_fraction", d.holdout_fraction);
  d.patience = static_cast<int>(cfg.get_int("disc.patience", d.patience));
  d.batch_size = static_cast<int>(cfg.get_int("disc.batch_size", d.batch_size));
  d.validate();
  return d;
}

BlendConfig blend_from_config(const ConfigMap& cfg) {
  BlendConfig b;
  b.eta = cfg.get_double("blend.eta", b.eta);
  b.validate();
  return b;
}

}  // namespace romgait
