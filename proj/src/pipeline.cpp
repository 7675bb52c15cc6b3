#include "romgait/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include <json.hpp>

#include "romgait/logging.hpp"
#include "romgait/manifest.hpp"
#include "romgait/recorder.hpp"

namespace romgait {

namespace fs = std::filesystem;

namespace {

std::string resolved_config_json(const ConfigMap& cfg) {
  nlohmann::json j;
  for (const auto& d : config_reference()) {
    j[d.key] = cfg.has(d.key) ? cfg.get_string(d.key, d.default_value) : d.default_value;
  }
  return j.dump();
}

std::map<std::string, std::string> resolved_config_map(const ConfigMap& cfg) {
  std::map<std::string, std::string> m;
  for (const auto& d : config_reference()) {
    m[d.key] = cfg.has(d.key) ? cfg.get_string(d.key, d.default_value) : d.default_value;
  }
  return m;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create output directory " + dir);
}

int run_command(const std::string& name, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "romgait " << name << ": error: " << e.what() << "\n";
    return 1;
  }
}

void append_student_metrics(const std::string& path, const StudentMetricsRow& r, bool header) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoFailure("cannot open " + path);
  if (header) {
    out << "step,r_env_mean,r_im_mean,critic1_loss,critic2_loss,alpha,disc_train_loss,"
           "disc_holdout_loss,disc_penalty,disc_frozen\n";
  }
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d\n",
                static_cast<long long>(r.step), r.r_env_mean, r.r_im_mean, r.critic1_loss,
                r.critic2_loss, r.alpha, r.disc_train_loss, r.disc_holdout_loss, r.disc_penalty,
                r.disc_frozen ? 1 : 0);
  out << buf;
}

}  // namespace

ConfigMap load_config(const CommonOptions& common) {
  ConfigMap cfg;
  if (!common.config_path.empty()) cfg = ConfigMap::from_file(common.config_path);
  for (const auto& [k, v] : common.overrides) cfg.set(k, v);
  cfg.reject_unknown_keys();
  return cfg;
}

int cmd_train_teacher(const TrainTeacherOptions& opt) {
  return run_command("train-teacher", [&] {
    ConfigMap cfg = load_config(opt.common);
    if (opt.steps >= 0) cfg.set("ppo.total_steps", std::to_string(opt.steps));
    if (opt.target_speed >= 0.0) cfg.set("episode.target_speed", std::to_string(opt.target_speed));

    const RomParams rom = rom_params_from_config(cfg);
    const EpisodeConfig episode = episode_from_config(cfg);
    const PpoConfig ppo = ppo_from_config(cfg);

    ensure_dir(opt.out_dir);
    const std::string ckpt = opt.out_dir + "/teacher.ckpt";
    const std::string metrics = opt.out_dir + "/metrics.csv";

    PpoTrainer trainer(rom, episode, ppo, opt.common.seed);
    trainer.set_config_json(resolved_config_json(cfg));
    if (!opt.resume_checkpoint.empty()) {
      trainer.restore(TeacherCheckpoint::load(opt.resume_checkpoint));
    } else if (fs::exists(metrics)) {
      fs::remove(metrics);  // fresh run, fresh log
    }
    trainer.train(ckpt, metrics);

    RunManifest man;
    man.command = "train-teacher";
    man.seed = opt.common.seed;
    man.resolved_config = resolved_config_map(cfg);
    if (!opt.common.config_path.empty()) man.add_input(opt.common.config_path);
    if (!opt.resume_checkpoint.empty()) man.add_input(opt.resume_checkpoint);
    man.outputs = {ckpt, metrics};
    man.write(opt.out_dir + "/manifest.json");
    log_info("teacher checkpoint written to " + ckpt);
  });
}

int cmd_record(const RecordOptions& opt) {
  return run_command("record", [&] {
    ConfigMap cfg = load_config(opt.common);
    const RomParams rom = rom_params_from_config(cfg);
    const EpisodeConfig episode = episode_from_config(cfg);
    const std::int64_t frames =
        opt.frames >= 0 ? opt.frames : cfg.get_int("record.frames", 2000);

    const ReferenceDataset ds =
        record_reference(opt.checkpoint, rom, episode, frames, opt.common.seed);
    const fs::path out(opt.out_file);
    if (out.has_parent_path()) ensure_dir(out.parent_path().string());
    ds.save(opt.out_file);
    if (opt.export_csv) ds.export_csv(opt.out_file + ".csv");

    RunManifest man;
    man.command = "record";
    man.seed = opt.common.seed;
    man.resolved_config = resolved_config_map(cfg);
    man.add_input(opt.checkpoint);
    if (!opt.common.config_path.empty()) man.add_input(opt.common.config_path);
    man.outputs = {opt.out_file};
    if (opt.export_csv) man.outputs.push_back(opt.out_file + ".csv");
    man.write(opt.out_file + ".manifest.json");
    log_info("recorded " + std::to_string(frames) + " frames to " + opt.out_file);
  });
}

StudentTrainResult train_student_loop(const StudentTrainSetup& setup,
                                      const ReferenceDataset& reference,
                                      const std::string& checkpoint_path,
                                      const std::string& disc_checkpoint_path,
                                      const std::string& metrics_csv_path,
                                      SacAgent* out_agent) {
  BlendConfig blend{setup.eta};
  blend.validate();
  const bool use_disc = setup.eta < 1.0;

  SacAgent agent(BipedObservation::kDim, BipedAction::kDim, setup.sac, setup.seed);
  BipedEnv env(setup.biped, setup.episode);
  ReplayBuffer replay(setup.sac.replay_capacity);
  std::optional<DiscriminatorTrainer> disc;
  if (use_disc) disc.emplace(setup.disc, reference, setup.seed);

  Rng env_rng(Rng::derive(setup.seed, 10));
  Rng update_rng(Rng::derive(setup.seed, 11));
  Rng fake_rng(Rng::derive(setup.seed, 12));

  const RewardFn reward_fn = [&](const Transition& t) {
    if (!use_disc) return t.reward_env;
    return blend_reward(t.reward_env, disc->disc().imitation_bonus(t.gait_feature), setup.eta);
  };
  const FakeSampler fake_sampler = [&](int n) {
    std::vector<GaitFeature> out;
    if (replay.size() == 0) return out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      out.push_back(replay.at(static_cast<std::size_t>(fake_rng.uniform_index(replay.size())))
                        .gait_feature);
    }
    return out;
  };

  StudentTrainResult result;
  std::uint64_t episode_counter = 0;
  BipedObservation obs = env.reset(Rng::derive(setup.seed, 1000));
  Eigen::VectorXd obs_vec = obs.vec();

  bool need_header = !metrics_csv_path.empty() && !fs::exists(metrics_csv_path);
  double window_r_env = 0.0, window_r_im = 0.0;
  std::int64_t window_n = 0;
  double update_accum = 0.0;
  std::int64_t learner_updates = 0;
  SacUpdateStats last_stats;
  DiscUpdateLog last_disc_log;

  for (std::int64_t step = 1; step <= setup.total_steps; ++step) {
    BipedAction action;
    if (step <= setup.sac.warmup_steps) {
      for (auto& t : action.joint_torques) t = env_rng.uniform(-1.0, 1.0);
    } else {
      const Eigen::VectorXd a = agent.act_stochastic(obs_vec, env_rng);
      for (int j = 0; j < BipedAction::kDim; ++j) {
        action.joint_torques[static_cast<std::size_t>(j)] = a(j);
      }
    }

    const auto res = env.step(action);
    Transition tr;
    tr.state = obs_vec;
    tr.action = Eigen::VectorXd(BipedAction::kDim);
    for (int j = 0; j < BipedAction::kDim; ++j) {
      tr.action(j) = action.joint_torques[static_cast<std::size_t>(j)];
    }
    tr.reward_env = res.reward;
    tr.gait_feature = env.normalized_gait_feature();
    tr.next_state = res.observation.vec();
    tr.done = res.done;
    replay.insert(tr);

    window_r_env += res.reward;
    if (use_disc) window_r_im += disc->disc().imitation_bonus(tr.gait_feature);
    ++window_n;

    if (res.done) {
      obs = env.reset(Rng::derive(setup.seed, 1000 + (++episode_counter)));
      obs_vec = obs.vec();
    } else {
      obs = res.observation;
      obs_vec = tr.next_state;
    }

    if (step > setup.sac.warmup_steps &&
        replay.size() >= static_cast<std::size_t>(setup.sac.batch_size)) {
      update_accum += setup.sac.updates_per_env_step;
      while (update_accum >= 1.0) {
        update_accum -= 1.0;
        last_stats = agent.update(replay, reward_fn, update_rng);
        ++learner_updates;
        if (use_disc) {
          const DiscUpdateLog dlog = disc->scheduled_update(step, learner_updates, fake_sampler);
          if (dlog.updated) {
            last_disc_log = dlog;
            ++result.discriminator_updates;
          }
        }
      }
    }

    if (step % setup.metrics_every == 0 || step == setup.total_steps) {
      StudentMetricsRow row;
      row.step = step;
      row.r_env_mean = window_n > 0 ? window_r_env / static_cast<double>(window_n) : 0.0;
      row.r_im_mean = window_n > 0 ? window_r_im / static_cast<double>(window_n) : 0.0;
      row.critic1_loss = last_stats.critic1_loss;
      row.critic2_loss = last_stats.critic2_loss;
      row.alpha = last_stats.alpha;
      row.disc_train_loss = last_disc_log.train_loss;
      row.disc_holdout_loss = last_disc_log.holdout_loss;
      row.disc_penalty = last_disc_log.penalty;
      row.disc_frozen = use_disc && disc->frozen();
      append_student_metrics(metrics_csv_path, row, need_header);
      need_header = false;
      result.metrics.push_back(row);
      window_r_env = window_r_im = 0.0;
      window_n = 0;
      if (step % (setup.metrics_every * 10) == 0) {
        log_info("student step " + std::to_string(step) + " r_env " +
                 std::to_string(row.r_env_mean) + " r_im " + std::to_string(row.r_im_mean));
      }
    }
    if (!checkpoint_path.empty() && setup.checkpoint_every > 0 &&
        step % setup.checkpoint_every == 0) {
      agent.save(checkpoint_path, static_cast<std::uint64_t>(step), "{}");
    }
  }

  if (!checkpoint_path.empty()) {
    agent.save(checkpoint_path, static_cast<std::uint64_t>(setup.total_steps), "{}");
  }
  if (use_disc && !disc_checkpoint_path.empty()) {
    disc->save(disc_checkpoint_path, static_cast<std::uint64_t>(setup.total_steps));
  }
  result.discriminator_frozen = use_disc && disc->frozen();
  if (out_agent) *out_agent = agent;
  return result;
}

ReferenceDataset rollout_student(const SacAgent& agent, const BipedParams& biped,
                                 const BipedEpisodeConfig& episode, std::int64_t max_frames,
                                 std::uint64_t seed, const DatasetMeta& meta_base) {
  BipedEpisodeConfig cfg = episode;
  cfg.max_steps = static_cast<int>(max_frames);
  BipedEnv env(biped, cfg);
  env.reset(seed);
  std::vector<GaitFeature> frames;
  frames.reserve(static_cast<std::size_t>(max_frames));
  for (std::int64_t t = 0; t < max_frames; ++t) {
    const Eigen::VectorXd a = agent.act_deterministic(env.observation().vec());
    BipedAction act;
    for (int j = 0; j < BipedAction::kDim; ++j) act.joint_torques[static_cast<std::size_t>(j)] = a(j);
    const auto res = env.step(act);
    frames.push_back(env.normalized_gait_feature());
    if (res.done) break;
  }
  Eigen::MatrixXd data(static_cast<Eigen::Index>(frames.size()), GaitFeature::kDim);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (int c = 0; c < GaitFeature::kDim; ++c) {
      data(static_cast<Eigen::Index>(t), c) = frames[t][static_cast<std::size_t>(c)];
    }
  }
  DatasetMeta meta = meta_base;
  meta.recording_seed = seed;
  meta.normalization_height = BipedParams(biped).nominal_root_height();
  meta.dt = biped.dt;
  return ReferenceDataset(std::move(data), std::move(meta));
}

int cmd_train_student(const TrainStudentOptions& opt) {
  return run_command("train-student", [&] {
    ConfigMap cfg = load_config(opt.common);
    if (opt.eta >= 0.0) cfg.set("blend.eta", std::to_string(opt.eta));
    if (opt.steps >= 0) cfg.set("student.total_steps", std::to_string(opt.steps));
    if (opt.target_speed >= 0.0) {
      cfg.set("biped_episode.target_speed", std::to_string(opt.target_speed));
    }

    if (!fs::exists(opt.reference)) {
      throw IoFailure("reference dataset not found: " + opt.reference);
    }
    const ReferenceDataset reference = ReferenceDataset::load(opt.reference);

    StudentTrainSetup setup;
    setup.biped = biped_params_from_config(cfg);
    setup.episode = biped_episode_from_config(cfg);
    setup.sac = sac_from_config(cfg);
    setup.disc = disc_from_config(cfg);
    setup.eta = blend_from_config(cfg).eta;
    setup.total_steps = cfg.get_int("student.total_steps", 300000);
    setup.checkpoint_every = cfg.get_int("student.checkpoint_every", 0);
    setup.seed = opt.common.seed;

    ensure_dir(opt.out_dir);
    const std::string ckpt = opt.out_dir + "/student.ckpt";
    const std::string disc_ckpt = opt.out_dir + "/discriminator.ckpt";
    const std::string metrics = opt.out_dir + "/metrics.csv";
    if (fs::exists(metrics)) fs::remove(metrics);

    train_student_loop(setup, reference, ckpt, setup.eta < 1.0 ? disc_ckpt : "", metrics);

    RunManifest man;
    man.command = "train-student";
    man.seed = opt.common.seed;
    man.resolved_config = resolved_config_map(cfg);
    man.add_input(opt.reference);
    if (!opt.common.config_path.empty()) man.add_input(opt.common.config_path);
    man.outputs = {ckpt, metrics};
    if (setup.eta < 1.0) man.outputs.push_back(disc_ckpt);
    man.write(opt.out_dir + "/manifest.json");
    log_info("student checkpoint written to " + ckpt);
  });
}

int cmd_evaluate(const EvaluateOptions& opt) {
  return run_command("evaluate", [&] {
    ConfigMap cfg = load_config(opt.common);
    const int episodes =
        opt.episodes > 0 ? opt.episodes : static_cast<int>(cfg.get_int("evaluate.episodes", 5));
    const std::string align_str = cfg.get_string("evaluate.alignment", "none");
    Alignment alignment;
    if (align_str == "none") {
      alignment = Alignment::none;
    } else if (align_str == "phase") {
      alignment = Alignment::phase;
    } else {
      throw ConfigError("evaluate.alignment: '" + align_str + "' is not one of none | phase");
    }

    const ReferenceDataset reference = ReferenceDataset::load(opt.reference);
    const LoadedSacAgent student = LoadedSacAgent::load(opt.student_checkpoint);
    const LoadedSacAgent baseline = LoadedSacAgent::load(opt.baseline_checkpoint);

    const BipedParams biped = biped_params_from_config(cfg);
    BipedEpisodeConfig episode = biped_episode_from_config(cfg);
    episode.target_speed = reference.meta().target_speed;

    DatasetMeta meta_base;
    meta_base.target_speed = episode.target_speed;

    std::array<double, 5> student_sum{}, baseline_sum{}, student_sq{}, baseline_sq{};
    std::vector<std::pair<std::string, ReferenceDataset>> first_rollouts;
    for (int which = 0; which < 2; ++which) {
      const SacAgent& agent = which == 0 ? student.agent : baseline.agent;
      for (int e = 0; e < episodes; ++e) {
        const ReferenceDataset roll =
            rollout_student(agent, biped, episode, reference.frame_count(),
                            Rng::derive(opt.common.seed, 9000 + static_cast<std::uint64_t>(e)),
                            meta_base);
        const auto mse = aligned_mse(reference, roll, alignment);
        for (std::size_t c = 0; c < 5; ++c) {
          (which == 0 ? student_sum : baseline_sum)[c] += mse[c];
          (which == 0 ? student_sq : baseline_sq)[c] += mse[c] * mse[c];
        }
        if (e == 0) {
          first_rollouts.emplace_back(which == 0 ? "student" : "baseline", roll);
        }
      }
    }

    std::array<double, 5> student_mean{}, baseline_mean{};
    MseReport report;
    for (std::size_t c = 0; c < 5; ++c) {
      student_mean[c] = student_sum[c] / episodes;
      baseline_mean[c] = baseline_sum[c] / episodes;
    }
    report = make_mse_report(baseline_mean, student_mean);
    report.episodes = episodes;
    for (std::size_t c = 0; c < 5; ++c) {
      report.student_mse_std[c] =
          std::sqrt(std::max(0.0, student_sq[c] / episodes - student_mean[c] * student_mean[c]));
      report.baseline_mse_std[c] = std::sqrt(
          std::max(0.0, baseline_sq[c] / episodes - baseline_mean[c] * baseline_mean[c]));
    }

    ensure_dir(opt.out_dir);
    const std::string report_path = opt.out_dir + "/report.json";
    {
      std::ofstream out(report_path, std::ios::trunc);
      if (!out) throw IoFailure("cannot open " + report_path);
      out << report.to_json() << "\n";
    }
    export_comparison(reference, first_rollouts, opt.out_dir + "/exports");

    RunManifest man;
    man.command = "evaluate";
    man.seed = opt.common.seed;
    man.resolved_config = resolved_config_map(cfg);
    man.add_input(opt.reference);
    man.add_input(opt.student_checkpoint);
    man.add_input(opt.baseline_checkpoint);
    if (!opt.common.config_path.empty()) man.add_input(opt.common.config_path);
    man.outputs = {report_path};
    man.write(opt.out_dir + "/manifest.json");
    log_info("evaluation report written to " + report_path);
  });
}

int cmd_show_config_defaults() {
  print_config_defaults(std::cout);
  return 0;
}

}  // namespace romgait
