#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "romgait/manifest.hpp"
#include "romgait/pipeline.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : raw) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw CLI::ValidationError("--set", "expected key=value, got '" + s + "'");
    }
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"romgait: two-stage gait distillation workbench (teacher ROM -> student biped)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", romgait::kToolVersion);

  std::string config_path, out_dir, out_file, checkpoint, resume, reference;
  std::string student_ckpt, baseline_ckpt;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  std::int64_t steps = -1, frames = -1;
  double eta = -1.0, target_speed = -1.0;
  int episodes = -1;
  bool export_csv = false, show_defaults = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key=value configuration file");
    cmd->add_option("--set", overrides, "override a configuration key (key=value, repeatable)");
    cmd->add_option("--seed", seed, "master seed");
  };

  CLI::App* train_teacher = app.add_subcommand("train-teacher", "train the ROM teacher with PPO");
  add_common(train_teacher);
  train_teacher->add_option("--out", out_dir, "output directory")->required();
  train_teacher->add_option("--steps", steps, "environment steps (overrides ppo.total_steps)");
  train_teacher->add_option("--target-speed", target_speed, "commanded speed (m/s)");
  train_teacher->add_option("--resume", resume, "teacher checkpoint to continue from");

  CLI::App* record = app.add_subcommand("record", "record a teacher reference dataset");
  add_common(record);
  record->add_option("--checkpoint", checkpoint, "teacher checkpoint")->required();
  record->add_option("--out", out_file, "output dataset file")->required();
  record->add_option("--frames", frames, "frames to record (overrides record.frames)");
  record->add_flag("--export-csv", export_csv, "also write a CSV next to the dataset");

  CLI::App* train_student =
      app.add_subcommand("train-student", "train the biped student with SAC + discriminator");
  add_common(train_student);
  train_student->add_option("--reference", reference, "teacher reference dataset")->required();
  train_student->add_option("--out", out_dir, "output directory")->required();
  train_student->add_option("--eta", eta, "environment-reward weight (1.0 = pure-reward baseline)");
  train_student->add_option("--steps", steps, "environment steps (overrides student.total_steps)");
  train_student->add_option("--target-speed", target_speed, "commanded speed (m/s)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score student and baseline against the teacher");
  add_common(evaluate);
  evaluate->add_option("--reference", reference, "teacher reference dataset")->required();
  evaluate->add_option("--student", student_ckpt, "student checkpoint")->required();
  evaluate->add_option("--baseline", baseline_ckpt, "baseline checkpoint")->required();
  evaluate->add_option("--out", out_dir, "output directory")->required();
  evaluate->add_option("--episodes", episodes, "evaluation rollouts per policy");

  CLI::App* config_cmd = app.add_subcommand("config", "configuration utilities");
  config_cmd->add_flag("--show-defaults", show_defaults, "print every key with its default");

  CLI11_PARSE(app, argc, argv);

  try {
    romgait::CommonOptions common{config_path, parse_overrides(overrides), seed};
    if (train_teacher->parsed()) {
      return romgait::cmd_train_teacher({common, out_dir, steps, target_speed, resume});
    }
    if (record->parsed()) {
      return romgait::cmd_record({common, checkpoint, out_file, frames, export_csv});
    }
    if (train_student->parsed()) {
      return romgait::cmd_train_student({common, reference, out_dir, eta, steps, target_speed});
    }
    if (evaluate->parsed()) {
      return romgait::cmd_evaluate(
          {common, reference, student_ckpt, baseline_ckpt, out_dir, episodes});
    }
    if (config_cmd->parsed()) {
      if (show_defaults) return romgait::cmd_show_config_defaults();
      std::cerr << "config: nothing to do (try --show-defaults)\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "romgait: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
