#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "romgait/config.hpp"
#include "romgait/evalkit.hpp"
#include "romgait/gail.hpp"
#include "romgait/sac.hpp"

namespace romgait {

struct CommonOptions {
  std::string config_path;                                       // optional
  std::vector<std::pair<std::string, std::string>> overrides;    // --set key=value
  std::uint64_t seed = 0;
};

ConfigMap load_config(const CommonOptions& common);

struct TrainTeacherOptions {
  CommonOptions common;
  std::string out_dir;
  std::int64_t steps = -1;          // -1 = from config
  double target_speed = -1.0;       // <0 = from config
  std::string resume_checkpoint;    // optional
};
int cmd_train_teacher(const TrainTeacherOptions& opt);

struct RecordOptions {
  CommonOptions common;
  std::string checkpoint;
  std::string out_file;
  std::int64_t frames = -1;  // -1 = record.frames
  bool export_csv = false;
};
int cmd_record(const RecordOptions& opt);

struct TrainStudentOptions {
  CommonOptions common;
  std::string reference;
  std::string out_dir;
  double eta = -1.0;           // <0 = blend.eta
  std::int64_t steps = -1;     // -1 = student.total_steps
  double target_speed = -1.0;  // <0 = from config
};
int cmd_train_student(const TrainStudentOptions& opt);

struct EvaluateOptions {
  CommonOptions common;
  std::string reference;
  std::string student_checkpoint;
  std::string baseline_checkpoint;
  std::string out_dir;
  int episodes = -1;  // -1 = evaluate.episodes
};
int cmd_evaluate(const EvaluateOptions& opt);

int cmd_show_config_defaults();

// --- student training loop, reusable by tests ---

struct StudentMetricsRow {
  std::int64_t step = 0;
  double r_env_mean = 0.0;
  double r_im_mean = 0.0;
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double alpha = 0.0;
  double disc_train_loss = 0.0;
  double disc_holdout_loss = 0.0;
  double disc_penalty = 0.0;
  bool disc_frozen = false;
};

struct StudentTrainSetup {
  BipedParams biped;
  BipedEpisodeConfig episode;
  SacConfig sac;
  DiscriminatorConfig disc;
  double eta = 0.5;
  std::int64_t total_steps = 300000;
  std::uint64_t seed = 0;
  std::int64_t metrics_every = 1000;
  std::int64_t checkpoint_every = 0;  // env steps; 0 = final only
};

struct StudentTrainResult {
  std::vector<StudentMetricsRow> metrics;
  std::int64_t discriminator_updates = 0;
  bool discriminator_frozen = false;
};

// eta = 1 trains the pure-reward baseline: the discriminator is never
// consulted or updated.
StudentTrainResult train_student_loop(const StudentTrainSetup& setup,
                                      const ReferenceDataset& reference,
                                      const std::string& checkpoint_path,
                                      const std::string& disc_checkpoint_path,
                                      const std::string& metrics_csv_path,
                                      SacAgent* out_agent = nullptr);

// Deterministic evaluation rollout of a student policy; records up to
// max_frames normalized gait features (fewer if the policy falls).
ReferenceDataset rollout_student(const SacAgent& agent, const BipedParams& biped,
                                 const BipedEpisodeConfig& episode, std::int64_t max_frames,
                                 std::uint64_t seed, const DatasetMeta& meta_base);

}  // namespace romgait
