#include "romgait/gaitdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "romgait/binio.hpp"
#include "romgait/manifest.hpp"
#include "romgait/recorder.hpp"

namespace romgait {

namespace {
constexpr char kDatasetMagic[5] = "RGDT";
constexpr std::uint32_t kDatasetVersion = 1;
constexpr double kFeatureBound = 10.0;
}  // namespace

ReferenceDataset::ReferenceDataset(Eigen::MatrixXd frames, DatasetMeta meta)
    : frames_(std::move(frames)), meta_(std::move(meta)) {
  if (frames_.rows() < 1) throw EmptyDataset();
  if (frames_.cols() != GaitFeature::kDim) {
    throw DimensionMismatch("reference frames must have 5 channels");
  }
  for (Eigen::Index t = 0; t < frames_.rows(); ++t) {
    for (Eigen::Index c = 0; c < frames_.cols(); ++c) {
      const double v = frames_(t, c);
      if (!std::isfinite(v) || std::abs(v) >= kFeatureBound) {
        throw Error("gait feature out of range at frame " + std::to_string(t));
      }
    }
  }
}

GaitFeature ReferenceDataset::frame(std::int64_t t) const {
  GaitFeature f;
  for (int c = 0; c < GaitFeature::kDim; ++c) f[static_cast<std::size_t>(c)] = frames_(t, c);
  return f;
}

void ReferenceDataset::save(const std::string& path) const {
  BinaryWriter w;
  w.put_bytes(kDatasetMagic, 4);
  w.put_u32(kDatasetVersion);
  w.put_u64(static_cast<std::uint64_t>(frames_.rows()));
  w.put_f64(meta_.dt);
  nlohmann::json j;
  j["teacher_checkpoint_id"] = meta_.teacher_checkpoint_id;
  j["target_speed"] = meta_.target_speed;
  j["normalization_height"] = meta_.normalization_height;
  j["recording_seed"] = meta_.recording_seed;
  w.put_string(j.dump());
  for (Eigen::Index t = 0; t < frames_.rows(); ++t) {
    for (Eigen::Index c = 0; c < GaitFeature::kDim; ++c) w.put_f64(frames_(t, c));
  }
  w.write_file_with_crc(path);
}

ReferenceDataset ReferenceDataset::load(const std::string& path) {
  BinaryReader r = BinaryReader::from_file(path);
  r.check_crc(path);
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::string(magic, 4) != "RGDT") throw FormatVersionUnknown(path + " is not a gait dataset");
  const std::uint32_t version = r.get_u32();
  if (version != kDatasetVersion) {
    throw FormatVersionUnknown("dataset version " + std::to_string(version));
  }
  const std::uint64_t frames = r.get_u64();
  if (frames < 1) throw EmptyDataset();
  DatasetMeta meta;
  meta.format_version = version;
  meta.dt = r.get_f64();
  const nlohmann::json j = nlohmann::json::parse(r.get_string());
  meta.teacher_checkpoint_id = j.value("teacher_checkpoint_id", "");
  meta.target_speed = j.value("target_speed", 0.0);
  meta.normalization_height = j.value("normalization_height", 1.0);
  meta.recording_seed = j.value("recording_seed", std::uint64_t{0});
  Eigen::MatrixXd data(static_cast<Eigen::Index>(frames), GaitFeature::kDim);
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    for (Eigen::Index c = 0; c < GaitFeature::kDim; ++c) data(t, c) = r.get_f64();
  }
  return ReferenceDataset(std::move(data), std::move(meta));
}

void ReferenceDataset::export_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << "t,y_com,x_l,y_l,x_r,y_r\n";
  char buf[256];
  for (Eigen::Index t = 0; t < frames_.rows(); ++t) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(t), frames_(t, 0), frames_(t, 1), frames_(t, 2),
                  frames_(t, 3), frames_(t, 4));
    out << buf;
  }
}

DatasetStatistics dataset_statistics(const ReferenceDataset& dataset) {
  const Eigen::MatrixXd& f = dataset.frames();
  DatasetStatistics stats;
  for (int c = 0; c < GaitFeature::kDim; ++c) {
    const Eigen::VectorXd col = f.col(c);
    ChannelStats& s = stats.channels[static_cast<std::size_t>(c)];
    s.mean = col.mean();
    s.stddev = std::sqrt((col.array() - s.mean).square().mean());
    s.min = col.minCoeff();
    s.max = col.maxCoeff();
  }

  // stride period from the autocorrelation of x_l: first peak after the
  // autocorrelation goes negative
  const Eigen::Index n = f.rows();
  if (n >= 4) {
    Eigen::VectorXd x = f.col(1);
    x.array() -= x.mean();
    const double denom = x.squaredNorm();
    if (denom > 1e-12) {
      const Eigen::Index max_lag = n / 2;
      Eigen::VectorXd r(max_lag + 1);
      for (Eigen::Index k = 0; k <= max_lag; ++k) {
        double acc = 0.0;
        for (Eigen::Index t = 0; t + k < n; ++t) acc += x(t) * x(t + k);
        r(k) = acc / denom;
      }
      Eigen::Index first_negative = -1;
      for (Eigen::Index k = 1; k <= max_lag; ++k) {
        if (r(k) < 0.0) {
          first_negative = k;
          break;
        }
      }
      if (first_negative > 0) {
        Eigen::Index best = -1;
        double best_val = 0.0;
        for (Eigen::Index k = first_negative + 1; k <= max_lag; ++k) {
          if (r(k) > best_val) {
            best_val = r(k);
            best = k;
          }
        }
        if (best > 0) stats.stride_period = static_cast<double>(best);
      }
    }
  }
  return stats;
}

Eigen::MatrixXd record_frames(RomEnv& env, const RomController& controller, std::int64_t frames) {
  Eigen::MatrixXd data(frames, GaitFeature::kDim);
  for (std::int64_t t = 0; t < frames; ++t) {
    const RomAction action = controller(env.observation());
    const auto result = env.step(action);
    const GaitFeature f = env.normalized_gait_feature();
    for (int c = 0; c < GaitFeature::kDim; ++c) data(t, c) = f[static_cast<std::size_t>(c)];
    if (result.done && t + 1 < frames) {
      throw TeacherFellEarly(static_cast<int>(t + 1), static_cast<int>(frames));
    }
  }
  return data;
}

ReferenceDataset record_rollout(const RomParams& params, const EpisodeConfig& episode,
                                const RomController& controller, std::int64_t frames,
                                std::uint64_t seed, const std::string& checkpoint_id) {
  if (frames < 1) throw ConfigError("record.frames must be >= 1");
  EpisodeConfig cfg = episode;
  cfg.max_steps = static_cast<int>(frames);
  RomEnv env(params, cfg);
  env.reset(seed);
  Eigen::MatrixXd data = record_frames(env, controller, frames);

  DatasetMeta meta;
  meta.teacher_checkpoint_id = checkpoint_id;
  meta.target_speed = cfg.target_speed;
  meta.dt = params.dt;
  meta.normalization_height = env.nominal_height();
  meta.recording_seed = seed;
  return ReferenceDataset(std::move(data), std::move(meta));
}

ReferenceDataset record_reference(const std::string& checkpoint_path, const RomParams& params,
                                  const EpisodeConfig& episode, std::int64_t frames,
                                  std::uint64_t seed) {
  const TeacherCheckpoint teacher = TeacherCheckpoint::load(checkpoint_path);
  const std::string id = sha256_file(checkpoint_path).substr(0, 16);
  return record_rollout(
      params, episode,
      [&teacher](const RomObservation& obs) {
        const Eigen::VectorXd a = teacher.act_deterministic(obs);
        RomAction act;
        act.hip_torques = {a(0), a(1)};
        return act;
      },
      frames, seed, id);
}

}  // namespace romgait
