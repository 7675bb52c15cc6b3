#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "romgait/errors.hpp"

namespace romgait {

// The 5-D gait descriptor judged by the discriminator: body height plus foot
// positions relative to the body, all scaled by the mechanism's nominal
// standing height so the two embodiments share one feature space.
struct GaitFeature {
  std::array<double, 5> data{};  // [y_com, x_l, y_l, x_r, y_r]

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double y_com() const { return data[0]; }
  double x_l() const { return data[1]; }
  double y_l() const { return data[2]; }
  double x_r() const { return data[3]; }
  double y_r() const { return data[4]; }

  Eigen::Matrix<double, 5, 1> vec() const {
    return Eigen::Matrix<double, 5, 1>(data[0], data[1], data[2], data[3], data[4]);
  }
  static GaitFeature from_vec(const Eigen::Matrix<double, 5, 1>& v) {
    return GaitFeature{{v(0), v(1), v(2), v(3), v(4)}};
  }
  bool finite() const {
    for (double d : data) {
      if (!std::isfinite(d)) return false;
    }
    return true;
  }
  static constexpr int kDim = 5;
};

struct DatasetMeta {
  std::string teacher_checkpoint_id;  // content hash of the recording checkpoint
  double target_speed = 0.0;
  double dt = 0.0;
  double normalization_height = 1.0;
  std::uint64_t recording_seed = 0;
  std::uint32_t format_version = 1;
};

// Recorded gait-feature trajectory: one 5-D frame per control step plus
// recording metadata. Immutable after construction; save/load round-trips
// bit for bit.
class ReferenceDataset {
 public:
  ReferenceDataset() = default;
  ReferenceDataset(Eigen::MatrixXd frames, DatasetMeta meta);

  std::int64_t frame_count() const { return frames_.rows(); }
  const Eigen::MatrixXd& frames() const { return frames_; }  // T x 5
  GaitFeature frame(std::int64_t t) const;
  const DatasetMeta& meta() const { return meta_; }

  void save(const std::string& path) const;
  static ReferenceDataset load(const std::string& path);

  // Non-canonical plain-text export for plotting.
  void export_csv(const std::string& path) const;

 private:
  Eigen::MatrixXd frames_;  // T x 5
  DatasetMeta meta_;
};

struct ChannelStats {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct DatasetStatistics {
  std::array<ChannelStats, 5> channels;
  // dominant stride period of x_l in frames, if a periodic structure exists
  std::optional<double> stride_period;
};

DatasetStatistics dataset_statistics(const ReferenceDataset& dataset);

}  // namespace romgait
