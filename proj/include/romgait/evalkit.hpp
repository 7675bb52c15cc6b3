#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "romgait/gaitdata.hpp"

namespace romgait {

// Channel naming follows the humanoid-gait convention: our planar "foot y"
// is reported as the foot Z channel and the root height as pelvis Y.
inline constexpr std::array<const char*, 5> kChannelNames = {"pelvis_y", "lfoot_x", "lfoot_z",
                                                             "rfoot_x", "rfoot_z"};

enum class Alignment { none, phase };

// Per-channel mean squared error over the overlapping window
// min(T_ref, T_rollout). Phase alignment first shifts the rollout by the lag
// maximizing cross-correlation of the lfoot_x channel.
std::array<double, 5> aligned_mse(const ReferenceDataset& reference,
                                  const ReferenceDataset& rollout, Alignment alignment);

struct MseReport {
  std::array<double, 5> baseline_mse{};
  std::array<double, 5> student_mse{};
  // reduction = 100 * (baseline - student) / baseline; absent when the
  // baseline MSE is zero on that channel
  std::array<std::optional<double>, 5> reduction_pct{};
  std::optional<double> average_reduction_pct;
  // populated by multi-episode evaluation
  int episodes = 1;
  std::array<double, 5> baseline_mse_std{};
  std::array<double, 5> student_mse_std{};

  std::string to_json() const;
};

// Reduction arithmetic from already-computed per-channel MSEs.
MseReport make_mse_report(const std::array<double, 5>& baseline_mse,
                          const std::array<double, 5>& student_mse);

// Per-channel MSE of both policies against the reference, plus reductions.
MseReport mse_report(const ReferenceDataset& reference, const ReferenceDataset& student_rollout,
                     const ReferenceDataset& baseline_rollout,
                     Alignment alignment = Alignment::none);

// Writes per-channel time-series CSVs, a wide overlay CSV and per-rollout
// MSEs (mse.json) into out_dir. Rollouts are (name, dataset) pairs; with no
// rollouts only the reference series is exported.
void export_comparison(const ReferenceDataset& reference,
                       const std::vector<std::pair<std::string, ReferenceDataset>>& rollouts,
                       const std::string& out_dir);

}  // namespace romgait
