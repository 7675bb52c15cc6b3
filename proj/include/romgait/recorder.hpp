#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "romgait/gaitdata.hpp"
#include "romgait/ppo.hpp"
#include "romgait/rom_env.hpp"

namespace romgait {

using RomController = std::function<RomAction(const RomObservation&)>;

// Steps a prepared environment under a controller, one normalized gait
// feature per control step. Throws TeacherFellEarly if the mechanism falls
// before `frames` steps are recorded.
Eigen::MatrixXd record_frames(RomEnv& env, const RomController& controller, std::int64_t frames);

// Seeds a fresh episode and records from it.
ReferenceDataset record_rollout(const RomParams& params, const EpisodeConfig& episode,
                                const RomController& controller, std::int64_t frames,
                                std::uint64_t seed, const std::string& checkpoint_id);

// Loads a teacher checkpoint and records its deterministic rollout.
ReferenceDataset record_reference(const std::string& checkpoint_path, const RomParams& params,
                                  const EpisodeConfig& episode, std::int64_t frames,
                                  std::uint64_t seed);

}  // namespace romgait
