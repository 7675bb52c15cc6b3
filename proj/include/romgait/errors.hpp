#pragma once

#include <stdexcept>
#include <string>

namespace romgait {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- physics ---
struct NonFiniteState : Error {
  explicit NonFiniteState(const std::string& msg) : Error("non-finite state: " + msg) {}
};
struct TorqueDimensionMismatch : Error {
  TorqueDimensionMismatch(std::size_t got, std::size_t want)
      : Error("torque vector has " + std::to_string(got) + " entries, world has " +
              std::to_string(want) + " actuators") {}
};
struct DegenerateLeg : Error {
  explicit DegenerateLeg(const std::string& msg) : Error("degenerate leg: " + msg) {}
};

// --- environments ---
struct SteppedAfterDone : Error {
  SteppedAfterDone() : Error("env_step called on a terminated episode") {}
};

// --- neural ---
struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg) : Error("dimension mismatch: " + msg) {}
};
struct NoCachedForward : Error {
  NoCachedForward() : Error("backward called without a preceding train-mode forward") {}
};
struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& msg) : Error("shape mismatch: " + msg) {}
};
struct NonFiniteGradient : Error {
  NonFiniteGradient() : Error("non-finite gradient passed to optimizer") {}
};
struct NonScalarOutput : Error {
  NonScalarOutput() : Error("input gradient requires a scalar-output network") {}
};
struct NonFiniteLoss : Error {
  explicit NonFiniteLoss(const std::string& msg) : Error("non-finite loss: " + msg) {}
};

// --- rl plumbing ---
struct LengthMismatch : Error {
  explicit LengthMismatch(const std::string& msg) : Error("length mismatch: " + msg) {}
};
struct EmptyBatch : Error {
  EmptyBatch() : Error("empty batch") {}
};

// --- datasets / files ---
struct TeacherFellEarly : Error {
  TeacherFellEarly(int step, int wanted)
      : Error("teacher fell at step " + std::to_string(step) + " of " + std::to_string(wanted)) {}
};
struct CheckpointVersionMismatch : Error {
  explicit CheckpointVersionMismatch(const std::string& msg)
      : Error("checkpoint version mismatch: " + msg) {}
};
struct FormatVersionUnknown : Error {
  explicit FormatVersionUnknown(const std::string& msg) : Error("unknown format version: " + msg) {}
};
struct ChecksumMismatch : Error {
  explicit ChecksumMismatch(const std::string& msg) : Error("checksum mismatch: " + msg) {}
};
struct TruncatedFile : Error {
  explicit TruncatedFile(const std::string& msg) : Error("truncated file: " + msg) {}
};
struct EmptyDataset : Error {
  EmptyDataset() : Error("dataset has no frames") {}
};
struct IoFailure : Error {
  explicit IoFailure(const std::string& msg) : Error("i/o failure: " + msg) {}
};

// --- evaluation ---
struct ZeroBaselineMse : Error {
  explicit ZeroBaselineMse(const std::string& channel)
      : Error("baseline MSE is zero on channel " + channel + ", reduction undefined") {}
};

// --- config / cli ---
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

}  // namespace romgait
