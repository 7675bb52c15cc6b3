#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "romgait/binio.hpp"
#include "romgait/errors.hpp"

namespace romgait {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[5] = "RGCK";

enum class CheckpointKind : std::uint32_t { teacher = 1, student = 2, discriminator = 3 };

inline void write_checkpoint_header(BinaryWriter& w, CheckpointKind kind, std::uint64_t steps,
                                    const std::string& json_header) {
  w.put_bytes(kCheckpointMagic, 4);
  w.put_u32(kCheckpointVersion);
  w.put_u32(static_cast<std::uint32_t>(kind));
  w.put_u64(steps);
  w.put_string(json_header);
}

struct CheckpointHeader {
  CheckpointKind kind;
  std::uint64_t steps = 0;
  std::string json;
};

inline CheckpointHeader read_checkpoint_header(BinaryReader& r, CheckpointKind expected) {
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::string(magic, 4) != "RGCK") throw FormatVersionUnknown("not a checkpoint file");
  const std::uint32_t version = r.get_u32();
  if (version != kCheckpointVersion) {
    throw FormatVersionUnknown("checkpoint version " + std::to_string(version));
  }
  CheckpointHeader h;
  h.kind = static_cast<CheckpointKind>(r.get_u32());
  if (h.kind != expected) {
    throw CheckpointVersionMismatch("expected kind " +
                                    std::to_string(static_cast<std::uint32_t>(expected)) +
                                    ", found " + std::to_string(static_cast<std::uint32_t>(h.kind)));
  }
  h.steps = r.get_u64();
  h.json = r.get_string();
  return h;
}

inline void save_vector(BinaryWriter& w, const Eigen::VectorXd& v) {
  w.put_u64(static_cast<std::uint64_t>(v.size()));
  w.put_f64_array(v.data(), static_cast<std::size_t>(v.size()));
}

inline Eigen::VectorXd load_vector(BinaryReader& r) {
  const std::uint64_t n = r.get_u64();
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  r.get_f64_array(v.data(), n);
  return v;
}

}  // namespace romgait
