#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "romgait/binio.hpp"
#include "romgait/gaitdata.hpp"
#include "romgait/recorder.hpp"
#include "romgait/rng.hpp"

using namespace romgait;

namespace {

ReferenceDataset synthetic_dataset(int frames, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd data(frames, 5);
  for (int t = 0; t < frames; ++t) {
    data(t, 0) = 0.95 + 0.05 * std::sin(0.2 * t);
    data(t, 1) = 0.3 * std::sin(0.157 * t);
    data(t, 2) = -0.95 + 0.02 * rng.uniform();
    data(t, 3) = -0.3 * std::sin(0.157 * t);
    data(t, 4) = -0.95 + 0.02 * rng.uniform();
  }
  DatasetMeta meta;
  meta.teacher_checkpoint_id = "deadbeef";
  meta.target_speed = 1.0;
  meta.dt = 1.0 / 60.0;
  meta.normalization_height = 1.0;
  meta.recording_seed = seed;
  return ReferenceDataset(std::move(data), std::move(meta));
}

RomAction zero_controller(const RomObservation&) { return RomAction{}; }

}  // namespace

TEST_SUITE("gaitdata") {

TEST_CASE("a scripted symmetric standing pose records identical frames") {
  RomParams params;
  EpisodeConfig episode;
  episode.max_steps = 100;
  RomEnv env(params, episode);
  env.reset(0);
  // overwrite the seeded perturbations with the exact static equilibrium:
  // spring compression carries the body weight, feet directly below
  World& w = env.mutable_world();
  const double eq_len = params.rest_length - params.body_mass * 9.81 / params.stiffness;
  w.body(RomEnv::kBody).state.position = {0.0, eq_len};
  w.body(RomEnv::kBody).state.linear_velocity = {0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    w.body(RomEnv::kFootL + i).state.position = {0.0, 0.0};
    w.body(RomEnv::kFootL + i).state.linear_velocity = {0.0, 0.0};
  }
  env.refresh_from_world();

  const Eigen::MatrixXd frames = record_frames(env, zero_controller, 10);
  REQUIRE(frames.rows() == 10);
  for (int t = 0; t < 10; ++t) {
    CHECK(frames(t, 1) == 0.0);  // x_l stays exactly on the symmetry axis
    CHECK(frames(t, 3) == 0.0);  // x_r
    CHECK(frames(t, 0) == doctest::Approx(frames(0, 0)).epsilon(1e-9));
    CHECK(frames(t, 2) == doctest::Approx(frames(0, 2)).epsilon(1e-9));
  }
}

TEST_CASE("recording is deterministic in (config, controller, frames, seed)") {
  RomParams params;
  EpisodeConfig episode;
  const ReferenceDataset a = record_rollout(params, episode, zero_controller, 50, 7, "id");
  const ReferenceDataset b = record_rollout(params, episode, zero_controller, 50, 7, "id");
  const std::string pa = "/tmp/romgait_rec_a.rgd";
  const std::string pb = "/tmp/romgait_rec_b.rgd";
  a.save(pa);
  b.save(pb);
  std::ifstream fa(pa, std::ios::binary), fb(pb, std::ios::binary);
  const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ba == bb);
}

TEST_CASE("a falling rollout raises TeacherFellEarly") {
  RomParams params;
  EpisodeConfig episode;
  episode.fall_threshold = 0.8;
  // full one-sided hip torque shoves the mechanism over
  const RomController shove = [](const RomObservation&) {
    RomAction a;
    a.hip_torques = {1.0, 1.0};
    return a;
  };
  CHECK_THROWS_AS(record_rollout(params, episode, shove, 500, 3, "id"), TeacherFellEarly);
}

TEST_CASE("save/load round-trip is bit-exact") {
  const ReferenceDataset d = synthetic_dataset(64, 11);
  const std::string path = "/tmp/romgait_ds_roundtrip.rgd";
  d.save(path);
  const ReferenceDataset loaded = ReferenceDataset::load(path);
  REQUIRE(loaded.frame_count() == d.frame_count());
  for (Eigen::Index t = 0; t < d.frames().rows(); ++t) {
    for (int c = 0; c < 5; ++c) CHECK(loaded.frames()(t, c) == d.frames()(t, c));
  }
  CHECK(loaded.meta().teacher_checkpoint_id == d.meta().teacher_checkpoint_id);
  CHECK(loaded.meta().target_speed == d.meta().target_speed);
  CHECK(loaded.meta().dt == d.meta().dt);
  CHECK(loaded.meta().normalization_height == d.meta().normalization_height);
  CHECK(loaded.meta().recording_seed == d.meta().recording_seed);
}

TEST_CASE("corrupted frame bytes are rejected") {
  const ReferenceDataset d = synthetic_dataset(32, 5);
  const std::string path = "/tmp/romgait_ds_corrupt.rgd";
  d.save(path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(120);  // inside the frame section
    char byte;
    f.get(byte);
    f.seekp(120);
    f.put(static_cast<char>(byte ^ 0x5a));
  }
  CHECK_THROWS_AS(ReferenceDataset::load(path), ChecksumMismatch);
}

TEST_CASE("truncated files are rejected") {
  const ReferenceDataset d = synthetic_dataset(32, 5);
  const std::string path = "/tmp/romgait_ds_trunc.rgd";
  d.save(path);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  out.close();
  CHECK_THROWS_AS(ReferenceDataset::load(path), ChecksumMismatch);
  // losing the checksum itself
  std::ofstream out2(path, std::ios::binary | std::ios::trunc);
  out2.write(bytes.data(), 2);
  out2.close();
  CHECK_THROWS_AS(ReferenceDataset::load(path), TruncatedFile);
}

TEST_CASE("empty-frame files and unknown versions are rejected") {
  // handcrafted header with T = 0
  {
    BinaryWriter w;
    w.put_bytes("RGDT", 4);
    w.put_u32(1);
    w.put_u64(0);
    w.put_f64(1.0 / 60.0);
    w.put_string("{}");
    const std::string path = "/tmp/romgait_ds_empty.rgd";
    w.write_file_with_crc(path);
    CHECK_THROWS_AS(ReferenceDataset::load(path), EmptyDataset);
  }
  // bad version
  {
    BinaryWriter w;
    w.put_bytes("RGDT", 4);
    w.put_u32(99);
    w.put_u64(1);
    w.put_f64(1.0 / 60.0);
    w.put_string("{}");
    for (int c = 0; c < 5; ++c) w.put_f64(0.0);
    const std::string path = "/tmp/romgait_ds_badver.rgd";
    w.write_file_with_crc(path);
    CHECK_THROWS_AS(ReferenceDataset::load(path), FormatVersionUnknown);
  }
  // empty construction
  CHECK_THROWS_AS(ReferenceDataset(Eigen::MatrixXd(0, 5), DatasetMeta{}), EmptyDataset);
}

TEST_CASE("csv export carries the documented header and one row per frame") {
  const ReferenceDataset d = synthetic_dataset(20, 2);
  const std::string path = "/tmp/romgait_ds.csv";
  d.export_csv(path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,y_com,x_l,y_l,x_r,y_r");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 20);
}

TEST_CASE("statistics match a brute-force recomputation") {
  const ReferenceDataset d = synthetic_dataset(50, 17);
  const DatasetStatistics stats = dataset_statistics(d);
  for (int c = 0; c < 5; ++c) {
    double sum = 0.0, lo = 1e300, hi = -1e300;
    for (int t = 0; t < 50; ++t) {
      const double v = d.frames()(t, c);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = sum / 50.0;
    double sq = 0.0;
    for (int t = 0; t < 50; ++t) {
      const double dd = d.frames()(t, c) - mean;
      sq += dd * dd;
    }
    const auto& s = stats.channels[static_cast<std::size_t>(c)];
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.stddev == doctest::Approx(std::sqrt(sq / 50.0)).epsilon(1e-12));
    CHECK(s.min == doctest::Approx(lo));
    CHECK(s.max == doctest::Approx(hi));
  }
}

TEST_CASE("a pure sinusoid with period 40 frames is detected within one frame") {
  Eigen::MatrixXd data(400, 5);
  for (int t = 0; t < 400; ++t) {
    data(t, 0) = 1.0;
    data(t, 1) = 0.4 * std::sin(2.0 * M_PI * t / 40.0);
    data(t, 2) = -0.9;
    data(t, 3) = -0.4 * std::sin(2.0 * M_PI * t / 40.0);
    data(t, 4) = -0.9;
  }
  const ReferenceDataset d(std::move(data), DatasetMeta{});
  const DatasetStatistics stats = dataset_statistics(d);
  REQUIRE(stats.stride_period.has_value());
  CHECK(std::abs(*stats.stride_period - 40.0) <= 1.0);
}

TEST_CASE("a constant dataset has zero spread and no period") {
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(30, 5);
  data.col(0).setConstant(1.0);
  data.col(2).setConstant(-1.0);
  data.col(4).setConstant(-1.0);
  const ReferenceDataset d(std::move(data), DatasetMeta{});
  const DatasetStatistics stats = dataset_statistics(d);
  for (const auto& ch : stats.channels) CHECK(ch.stddev == 0.0);
  CHECK(!stats.stride_period.has_value());
}

TEST_CASE("recorded frames satisfy the feature invariants") {
  RomParams params;
  EpisodeConfig episode;
  const ReferenceDataset d = record_rollout(params, episode, zero_controller, 100, 13, "id");
  for (Eigen::Index t = 0; t < d.frames().rows(); ++t) {
    for (int c = 0; c < 5; ++c) {
      CHECK(std::isfinite(d.frames()(t, c)));
      CHECK(std::abs(d.frames()(t, c)) < 10.0);
    }
  }
}

}  // TEST_SUITE
