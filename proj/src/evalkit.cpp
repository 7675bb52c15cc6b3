#include "romgait/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "romgait/errors.hpp"

namespace romgait {

namespace {

// MSE per channel of ref[t] vs roll[t + lag] over the overlap window.
std::array<double, 5> mse_with_lag(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& roll,
                                   long lag) {
  const long t_ref0 = std::max(0L, -lag);
  const long t_roll0 = std::max(0L, lag);
  const long n = std::min(ref.rows() - t_ref0, roll.rows() - t_roll0);
  std::array<double, 5> mse{};
  if (n <= 0) return mse;
  for (int c = 0; c < 5; ++c) {
    double acc = 0.0;
    for (long t = 0; t < n; ++t) {
      const double d = ref(t_ref0 + t, c) - roll(t_roll0 + t, c);
      acc += d * d;
    }
    mse[static_cast<std::size_t>(c)] = acc / static_cast<double>(n);
  }
  return mse;
}

long best_phase_lag(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& roll) {
  const long window = std::min(ref.rows(), roll.rows());
  const long max_lag = window / 4;
  Eigen::VectorXd a = ref.col(1);
  Eigen::VectorXd b = roll.col(1);
  a.array() -= a.mean();
  b.array() -= b.mean();

  long best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  // scan 0, 1, -1, 2, -2, ... so ties prefer the smallest |lag|
  for (long k = 0; k <= max_lag; ++k) {
    for (const long lag : {k, -k}) {
      if (lag == -k && k == 0) continue;
      const long t_ref0 = std::max(0L, -lag);
      const long t_roll0 = std::max(0L, lag);
      const long n = std::min(a.size() - t_ref0, b.size() - t_roll0);
      if (n <= 1) continue;
      double acc = 0.0;
      for (long t = 0; t < n; ++t) acc += a(t_ref0 + t) * b(t_roll0 + t);
      const double score = acc / static_cast<double>(n);
      if (score > best_score) {
        best_score = score;
        best = lag;
      }
    }
  }
  return best;
}

}  // namespace

std::array<double, 5> aligned_mse(const ReferenceDataset& reference,
                                  const ReferenceDataset& rollout, Alignment alignment) {
  if (reference.frame_count() < 1 || rollout.frame_count() < 1) throw EmptyDataset();
  long lag = 0;
  if (alignment == Alignment::phase) lag = best_phase_lag(reference.frames(), rollout.frames());
  return mse_with_lag(reference.frames(), rollout.frames(), lag);
}

MseReport make_mse_report(const std::array<double, 5>& baseline_mse,
                          const std::array<double, 5>& student_mse) {
  MseReport r;
  r.baseline_mse = baseline_mse;
  r.student_mse = student_mse;
  double sum = 0.0;
  int defined = 0;
  for (std::size_t c = 0; c < 5; ++c) {
    if (baseline_mse[c] > 0.0) {
      const double red = 100.0 * (baseline_mse[c] - student_mse[c]) / baseline_mse[c];
      r.reduction_pct[c] = red;
      sum += red;
      ++defined;
    }
  }
  if (defined > 0) r.average_reduction_pct = sum / static_cast<double>(defined);
  return r;
}

MseReport mse_report(const ReferenceDataset& reference, const ReferenceDataset& student_rollout,
                     const ReferenceDataset& baseline_rollout, Alignment alignment) {
  return make_mse_report(aligned_mse(reference, baseline_rollout, alignment),
                         aligned_mse(reference, student_rollout, alignment));
}

std::string MseReport::to_json() const {
  nlohmann::json j;
  j["channel_convention"] =
      "planar mapping: pelvis_y = root height, foot z = planar foot y; features "
      "normalized by each mechanism's nominal standing height";
  j["episodes"] = episodes;
  for (std::size_t c = 0; c < 5; ++c) {
    nlohmann::json ch;
    ch["baseline_mse"] = baseline_mse[c];
    ch["student_mse"] = student_mse[c];
    if (episodes > 1) {
      ch["baseline_mse_std"] = baseline_mse_std[c];
      ch["student_mse_std"] = student_mse_std[c];
    }
    if (reduction_pct[c].has_value()) {
      ch["reduction_pct"] = *reduction_pct[c];
    } else {
      ch["reduction_pct"] = "n/a";
    }
    j["channels"][kChannelNames[c]] = ch;
  }
  if (average_reduction_pct.has_value()) {
    j["average_reduction_pct"] = *average_reduction_pct;
  } else {
    j["average_reduction_pct"] = "n/a";
  }
  return j.dump(2);
}

void export_comparison(const ReferenceDataset& reference,
                       const std::vector<std::pair<std::string, ReferenceDataset>>& rollouts,
                       const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoFailure("cannot create " + out_dir);

  long window = reference.frame_count();
  for (const auto& [name, ds] : rollouts) window = std::min(window, ds.frame_count());

  char buf[64];
  for (int c = 0; c < 5; ++c) {
    const std::string path =
        out_dir + "/cmp_" + kChannelNames[static_cast<std::size_t>(c)] + ".csv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path);
    out << "t,reference";
    for (const auto& [name, ds] : rollouts) out << "," << name;
    out << "\n";
    for (long t = 0; t < window; ++t) {
      out << t;
      std::snprintf(buf, sizeof(buf), ",%.17g", reference.frames()(t, c));
      out << buf;
      for (const auto& [name, ds] : rollouts) {
        std::snprintf(buf, sizeof(buf), ",%.17g", ds.frames()(t, c));
        out << buf;
      }
      out << "\n";
    }
  }

  {
    const std::string path = out_dir + "/overlay.csv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path);
    out << "t";
    for (int c = 0; c < 5; ++c) out << ",reference_" << kChannelNames[static_cast<std::size_t>(c)];
    for (const auto& [name, ds] : rollouts) {
      for (int c = 0; c < 5; ++c) out << "," << name << "_" << kChannelNames[static_cast<std::size_t>(c)];
    }
    out << "\n";
    for (long t = 0; t < window; ++t) {
      out << t;
      for (int c = 0; c < 5; ++c) {
        std::snprintf(buf, sizeof(buf), ",%.17g", reference.frames()(t, c));
        out << buf;
      }
      for (const auto& [name, ds] : rollouts) {
        for (int c = 0; c < 5; ++c) {
          std::snprintf(buf, sizeof(buf), ",%.17g", ds.frames()(t, c));
          out << buf;
        }
      }
      out << "\n";
    }
  }

  {
    nlohmann::json j;
    for (const auto& [name, ds] : rollouts) {
      const auto mse = aligned_mse(reference, ds, Alignment::none);
      nlohmann::json m;
      for (std::size_t c = 0; c < 5; ++c) m[kChannelNames[c]] = mse[c];
      j[name] = m;
    }
    const std::string path = out_dir + "/mse.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path);
    out << j.dump(2) << "\n";
  }
}

}  // namespace romgait
