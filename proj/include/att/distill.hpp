#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "att/errors.hpp"
#include "att/matrix.hpp"
#include "att/meta_grad.hpp"
#include "att/rng.hpp"
#include "att/synth.hpp"
#include "att/trajectory.hpp"
#include "att/unroll.hpp"

namespace att {

enum class MatchMode { Att, Ftl };

struct MatchConfig {
  MatchMode mode = MatchMode::Att;
  std::size_t n_s = 1;             // student unroll bound
  std::size_t n_t = 1;             // expert epochs spanned by one target
  std::size_t max_start_epoch = 0;
  double lr_img = 0.1;             // step size for synthetic features
  double lr_sc = 1e-4;             // step size for the trainable student lr
  double lr_init = 0.01;           // initial student lr
  std::size_t iterations = 0;
  long gamma = 2;                  // mismatch tolerance used by diagnostics
  std::size_t ipc = 1;
  bool zca = false;
  std::uint64_t seed = 0;
};

struct IterationRecord {
  std::size_t iter = 0;
  std::size_t expert_index = 0;
  std::size_t start_epoch = 0;
  std::vector<double> distances;  // e_t for t = 0..n_s (empty if unavailable)
  std::size_t selected_t = 0;     // in {1..n_s}; 0 only on skipped/aborted records
  double loss = std::numeric_limits<double>::quiet_NaN();
  double lr_student_after = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
  bool skipped = false;  // degenerate pair, no update applied
};

struct DistillReport {
  MatchConfig config;
  std::vector<IterationRecord> records;
  SyntheticDataset final_synth;
};

using ReportSink = std::function<void(const IterationRecord&)>;

// Matching step: argmin of e_t over t in {1..n_s} (ties to the smallest t);
// t = 0 is excluded because matching the unmoved start carries no signal for
// the synthetic data. Fixed-length mode always picks n_s.
inline std::size_t select_step(const std::vector<double>& distances, MatchMode mode,
                               std::size_t n_s) {
  if (distances.size() != n_s + 1) {
    throw DimensionError("select_step: expected n_s + 1 distances");
  }
  if (mode == MatchMode::Ftl) return n_s;
  std::size_t best = 1;
  for (std::size_t t = 2; t <= n_s; ++t) {
    if (distances[t] < distances[best]) best = t;
  }
  return best;
}

// Outer loop: sample a pair, unroll the student, pick the matching step,
// backpropagate, and apply momentum-SGD updates to the features and the
// student lr. Momentum buffers persist across iterations (coefficient 0.5).
// Stops early when the loss turns non-finite or the student lr reaches zero
// or below; a degenerate pair is recorded and skipped, not fatal.
inline DistillReport distill(const MatchConfig& config, const TrajectoryBuffer& buffer,
                             SyntheticDataset synth, const ReportSink& sink = {}) {
  validate_buffer(buffer);
  const Architecture& arch = buffer.arch();
  if (config.max_start_epoch + config.n_t > buffer.epochs()) {
    throw DimensionError("distill: buffer too short for max_start_epoch + n_t");
  }
  if (synth.features.cols != arch.input_dim) {
    throw DimensionError("distill: synth feature width != architecture input_dim");
  }

  constexpr double kMomentum = 0.5;
  Matrix feat_momentum(synth.features.rows, synth.features.cols);
  double lr_momentum = 0.0;

  DistillReport report;
  report.config = config;
  report.records.reserve(config.iterations);

  auto emit = [&](IterationRecord&& record) {
    report.records.push_back(std::move(record));
    if (sink) sink(report.records.back());
  };

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const MatchPair pair = sample_pair(buffer, config.n_t, config.max_start_epoch,
                                       derive_seed(config.seed, seed_tag::kPairSample, iter));
    IterationRecord record;
    record.iter = iter;
    record.expert_index = pair.expert_index;
    record.start_epoch = pair.start_epoch;

    const double denom = squared_distance(pair.start, pair.target);
    if (denom <= 0.0) {
      record.skipped = true;
      emit(std::move(record));
      continue;
    }

    UnrollTape tape;
    try {
      tape = unroll(arch, pair.start, synth, config.n_s);
    } catch (const DivergedError&) {
      record.diverged = true;
      record.lr_student_after = synth.lr_student;
      emit(std::move(record));
      break;
    }

    record.distances = distance_trace(tape, pair.target);
    record.selected_t = select_step(record.distances, config.mode, config.n_s);
    record.loss = record.distances[record.selected_t] / denom;

    const MetaGradients grads = meta_gradients(tape, record.selected_t, pair.start, pair.target);

    for (std::size_t i = 0; i < feat_momentum.data.size(); ++i) {
      feat_momentum.data[i] = kMomentum * feat_momentum.data[i] + grads.d_features.data[i];
      synth.features.data[i] -= config.lr_img * feat_momentum.data[i];
    }
    lr_momentum = kMomentum * lr_momentum + grads.d_lr;
    synth.lr_student -= config.lr_sc * lr_momentum;

    record.lr_student_after = synth.lr_student;
    if (!std::isfinite(record.loss) || synth.lr_student <= 0.0 ||
        !all_finite(synth.features)) {
      record.diverged = true;
      emit(std::move(record));
      break;
    }
    emit(std::move(record));
  }

  report.final_synth = std::move(synth);
  return report;
}

inline bool report_diverged(const DistillReport& report) {
  return !report.records.empty() && report.records.back().diverged;
}

}  // namespace att
