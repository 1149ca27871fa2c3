#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "att/distill.hpp"
#include "att/errors.hpp"
#include "att/parallel.hpp"
#include "att/rng.hpp"
#include "att/synth.hpp"
#include "att/trajectory.hpp"

namespace att {

// Per-interval counts of iterations whose best matching step sits at least
// gamma away from the fixed bound n_s. On a fixed-length run this measures the
// counterfactual: what the adaptive policy would have chosen from the same
// recorded traces.
struct AmpHistogram {
  std::size_t interval_size = 50;
  long gamma = 2;
  std::size_t n_s = 0;
  std::vector<std::size_t> counts;  // ceil(records / interval_size) entries
};

inline AmpHistogram amp_histogram(const DistillReport& report, long gamma,
                                  std::size_t interval_size = 50) {
  if (interval_size == 0) throw ConfigError("interval_size", "must be >= 1");
  if (gamma < 0) throw ConfigError("gamma", "must be >= 0");
  const std::size_t n_s = report.config.n_s;
  AmpHistogram hist;
  hist.interval_size = interval_size;
  hist.gamma = gamma;
  hist.n_s = n_s;
  const std::size_t n = report.records.size();
  hist.counts.assign((n + interval_size - 1) / interval_size, 0);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = report.records[i];
    if (rec.skipped) continue;  // degenerate pair: no trace, nothing to measure
    if (rec.distances.size() != n_s + 1) {
      throw MissingTraceError("amp_histogram: record " + std::to_string(rec.iter) +
                              " lacks a full distance trace (rerun with traces enabled)");
    }
    const std::size_t n_opt = select_step(rec.distances, MatchMode::Att, n_s);
    const long gap = static_cast<long>(n_s) - static_cast<long>(n_opt);
    const long abs_gap = gap < 0 ? -gap : gap;
    if (abs_gap >= gamma) ++hist.counts[i / interval_size];
  }
  return hist;
}

struct NoptTrace {
  std::vector<std::pair<std::size_t, std::size_t>> points;  // (iter, selected_t)
  double early_mean = 0.0;  // mean selected_t over the first 10% of points
  double late_mean = 0.0;   // ... and over the last 10%
};

inline NoptTrace nopt_trace(const DistillReport& report) {
  NoptTrace trace;
  for (const auto& rec : report.records) {
    if (rec.skipped || rec.selected_t == 0) continue;
    trace.points.emplace_back(rec.iter, rec.selected_t);
  }
  if (trace.points.empty()) return trace;
  const std::size_t n = trace.points.size();
  const std::size_t k = std::max<std::size_t>(1, n / 10);
  double early = 0.0;
  double late = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    early += static_cast<double>(trace.points[i].second);
    late += static_cast<double>(trace.points[n - 1 - i].second);
  }
  trace.early_mean = early / static_cast<double>(k);
  trace.late_mean = late / static_cast<double>(k);
  return trace;
}

enum class SweepParameter { LrImg, LrSc };

inline std::string to_string(SweepParameter p) {
  return p == SweepParameter::LrImg ? "lr_img" : "lr_sc";
}

struct StabilitySweepResult {
  SweepParameter parameter = SweepParameter::LrImg;
  std::vector<double> multipliers;
  std::vector<std::size_t> successes;  // one per multiplier, out of `repeats`
  std::size_t repeats = 20;
};

inline std::size_t count_buffer_classes(const TrajectoryBuffer& buffer) {
  return buffer.arch().num_classes;
}

// Repeats the full distillation under scaled hyperparameters with fresh seeds;
// a run counts as a success when it never diverged. Cells are independent and
// run in parallel.
inline StabilitySweepResult stability_sweep(const MatchConfig& base,
                                            const TrajectoryBuffer& buffer,
                                            const LabeledBatch& train, SynthInit init_mode,
                                            SweepParameter parameter,
                                            const std::vector<double>& multipliers,
                                            std::size_t repeats, std::size_t jobs = 1) {
  for (double m : multipliers) {
    if (!(m > 0.0)) throw ConfigError("multipliers", "must be positive");
  }
  StabilitySweepResult result;
  result.parameter = parameter;
  result.multipliers = multipliers;
  result.repeats = repeats;
  result.successes.assign(multipliers.size(), 0);
  if (repeats == 0 || multipliers.empty()) return result;

  const std::size_t num_classes = count_buffer_classes(buffer);
  std::vector<char> success(multipliers.size() * repeats, 0);
  parallel_for(multipliers.size() * repeats, jobs, [&](std::size_t cell) {
    const std::size_t mi = cell / repeats;
    const std::size_t rep = cell % repeats;
    MatchConfig config = base;
    config.seed = derive_seed(base.seed, seed_tag::kSweep, mi, rep);
    if (parameter == SweepParameter::LrImg) {
      config.lr_img *= multipliers[mi];
    } else {
      config.lr_sc *= multipliers[mi];
    }
    SyntheticDataset synth =
        init_synth(config.ipc, num_classes, buffer.arch().input_dim, init_mode, train,
                   config.lr_init, config.seed);
    const DistillReport report = distill(config, buffer, std::move(synth));
    success[cell] = report_diverged(report) ? 0 : 1;
  });
  for (std::size_t cell = 0; cell < success.size(); ++cell) {
    if (success[cell]) ++result.successes[cell / repeats];
  }
  return result;
}

}  // namespace att
