#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "att/arch.hpp"
#include "att/errors.hpp"
#include "att/hash.hpp"
#include "att/matrix.hpp"
#include "att/nn.hpp"
#include "att/rng.hpp"

namespace att {

struct TrainMeta {
  double step_size = 0.01;
  std::uint32_t batch_size = 64;
  std::uint32_t steps_per_epoch = 0;  // 0 = derive from dataset size
};

// Parameter snapshots from training one network on the real dataset.
// snapshots[0] is the initialization; snapshot j is the state after j epochs.
struct ExpertTrajectory {
  Architecture arch;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;  // M; snapshots has M+1 entries
  TrainMeta train_meta;
  std::vector<ParamVector> snapshots;
};

struct TrajectoryBuffer {
  std::vector<ExpertTrajectory> experts;
  Fingerprint dataset_fingerprint{};

  const Architecture& arch() const { return experts.front().arch; }
  std::size_t epochs() const { return experts.front().epochs; }
};

struct MatchPair {
  std::size_t expert_index = 0;
  std::size_t start_epoch = 0;
  ParamVector start;   // snapshot at start_epoch
  ParamVector target;  // snapshot at start_epoch + n_t
};

inline void validate_buffer(const TrajectoryBuffer& buffer) {
  if (buffer.experts.empty()) throw DimensionError("buffer has no experts");
  const Architecture& arch = buffer.experts.front().arch;
  const std::size_t m = buffer.experts.front().epochs;
  for (const auto& e : buffer.experts) {
    if (!(e.arch == arch)) throw DimensionError("buffer experts have mixed architectures");
    if (e.epochs != m) throw DimensionError("buffer experts have mixed trajectory lengths");
    if (e.snapshots.size() != m + 1) throw DimensionError("expert snapshot count != epochs + 1");
    for (const auto& s : e.snapshots) {
      if (s.size() != param_count(arch)) throw DimensionError("snapshot length mismatch");
      if (!all_finite(s)) throw DimensionError("buffer contains non-finite snapshot");
    }
  }
}

// Minibatch SGD on the real dataset, one snapshot per epoch. The per-epoch
// sample order is a permutation seeded from (seed, epoch), so the whole
// trajectory is a pure function of its inputs.
inline ExpertTrajectory train_expert(const Architecture& arch, const LabeledBatch& dataset,
                                     std::size_t epochs, TrainMeta meta, std::uint64_t seed) {
  validate_arch(arch);
  if (dataset.size() == 0) throw DimensionError("train_expert: dataset is empty");
  const std::size_t n = dataset.size();
  const std::size_t bs = std::min<std::size_t>(meta.batch_size, n);
  if (meta.steps_per_epoch == 0) {
    meta.steps_per_epoch = static_cast<std::uint32_t>((n + bs - 1) / bs);
  }

  ExpertTrajectory traj;
  traj.arch = arch;
  traj.seed = seed;
  traj.epochs = epochs;
  traj.train_meta = meta;
  traj.snapshots.reserve(epochs + 1);

  ParamVector theta = init_params(arch, seed);
  traj.snapshots.push_back(theta);

  std::vector<std::size_t> order(n);
  LabeledBatch minibatch;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(seed, seed_tag::kEpochShuffle, epoch));
    shuffle_rng.shuffle(order);

    for (std::size_t step = 0; step < meta.steps_per_epoch; ++step) {
      const std::size_t begin = (step * bs) % n;
      minibatch.features = Matrix(bs, dataset.features.cols);
      minibatch.labels.resize(bs);
      for (std::size_t j = 0; j < bs; ++j) {
        const std::size_t src = order[(begin + j) % n];
        const auto row = dataset.features.row(src);
        auto dst = minibatch.features.row(j);
        for (std::size_t d = 0; d < row.size(); ++d) dst[d] = row[d];
        minibatch.labels[j] = dataset.labels[src];
      }
      theta = sgd_step(theta, grad(arch, theta, minibatch), meta.step_size);
    }
    if (!all_finite(theta)) {
      throw DivergedError("train_expert: non-finite parameters after epoch", epoch + 1);
    }
    traj.snapshots.push_back(theta);
  }
  return traj;
}

// Uniform (expert, start_epoch) pair; target is n_t epochs past the start.
inline MatchPair sample_pair(const TrajectoryBuffer& buffer, std::size_t n_t,
                             std::size_t max_start_epoch, std::uint64_t rng_seed) {
  validate_buffer(buffer);
  const std::size_t m = buffer.epochs();
  if (max_start_epoch + n_t > m) {
    throw DimensionError("sample_pair: max_start_epoch + n_t exceeds trajectory length " +
                         std::to_string(m));
  }
  Rng rng(rng_seed);
  MatchPair pair;
  pair.expert_index = static_cast<std::size_t>(rng.below(buffer.experts.size()));
  pair.start_epoch = static_cast<std::size_t>(rng.below(max_start_epoch + 1));
  const auto& expert = buffer.experts[pair.expert_index];
  pair.start = expert.snapshots[pair.start_epoch];
  pair.target = expert.snapshots[pair.start_epoch + n_t];
  return pair;
}

}  // namespace att
