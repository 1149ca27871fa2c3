#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "att/arch.hpp"
#include "att/errors.hpp"
#include "att/matrix.hpp"
#include "att/nn.hpp"
#include "att/parallel.hpp"
#include "att/rng.hpp"
#include "att/synth.hpp"

namespace att {

struct EvalConfig {
  std::vector<Architecture> archs;
  std::size_t n_seeds = 5;
  std::size_t train_steps = 100;
  bool use_learned_lr = true;
  double lr_override = 0.01;  // used when use_learned_lr is false
  LabeledBatch test_set;
  std::uint64_t seed = 0;
};

struct ArchEval {
  Architecture arch;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // population std over per_seed_acc
  std::vector<double> per_seed_acc;
  std::vector<bool> per_seed_diverged;
};

struct EvalResult {
  std::vector<ArchEval> per_arch;
};

// Trains freshly initialized networks on the synthetic set (full-batch SGD,
// fixed step budget) and measures test accuracy. A seed whose training goes
// non-finite scores 0 and is flagged.
inline EvalResult evaluate(const SyntheticDataset& synth, const EvalConfig& config,
                           std::size_t jobs = 1) {
  if (config.n_seeds < 1) throw ConfigError("eval.n_seeds", "must be >= 1");
  if (config.train_steps < 1) throw ConfigError("eval.train_steps", "must be >= 1");
  const double lr = config.use_learned_lr ? synth.lr_student : config.lr_override;
  const LabeledBatch train = synth.as_batch();

  EvalResult result;
  result.per_arch.reserve(config.archs.size());
  for (std::size_t a = 0; a < config.archs.size(); ++a) {
    const Architecture& arch = config.archs[a];
    if (arch.input_dim != synth.features.cols) {
      throw DimensionError("evaluate: arch input_dim != synth feature width");
    }
    if (arch.num_classes != synth.num_classes()) {
      throw DimensionError("evaluate: arch num_classes != synth class count");
    }
    if (config.test_set.features.cols != arch.input_dim) {
      throw DimensionError("evaluate: test set width != arch input_dim");
    }

    ArchEval ae;
    ae.arch = arch;
    ae.per_seed_acc.assign(config.n_seeds, 0.0);
    ae.per_seed_diverged.assign(config.n_seeds, false);

    std::vector<char> diverged(config.n_seeds, 0);
    parallel_for(config.n_seeds, jobs, [&](std::size_t s) {
      ParamVector theta =
          init_params(arch, derive_seed(config.seed, seed_tag::kEval, a, s));
      bool bad = false;
      for (std::size_t step = 0; step < config.train_steps; ++step) {
        theta = sgd_step(theta, grad(arch, theta, train), lr);
        if (!all_finite(theta)) {
          bad = true;
          break;
        }
      }
      if (bad) {
        diverged[s] = 1;
      } else {
        ae.per_seed_acc[s] = accuracy(arch, theta, config.test_set);
      }
    });
    for (std::size_t s = 0; s < config.n_seeds; ++s) ae.per_seed_diverged[s] = diverged[s] != 0;

    double sum = 0.0;
    for (double acc : ae.per_seed_acc) sum += acc;
    ae.mean_acc = sum / static_cast<double>(config.n_seeds);
    double var = 0.0;
    for (double acc : ae.per_seed_acc) {
      const double d = acc - ae.mean_acc;
      var += d * d;
    }
    ae.std_acc = std::sqrt(var / static_cast<double>(config.n_seeds));
    result.per_arch.push_back(std::move(ae));
  }
  return result;
}

// Balanced random real subset wrapped as a (non-learnable) synthetic dataset.
inline SyntheticDataset random_subset_baseline(const LabeledBatch& dataset, std::size_t ipc,
                                               std::uint64_t seed, double lr_init) {
  const std::size_t num_classes = [&] {
    const int m = max_label(dataset.labels);
    if (m < 0) throw DimensionError("random_subset_baseline: dataset has no labels");
    return static_cast<std::size_t>(m) + 1;
  }();
  return init_synth(ipc, num_classes, dataset.features.cols, SynthInit::RealSample, dataset,
                    lr_init, seed);
}

}  // namespace att
