#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "att/errors.hpp"
#include "att/matrix.hpp"
#include "att/rng.hpp"

namespace att {

// Learnable synthetic dataset: features and the student step size are trained,
// labels are fixed and balanced. Rows are grouped by class, `ipc` consecutive
// rows per class in ascending class order, so labels[r] = r / ipc.
struct SyntheticDataset {
  Matrix features;          // (ipc * num_classes) x input_dim
  std::vector<int> labels;  // fixed, balanced
  double lr_student = 0.0;  // trainable; <= 0 marks a diverged run
  std::size_t ipc = 0;

  std::size_t num_classes() const { return ipc == 0 ? 0 : labels.size() / ipc; }

  LabeledBatch as_batch() const { return {features, labels}; }

  bool operator==(const SyntheticDataset&) const = default;
};

enum class SynthInit { Noise, RealSample };

inline std::vector<int> balanced_labels(std::size_t ipc, std::size_t num_classes) {
  std::vector<int> labels(ipc * num_classes);
  for (std::size_t r = 0; r < labels.size(); ++r) labels[r] = static_cast<int>(r / ipc);
  return labels;
}

// Initial synthetic dataset: unit Gaussian noise, or ipc random real samples
// per class drawn without replacement.
inline SyntheticDataset init_synth(std::size_t ipc, std::size_t num_classes,
                                   std::size_t input_dim, SynthInit mode,
                                   const LabeledBatch& dataset, double lr_init,
                                   std::uint64_t seed) {
  if (ipc < 1) throw ConfigError("ipc", "must be >= 1");
  SyntheticDataset synth;
  synth.ipc = ipc;
  synth.labels = balanced_labels(ipc, num_classes);
  synth.lr_student = lr_init;
  synth.features = Matrix(ipc * num_classes, input_dim);

  Rng rng(derive_seed(seed, seed_tag::kSynthInit));
  if (mode == SynthInit::Noise) {
    for (double& x : synth.features.data) x = rng.normal();
    return synth;
  }

  if (dataset.features.cols != input_dim) {
    throw DimensionError("init_synth: dataset feature width != input_dim");
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.labels[i] == static_cast<int>(c)) pool.push_back(i);
    }
    if (pool.size() < ipc) {
      throw InsufficientSamplesError("class " + std::to_string(c) + " has " +
                                     std::to_string(pool.size()) + " samples, need " +
                                     std::to_string(ipc));
    }
    rng.shuffle(pool);
    for (std::size_t k = 0; k < ipc; ++k) {
      const auto src = dataset.features.row(pool[k]);
      auto dst = synth.features.row(c * ipc + k);
      for (std::size_t d = 0; d < input_dim; ++d) dst[d] = src[d];
    }
  }
  return synth;
}

}  // namespace att
