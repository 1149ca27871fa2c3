#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "att/errors.hpp"
#include "att/matrix.hpp"
#include "att/rng.hpp"

namespace att {

enum class Normalization { None, Standardize };

struct DatasetSpec {
  std::string name;  // blobs3 | moons2 | digits8x8 | idx
  std::string idx_images;
  std::string idx_labels;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;
  bool zca = false;
  double zca_epsilon = 1e-6;
  Normalization normalization = Normalization::None;
};

struct DatasetSplit {
  LabeledBatch train;
  LabeledBatch test;
  std::size_t num_classes = 0;
};

namespace toy {

// 3 Gaussian blobs in 2-D, centers on a circle of radius 3, std 1.1,
// 200 samples per class. The corpus is fixed; only the split varies.
inline LabeledBatch blobs3() {
  constexpr std::size_t kPerClass = 200;
  constexpr double kRadius = 3.0;
  constexpr double kStd = 1.1;
  LabeledBatch out;
  out.features = Matrix(3 * kPerClass, 2);
  out.labels.resize(3 * kPerClass);
  Rng rng(0x626c6f62ULL);  // fixed corpus seed
  std::size_t row = 0;
  for (int c = 0; c < 3; ++c) {
    const double angle = 2.0 * std::numbers::pi * c / 3.0;
    const double cx = kRadius * std::cos(angle);
    const double cy = kRadius * std::sin(angle);
    for (std::size_t i = 0; i < kPerClass; ++i, ++row) {
      out.features(row, 0) = cx + kStd * rng.normal();
      out.features(row, 1) = cy + kStd * rng.normal();
      out.labels[row] = c;
    }
  }
  return out;
}

// Two interleaved half-moons with Gaussian noise 0.1, 200 samples per class.
inline LabeledBatch moons2() {
  constexpr std::size_t kPerClass = 200;
  constexpr double kNoise = 0.1;
  LabeledBatch out;
  out.features = Matrix(2 * kPerClass, 2);
  out.labels.resize(2 * kPerClass);
  Rng rng(0x6d6f6f6eULL);
  std::size_t row = 0;
  for (std::size_t i = 0; i < kPerClass; ++i, ++row) {
    const double t = std::numbers::pi * static_cast<double>(i) / (kPerClass - 1);
    out.features(row, 0) = std::cos(t) + kNoise * rng.normal();
    out.features(row, 1) = std::sin(t) + kNoise * rng.normal();
    out.labels[row] = 0;
  }
  for (std::size_t i = 0; i < kPerClass; ++i, ++row) {
    const double t = std::numbers::pi * static_cast<double>(i) / (kPerClass - 1);
    out.features(row, 0) = 1.0 - std::cos(t) + kNoise * rng.normal();
    out.features(row, 1) = 0.5 - std::sin(t) + kNoise * rng.normal();
    out.labels[row] = 1;
  }
  return out;
}

// 8x8 digit glyphs (64 features in [0,1]), 50 jittered variants per class:
// the template shifted by up to one pixel plus clipped pixel noise.
inline LabeledBatch digits8x8() {
  static constexpr const char* kGlyphs[10] = {
      ".####..."
      "#....#.."
      "#...##.."
      "#..#.#.."
      "##...#.."
      "#....#.."
      ".####..."
      "........",
      "...#...."
      "..##...."
      ".#.#...."
      "...#...."
      "...#...."
      "...#...."
      ".#####.."
      "........",
      ".####..."
      "#....#.."
      ".....#.."
      "...##..."
      "..#....."
      ".#......"
      "######.."
      "........",
      ".####..."
      "#....#.."
      ".....#.."
      "..###..."
      ".....#.."
      "#....#.."
      ".####..."
      "........",
      "...##..."
      "..#.#..."
      ".#..#..."
      "#...#..."
      "######.."
      "....#..."
      "....#..."
      "........",
      "######.."
      "#......."
      "#####..."
      ".....#.."
      ".....#.."
      "#....#.."
      ".####..."
      "........",
      ".####..."
      "#......."
      "#......."
      "#####..."
      "#....#.."
      "#....#.."
      ".####..."
      "........",
      "######.."
      ".....#.."
      "....#..."
      "...#...."
      "..#....."
      "..#....."
      "..#....."
      "........",
      ".####..."
      "#....#.."
      "#....#.."
      ".####..."
      "#....#.."
      "#....#.."
      ".####..."
      "........",
      ".####..."
      "#....#.."
      "#....#.."
      ".#####.."
      ".....#.."
      ".....#.."
      ".####..."
      "........"};
  constexpr std::size_t kPerClass = 50;
  constexpr double kNoise = 0.15;
  LabeledBatch out;
  out.features = Matrix(10 * kPerClass, 64);
  out.labels.resize(10 * kPerClass);
  Rng rng(0x64696769ULL);
  std::size_t row = 0;
  for (int c = 0; c < 10; ++c) {
    for (std::size_t v = 0; v < kPerClass; ++v, ++row) {
      const int dr = static_cast<int>(rng.below(3)) - 1;
      const int dc = static_cast<int>(rng.below(3)) - 1;
      for (int r = 0; r < 8; ++r) {
        for (int col = 0; col < 8; ++col) {
          const int sr = r - dr;
          const int sc = col - dc;
          double px = 0.0;
          if (sr >= 0 && sr < 8 && sc >= 0 && sc < 8) {
            px = kGlyphs[c][sr * 8 + sc] == '#' ? 1.0 : 0.0;
          }
          px += kNoise * rng.normal();
          out.features(row, static_cast<std::size_t>(r * 8 + col)) = std::clamp(px, 0.0, 1.0);
        }
      }
      out.labels[row] = c;
    }
  }
  return out;
}

}  // namespace toy

inline std::size_t count_classes(const LabeledBatch& batch) {
  const int m = max_label(batch.labels);
  if (m < 0) throw DimensionError("dataset has no labels");
  return static_cast<std::size_t>(m) + 1;
}

// Label-stratified deterministic split: per class, a seeded shuffle then a
// round(fraction * count) prefix into train.
inline DatasetSplit split_dataset(const LabeledBatch& full, double train_fraction,
                                  std::uint64_t split_seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction", "must be in (0, 1)");
  }
  const std::size_t num_classes = count_classes(full);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < full.size(); ++i) {
      if (full.labels[i] == static_cast<int>(c)) pool.push_back(i);
    }
    if (pool.empty()) throw DimensionError("class " + std::to_string(c) + " is empty");
    Rng rng(derive_seed(split_seed, seed_tag::kSplit, c));
    rng.shuffle(pool);
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(pool.size())));
    for (std::size_t k = 0; k < pool.size(); ++k) {
      (k < n_train ? train_idx : test_idx).push_back(pool[k]);
    }
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto gather = [&full](const std::vector<std::size_t>& idx) {
    LabeledBatch out;
    out.features = Matrix(idx.size(), full.features.cols);
    out.labels.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto src = full.features.row(idx[k]);
      auto dst = out.features.row(k);
      std::copy(src.begin(), src.end(), dst.begin());
      out.labels[k] = full.labels[idx[k]];
    }
    return out;
  };
  return {gather(train_idx), gather(test_idx), num_classes};
}

// Per-feature standardization with train statistics applied to both splits.
inline void standardize(DatasetSplit& split) {
  const std::size_t d = split.train.features.cols;
  const auto n = static_cast<double>(split.train.features.rows);
  std::vector<double> mean(d, 0.0);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < split.train.features.rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += split.train.features(i, j);
  }
  for (double& m : mean) m /= n;
  for (std::size_t i = 0; i < split.train.features.rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = split.train.features(i, j) - mean[j];
      var[j] += c * c;
    }
  }
  for (double& v : var) v = std::sqrt(v / n + 1e-12);
  auto apply = [&](Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
      for (std::size_t j = 0; j < d; ++j) m(i, j) = (m(i, j) - mean[j]) / var[j];
    }
  };
  apply(split.train.features);
  apply(split.test.features);
}

inline void write_csv(const LabeledBatch& batch, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  for (std::size_t j = 0; j < batch.features.cols; ++j) out << "f" << j << ",";
  out << "label\n";
  out.precision(17);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.features.cols; ++j) out << batch.features(i, j) << ",";
    out << batch.labels[i] << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace att
