#pragma once

// IDX image/label files (big-endian, magic 0x00000803 / 0x00000801).
// Pixel (i, r, c) lives at byte offset 16 + i*rows*cols + r*cols + c; pixels
// are scaled to [0, 1] on load.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "att/binio.hpp"
#include "att/errors.hpp"
#include "att/matrix.hpp"

namespace att {

namespace detail {

inline std::uint32_t be_u32(binio::Reader& r) {
  auto b = r.take(4);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

inline void put_be_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace detail

inline LabeledBatch load_idx(const std::filesystem::path& images_path,
                             const std::filesystem::path& labels_path) {
  const auto image_bytes = binio::read_file(images_path);
  binio::Reader ir{std::span(image_bytes), images_path.filename().string()};
  if (detail::be_u32(ir) != 0x00000803u) {
    throw MagicMismatchError(images_path.string() + ": not an IDX image file");
  }
  const std::uint32_t count = detail::be_u32(ir);
  const std::uint32_t rows = detail::be_u32(ir);
  const std::uint32_t cols = detail::be_u32(ir);
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;

  LabeledBatch out;
  out.features = Matrix(count, pixels);
  for (std::size_t i = 0; i < count; ++i) {
    const auto raw = ir.take(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      out.features(i, p) = static_cast<double>(raw[p]) / 255.0;
    }
  }

  const auto label_bytes = binio::read_file(labels_path);
  binio::Reader lr{std::span(label_bytes), labels_path.filename().string()};
  if (detail::be_u32(lr) != 0x00000801u) {
    throw MagicMismatchError(labels_path.string() + ": not an IDX label file");
  }
  const std::uint32_t label_count = detail::be_u32(lr);
  if (label_count != count) {
    throw FormatError("IDX image/label count mismatch: " + std::to_string(count) + " vs " +
                      std::to_string(label_count));
  }
  out.labels.resize(count);
  const auto raw = lr.take(count);
  for (std::size_t i = 0; i < count; ++i) out.labels[i] = raw[i];
  return out;
}

inline const std::vector<int>& labels_range_checked(const LabeledBatch& batch) {
  for (int l : batch.labels) {
    if (l < 0 || l > 255) throw LabelError("IDX labels must fit in a byte");
  }
  return batch.labels;
}

// Writes u8 pixel data; features are expected in [0, 1] and are quantized.
inline void save_idx(const LabeledBatch& batch, std::uint32_t rows, std::uint32_t cols,
                     const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path) {
  if (static_cast<std::size_t>(rows) * cols != batch.features.cols) {
    throw DimensionError("save_idx: rows*cols != feature width");
  }
  std::vector<std::uint8_t> images;
  detail::put_be_u32(images, 0x00000803u);
  detail::put_be_u32(images, static_cast<std::uint32_t>(batch.size()));
  detail::put_be_u32(images, rows);
  detail::put_be_u32(images, cols);
  for (double v : batch.features.data) {
    const double scaled = v * 255.0;
    const double clamped = scaled < 0.0 ? 0.0 : (scaled > 255.0 ? 255.0 : scaled);
    images.push_back(static_cast<std::uint8_t>(clamped + 0.5));
  }
  binio::write_file(images_path, images);

  std::vector<std::uint8_t> labels;
  detail::put_be_u32(labels, 0x00000801u);
  detail::put_be_u32(labels, static_cast<std::uint32_t>(batch.size()));
  for (int l : labels_range_checked(batch)) labels.push_back(static_cast<std::uint8_t>(l));
  binio::write_file(labels_path, labels);
}

}  // namespace att
