#pragma once

// Trajectory buffer file format "ATTB", and the synthetic dataset format
// "ATTS" in the same style. Both are little-endian with a trailing CRC32 over
// all preceding bytes.
//
// ATTB: magic "ATTB", version u16=1, kind u8, input_dim u32, hidden_dim u32,
//       num_classes u32, expert_count u32, M u32, param_count u64,
//       step_size f64, batch_size u32, steps_per_epoch u32,
//       dataset_fingerprint (32 bytes), then per expert: seed u64 followed by
//       (M+1)*param_count f64 values; trailing CRC32.
//
// ATTS: magic "ATTS", version u16=1, input_dim u32, num_classes u32, ipc u32,
//       lr_student f64, dataset_fingerprint (32 bytes), features
//       (ipc*num_classes x input_dim) f64 row-major, labels u32 per row;
//       trailing CRC32.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "att/binio.hpp"
#include "att/errors.hpp"
#include "att/hash.hpp"
#include "att/synth.hpp"
#include "att/trajectory.hpp"

namespace att {

inline constexpr std::uint16_t kBufferFormatVersion = 1;
inline constexpr std::uint16_t kSynthFormatVersion = 1;

namespace detail {

inline void check_magic(binio::Reader& r, const char (&magic)[5], const std::string& what) {
  const auto got = r.take(4);
  for (int i = 0; i < 4; ++i) {
    if (got[i] != static_cast<std::uint8_t>(magic[i])) {
      throw MagicMismatchError(what + ": bad magic, not a " + magic + " file");
    }
  }
}

inline void check_version(std::uint16_t got, std::uint16_t want, const std::string& what) {
  if (got != want) {
    throw VersionMismatchError(what + ": unsupported version " + std::to_string(got) +
                               " (expected " + std::to_string(want) + ")");
  }
}

inline void check_crc(const std::vector<std::uint8_t>& bytes, binio::Reader& r,
                      const std::string& what) {
  const std::size_t payload_end = r.position();
  const std::uint32_t stored = r.u32();
  const std::uint32_t actual = crc32(std::span(bytes.data(), payload_end));
  if (stored != actual) throw ChecksumError(what + ": checksum mismatch");
  if (r.remaining() != 0) throw FormatError(what + ": trailing bytes after checksum");
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_buffer(const TrajectoryBuffer& buffer) {
  validate_buffer(buffer);
  const Architecture& arch = buffer.arch();
  const auto& meta = buffer.experts.front().train_meta;
  std::vector<std::uint8_t> out;
  out.reserve(64 + buffer.experts.size() * (buffer.epochs() + 1) * param_count(arch) * 8);

  binio::put_bytes(out, std::span(reinterpret_cast<const std::uint8_t*>("ATTB"), 4));
  binio::put_u16(out, kBufferFormatVersion);
  binio::put_u8(out, static_cast<std::uint8_t>(arch.kind));
  binio::put_u32(out, static_cast<std::uint32_t>(arch.input_dim));
  binio::put_u32(out, static_cast<std::uint32_t>(arch.hidden_dim));
  binio::put_u32(out, static_cast<std::uint32_t>(arch.num_classes));
  binio::put_u32(out, static_cast<std::uint32_t>(buffer.experts.size()));
  binio::put_u32(out, static_cast<std::uint32_t>(buffer.epochs()));
  binio::put_u64(out, static_cast<std::uint64_t>(param_count(arch)));
  binio::put_f64(out, meta.step_size);
  binio::put_u32(out, meta.batch_size);
  binio::put_u32(out, meta.steps_per_epoch);
  binio::put_bytes(out, std::span(buffer.dataset_fingerprint));
  for (const auto& expert : buffer.experts) {
    binio::put_u64(out, expert.seed);
    for (const auto& snapshot : expert.snapshots) {
      for (double v : snapshot.v) binio::put_f64(out, v);
    }
  }
  const std::uint32_t crc = crc32(std::span(out.data(), out.size()));
  binio::put_u32(out, crc);
  return out;
}

inline void save_buffer(const TrajectoryBuffer& buffer, const std::filesystem::path& path) {
  binio::write_file(path, serialize_buffer(buffer));
}

inline TrajectoryBuffer parse_buffer(const std::vector<std::uint8_t>& bytes,
                                     const std::string& what = "buffer") {
  binio::Reader r{std::span(bytes), what};
  detail::check_magic(r, "ATTB", what);
  detail::check_version(r.u16(), kBufferFormatVersion, what);

  Architecture arch;
  arch.kind = static_cast<ArchKind>(r.u8());
  arch.input_dim = r.u32();
  arch.hidden_dim = r.u32();
  arch.num_classes = r.u32();
  if (arch.kind != ArchKind::Linear && arch.kind != ArchKind::Mlp1H) {
    throw FormatError(what + ": unknown architecture kind");
  }
  validate_arch(arch);

  const std::uint32_t expert_count = r.u32();
  const std::uint32_t epochs = r.u32();
  const std::uint64_t n_params = r.u64();
  if (n_params != param_count(arch)) {
    throw FormatError(what + ": stored param_count does not match architecture");
  }
  TrainMeta meta;
  meta.step_size = r.f64();
  meta.batch_size = r.u32();
  meta.steps_per_epoch = r.u32();

  TrajectoryBuffer buffer;
  const auto fp = r.take(32);
  std::copy(fp.begin(), fp.end(), buffer.dataset_fingerprint.begin());

  buffer.experts.resize(expert_count);
  for (auto& expert : buffer.experts) {
    expert.arch = arch;
    expert.epochs = epochs;
    expert.train_meta = meta;
    expert.seed = r.u64();
    expert.snapshots.resize(epochs + 1);
    for (auto& snapshot : expert.snapshots) {
      snapshot = ParamVector(n_params);
      for (double& v : snapshot.v) v = r.f64();
    }
  }
  detail::check_crc(bytes, r, what);
  validate_buffer(buffer);
  return buffer;
}

inline TrajectoryBuffer load_buffer(const std::filesystem::path& path) {
  return parse_buffer(binio::read_file(path), path.filename().string());
}

inline std::vector<std::uint8_t> serialize_synth(const SyntheticDataset& synth,
                                                 const Fingerprint& fingerprint) {
  std::vector<std::uint8_t> out;
  binio::put_bytes(out, std::span(reinterpret_cast<const std::uint8_t*>("ATTS"), 4));
  binio::put_u16(out, kSynthFormatVersion);
  binio::put_u32(out, static_cast<std::uint32_t>(synth.features.cols));
  binio::put_u32(out, static_cast<std::uint32_t>(synth.num_classes()));
  binio::put_u32(out, static_cast<std::uint32_t>(synth.ipc));
  binio::put_f64(out, synth.lr_student);
  binio::put_bytes(out, std::span(fingerprint));
  for (double v : synth.features.data) binio::put_f64(out, v);
  for (int l : synth.labels) binio::put_u32(out, static_cast<std::uint32_t>(l));
  const std::uint32_t crc = crc32(std::span(out.data(), out.size()));
  binio::put_u32(out, crc);
  return out;
}

inline void save_synth(const SyntheticDataset& synth, const Fingerprint& fingerprint,
                       const std::filesystem::path& path) {
  binio::write_file(path, serialize_synth(synth, fingerprint));
}

struct LoadedSynth {
  SyntheticDataset synth;
  Fingerprint fingerprint{};
};

inline LoadedSynth parse_synth(const std::vector<std::uint8_t>& bytes,
                               const std::string& what = "synth") {
  binio::Reader r{std::span(bytes), what};
  detail::check_magic(r, "ATTS", what);
  detail::check_version(r.u16(), kSynthFormatVersion, what);

  LoadedSynth out;
  const std::uint32_t input_dim = r.u32();
  const std::uint32_t num_classes = r.u32();
  const std::uint32_t ipc = r.u32();
  out.synth.ipc = ipc;
  out.synth.lr_student = r.f64();
  const auto fp = r.take(32);
  std::copy(fp.begin(), fp.end(), out.fingerprint.begin());

  const std::size_t rows = static_cast<std::size_t>(ipc) * num_classes;
  out.synth.features = Matrix(rows, input_dim);
  for (double& v : out.synth.features.data) v = r.f64();
  out.synth.labels.resize(rows);
  for (int& l : out.synth.labels) l = static_cast<int>(r.u32());
  detail::check_crc(bytes, r, what);
  return out;
}

inline LoadedSynth load_synth(const std::filesystem::path& path) {
  return parse_synth(binio::read_file(path), path.filename().string());
}

}  // namespace att
