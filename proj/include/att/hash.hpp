#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "att/matrix.hpp"
#include "att/rng.hpp"

namespace att {

// CRC-32 (IEEE, reflected, poly 0xEDB88320), streamable.
class Crc32 {
 public:
  void update(std::span<const std::uint8_t> bytes) {
    for (std::uint8_t b : bytes) {
      crc_ = table()[(crc_ ^ b) & 0xffu] ^ (crc_ >> 8);
    }
  }

  void update(const void* p, std::size_t n) {
    update(std::span(static_cast<const std::uint8_t*>(p), n));
  }

  std::uint32_t value() const { return crc_ ^ 0xffffffffu; }

 private:
  static const std::array<std::uint32_t, 256>& table() {
    static const std::array<std::uint32_t, 256> t = [] {
      std::array<std::uint32_t, 256> out{};
      for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        out[i] = c;
      }
      return out;
    }();
    return t;
  }

  std::uint32_t crc_ = 0xffffffffu;
};

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  Crc32 c;
  c.update(bytes);
  return c.value();
}

using Fingerprint = std::array<std::uint8_t, 32>;

// 256-bit content fingerprint: four independent mixing lanes over 8-byte
// chunks. Not cryptographic; used only to detect accidental dataset mismatch.
class Fingerprint256 {
 public:
  Fingerprint256() : lanes_{0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL,
                            0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL} {}

  void update(const void* p, std::size_t n) {
    auto* bytes = static_cast<const std::uint8_t*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      buf_ |= static_cast<std::uint64_t>(bytes[i]) << (8 * buf_len_);
      if (++buf_len_ == 8) flush_chunk();
    }
    total_ += n;
  }

  Fingerprint digest() const {
    Fingerprint256 copy = *this;
    if (copy.buf_len_ > 0) copy.flush_chunk();
    Fingerprint out{};
    for (std::size_t lane = 0; lane < 4; ++lane) {
      const std::uint64_t h = mix64(copy.lanes_[lane] ^ (copy.total_ * kLaneSalt[lane]));
      for (std::size_t b = 0; b < 8; ++b) {
        out[lane * 8 + b] = static_cast<std::uint8_t>(h >> (8 * b));
      }
    }
    return out;
  }

 private:
  static constexpr std::uint64_t kLaneSalt[4] = {0x9e3779b97f4a7c15ULL, 0xc2b2ae3d27d4eb4fULL,
                                                 0x165667b19e3779f9ULL, 0x27d4eb2f165667c5ULL};

  void flush_chunk() {
    for (std::size_t lane = 0; lane < 4; ++lane) {
      lanes_[lane] = mix64(lanes_[lane] ^ (buf_ * kLaneSalt[lane]));
    }
    buf_ = 0;
    buf_len_ = 0;
  }

  std::uint64_t lanes_[4];
  std::uint64_t buf_ = 0;
  std::size_t buf_len_ = 0;
  std::uint64_t total_ = 0;
};

// Fingerprint of a dataset's content (features then labels, little-endian).
inline Fingerprint dataset_fingerprint(const LabeledBatch& batch) {
  Fingerprint256 fp;
  for (double x : batch.features.data) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    std::uint8_t le[8];
    for (int b = 0; b < 8; ++b) le[b] = static_cast<std::uint8_t>(bits >> (8 * b));
    fp.update(le, 8);
  }
  for (int l : batch.labels) {
    const auto u = static_cast<std::uint32_t>(l);
    std::uint8_t le[4];
    for (int b = 0; b < 4; ++b) le[b] = static_cast<std::uint8_t>(u >> (8 * b));
    fp.update(le, 4);
  }
  return fp.digest();
}

inline std::string hex_string(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

}  // namespace att
