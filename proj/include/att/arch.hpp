#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "att/errors.hpp"
#include "att/matrix.hpp"

namespace att {

enum class ArchKind : std::uint8_t { Linear = 0, Mlp1H = 1 };

// Network shape descriptor. The flat parameter layout is fixed and stable:
//   Linear: W [num_classes x input_dim] row-major, then b [num_classes].
//   Mlp1H:  W1 [hidden_dim x input_dim], b1 [hidden_dim],
//           W2 [num_classes x hidden_dim], b2 [num_classes].
// Mlp1H uses ReLU on the hidden layer; that is the only activation.
struct Architecture {
  ArchKind kind = ArchKind::Linear;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;  // Mlp1H only; 0 for Linear
  std::size_t num_classes = 0;

  bool operator==(const Architecture&) const = default;
};

inline Architecture make_linear(std::size_t input_dim, std::size_t num_classes) {
  return {ArchKind::Linear, input_dim, 0, num_classes};
}

inline Architecture make_mlp1h(std::size_t input_dim, std::size_t hidden_dim,
                               std::size_t num_classes) {
  return {ArchKind::Mlp1H, input_dim, hidden_dim, num_classes};
}

inline void validate_arch(const Architecture& a) {
  if (a.input_dim < 1) throw DimensionError("architecture: input_dim must be >= 1");
  if (a.num_classes < 2) throw DimensionError("architecture: num_classes must be >= 2");
  if (a.kind == ArchKind::Mlp1H && a.hidden_dim < 1) {
    throw DimensionError("architecture: hidden_dim must be >= 1 for mlp1h");
  }
  if (a.kind == ArchKind::Linear && a.hidden_dim != 0) {
    throw DimensionError("architecture: linear must have hidden_dim = 0");
  }
}

inline std::size_t param_count(const Architecture& a) {
  if (a.kind == ArchKind::Linear) {
    return a.num_classes * a.input_dim + a.num_classes;
  }
  return a.hidden_dim * a.input_dim + a.hidden_dim + a.num_classes * a.hidden_dim + a.num_classes;
}

inline std::string arch_name(const Architecture& a) {
  if (a.kind == ArchKind::Linear) {
    return "linear(in=" + std::to_string(a.input_dim) + ",classes=" + std::to_string(a.num_classes) +
           ")";
  }
  return "mlp1h(in=" + std::to_string(a.input_dim) + ",hidden=" + std::to_string(a.hidden_dim) +
         ",classes=" + std::to_string(a.num_classes) + ")";
}

// Block views over a flat parameter vector in the documented layout.
template <typename Span>
struct ParamBlocks {
  Span w1, b1, w2, b2;  // Linear uses only w1 (=W) and b1 (=b)
};

namespace detail {

template <typename Vec>
auto make_blocks(const Architecture& a, Vec& p) {
  using Span = std::span<std::remove_reference_t<decltype(p.v[0])>>;
  if (p.size() != param_count(a)) {
    throw DimensionError("param vector length " + std::to_string(p.size()) +
                         " does not match " + arch_name(a) + " (expected " +
                         std::to_string(param_count(a)) + ")");
  }
  ParamBlocks<Span> blocks{};
  auto* base = p.v.data();
  if (a.kind == ArchKind::Linear) {
    blocks.w1 = Span{base, a.num_classes * a.input_dim};
    blocks.b1 = Span{base + blocks.w1.size(), a.num_classes};
  } else {
    std::size_t off = 0;
    blocks.w1 = Span{base + off, a.hidden_dim * a.input_dim};
    off += blocks.w1.size();
    blocks.b1 = Span{base + off, a.hidden_dim};
    off += blocks.b1.size();
    blocks.w2 = Span{base + off, a.num_classes * a.hidden_dim};
    off += blocks.w2.size();
    blocks.b2 = Span{base + off, a.num_classes};
  }
  return blocks;
}

}  // namespace detail

inline auto blocks(const Architecture& a, ParamVector& p) { return detail::make_blocks(a, p); }
inline auto blocks(const Architecture& a, const ParamVector& p) {
  return detail::make_blocks(a, p);
}

}  // namespace att
