#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "recql/tensor.hpp"

namespace recql {

// A relation cell is either a binary64 scalar or one tensor chunk.
using Cell = std::variant<double, ChunkedTensor>;

inline bool is_scalar(const Cell& c) { return c.index() == 0; }
inline double as_scalar(const Cell& c) { return std::get<double>(c); }
inline const ChunkedTensor& as_tensor(const Cell& c) { return std::get<ChunkedTensor>(c); }

// Static cell type. rows/cols of 0 mean "dimension unknown"; a declared
// vector(d) is a 1 x d tensor. Loaded cells may be smaller than declared
// (ragged final chunks), never larger.
struct CellKind {
  enum class Tag { Scalar, Tensor };
  Tag tag = Tag::Scalar;
  uint32_t rows = 0;
  uint32_t cols = 0;

  static CellKind scalar() { return {Tag::Scalar, 0, 0}; }
  static CellKind tensor(uint32_t r = 0, uint32_t c = 0) { return {Tag::Tensor, r, c}; }

  bool is_scalar() const { return tag == Tag::Scalar; }
  bool is_tensor() const { return tag == Tag::Tensor; }
  bool operator==(const CellKind& o) const = default;

  std::string to_string() const;  // "scalar" | "tensor" | "tensor(r,c)"
};

// Inverse of CellKind::to_string. Throws Io on unrecognized text.
CellKind cell_kind_from_text(const std::string& text);

// Exact serialized form used for hashing, distinct counting, and canonical
// row ordering. Scalars as 's' + 8 bytes LE (with -0.0 normalized to +0.0),
// tensors as 't' + the chunk byte format.
void append_cell_bytes(std::string& out, const Cell& c);

// Serialized size in bytes used by stats and byte budgets:
// 8 per scalar, 8 + 8 * rows * cols per tensor cell.
uint64_t cell_bytes(const Cell& c);

// CSV text: scalars as shortest round-trip decimal, tensors as
// "r,c:v1 v2 ... v_rc" in row-major order.
std::string format_cell_text(const Cell& c);
Cell parse_tensor_text(const std::string& text);

// |a - b| <= rel_tol * max(1, |a|, |b|), cellwise; kinds and shapes must agree.
bool cell_close(const Cell& a, const Cell& b, double rel_tol);

}  // namespace recql
