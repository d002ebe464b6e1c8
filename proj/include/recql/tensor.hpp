#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace recql {

// Dense row-major matrix of binary64 values. One ChunkedTensor holds a single
// chunk of a logically larger matrix; a 1 x n tensor doubles as a vector.
// Values are checked to be finite at construction, so NaN/Inf never enter a
// relation.
class ChunkedTensor {
public:
  ChunkedTensor() = default;
  ChunkedTensor(uint32_t rows, uint32_t cols);  // zero-filled
  ChunkedTensor(uint32_t rows, uint32_t cols, std::vector<double> data);

  uint32_t rows() const { return rows_; }
  uint32_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  double at(uint32_t r, uint32_t c) const { return data_[size_t(r) * cols_ + c]; }
  double& at(uint32_t r, uint32_t c) { return data_[size_t(r) * cols_ + c]; }

  const std::vector<double>& data() const { return data_; }

  bool same_shape(const ChunkedTensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  bool operator==(const ChunkedTensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

private:
  uint32_t rows_ = 0;
  uint32_t cols_ = 0;
  std::vector<double> data_;
};

// (m x k) * (k x n) -> (m x n). Inner dimensions must agree.
ChunkedTensor matmul(const ChunkedTensor& a, const ChunkedTensor& b);

ChunkedTensor transpose(const ChunkedTensor& a);

// max(x, 0) elementwise.
ChunkedTensor relu(const ChunkedTensor& a);

// 1 where x > 0, else 0; the derivative at exactly 0 is taken as 0.
ChunkedTensor relu_deriv(const ChunkedTensor& a);

// Row-wise softmax with max subtraction for numeric stability.
ChunkedTensor softmax(const ChunkedTensor& a);

// Gradient of cross-entropy loss after softmax: pred - label. Shapes must agree.
ChunkedTensor cross_entropy_deriv(const ChunkedTensor& pred, const ChunkedTensor& label);

// Total cross-entropy loss sum(-label * log(pred)) over all entries.
double cross_entropy(const ChunkedTensor& pred, const ChunkedTensor& label);

// Column sums: (m x n) -> (1 x n).
ChunkedTensor reduce_by_row(const ChunkedTensor& a);

// Elementwise binary ops. Shapes must agree, except that a 1 x n operand is
// broadcast across the rows of an m x n operand (bias addition in the forward
// pass adds a 1 x n bias vector to an m x n activation block).
ChunkedTensor add(const ChunkedTensor& a, const ChunkedTensor& b);
ChunkedTensor sub(const ChunkedTensor& a, const ChunkedTensor& b);
ChunkedTensor hadamard(const ChunkedTensor& a, const ChunkedTensor& b);
ChunkedTensor scale(const ChunkedTensor& a, double s);

// Chunk binary format: magic "RQCH", then rows and cols as u32 little-endian,
// then rows*cols binary64 values little-endian in row-major order.
void append_chunk_bytes(std::string& out, const ChunkedTensor& t);
ChunkedTensor parse_chunk_bytes(const std::string& bytes);
void write_chunk_file(const std::filesystem::path& path, const ChunkedTensor& t);
ChunkedTensor read_chunk_file(const std::filesystem::path& path);

}  // namespace recql
