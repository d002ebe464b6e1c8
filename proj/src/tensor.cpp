#include "recql/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "recql/errors.hpp"
#include "recql/util.hpp"

namespace recql {

namespace {

void check_finite(const std::vector<double>& data) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::Kernel, "tensor value is not finite: " + fmt_double(v));
    }
  }
}

[[noreturn]] void shape_error(const char* op, const ChunkedTensor& a, const ChunkedTensor& b) {
  throw Error(ErrorKind::DimMismatch,
              std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
                  std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                  std::to_string(b.cols()) + " are incompatible");
}

// Shared helper for elementwise binary ops with 1 x n row broadcast.
template <typename F>
ChunkedTensor elementwise(const char* op, const ChunkedTensor& a, const ChunkedTensor& b, F f) {
  if (a.cols() != b.cols()) shape_error(op, a, b);
  if (a.rows() == b.rows()) {
    std::vector<double> out(a.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i], b.data()[i]);
    return ChunkedTensor(a.rows(), a.cols(), std::move(out));
  }
  if (b.rows() == 1) {
    std::vector<double> out(a.size());
    for (uint32_t r = 0; r < a.rows(); ++r)
      for (uint32_t c = 0; c < a.cols(); ++c)
        out[size_t(r) * a.cols() + c] = f(a.at(r, c), b.at(0, c));
    return ChunkedTensor(a.rows(), a.cols(), std::move(out));
  }
  if (a.rows() == 1) {
    std::vector<double> out(b.size());
    for (uint32_t r = 0; r < b.rows(); ++r)
      for (uint32_t c = 0; c < b.cols(); ++c)
        out[size_t(r) * b.cols() + c] = f(a.at(0, c), b.at(r, c));
    return ChunkedTensor(b.rows(), b.cols(), std::move(out));
  }
  shape_error(op, a, b);
}

void put_u32(std::string& out, uint32_t v) {
  char buf[4];
  buf[0] = char(v & 0xff);
  buf[1] = char((v >> 8) & 0xff);
  buf[2] = char((v >> 16) & 0xff);
  buf[3] = char((v >> 24) & 0xff);
  out.append(buf, 4);
}

uint32_t get_u32(const std::string& in, size_t off) {
  return uint32_t(uint8_t(in[off])) | uint32_t(uint8_t(in[off + 1])) << 8 |
         uint32_t(uint8_t(in[off + 2])) << 16 | uint32_t(uint8_t(in[off + 3])) << 24;
}

void put_f64(std::string& out, double v) {
  uint64_t bits = std::bit_cast<uint64_t>(v);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = char((bits >> (8 * i)) & 0xff);
  out.append(buf, 8);
}

double get_f64(const std::string& in, size_t off) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= uint64_t(uint8_t(in[off + i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

ChunkedTensor::ChunkedTensor(uint32_t rows, uint32_t cols)
    : rows_(rows), cols_(cols), data_(size_t(rows) * cols, 0.0) {}

ChunkedTensor::ChunkedTensor(uint32_t rows, uint32_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != size_t(rows) * cols) {
    throw Error(ErrorKind::DimMismatch,
                "tensor data length " + std::to_string(data_.size()) + " does not match " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  check_finite(data_);
}

ChunkedTensor matmul(const ChunkedTensor& a, const ChunkedTensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  ChunkedTensor out(a.rows(), b.cols());
  for (uint32_t i = 0; i < a.rows(); ++i) {
    for (uint32_t k = 0; k < a.cols(); ++k) {
      double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (uint32_t j = 0; j < b.cols(); ++j) out.at(i, j) += aik * b.at(k, j);
    }
  }
  return out;
}

ChunkedTensor transpose(const ChunkedTensor& a) {
  ChunkedTensor out(a.cols(), a.rows());
  for (uint32_t r = 0; r < a.rows(); ++r)
    for (uint32_t c = 0; c < a.cols(); ++c) out.at(c, r) = a.at(r, c);
  return out;
}

ChunkedTensor relu(const ChunkedTensor& a) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
  return ChunkedTensor(a.rows(), a.cols(), std::move(out));
}

ChunkedTensor relu_deriv(const ChunkedTensor& a) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > 0.0 ? 1.0 : 0.0;
  return ChunkedTensor(a.rows(), a.cols(), std::move(out));
}

ChunkedTensor softmax(const ChunkedTensor& a) {
  ChunkedTensor out(a.rows(), a.cols());
  for (uint32_t r = 0; r < a.rows(); ++r) {
    double mx = -HUGE_VAL;
    for (uint32_t c = 0; c < a.cols(); ++c) mx = std::max(mx, a.at(r, c));
    double sum = 0.0;
    for (uint32_t c = 0; c < a.cols(); ++c) {
      double e = std::exp(a.at(r, c) - mx);
      out.at(r, c) = e;
      sum += e;
    }
    for (uint32_t c = 0; c < a.cols(); ++c) out.at(r, c) /= sum;
  }
  return out;
}

ChunkedTensor cross_entropy_deriv(const ChunkedTensor& pred, const ChunkedTensor& label) {
  if (!pred.same_shape(label)) shape_error("crossentropyderiv", pred, label);
  return sub(pred, label);
}

double cross_entropy(const ChunkedTensor& pred, const ChunkedTensor& label) {
  if (!pred.same_shape(label)) shape_error("crossentropy", pred, label);
  double loss = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (label.data()[i] != 0.0) {
      // Clamp keeps the loss finite when a predicted probability underflows.
      double p = std::max(pred.data()[i], 1e-300);
      loss -= label.data()[i] * std::log(p);
    }
  }
  return loss;
}

ChunkedTensor reduce_by_row(const ChunkedTensor& a) {
  ChunkedTensor out(1, a.cols());
  for (uint32_t r = 0; r < a.rows(); ++r)
    for (uint32_t c = 0; c < a.cols(); ++c) out.at(0, c) += a.at(r, c);
  return out;
}

ChunkedTensor add(const ChunkedTensor& a, const ChunkedTensor& b) {
  return elementwise("add", a, b, [](double x, double y) { return x + y; });
}

ChunkedTensor sub(const ChunkedTensor& a, const ChunkedTensor& b) {
  return elementwise("sub", a, b, [](double x, double y) { return x - y; });
}

ChunkedTensor hadamard(const ChunkedTensor& a, const ChunkedTensor& b) {
  return elementwise("mul", a, b, [](double x, double y) { return x * y; });
}

ChunkedTensor scale(const ChunkedTensor& a, double s) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
  return ChunkedTensor(a.rows(), a.cols(), std::move(out));
}

void append_chunk_bytes(std::string& out, const ChunkedTensor& t) {
  out.append("RQCH", 4);
  put_u32(out, t.rows());
  put_u32(out, t.cols());
  for (double v : t.data()) put_f64(out, v);
}

ChunkedTensor parse_chunk_bytes(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "RQCH") != 0) {
    throw Error(ErrorKind::Io, "not a chunk: bad magic or truncated header");
  }
  uint32_t rows = get_u32(bytes, 4);
  uint32_t cols = get_u32(bytes, 8);
  size_t need = 12 + size_t(rows) * cols * 8;
  if (bytes.size() != need) {
    throw Error(ErrorKind::Io, "chunk payload length mismatch: have " +
                                   std::to_string(bytes.size()) + ", need " + std::to_string(need));
  }
  std::vector<double> data(size_t(rows) * cols);
  for (size_t i = 0; i < data.size(); ++i) data[i] = get_f64(bytes, 12 + i * 8);
  return ChunkedTensor(rows, cols, std::move(data));
}

void write_chunk_file(const std::filesystem::path& path, const ChunkedTensor& t) {
  std::string bytes;
  bytes.reserve(12 + t.size() * 8);
  append_chunk_bytes(bytes, t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open for writing: " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

ChunkedTensor read_chunk_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_chunk_bytes(bytes);
}

}  // namespace recql
