#include "recql/cell.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "recql/errors.hpp"
#include "recql/util.hpp"

namespace recql {

std::string CellKind::to_string() const {
  if (is_scalar()) return "scalar";
  if (rows == 0 && cols == 0) return "tensor";
  return "tensor(" + std::to_string(rows) + "," + std::to_string(cols) + ")";
}

CellKind cell_kind_from_text(const std::string& text) {
  if (text == "scalar") return CellKind::scalar();
  if (text == "tensor") return CellKind::tensor();
  uint32_t r = 0, c = 0;
  if (sscanf(text.c_str(), "tensor(%u,%u)", &r, &c) == 2) return CellKind::tensor(r, c);
  throw Error(ErrorKind::Io, "bad cell kind '" + text + "'");
}

void append_cell_bytes(std::string& out, const Cell& c) {
  if (is_scalar(c)) {
    double v = as_scalar(c);
    if (v == 0.0) v = 0.0;  // normalize -0.0
    uint64_t bits = std::bit_cast<uint64_t>(v);
    out.push_back('s');
    for (int i = 0; i < 8; ++i) out.push_back(char((bits >> (8 * i)) & 0xff));
  } else {
    out.push_back('t');
    append_chunk_bytes(out, as_tensor(c));
  }
}

uint64_t cell_bytes(const Cell& c) {
  if (is_scalar(c)) return 8;
  return 8 + 8ull * as_tensor(c).size();
}

std::string format_cell_text(const Cell& c) {
  if (is_scalar(c)) return fmt_double(as_scalar(c));
  const ChunkedTensor& t = as_tensor(c);
  std::string out = std::to_string(t.rows()) + "," + std::to_string(t.cols()) + ":";
  for (size_t i = 0; i < t.size(); ++i) {
    if (i) out.push_back(' ');
    out += fmt_double(t.data()[i]);
  }
  return out;
}

Cell parse_tensor_text(const std::string& text) {
  size_t comma = text.find(',');
  size_t colon = text.find(':');
  if (comma == std::string::npos || colon == std::string::npos || comma > colon) {
    throw Error(ErrorKind::Io, "malformed tensor cell: " + text.substr(0, 40));
  }
  auto parse_u32 = [&](size_t begin, size_t end) {
    uint32_t v = 0;
    auto res = std::from_chars(text.data() + begin, text.data() + end, v);
    if (res.ec != std::errc() || res.ptr != text.data() + end) {
      throw Error(ErrorKind::Io, "malformed tensor dims: " + text.substr(0, 40));
    }
    return v;
  };
  uint32_t rows = parse_u32(0, comma);
  uint32_t cols = parse_u32(comma + 1, colon);
  std::vector<double> data;
  data.reserve(size_t(rows) * cols);
  const char* p = text.data() + colon + 1;
  const char* end = text.data() + text.size();
  while (p < end) {
    while (p < end && *p == ' ') ++p;
    if (p == end) break;
    char* after = nullptr;
    double v = std::strtod(p, &after);
    if (after == p) throw Error(ErrorKind::Io, "malformed tensor value in: " + text.substr(0, 40));
    data.push_back(v);
    p = after;
  }
  if (data.size() != size_t(rows) * cols) {
    throw Error(ErrorKind::Io, "tensor cell has " + std::to_string(data.size()) +
                                   " values, expected " + std::to_string(size_t(rows) * cols));
  }
  return ChunkedTensor(rows, cols, std::move(data));
}

bool cell_close(const Cell& a, const Cell& b, double rel_tol) {
  auto close = [rel_tol](double x, double y) {
    double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
    return std::fabs(x - y) <= rel_tol * scale;
  };
  if (is_scalar(a) != is_scalar(b)) return false;
  if (is_scalar(a)) return close(as_scalar(a), as_scalar(b));
  const ChunkedTensor& ta = as_tensor(a);
  const ChunkedTensor& tb = as_tensor(b);
  if (!ta.same_shape(tb)) return false;
  for (size_t i = 0; i < ta.size(); ++i) {
    if (!close(ta.data()[i], tb.data()[i])) return false;
  }
  return true;
}

}  // namespace recql
