#include "recql/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "recql/errors.hpp"

namespace recql {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      field += c;
      ++i;
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      row_started = true;
      ++i;
      continue;
    }
    if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      row_started = true;
      ++i;
      continue;
    }
    if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      ++i;
      if (row_started || !field.empty()) {
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
      }
      continue;
    }
    field += c;
    row_started = true;
    ++i;
  }
  if (in_quotes) throw Error(ErrorKind::Io, "unterminated quoted field in CSV input");
  if (row_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string csv_field(const std::string& value) {
  bool needs_quotes = value.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quotes) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv(const std::string& path, const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_field(row[i]);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

static double parse_scalar_field(const std::string& field, size_t row, const std::string& path) {
  double value = 0.0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw Error(ErrorKind::Io, "row " + std::to_string(row + 1) + " of '" + path +
                                   "': malformed number '" + field + "'");
  }
  return value;
}

Relation load_relation_csv(const std::string& path, std::vector<std::string> columns,
                           std::vector<CellKind> kinds) {
  auto raw = read_csv(path);
  Relation rel = make_relation(std::move(columns), std::move(kinds));
  for (size_t r = 0; r < raw.size(); ++r) {
    if (raw[r].size() != rel.ncols()) {
      throw Error(ErrorKind::Type, "row " + std::to_string(r + 1) + " of '" + path + "' has " +
                                       std::to_string(raw[r].size()) + " fields, expected " +
                                       std::to_string(rel.ncols()));
    }
    std::vector<Cell> row;
    row.reserve(rel.ncols());
    for (size_t c = 0; c < rel.ncols(); ++c) {
      if (rel.kinds[c].tag == CellKind::Tag::Scalar) {
        row.emplace_back(parse_scalar_field(raw[r][c], r, path));
      } else {
        Cell cell = parse_tensor_text(raw[r][c]);
        const ChunkedTensor& t = as_tensor(cell);
        const CellKind& k = rel.kinds[c];
        if ((k.rows != 0 && t.rows() > k.rows) || (k.cols != 0 && t.cols() > k.cols)) {
          throw Error(ErrorKind::DimMismatch,
                      "row " + std::to_string(r + 1) + " of '" + path + "': cell is " +
                          std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                          " but column '" + rel.columns[c] + "' declares " + k.to_string());
        }
        row.push_back(std::move(cell));
      }
    }
    rel.add_row(std::move(row));
  }
  return rel;
}

void write_relation_csv(const std::string& path, const Relation& rel) {
  Relation sorted = rel;
  sort_rows_canonical(sorted);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(sorted.rows.size());
  for (const auto& row : sorted.rows) {
    std::vector<std::string> fields;
    fields.reserve(row.size());
    for (const Cell& cell : row) {
      fields.push_back(format_cell_text(cell));
    }
    rows.push_back(std::move(fields));
  }
  write_csv(path, rows);
}

}  // namespace recql
