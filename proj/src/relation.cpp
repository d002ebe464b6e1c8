#include "recql/relation.hpp"

#include <algorithm>
#include <unordered_set>

#include "recql/errors.hpp"
#include "recql/util.hpp"

namespace recql {

int Relation::column_index(std::string_view name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (iequals(columns[i], name)) return static_cast<int>(i);
  }
  return -1;
}

void Relation::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorKind::Type, "row width " + std::to_string(row.size()) +
                                     " does not match relation width " +
                                     std::to_string(columns.size()));
  }
  for (size_t i = 0; i < row.size(); ++i) {
    bool cell_scalar = is_scalar(row[i]);
    bool col_scalar = kinds[i].tag == CellKind::Tag::Scalar;
    if (cell_scalar != col_scalar) {
      throw Error(ErrorKind::Type, "column '" + columns[i] + "' expects " +
                                       kinds[i].to_string() + " cells");
    }
  }
  rows.push_back(std::move(row));
}

Relation make_relation(std::vector<std::string> columns, std::vector<CellKind> kinds) {
  if (columns.size() != kinds.size()) {
    throw Error(ErrorKind::Internal, "column and kind lists differ in length");
  }
  Relation rel;
  rel.columns = std::move(columns);
  rel.kinds = std::move(kinds);
  return rel;
}

std::string serialize_row(const std::vector<Cell>& row) {
  std::string out;
  for (const Cell& cell : row) {
    append_cell_bytes(out, cell);
  }
  return out;
}

void sort_rows_canonical(Relation& rel) {
  std::vector<std::pair<std::string, size_t>> keyed;
  keyed.reserve(rel.rows.size());
  for (size_t i = 0; i < rel.rows.size(); ++i) {
    keyed.emplace_back(serialize_row(rel.rows[i]), i);
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::vector<Cell>> sorted;
  sorted.reserve(rel.rows.size());
  for (const auto& [bytes, idx] : keyed) {
    (void)bytes;
    sorted.push_back(std::move(rel.rows[idx]));
  }
  rel.rows = std::move(sorted);
}

bool relations_equal(const Relation& a, const Relation& b, double rel_tol) {
  if (a.ncols() != b.ncols() || a.rows.size() != b.rows.size()) return false;
  Relation sa = a;
  Relation sb = b;
  sort_rows_canonical(sa);
  sort_rows_canonical(sb);
  for (size_t r = 0; r < sa.rows.size(); ++r) {
    for (size_t c = 0; c < sa.ncols(); ++c) {
      if (!cell_close(sa.rows[r][c], sb.rows[r][c], rel_tol)) return false;
    }
  }
  return true;
}

TableStats collect_stats(const Relation& rel) {
  TableStats stats;
  stats.row_count = rel.rows.size();
  stats.distinct.assign(rel.ncols(), 0);
  std::vector<std::unordered_set<std::string>> seen(rel.ncols());
  for (const auto& row : rel.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      std::string bytes;
      append_cell_bytes(bytes, row[c]);
      seen[c].insert(std::move(bytes));
      stats.bytes += cell_bytes(row[c]);
    }
  }
  for (size_t c = 0; c < rel.ncols(); ++c) {
    stats.distinct[c] = seen[c].size();
  }
  return stats;
}

}  // namespace recql
