#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recql/cell.hpp"

namespace recql {

// In-memory table: named columns over rows of cells. Column kinds are
// tag-checked on append; tensor cells in one column may have different chunk
// shapes (edge chunks are smaller), so shapes in `kinds` are advisory.
struct Relation {
  std::vector<std::string> columns;
  std::vector<CellKind> kinds;
  std::vector<std::vector<Cell>> rows;

  size_t ncols() const { return columns.size(); }
  // Case-insensitive; returns -1 when absent.
  int column_index(std::string_view name) const;
  // Throws Type on width or tag mismatch.
  void add_row(std::vector<Cell> row);
};

Relation make_relation(std::vector<std::string> columns, std::vector<CellKind> kinds);

// Canonical byte serialization of one row; basis for hashing, dedup, and the
// deterministic on-disk row order.
std::string serialize_row(const std::vector<Cell>& row);

// Sorts rows by their serialized bytes. Any relation written to disk goes
// through this first, which makes stored artifacts byte-identical across
// runs regardless of evaluation order.
void sort_rows_canonical(Relation& rel);

// Order-insensitive comparison with per-cell relative tolerance. Column
// names are ignored; widths and cell tags must match. Rows are matched
// greedily after canonical sorting, which is exact for rel_tol 0 and
// adequate for the small tolerances used in tests.
bool relations_equal(const Relation& a, const Relation& b, double rel_tol = 0.0);

struct TableStats {
  uint64_t row_count = 0;
  std::vector<uint64_t> distinct;  // per column, by full cell bytes
  uint64_t bytes = 0;              // 8 per scalar, 8 + 8*r*c per tensor cell
};

TableStats collect_stats(const Relation& rel);

}  // namespace recql
