#pragma once

#include <string>
#include <vector>

#include "recql/relation.hpp"

namespace recql {

// Comma-separated fields with double-quote quoting; quotes escape as "".
// Newlines inside quoted fields are kept. No header handling here.
std::vector<std::vector<std::string>> read_csv(const std::string& path);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

std::string csv_field(const std::string& value);
void write_csv(const std::string& path, const std::vector<std::vector<std::string>>& rows);

// Loads rows into a relation with the given schema. Scalar columns parse as
// decimal numbers; tensor columns use "r,c:v1 v2 ..." cell text and must not
// exceed the declared shape. Throws Io on malformed cells, Type on width.
Relation load_relation_csv(const std::string& path, std::vector<std::string> columns,
                           std::vector<CellKind> kinds);

// Writes a relation through cell text formatting; rows come out in canonical
// sorted order.
void write_relation_csv(const std::string& path, const Relation& rel);

}  // namespace recql
