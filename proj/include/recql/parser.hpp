#pragma once

#include <string>
#include <string_view>

#include "recql/ast.hpp"

namespace recql {

// Parses a full program: CREATE TABLE / LOAD TABLE / EXECUTE / MATERIALIZE /
// EXPORT / ad-hoc SELECT statements, each terminated by ';'.
// Throws Error(Syntax) with a source span on malformed input and Error(Arity)
// when a table name is used with inconsistent index counts.
Program parse_program(std::string_view text);

// Parses a single SELECT query; a trailing ';' is accepted.
Query parse_select_text(std::string_view text);

// Canonical text form. format_program(parse_program(t)) reparses to a
// structurally equal program.
std::string format_program(const Program& program);
std::string format_query(const Query& query);
std::string format_scalar(const ScalarExpr& expr);
std::string format_statement(const Statement& stmt);

}  // namespace recql
