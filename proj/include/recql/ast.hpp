#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "recql/cell.hpp"
#include "recql/errors.hpp"

namespace recql {

// All AST equality comparisons ignore source spans and compare identifiers
// case-insensitively, matching the dialect's name resolution rules.

class Binding;

// Linear integer expression over index variables: constant + sum coef * var.
// The grammar only produces +1/-1 coefficients but repeated variables fold.
struct IndexExpr {
  long long constant = 0;
  std::vector<std::pair<std::string, long long>> terms;  // original spelling, folded on compare

  void add_term(const std::string& var, long long coef);
  bool is_constant() const { return terms.empty(); }
  // Throws Internal if a variable is unbound; the parser guarantees scoping.
  long long eval(const Binding& binding) const;
  bool references(std::string_view var) const;

  bool operator==(const IndexExpr& o) const;
  std::string to_string() const;
};

// Variable bindings accumulated left to right during pattern matching and
// loop unrolling. Lookup is case-insensitive.
class Binding {
public:
  void bind(const std::string& var, long long value);
  std::optional<long long> lookup(std::string_view var) const;
  void truncate(size_t n);
  size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, long long>>& entries() const { return entries_; }

private:
  std::vector<std::pair<std::string, long long>> entries_;
};

// One index position of a table definition. Exactly one of the two forms:
//  - expression form: [0] or [i] or [i-1]; matches when the expression,
//    evaluated under the bindings so far, equals the key index;
//  - range form: [v:lo...hi] or [v:lo...] (open upper bound); binds v.
struct IndexPattern {
  std::optional<IndexExpr> expr;       // expression form
  std::string variable;                // range form
  IndexExpr lower;                     // range form
  std::optional<IndexExpr> upper;      // range form; nullopt = open
  SourceSpan span;

  bool is_range() const { return !expr.has_value(); }
  bool operator==(const IndexPattern& o) const;
  std::string to_string() const;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
const char* cmp_op_text(CmpOp op);

// Scalar expressions appear in select items and WHERE predicates. A bare
// identifier may be a column or a loop/pattern variable; resolution happens
// at compile time, where variables shadow columns.
struct ScalarExpr {
  enum class Kind { Number, Ident, Call, Aggregate, Binary, Star };
  Kind kind = Kind::Number;
  double number = 0.0;          // Number
  std::string qualifier;        // Ident (optional)
  std::string name;             // Ident / Call / Aggregate (function name)
  char op = 0;                  // Binary: '+', '-', '*'
  std::vector<ScalarExpr> args; // Binary: [lhs, rhs]; Call / Aggregate: arguments
  SourceSpan span;

  bool operator==(const ScalarExpr& o) const;
  bool contains_aggregate() const;
};

struct SelectItem {
  ScalarExpr expr;
  std::string alias;  // from "AS name", empty if absent
  bool operator==(const SelectItem& o) const;
};

struct Predicate {
  ScalarExpr lhs;
  CmpOp op = CmpOp::Eq;
  ScalarExpr rhs;
  SourceSpan span;
  bool operator==(const Predicate& o) const;
};

struct Query;

// One dimension of a UNION range reference. A dimension may bind its own
// variable, visible to bounds of dimensions to its right:
// UNION pascalsTri[i:0...50][0...i]. A single expression is a point range.
struct UnionDim {
  std::string variable;  // empty if unbound
  IndexExpr lower;
  IndexExpr upper;
  bool operator==(const UnionDim& o) const;
};

struct FromItem {
  enum class Kind { Base, Instance, UnionRange, Derived, Values };
  Kind kind = Kind::Base;
  std::string table;                    // Base / Instance / UnionRange
  std::string alias;                    // empty means "table name" (not Values)
  std::vector<IndexExpr> indices;       // Instance
  std::vector<UnionDim> dims;           // UnionRange
  std::shared_ptr<Query> derived;       // Derived (immutable after parse)
  std::vector<std::vector<double>> values_rows;  // Values
  SourceSpan span;

  bool operator==(const FromItem& o) const;
};

struct Query {
  std::vector<SelectItem> items;  // a lone Star item encodes SELECT *
  std::vector<FromItem> from;
  std::vector<Predicate> where;       // conjunction
  std::vector<ScalarExpr> group_by;   // column references
  SourceSpan span;

  bool operator==(const Query& o) const;
};

struct TableDefinition {
  std::string name;
  std::vector<IndexPattern> patterns;
  std::vector<std::string> columns;
  std::shared_ptr<Query> body;
  SourceSpan span;

  bool operator==(const TableDefinition& o) const;
};

// Concatenation of string literals and index expressions: 'loss_' + i + '.csv'.
struct PathExpr {
  struct Part {
    std::optional<std::string> text;  // string literal part
    IndexExpr expr;                   // index part when text is absent
    bool operator==(const Part& o) const;
  };
  std::vector<Part> parts;

  std::string eval(const Binding& binding) const;
  bool operator==(const PathExpr& o) const;
};

struct InstanceRef {
  std::string name;
  std::vector<IndexExpr> indices;
  SourceSpan span;
  bool operator==(const InstanceRef& o) const;
};

struct ColumnDecl {
  std::string name;
  CellKind kind;
  bool operator==(const ColumnDecl& o) const;
};

struct Statement;

struct ExecItem;

struct ForLoop {
  std::string var;
  IndexExpr lower;
  IndexExpr upper;  // inclusive
  std::vector<ExecItem> body;
  SourceSpan span;
  bool operator==(const ForLoop& o) const;
};

struct ExecItem {
  std::shared_ptr<Statement> stmt;  // exactly one of the two is set
  std::shared_ptr<ForLoop> loop;
  bool operator==(const ExecItem& o) const;
};

struct Statement {
  enum class Kind { Define, AdHocQuery, Execute, Materialize, Export, LoadBase };
  Kind kind = Kind::AdHocQuery;
  SourceSpan span;

  TableDefinition def;              // Define
  std::shared_ptr<Query> query;     // AdHocQuery
  std::string bulk_into;            // AdHocQuery: BULK COLLECT INTO target, or empty
  std::vector<ExecItem> exec;       // Execute
  InstanceRef target;               // Materialize / Export
  PathExpr export_path;             // Export
  std::string base_name;            // LoadBase
  std::vector<ColumnDecl> base_columns;
  std::string base_path;

  bool operator==(const Statement& o) const;
};

struct Program {
  std::vector<Statement> statements;
  bool operator==(const Program& o) const;
};

}  // namespace recql
