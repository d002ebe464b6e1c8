#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "recql/ast.hpp"
#include "recql/catalog.hpp"
#include "recql/relation.hpp"

namespace recql {

enum class OpKind { Scan, Values, Project, Map, Select, Join, Aggregate, Union, Sink };

const char* op_kind_name(OpKind kind);

// Compiled cell expression: every column reference has been resolved to a
// position in the operator's input row and every loop or pattern variable
// folded into a constant.
struct CellExpr {
  enum class Kind { Const, Column, Call, Binary };
  Kind kind = Kind::Const;
  double value = 0.0;          // Const
  int column = -1;             // Column
  std::string fn;              // Call (folded name)
  char op = 0;                 // Binary: '+', '-', '*'
  std::vector<CellExpr> args;

  bool operator==(const CellExpr& o) const;
};

struct PredicateExpr {
  CellExpr lhs;
  CmpOp op = CmpOp::Eq;
  CellExpr rhs;
  bool operator==(const PredicateExpr& o) const = default;
};

enum class SinkKind { Table, Result, Export };

// One relational operator. Parameter fields are used per kind:
//   Scan      scan_name (base table)
//   Values    values (literal rows)
//   Project   project (input positions, in output order)
//   Map       maps (one expression per output column)
//   Select    filters (conjunction)
//   Join      join_keys (left pos, right pos); empty = cross product
//   Aggregate group_keys, agg_args; output is [keys..., sums...]
//   Union     no parameters (inputs concatenate)
//   Sink      sink_kind, sink_table / sink_label / sink_path
struct RaNode {
  int id = -1;
  OpKind kind = OpKind::Scan;
  std::vector<int> inputs;
  std::vector<std::string> columns;

  std::string scan_name;
  Relation values;
  std::vector<int> project;
  std::vector<CellExpr> maps;
  std::vector<PredicateExpr> filters;
  std::vector<std::pair<int, int>> join_keys;
  std::vector<int> group_keys;
  std::vector<int> agg_args;
  SinkKind sink_kind = SinkKind::Table;
  InstanceKey sink_table;
  std::string sink_label;
  std::string sink_path;
};

// Monolithic operator DAG. Node ids are dense and construction-ordered, and
// every edge points from a lower id (producer) to a higher id (consumer), so
// ascending id order is a topological order.
struct PlanDag {
  std::vector<RaNode> nodes;
  std::vector<int> sinks;
  std::unordered_map<int, InstanceKey> provenance_key;
  std::unordered_map<int, SourceSpan> provenance_span;

  int add_node(RaNode node);
  const RaNode& node(int id) const { return nodes.at(static_cast<size_t>(id)); }
  std::vector<std::pair<int, int>> edges() const;              // (producer, consumer)
  std::vector<std::vector<int>> consumers() const;             // per node id
  // Checks id density, input ordering, arity per kind, and column widths.
  void validate() const;
};

size_t count_operators(const PlanDag& dag, OpKind kind);

std::string plan_to_json(const PlanDag& dag);
PlanDag plan_from_json(const std::string& text);
std::string plan_to_dot(const PlanDag& dag);

}  // namespace recql
