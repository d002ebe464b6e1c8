#include "recql/unroll.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "recql/errors.hpp"
#include "recql/util.hpp"

namespace recql {

namespace {

struct UdfSpec {
  const char* name;
  size_t arity;
};

// Kernel library callable from select items and predicates.
constexpr UdfSpec kUdfs[] = {
    {"matmul", 2},          {"t", 1},    {"relu", 1},      {"reluderiv", 1},
    {"softmax", 1},         {"crossentropyderiv", 2},      {"crossentropy", 2},
    {"reducebyrow", 1},
};

const UdfSpec* find_udf(const std::string& folded) {
  for (const auto& spec : kUdfs) {
    if (folded == spec.name) return &spec;
  }
  return nullptr;
}

bool column_matches(const ScalarExpr& item, const ScalarExpr& key) {
  if (!iequals(item.name, key.name)) return false;
  if (item.qualifier.empty() || key.qualifier.empty()) return true;
  return iequals(item.qualifier, key.qualifier);
}

std::string item_display_name(const SelectItem& item, size_t index) {
  if (!item.alias.empty()) return item.alias;
  if (item.expr.kind == ScalarExpr::Kind::Ident) return item.expr.name;
  if (item.expr.kind == ScalarExpr::Kind::Aggregate) return "SUM";
  return "c" + std::to_string(index);
}

}  // namespace

int Unroller::new_node(RaNode node, const SourceSpan& span) {
  int id = dag_.add_node(std::move(node));
  if (!owner_stack_.empty()) {
    dag_.provenance_key.emplace(id, owner_stack_.back());
    if (span.valid()) dag_.provenance_span.emplace(id, span);
  }
  return id;
}

int Unroller::compile_instance(const InstanceKey& key) {
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;

  if (in_progress_.count(key)) {
    std::ostringstream msg;
    msg << "cyclic dependency: ";
    auto start = std::find(chain_.begin(), chain_.end(), key);
    for (auto c = start; c != chain_.end(); ++c) {
      msg << c->to_string() << " -> ";
    }
    msg << key.to_string();
    throw Error(ErrorKind::Cycle, msg.str());
  }
  if (depth_ >= max_depth_) {
    throw Error(ErrorKind::DepthLimit, "instance recursion exceeded " +
                                           std::to_string(max_depth_) + " at " + key.to_string());
  }

  if (catalog_.has_base(key.name)) {
    if (!key.indices.empty()) {
      throw Error(ErrorKind::Internal, "base table reference with indices: " + key.to_string());
    }
    const Relation* rel = catalog_.base_table(key.name);
    RaNode scan;
    scan.kind = OpKind::Scan;
    scan.scan_name = key.name;
    scan.columns = rel->columns;
    owner_stack_.push_back(key);
    int id = new_node(std::move(scan), SourceSpan{});
    owner_stack_.pop_back();
    memo_.emplace(key, id);
    ++instances_compiled_;
    return id;
  }

  ResolvedInstance resolved = catalog_.resolve_instance(key);
  const TableDefinition& def = *resolved.def;

  in_progress_.insert(key);
  chain_.push_back(key);
  ++depth_;
  owner_stack_.push_back(key);
  int root = compile_select(*def.body, resolved.binding);
  owner_stack_.pop_back();
  --depth_;
  chain_.pop_back();
  in_progress_.erase(key);

  if (dag_.node(root).columns.size() != def.columns.size()) {
    throw Error(ErrorKind::Type,
                "definition of '" + def.name + "' declares " +
                    std::to_string(def.columns.size()) + " columns but its query produces " +
                    std::to_string(dag_.node(root).columns.size()),
                def.span);
  }

  auto owner = dag_.provenance_key.find(root);
  if (owner != dag_.provenance_key.end() && owner->second == key) {
    // Root was created for this instance: rename in place.
    dag_.nodes[static_cast<size_t>(root)].columns = def.columns;
  } else {
    // Pass-through of another instance's subplan. The wrapper keeps the memo
    // invariant that every compiled instance owns at least one node.
    RaNode proj;
    proj.kind = OpKind::Project;
    proj.inputs = {root};
    proj.columns = def.columns;
    proj.project.resize(def.columns.size());
    std::iota(proj.project.begin(), proj.project.end(), 0);
    owner_stack_.push_back(key);
    root = new_node(std::move(proj), def.span);
    owner_stack_.pop_back();
  }

  memo_.emplace(key, root);
  ++instances_compiled_;
  return root;
}

int Unroller::compile_query(const Query& query, const Binding& binding) {
  return compile_select(query, binding);
}

Unroller::Source Unroller::compile_from_item(const FromItem& item, const Binding& binding) {
  Source src;
  switch (item.kind) {
    case FromItem::Kind::Base: {
      if (!catalog_.has_base(item.table) && !catalog_.has_definition(item.table)) {
        throw Error(ErrorKind::NoMatch, "unknown table '" + item.table + "'", item.span);
      }
      src.node = compile_instance(InstanceKey{item.table, {}});
      src.alias = item.alias.empty() ? item.table : item.alias;
      break;
    }
    case FromItem::Kind::Instance: {
      InstanceKey key;
      key.name = item.table;
      for (const auto& idx : item.indices) {
        key.indices.push_back(idx.eval(binding));
      }
      src.node = compile_instance(key);
      src.alias = item.alias.empty() ? item.table : item.alias;
      break;
    }
    case FromItem::Kind::UnionRange: {
      std::vector<InstanceKey> keys = catalog_.expand_union(item, binding);
      std::vector<int> roots;
      roots.reserve(keys.size());
      for (const auto& key : keys) {
        roots.push_back(compile_instance(key));
      }
      size_t width = dag_.node(roots[0]).columns.size();
      for (int r : roots) {
        if (dag_.node(r).columns.size() != width) {
          throw Error(ErrorKind::Type,
                      "UNION over '" + item.table + "' mixes different column counts",
                      item.span);
        }
      }
      if (roots.size() == 1) {
        src.node = roots[0];
      } else {
        RaNode u;
        u.kind = OpKind::Union;
        u.inputs = roots;
        u.columns = dag_.node(roots[0]).columns;
        src.node = new_node(std::move(u), item.span);
      }
      src.alias = item.alias.empty() ? item.table : item.alias;
      break;
    }
    case FromItem::Kind::Derived: {
      src.node = compile_select(*item.derived, binding);
      src.alias = item.alias;
      break;
    }
    case FromItem::Kind::Values: {
      RaNode v;
      v.kind = OpKind::Values;
      size_t width = item.values_rows.front().size();
      std::vector<std::string> names;
      std::vector<CellKind> kinds(width, CellKind::scalar());
      for (size_t c = 0; c < width; ++c) {
        names.push_back("v" + std::to_string(c));
      }
      v.columns = names;
      v.values = make_relation(std::move(names), std::move(kinds));
      for (const auto& row : item.values_rows) {
        std::vector<Cell> cells(row.begin(), row.end());
        v.values.add_row(std::move(cells));
      }
      src.node = new_node(std::move(v), item.span);
      break;
    }
  }
  src.columns = dag_.node(src.node).columns;
  return src;
}

int Unroller::resolve_column(const ScalarExpr& expr, const Scope& scope, size_t begin,
                             size_t end, bool* ambiguous) const {
  if (ambiguous) *ambiguous = false;
  if (expr.kind != ScalarExpr::Kind::Ident) return -1;
  if (expr.qualifier.empty() && scope.binding && scope.binding->lookup(expr.name)) {
    return -1;  // bound variables shadow columns
  }
  int found = -1;
  for (size_t p = begin; p < end; ++p) {
    const auto& [alias, name] = scope.cols[p];
    if (!iequals(name, expr.name)) continue;
    if (!expr.qualifier.empty() && !iequals(alias, expr.qualifier)) continue;
    if (found >= 0) {
      std::string label =
          expr.qualifier.empty() ? expr.name : expr.qualifier + "." + expr.name;
      throw Error(ErrorKind::UnknownColumn, "ambiguous column '" + label + "'", expr.span);
    }
    found = static_cast<int>(p);
  }
  return found;
}

CellExpr Unroller::compile_cell(const ScalarExpr& expr, const Scope& scope) {
  CellExpr out;
  switch (expr.kind) {
    case ScalarExpr::Kind::Number:
      out.kind = CellExpr::Kind::Const;
      out.value = expr.number;
      return out;
    case ScalarExpr::Kind::Ident: {
      if (expr.qualifier.empty() && scope.binding) {
        if (auto v = scope.binding->lookup(expr.name)) {
          out.kind = CellExpr::Kind::Const;
          out.value = static_cast<double>(*v);
          return out;
        }
      }
      int pos = resolve_column(expr, scope, 0, scope.cols.size(), nullptr);
      if (pos < 0) {
        std::string label =
            expr.qualifier.empty() ? expr.name : expr.qualifier + "." + expr.name;
        throw Error(ErrorKind::UnknownColumn, "unknown column '" + label + "'", expr.span);
      }
      out.kind = CellExpr::Kind::Column;
      out.column = pos;
      return out;
    }
    case ScalarExpr::Kind::Call: {
      std::string folded = fold(expr.name);
      const UdfSpec* spec = find_udf(folded);
      if (!spec) {
        throw Error(ErrorKind::UnknownUdf, "unknown function '" + expr.name + "'", expr.span);
      }
      if (expr.args.size() != spec->arity) {
        throw Error(ErrorKind::Type,
                    "function '" + expr.name + "' takes " + std::to_string(spec->arity) +
                        " arguments, got " + std::to_string(expr.args.size()),
                    expr.span);
      }
      out.kind = CellExpr::Kind::Call;
      out.fn = folded;
      for (const auto& a : expr.args) {
        out.args.push_back(compile_cell(a, scope));
      }
      return out;
    }
    case ScalarExpr::Kind::Binary: {
      CellExpr lhs = compile_cell(expr.args[0], scope);
      CellExpr rhs = compile_cell(expr.args[1], scope);
      if (lhs.kind == CellExpr::Kind::Const && rhs.kind == CellExpr::Kind::Const) {
        out.kind = CellExpr::Kind::Const;
        out.value = expr.op == '+'   ? lhs.value + rhs.value
                    : expr.op == '-' ? lhs.value - rhs.value
                                     : lhs.value * rhs.value;
        return out;
      }
      out.kind = CellExpr::Kind::Binary;
      out.op = expr.op;
      out.args.push_back(std::move(lhs));
      out.args.push_back(std::move(rhs));
      return out;
    }
    default:
      throw Error(ErrorKind::Internal, "unexpected expression kind in compile_cell");
  }
}

int Unroller::compile_select(const Query& query, const Binding& binding) {
  std::vector<Source> sources;
  sources.reserve(query.from.size());
  for (const auto& item : query.from) {
    sources.push_back(compile_from_item(item, binding));
  }
  for (size_t i = 0; i < sources.size(); ++i) {
    for (size_t j = i + 1; j < sources.size(); ++j) {
      if (!sources[i].alias.empty() && iequals(sources[i].alias, sources[j].alias)) {
        throw Error(ErrorKind::AmbiguousMatch,
                    "duplicate table alias '" + sources[i].alias + "' in FROM", query.span);
      }
    }
  }

  Scope scope;
  scope.binding = &binding;
  int current = sources[0].node;
  for (const auto& name : sources[0].columns) {
    scope.cols.emplace_back(sources[0].alias, name);
  }
  std::vector<bool> consumed(query.where.size(), false);

  for (size_t k = 1; k < sources.size(); ++k) {
    size_t lwidth = scope.cols.size();
    for (const auto& name : sources[k].columns) {
      scope.cols.emplace_back(sources[k].alias, name);
    }
    std::vector<std::pair<int, int>> keys;
    for (size_t w = 0; w < query.where.size(); ++w) {
      if (consumed[w] || query.where[w].op != CmpOp::Eq) continue;
      int l = resolve_column(query.where[w].lhs, scope, 0, scope.cols.size(), nullptr);
      int r = resolve_column(query.where[w].rhs, scope, 0, scope.cols.size(), nullptr);
      if (l < 0 || r < 0) continue;
      if (l < static_cast<int>(lwidth) && r >= static_cast<int>(lwidth)) {
        keys.emplace_back(l, r - static_cast<int>(lwidth));
        consumed[w] = true;
      } else if (r < static_cast<int>(lwidth) && l >= static_cast<int>(lwidth)) {
        keys.emplace_back(r, l - static_cast<int>(lwidth));
        consumed[w] = true;
      }
    }
    RaNode join;
    join.kind = OpKind::Join;
    join.inputs = {current, sources[k].node};
    join.join_keys = std::move(keys);
    for (const auto& [alias, name] : scope.cols) {
      (void)alias;
      join.columns.push_back(name);
    }
    current = new_node(std::move(join), query.span);
  }

  std::vector<PredicateExpr> residual;
  for (size_t w = 0; w < query.where.size(); ++w) {
    if (consumed[w]) continue;
    PredicateExpr p;
    p.lhs = compile_cell(query.where[w].lhs, scope);
    p.op = query.where[w].op;
    p.rhs = compile_cell(query.where[w].rhs, scope);
    if (p.lhs.kind == CellExpr::Kind::Const && p.rhs.kind == CellExpr::Kind::Const) {
      double a = p.lhs.value, b = p.rhs.value;
      bool hold = p.op == CmpOp::Eq   ? a == b
                  : p.op == CmpOp::Ne ? a != b
                  : p.op == CmpOp::Lt ? a < b
                  : p.op == CmpOp::Le ? a <= b
                  : p.op == CmpOp::Gt ? a > b
                                      : a >= b;
      if (hold) continue;  // always true: drop
    }
    residual.push_back(std::move(p));
  }
  if (!residual.empty()) {
    RaNode sel;
    sel.kind = OpKind::Select;
    sel.inputs = {current};
    sel.filters = std::move(residual);
    sel.columns = dag_.node(current).columns;
    current = new_node(std::move(sel), query.span);
  }

  if (query.items.size() == 1 && query.items[0].expr.kind == ScalarExpr::Kind::Star) {
    return current;  // bare pass-through
  }

  bool any_aggregate = false;
  for (const auto& item : query.items) {
    if (item.expr.kind == ScalarExpr::Kind::Aggregate) any_aggregate = true;
  }

  if (!any_aggregate) {
    std::vector<int> positions;
    bool all_columns = true;
    for (const auto& item : query.items) {
      int p = resolve_column(item.expr, scope, 0, scope.cols.size(), nullptr);
      if (p < 0) {
        all_columns = false;
        break;
      }
      positions.push_back(p);
    }
    std::vector<std::string> names;
    for (size_t i = 0; i < query.items.size(); ++i) {
      names.push_back(item_display_name(query.items[i], i));
    }
    if (all_columns) {
      bool identity = positions.size() == scope.cols.size();
      if (identity) {
        for (size_t i = 0; i < positions.size(); ++i) {
          if (positions[i] != static_cast<int>(i) ||
              !iequals(names[i], dag_.node(current).columns[i])) {
            identity = false;
            break;
          }
        }
      }
      if (identity) return current;
      RaNode proj;
      proj.kind = OpKind::Project;
      proj.inputs = {current};
      proj.project = std::move(positions);
      proj.columns = std::move(names);
      return new_node(std::move(proj), query.span);
    }
    RaNode map;
    map.kind = OpKind::Map;
    map.inputs = {current};
    for (const auto& item : query.items) {
      map.maps.push_back(compile_cell(item.expr, scope));
    }
    map.columns = std::move(names);
    return new_node(std::move(map), query.span);
  }

  // Aggregate path: group keys first, then one summed argument per aggregate
  // item. A Map stage materializes them only when some entry is computed.
  std::vector<const ScalarExpr*> agg_items;
  for (const auto& item : query.items) {
    if (item.expr.kind == ScalarExpr::Kind::Aggregate) agg_items.push_back(&item.expr);
  }
  std::vector<int> key_pos(query.group_by.size(), -1);
  std::vector<int> arg_pos(agg_items.size(), -1);
  bool all_pure = true;
  for (size_t g = 0; g < query.group_by.size(); ++g) {
    key_pos[g] = resolve_column(query.group_by[g], scope, 0, scope.cols.size(), nullptr);
    if (key_pos[g] < 0) all_pure = false;
  }
  for (size_t a = 0; a < agg_items.size(); ++a) {
    arg_pos[a] = resolve_column(agg_items[a]->args[0], scope, 0, scope.cols.size(), nullptr);
    if (arg_pos[a] < 0) all_pure = false;
  }

  std::vector<std::string> agg_columns;
  for (const auto& key : query.group_by) {
    agg_columns.push_back(key.name);
  }
  for (size_t a = 0; a < agg_items.size(); ++a) {
    agg_columns.push_back("SUM");
  }

  RaNode agg;
  agg.kind = OpKind::Aggregate;
  agg.columns = agg_columns;
  if (all_pure) {
    agg.inputs = {current};
    agg.group_keys = key_pos;
    agg.agg_args = arg_pos;
  } else {
    RaNode map;
    map.kind = OpKind::Map;
    map.inputs = {current};
    map.columns = agg_columns;
    for (size_t g = 0; g < query.group_by.size(); ++g) {
      map.maps.push_back(compile_cell(query.group_by[g], scope));
    }
    for (const auto* item : agg_items) {
      map.maps.push_back(compile_cell(item->args[0], scope));
    }
    int map_id = new_node(std::move(map), query.span);
    agg.inputs = {map_id};
    for (size_t g = 0; g < query.group_by.size(); ++g) {
      agg.group_keys.push_back(static_cast<int>(g));
    }
    for (size_t a = 0; a < agg_items.size(); ++a) {
      agg.agg_args.push_back(static_cast<int>(query.group_by.size() + a));
    }
  }
  int agg_id = new_node(std::move(agg), query.span);

  // Reorder the [keys..., sums...] layout into select item order.
  std::vector<int> out_pos;
  std::vector<std::string> out_names;
  size_t agg_seen = 0;
  for (size_t i = 0; i < query.items.size(); ++i) {
    const SelectItem& item = query.items[i];
    if (item.expr.kind == ScalarExpr::Kind::Aggregate) {
      out_pos.push_back(static_cast<int>(query.group_by.size() + agg_seen));
      ++agg_seen;
    } else {
      int slot = -1;
      for (size_t g = 0; g < query.group_by.size(); ++g) {
        if (column_matches(item.expr, query.group_by[g])) {
          slot = static_cast<int>(g);
          break;
        }
      }
      if (slot < 0) {
        throw Error(ErrorKind::Internal, "select item missing from GROUP BY after parse");
      }
      out_pos.push_back(slot);
    }
    out_names.push_back(item_display_name(item, i));
  }
  bool identity = out_pos.size() == agg_columns.size();
  if (identity) {
    for (size_t i = 0; i < out_pos.size(); ++i) {
      if (out_pos[i] != static_cast<int>(i) || !iequals(out_names[i], agg_columns[i])) {
        identity = false;
        break;
      }
    }
  }
  if (identity) return agg_id;
  RaNode proj;
  proj.kind = OpKind::Project;
  proj.inputs = {agg_id};
  proj.project = std::move(out_pos);
  proj.columns = std::move(out_names);
  return new_node(std::move(proj), query.span);
}

void Unroller::add_materialize(const InstanceKey& key) {
  std::string sig = "table:" + fold(key.to_string());
  if (sunk_.count(sig)) return;
  int root = compile_instance(key);
  RaNode sink;
  sink.kind = OpKind::Sink;
  sink.inputs = {root};
  sink.sink_kind = SinkKind::Table;
  sink.sink_table = key;
  sink.columns = dag_.node(root).columns;
  owner_stack_.push_back(key);
  dag_.sinks.push_back(new_node(std::move(sink), SourceSpan{}));
  owner_stack_.pop_back();
  sunk_.insert(sig);
}

void Unroller::add_export(const InstanceKey& key, const std::string& path) {
  std::string sig = "export:" + fold(key.to_string()) + ":" + path;
  if (sunk_.count(sig)) return;
  int root = compile_instance(key);
  RaNode sink;
  sink.kind = OpKind::Sink;
  sink.inputs = {root};
  sink.sink_kind = SinkKind::Export;
  sink.sink_table = key;
  sink.sink_path = path;
  sink.columns = dag_.node(root).columns;
  owner_stack_.push_back(key);
  dag_.sinks.push_back(new_node(std::move(sink), SourceSpan{}));
  owner_stack_.pop_back();
  sunk_.insert(sig);
}

void Unroller::add_result(const Query& query, const std::string& label,
                          const Binding& binding) {
  int root = compile_query(query, binding);
  RaNode sink;
  sink.kind = OpKind::Sink;
  sink.inputs = {root};
  sink.sink_kind = SinkKind::Result;
  sink.sink_label = label;
  sink.columns = dag_.node(root).columns;
  dag_.sinks.push_back(dag_.add_node(std::move(sink)));
}

PlanDag Unroller::finish() {
  if (finished_) {
    throw Error(ErrorKind::Internal, "unroller already finished");
  }
  finished_ = true;
  dag_.validate();
  return std::move(dag_);
}

PlanDag unroll(const std::vector<InstanceKey>& targets, const Catalog& catalog) {
  Unroller u(catalog);
  for (const auto& key : targets) {
    u.add_materialize(key);
  }
  return u.finish();
}

}  // namespace recql
