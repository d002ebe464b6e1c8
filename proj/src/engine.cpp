#include "recql/engine.hpp"

#include <algorithm>
#include <sstream>

#include "recql/csv.hpp"
#include "recql/errors.hpp"

namespace fs = std::filesystem;

namespace recql {
namespace {

uint64_t relation_bytes(const Relation& rel) {
  uint64_t total = 0;
  for (const auto& row : rel.rows) {
    for (const auto& cell : row) total += cell_bytes(cell);
  }
  return total;
}

const ChunkedTensor& tensor_arg(const std::string& fn, const std::vector<Cell>& args,
                                size_t i) {
  if (is_scalar(args[i])) {
    throw Error(ErrorKind::Type, "argument " + std::to_string(i + 1) + " of '" + fn +
                                     "' must be a tensor");
  }
  return as_tensor(args[i]);
}

Cell eval_udf(const std::string& fn, const std::vector<Cell>& args) {
  if (fn == "matmul") return matmul(tensor_arg(fn, args, 0), tensor_arg(fn, args, 1));
  if (fn == "t") return transpose(tensor_arg(fn, args, 0));
  if (fn == "relu") return relu(tensor_arg(fn, args, 0));
  if (fn == "reluderiv") return relu_deriv(tensor_arg(fn, args, 0));
  if (fn == "softmax") return softmax(tensor_arg(fn, args, 0));
  if (fn == "crossentropyderiv") {
    return cross_entropy_deriv(tensor_arg(fn, args, 0), tensor_arg(fn, args, 1));
  }
  if (fn == "crossentropy") {
    return cross_entropy(tensor_arg(fn, args, 0), tensor_arg(fn, args, 1));
  }
  if (fn == "reducebyrow") return reduce_by_row(tensor_arg(fn, args, 0));
  throw Error(ErrorKind::Internal, "no kernel for '" + fn + "'");
}

Cell eval_binary(char op, const Cell& a, const Cell& b) {
  if (is_scalar(a) && is_scalar(b)) {
    double x = as_scalar(a), y = as_scalar(b);
    switch (op) {
      case '+': return x + y;
      case '-': return x - y;
      case '*': return x * y;
    }
    throw Error(ErrorKind::Internal, std::string("bad operator '") + op + "'");
  }
  if (!is_scalar(a) && !is_scalar(b)) {
    switch (op) {
      case '+': return add(as_tensor(a), as_tensor(b));
      case '-': return sub(as_tensor(a), as_tensor(b));
      case '*': return hadamard(as_tensor(a), as_tensor(b));
    }
    throw Error(ErrorKind::Internal, std::string("bad operator '") + op + "'");
  }
  if (op == '*') {
    return is_scalar(a) ? scale(as_tensor(b), as_scalar(a))
                        : scale(as_tensor(a), as_scalar(b));
  }
  throw Error(ErrorKind::Type,
              std::string("'") + op + "' cannot mix a scalar with a tensor");
}

Cell eval_cell_expr(const CellExpr& e, const std::vector<Cell>& row) {
  switch (e.kind) {
    case CellExpr::Kind::Const:
      return e.value;
    case CellExpr::Kind::Column:
      return row[static_cast<size_t>(e.column)];
    case CellExpr::Kind::Call: {
      std::vector<Cell> args;
      args.reserve(e.args.size());
      for (const auto& a : e.args) args.push_back(eval_cell_expr(a, row));
      return eval_udf(e.fn, args);
    }
    case CellExpr::Kind::Binary: {
      Cell a = eval_cell_expr(e.args[0], row);
      Cell b = eval_cell_expr(e.args[1], row);
      return eval_binary(e.op, a, b);
    }
  }
  throw Error(ErrorKind::Internal, "bad cell expression");
}

// Static output kind of an expression; keeps Map output schemas well defined
// even over empty inputs.
CellKind expr_kind(const CellExpr& e, const std::vector<CellKind>& input) {
  switch (e.kind) {
    case CellExpr::Kind::Const:
      return CellKind::scalar();
    case CellExpr::Kind::Column:
      return input[static_cast<size_t>(e.column)];
    case CellExpr::Kind::Call:
      return e.fn == "crossentropy" ? CellKind::scalar() : CellKind::tensor();
    case CellExpr::Kind::Binary: {
      CellKind a = expr_kind(e.args[0], input);
      CellKind b = expr_kind(e.args[1], input);
      return (a.is_tensor() || b.is_tensor()) ? CellKind::tensor() : CellKind::scalar();
    }
  }
  throw Error(ErrorKind::Internal, "bad cell expression");
}

bool scalar_compare(CmpOp op, double l, double r) {
  switch (op) {
    case CmpOp::Eq: return l == r;
    case CmpOp::Ne: return l != r;
    case CmpOp::Lt: return l < r;
    case CmpOp::Le: return l <= r;
    case CmpOp::Gt: return l > r;
    case CmpOp::Ge: return l >= r;
  }
  throw Error(ErrorKind::Internal, "bad comparison");
}

double scalar_operand(const Cell& c) {
  if (!is_scalar(c)) {
    throw Error(ErrorKind::Type, "comparison operands must be scalars");
  }
  return as_scalar(c);
}

std::string scalar_key(const Cell& c, const char* what) {
  if (!is_scalar(c)) {
    throw Error(ErrorKind::Type, std::string(what) + " must be scalars");
  }
  std::string bytes;
  append_cell_bytes(bytes, c);
  return bytes;
}

Relation eval_scan(const RaNode& node, const Catalog& catalog) {
  const Relation* base = catalog.base_table(node.scan_name);
  if (!base) {
    throw Error(ErrorKind::MissingInput,
                "base table '" + node.scan_name + "' has no loaded data");
  }
  return *base;
}

Relation eval_project(const RaNode& node, const Relation& in) {
  std::vector<CellKind> kinds;
  kinds.reserve(node.project.size());
  for (int pos : node.project) kinds.push_back(in.kinds[static_cast<size_t>(pos)]);
  Relation out = make_relation(node.columns, std::move(kinds));
  for (const auto& row : in.rows) {
    std::vector<Cell> cells;
    cells.reserve(node.project.size());
    for (int pos : node.project) cells.push_back(row[static_cast<size_t>(pos)]);
    out.add_row(std::move(cells));
  }
  return out;
}

Relation eval_map(const RaNode& node, const Relation& in) {
  std::vector<CellKind> kinds;
  kinds.reserve(node.maps.size());
  for (const auto& m : node.maps) kinds.push_back(expr_kind(m, in.kinds));
  Relation out = make_relation(node.columns, std::move(kinds));
  for (const auto& row : in.rows) {
    std::vector<Cell> cells;
    cells.reserve(node.maps.size());
    for (const auto& m : node.maps) cells.push_back(eval_cell_expr(m, row));
    out.add_row(std::move(cells));
  }
  return out;
}

Relation eval_select(const RaNode& node, const Relation& in) {
  Relation out = make_relation(node.columns, in.kinds);
  for (const auto& row : in.rows) {
    bool keep = true;
    for (const auto& pred : node.filters) {
      double l = scalar_operand(eval_cell_expr(pred.lhs, row));
      double r = scalar_operand(eval_cell_expr(pred.rhs, row));
      if (!scalar_compare(pred.op, l, r)) {
        keep = false;
        break;
      }
    }
    if (keep) out.add_row(row);
  }
  return out;
}

Relation eval_join(const RaNode& node, const Relation& left, const Relation& right) {
  std::vector<CellKind> kinds = left.kinds;
  kinds.insert(kinds.end(), right.kinds.begin(), right.kinds.end());
  Relation out = make_relation(node.columns, std::move(kinds));
  auto emit = [&](const std::vector<Cell>& l, const std::vector<Cell>& r) {
    std::vector<Cell> cells;
    cells.reserve(l.size() + r.size());
    cells.insert(cells.end(), l.begin(), l.end());
    cells.insert(cells.end(), r.begin(), r.end());
    out.add_row(std::move(cells));
  };
  if (node.join_keys.empty()) {
    for (const auto& l : left.rows) {
      for (const auto& r : right.rows) emit(l, r);
    }
    return out;
  }
  bool build_left = left.rows.size() <= right.rows.size();
  const Relation& build = build_left ? left : right;
  const Relation& probe = build_left ? right : left;
  auto key_of = [&](const std::vector<Cell>& row, bool from_left) {
    std::string key;
    for (const auto& [lpos, rpos] : node.join_keys) {
      int pos = from_left ? lpos : rpos;
      key += scalar_key(row[static_cast<size_t>(pos)], "join keys");
    }
    return key;
  };
  std::unordered_map<std::string, std::vector<size_t>> table;
  for (size_t i = 0; i < build.rows.size(); ++i) {
    table[key_of(build.rows[i], build_left)].push_back(i);
  }
  for (const auto& p : probe.rows) {
    auto it = table.find(key_of(p, !build_left));
    if (it == table.end()) continue;
    for (size_t bi : it->second) {
      const auto& b = build.rows[bi];
      if (build_left) {
        emit(b, p);
      } else {
        emit(p, b);
      }
    }
  }
  return out;
}

Relation eval_aggregate(const RaNode& node, const Relation& in) {
  // Inputs are re-sorted canonically so the floating-point accumulation
  // order (and with it every downstream byte) is independent of how the
  // producing frame happened to order its rows.
  Relation sorted = in;
  sort_rows_canonical(sorted);

  std::vector<CellKind> kinds;
  for (int pos : node.group_keys) kinds.push_back(in.kinds[static_cast<size_t>(pos)]);
  for (int pos : node.agg_args) kinds.push_back(in.kinds[static_cast<size_t>(pos)]);
  Relation out = make_relation(node.columns, std::move(kinds));

  std::unordered_map<std::string, size_t> group_at;
  std::vector<std::vector<Cell>> groups;
  for (const auto& row : sorted.rows) {
    std::string key;
    for (int pos : node.group_keys) {
      key += scalar_key(row[static_cast<size_t>(pos)], "grouping keys");
    }
    auto [it, inserted] = group_at.try_emplace(key, groups.size());
    if (inserted) {
      std::vector<Cell> cells;
      for (int pos : node.group_keys) cells.push_back(row[static_cast<size_t>(pos)]);
      for (int pos : node.agg_args) cells.push_back(row[static_cast<size_t>(pos)]);
      groups.push_back(std::move(cells));
      continue;
    }
    std::vector<Cell>& acc = groups[it->second];
    for (size_t k = 0; k < node.agg_args.size(); ++k) {
      Cell& sum = acc[node.group_keys.size() + k];
      const Cell& val = row[static_cast<size_t>(node.agg_args[k])];
      if (is_scalar(sum) != is_scalar(val)) {
        throw Error(ErrorKind::Type, "SUM over a column with mixed cell kinds");
      }
      if (is_scalar(sum)) {
        sum = as_scalar(sum) + as_scalar(val);
      } else {
        sum = add(as_tensor(sum), as_tensor(val));
      }
    }
  }
  for (auto& g : groups) out.add_row(std::move(g));
  return out;
}

Relation eval_union(const RaNode& node, const std::vector<const Relation*>& inputs) {
  const Relation& first = *inputs[0];
  for (const Relation* in : inputs) {
    for (size_t c = 0; c < first.kinds.size(); ++c) {
      if (in->kinds[c].tag != first.kinds[c].tag) {
        throw Error(ErrorKind::Type, "UNION inputs disagree on column kinds");
      }
    }
  }
  Relation out = make_relation(node.columns, first.kinds);
  for (const Relation* in : inputs) {
    for (const auto& row : in->rows) out.add_row(row);
  }
  return out;
}

}  // namespace

Relation eval_operator(const RaNode& node, const std::vector<const Relation*>& inputs,
                       const Catalog& catalog) {
  switch (node.kind) {
    case OpKind::Scan: return eval_scan(node, catalog);
    case OpKind::Values: return node.values;
    case OpKind::Project: return eval_project(node, *inputs[0]);
    case OpKind::Map: return eval_map(node, *inputs[0]);
    case OpKind::Select: return eval_select(node, *inputs[0]);
    case OpKind::Join: return eval_join(node, *inputs[0], *inputs[1]);
    case OpKind::Aggregate: return eval_aggregate(node, *inputs[0]);
    case OpKind::Union: return eval_union(node, inputs);
    case OpKind::Sink: return *inputs[0];
  }
  throw Error(ErrorKind::Internal, "bad operator kind");
}

uint64_t realized_breakers(const std::vector<FrameReport>& reports) {
  uint64_t total = 0;
  for (const auto& r : reports) {
    total += static_cast<uint64_t>(r.spill_events) + static_cast<uint64_t>(r.cross_frame_edges);
  }
  return total;
}

Engine::Engine(const PlanDag& dag, const Catalog& catalog, MaterializationStore& store)
    : dag_(dag), catalog_(catalog), store_(store), consumers_(dag.consumers()) {}

void Engine::account(uint64_t bytes, int node_id) {
  scratch_bytes_ += bytes;
  peak_bytes_ = std::max(peak_bytes_, scratch_bytes_);
  if (scratch_bytes_ > byte_budget_) {
    std::ostringstream os;
    os << "working set of " << scratch_bytes_ << " bytes after node " << node_id
       << " exceeds the budget of " << byte_budget_ << " bytes";
    throw Error(ErrorKind::ResourceLimit, os.str());
  }
}

const Relation* Engine::fetch_input(int producer, int frame_id,
                                    const std::vector<int>& assignment) {
  auto hit = scratch_.find(producer);
  if (hit != scratch_.end()) return &hit->second;
  auto loaded = loaded_.find(producer);
  if (loaded != loaded_.end()) return loaded->second;
  if (assignment[static_cast<size_t>(producer)] == frame_id) {
    throw Error(ErrorKind::Internal,
                "node " + std::to_string(producer) + " evaluated out of order");
  }
  const Relation& rel = store_.get("node/" + std::to_string(producer));
  loaded_[producer] = &rel;
  account(relation_bytes(rel), producer);
  return &rel;
}

void Engine::write_sink(const RaNode& node, const Relation& input) {
  switch (node.sink_kind) {
    case SinkKind::Table:
      store_.put("table/" + node.sink_table.to_string(), input);
      return;
    case SinkKind::Result:
      store_.put("result/" + node.sink_label, input);
      return;
    case SinkKind::Export: {
      fs::path path = store_.exports_dir() / node.sink_path;
      fs::create_directories(path.parent_path());
      write_relation_csv(path.string(), input);
      return;
    }
  }
  throw Error(ErrorKind::Internal, "bad sink kind");
}

FrameReport Engine::execute_frame(const std::vector<int>& nodes, int frame_id,
                                  const std::vector<int>& assignment) {
  if (assignment.size() != dag_.nodes.size()) {
    throw Error(ErrorKind::Internal, "assignment size does not match plan");
  }
  scratch_.clear();
  loaded_.clear();
  scratch_bytes_ = 0;
  peak_bytes_ = 0;

  FrameReport report;
  report.frame = frame_id;
  report.nodes = nodes;
  for (int id : nodes) {
    const RaNode& node = dag_.node(id);
    std::vector<const Relation*> inputs;
    inputs.reserve(node.inputs.size());
    for (int producer : node.inputs) {
      inputs.push_back(fetch_input(producer, frame_id, assignment));
    }

    if (node.kind == OpKind::Sink) {
      write_sink(node, *inputs[0]);
      scratch_.emplace(id, Relation{});
    } else {
      Relation out = eval_operator(node, inputs, catalog_);
      uint64_t bytes = relation_bytes(out);
      scratch_.emplace(id, std::move(out));
      account(bytes, id);
    }

    int intra = 0, later = 0;
    for (int consumer : consumers_[static_cast<size_t>(id)]) {
      int cf = assignment[static_cast<size_t>(consumer)];
      if (cf == frame_id) {
        ++intra;
      } else if (cf > frame_id) {
        ++later;
      } else {
        throw Error(ErrorKind::Internal, "consumer scheduled before its producer");
      }
    }
    const Relation& produced = scratch_.at(id);
    if (intra >= 1) report.pipelined_edges += 1;
    if (intra >= 2) {
      report.spill_events += 1;
      store_.put("spill/" + std::to_string(id), produced);
    }
    if (later >= 1) {
      report.cross_frame_edges += later;
      store_.put("node/" + std::to_string(id), produced);
    }
  }
  report.peak_bytes = peak_bytes_;
  scratch_.clear();
  loaded_.clear();
  scratch_bytes_ = 0;
  return report;
}

std::vector<FrameReport> Engine::run(const CutResult& cut) {
  std::vector<std::vector<int>> frames(static_cast<size_t>(cut.frame_count));
  for (size_t id = 0; id < cut.assignment.size(); ++id) {
    frames[static_cast<size_t>(cut.assignment[id])].push_back(static_cast<int>(id));
  }
  std::vector<FrameReport> reports;
  reports.reserve(frames.size());
  for (int f = 0; f < cut.frame_count; ++f) {
    reports.push_back(execute_frame(frames[static_cast<size_t>(f)], f, cut.assignment));
  }
  store_.flush();
  return reports;
}

std::vector<FrameReport> Engine::run_monolithic() {
  std::vector<int> all(dag_.nodes.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  std::vector<int> assignment(dag_.nodes.size(), 0);
  std::vector<FrameReport> reports{execute_frame(all, 0, assignment)};
  store_.flush();
  return reports;
}

}  // namespace recql
