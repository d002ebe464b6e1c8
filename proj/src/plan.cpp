#include "recql/plan.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "recql/errors.hpp"
#include "recql/util.hpp"

namespace recql {

using nlohmann::json;

const char* op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::Scan: return "Scan";
    case OpKind::Values: return "Values";
    case OpKind::Project: return "Project";
    case OpKind::Map: return "Map";
    case OpKind::Select: return "Select";
    case OpKind::Join: return "Join";
    case OpKind::Aggregate: return "Aggregate";
    case OpKind::Union: return "Union";
    case OpKind::Sink: return "Sink";
  }
  return "?";
}

bool CellExpr::operator==(const CellExpr& o) const {
  return kind == o.kind && value == o.value && column == o.column && fn == o.fn && op == o.op &&
         args == o.args;
}

int PlanDag::add_node(RaNode node) {
  node.id = static_cast<int>(nodes.size());
  nodes.push_back(std::move(node));
  return nodes.back().id;
}

std::vector<std::pair<int, int>> PlanDag::edges() const {
  std::vector<std::pair<int, int>> out;
  for (const RaNode& n : nodes) {
    for (int in : n.inputs) {
      out.emplace_back(in, n.id);
    }
  }
  return out;
}

std::vector<std::vector<int>> PlanDag::consumers() const {
  std::vector<std::vector<int>> out(nodes.size());
  for (const RaNode& n : nodes) {
    for (int in : n.inputs) {
      out[static_cast<size_t>(in)].push_back(n.id);
    }
  }
  return out;
}

void PlanDag::validate() const {
  for (size_t i = 0; i < nodes.size(); ++i) {
    const RaNode& n = nodes[i];
    if (n.id != static_cast<int>(i)) {
      throw Error(ErrorKind::Internal, "node id " + std::to_string(n.id) + " at position " +
                                           std::to_string(i));
    }
    for (int in : n.inputs) {
      if (in < 0 || in >= n.id) {
        throw Error(ErrorKind::Internal, "node " + std::to_string(n.id) +
                                             " consumes out-of-order input " +
                                             std::to_string(in));
      }
    }
    auto input_width = [&](size_t k) { return nodes[static_cast<size_t>(n.inputs[k])].columns.size(); };
    switch (n.kind) {
      case OpKind::Scan:
      case OpKind::Values:
        if (!n.inputs.empty()) throw Error(ErrorKind::Internal, "source node with inputs");
        if (n.kind == OpKind::Values && n.values.ncols() != n.columns.size()) {
          throw Error(ErrorKind::Internal, "values width mismatch");
        }
        break;
      case OpKind::Project:
        if (n.inputs.size() != 1) throw Error(ErrorKind::Internal, "Project takes one input");
        if (n.project.size() != n.columns.size()) {
          throw Error(ErrorKind::Internal, "Project width mismatch");
        }
        for (int p : n.project) {
          if (p < 0 || static_cast<size_t>(p) >= input_width(0)) {
            throw Error(ErrorKind::Internal, "Project position out of range");
          }
        }
        break;
      case OpKind::Map:
        if (n.inputs.size() != 1 || n.maps.size() != n.columns.size()) {
          throw Error(ErrorKind::Internal, "Map shape mismatch");
        }
        break;
      case OpKind::Select:
        if (n.inputs.size() != 1 || n.columns.size() != input_width(0)) {
          throw Error(ErrorKind::Internal, "Select shape mismatch");
        }
        break;
      case OpKind::Join:
        if (n.inputs.size() != 2 || n.columns.size() != input_width(0) + input_width(1)) {
          throw Error(ErrorKind::Internal, "Join shape mismatch");
        }
        break;
      case OpKind::Aggregate:
        if (n.inputs.size() != 1 ||
            n.columns.size() != n.group_keys.size() + n.agg_args.size()) {
          throw Error(ErrorKind::Internal, "Aggregate shape mismatch");
        }
        break;
      case OpKind::Union:
        if (n.inputs.size() < 2) throw Error(ErrorKind::Internal, "Union needs two inputs");
        for (size_t k = 0; k < n.inputs.size(); ++k) {
          if (input_width(k) != n.columns.size()) {
            throw Error(ErrorKind::Internal, "Union width mismatch");
          }
        }
        break;
      case OpKind::Sink:
        if (n.inputs.size() != 1) throw Error(ErrorKind::Internal, "Sink takes one input");
        break;
    }
  }
  for (int s : sinks) {
    if (s < 0 || static_cast<size_t>(s) >= nodes.size() || nodes[static_cast<size_t>(s)].kind != OpKind::Sink) {
      throw Error(ErrorKind::Internal, "sink list entry is not a Sink node");
    }
  }
}

size_t count_operators(const PlanDag& dag, OpKind kind) {
  size_t n = 0;
  for (const RaNode& node : dag.nodes) {
    if (node.kind == kind) ++n;
  }
  return n;
}

// ---- JSON ------------------------------------------------------------------

namespace {

json cell_expr_to_json(const CellExpr& e) {
  json j;
  switch (e.kind) {
    case CellExpr::Kind::Const:
      j["const"] = e.value;
      break;
    case CellExpr::Kind::Column:
      j["col"] = e.column;
      break;
    case CellExpr::Kind::Call: {
      j["fn"] = e.fn;
      json args = json::array();
      for (const auto& a : e.args) args.push_back(cell_expr_to_json(a));
      j["args"] = std::move(args);
      break;
    }
    case CellExpr::Kind::Binary: {
      j["op"] = std::string(1, e.op);
      json args = json::array();
      for (const auto& a : e.args) args.push_back(cell_expr_to_json(a));
      j["args"] = std::move(args);
      break;
    }
  }
  return j;
}

CellExpr cell_expr_from_json(const json& j) {
  CellExpr e;
  if (j.contains("const")) {
    e.kind = CellExpr::Kind::Const;
    e.value = j["const"].get<double>();
  } else if (j.contains("col")) {
    e.kind = CellExpr::Kind::Column;
    e.column = j["col"].get<int>();
  } else if (j.contains("fn")) {
    e.kind = CellExpr::Kind::Call;
    e.fn = j["fn"].get<std::string>();
    for (const auto& a : j["args"]) e.args.push_back(cell_expr_from_json(a));
  } else {
    e.kind = CellExpr::Kind::Binary;
    e.op = j["op"].get<std::string>()[0];
    for (const auto& a : j["args"]) e.args.push_back(cell_expr_from_json(a));
  }
  return e;
}

const char* cmp_name(CmpOp op) { return cmp_op_text(op); }

CmpOp cmp_from_name(const std::string& s) {
  if (s == "=") return CmpOp::Eq;
  if (s == "<>") return CmpOp::Ne;
  if (s == "<") return CmpOp::Lt;
  if (s == "<=") return CmpOp::Le;
  if (s == ">") return CmpOp::Gt;
  if (s == ">=") return CmpOp::Ge;
  throw Error(ErrorKind::Io, "bad comparison operator '" + s + "' in plan");
}

json relation_to_json(const Relation& rel) {
  json j;
  j["columns"] = rel.columns;
  json kinds = json::array();
  for (const auto& k : rel.kinds) kinds.push_back(k.to_string());
  j["kinds"] = std::move(kinds);
  json rows = json::array();
  for (const auto& row : rel.rows) {
    json jr = json::array();
    for (const auto& cell : row) {
      if (is_scalar(cell)) {
        jr.push_back(as_scalar(cell));
      } else {
        jr.push_back(format_cell_text(cell));
      }
    }
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  return j;
}

Relation relation_from_json(const json& j) {
  std::vector<std::string> columns = j["columns"].get<std::vector<std::string>>();
  std::vector<CellKind> kinds;
  for (const auto& k : j["kinds"]) kinds.push_back(cell_kind_from_text(k.get<std::string>()));
  Relation rel = make_relation(std::move(columns), std::move(kinds));
  for (const auto& jr : j["rows"]) {
    std::vector<Cell> row;
    size_t c = 0;
    for (const auto& cell : jr) {
      if (cell.is_number()) {
        row.emplace_back(cell.get<double>());
      } else {
        row.emplace_back(parse_tensor_text(cell.get<std::string>()));
      }
      ++c;
    }
    (void)c;
    rel.add_row(std::move(row));
  }
  return rel;
}

json key_to_json(const InstanceKey& key) {
  json j;
  j["name"] = key.name;
  j["indices"] = key.indices;
  return j;
}

InstanceKey key_from_json(const json& j) {
  InstanceKey key;
  key.name = j["name"].get<std::string>();
  key.indices = j["indices"].get<std::vector<long long>>();
  return key;
}

}  // namespace

std::string plan_to_json(const PlanDag& dag) {
  json out;
  out["version"] = 1;
  json nodes = json::array();
  for (const RaNode& n : dag.nodes) {
    json jn;
    jn["id"] = n.id;
    jn["kind"] = op_kind_name(n.kind);
    jn["inputs"] = n.inputs;
    jn["columns"] = n.columns;
    switch (n.kind) {
      case OpKind::Scan:
        jn["table"] = n.scan_name;
        break;
      case OpKind::Values:
        jn["values"] = relation_to_json(n.values);
        break;
      case OpKind::Project:
        jn["project"] = n.project;
        break;
      case OpKind::Map: {
        json maps = json::array();
        for (const auto& m : n.maps) maps.push_back(cell_expr_to_json(m));
        jn["maps"] = std::move(maps);
        break;
      }
      case OpKind::Select: {
        json filters = json::array();
        for (const auto& f : n.filters) {
          json jf;
          jf["lhs"] = cell_expr_to_json(f.lhs);
          jf["op"] = cmp_name(f.op);
          jf["rhs"] = cell_expr_to_json(f.rhs);
          filters.push_back(std::move(jf));
        }
        jn["filters"] = std::move(filters);
        break;
      }
      case OpKind::Join: {
        json keys = json::array();
        for (const auto& [l, r] : n.join_keys) keys.push_back(json::array({l, r}));
        jn["keys"] = std::move(keys);
        break;
      }
      case OpKind::Aggregate:
        jn["group_keys"] = n.group_keys;
        jn["agg_args"] = n.agg_args;
        break;
      case OpKind::Union:
        break;
      case OpKind::Sink:
        jn["sink"] = n.sink_kind == SinkKind::Table    ? "table"
                     : n.sink_kind == SinkKind::Result ? "result"
                                                       : "export";
        if (n.sink_kind == SinkKind::Table) jn["table"] = key_to_json(n.sink_table);
        if (n.sink_kind == SinkKind::Result) jn["label"] = n.sink_label;
        if (n.sink_kind == SinkKind::Export) {
          jn["table"] = key_to_json(n.sink_table);
          jn["path"] = n.sink_path;
        }
        break;
    }
    nodes.push_back(std::move(jn));
  }
  out["nodes"] = std::move(nodes);
  out["sinks"] = dag.sinks;
  json prov = json::array();
  for (const auto& [id, key] : dag.provenance_key) {
    json jp;
    jp["node"] = id;
    jp["instance"] = key_to_json(key);
    auto it = dag.provenance_span.find(id);
    if (it != dag.provenance_span.end() && it->second.valid()) {
      jp["line"] = it->second.line;
      jp["column"] = it->second.column;
    }
    prov.push_back(std::move(jp));
  }
  out["provenance"] = std::move(prov);
  return out.dump(2);
}

PlanDag plan_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Io, std::string("plan is not valid JSON: ") + e.what());
  }
  PlanDag dag;
  for (const auto& jn : j.at("nodes")) {
    RaNode n;
    std::string kind = jn.at("kind").get<std::string>();
    n.inputs = jn.at("inputs").get<std::vector<int>>();
    n.columns = jn.at("columns").get<std::vector<std::string>>();
    if (kind == "Scan") {
      n.kind = OpKind::Scan;
      n.scan_name = jn.at("table").get<std::string>();
    } else if (kind == "Values") {
      n.kind = OpKind::Values;
      n.values = relation_from_json(jn.at("values"));
    } else if (kind == "Project") {
      n.kind = OpKind::Project;
      n.project = jn.at("project").get<std::vector<int>>();
    } else if (kind == "Map") {
      n.kind = OpKind::Map;
      for (const auto& m : jn.at("maps")) n.maps.push_back(cell_expr_from_json(m));
    } else if (kind == "Select") {
      n.kind = OpKind::Select;
      for (const auto& f : jn.at("filters")) {
        PredicateExpr p;
        p.lhs = cell_expr_from_json(f.at("lhs"));
        p.op = cmp_from_name(f.at("op").get<std::string>());
        p.rhs = cell_expr_from_json(f.at("rhs"));
        n.filters.push_back(std::move(p));
      }
    } else if (kind == "Join") {
      n.kind = OpKind::Join;
      for (const auto& k : jn.at("keys")) {
        n.join_keys.emplace_back(k[0].get<int>(), k[1].get<int>());
      }
    } else if (kind == "Aggregate") {
      n.kind = OpKind::Aggregate;
      n.group_keys = jn.at("group_keys").get<std::vector<int>>();
      n.agg_args = jn.at("agg_args").get<std::vector<int>>();
    } else if (kind == "Union") {
      n.kind = OpKind::Union;
    } else if (kind == "Sink") {
      n.kind = OpKind::Sink;
      std::string sk = jn.at("sink").get<std::string>();
      if (sk == "table") {
        n.sink_kind = SinkKind::Table;
        n.sink_table = key_from_json(jn.at("table"));
      } else if (sk == "result") {
        n.sink_kind = SinkKind::Result;
        n.sink_label = jn.at("label").get<std::string>();
      } else {
        n.sink_kind = SinkKind::Export;
        n.sink_table = key_from_json(jn.at("table"));
        n.sink_path = jn.at("path").get<std::string>();
      }
    } else {
      throw Error(ErrorKind::Io, "unknown operator kind '" + kind + "' in plan");
    }
    dag.add_node(std::move(n));
  }
  dag.sinks = j.at("sinks").get<std::vector<int>>();
  if (j.contains("provenance")) {
    for (const auto& jp : j["provenance"]) {
      int id = jp.at("node").get<int>();
      dag.provenance_key.emplace(id, key_from_json(jp.at("instance")));
      if (jp.contains("line")) {
        dag.provenance_span.emplace(id, SourceSpan{jp["line"].get<int>(),
                                                   jp.value("column", 0)});
      }
    }
  }
  dag.validate();
  return dag;
}

std::string plan_to_dot(const PlanDag& dag) {
  std::ostringstream out;
  out << "digraph plan {\n  rankdir=BT;\n  node [shape=box, fontname=\"monospace\"];\n";
  for (const RaNode& n : dag.nodes) {
    std::string label;
    switch (n.kind) {
      case OpKind::Scan: label = "Scan " + n.scan_name; break;
      case OpKind::Values: label = "Values(" + std::to_string(n.values.rows.size()) + ")"; break;
      case OpKind::Project: label = "\xcf\x80"; break;           // pi
      case OpKind::Map: label = "f"; break;
      case OpKind::Select: label = "\xcf\x83"; break;            // sigma
      case OpKind::Join: label = "\xe2\x8b\x88"; break;          // bowtie
      case OpKind::Aggregate: label = "\xce\xa3"; break;         // Sigma
      case OpKind::Union: label = "\xe2\x88\xaa"; break;         // cup
      case OpKind::Sink:
        label = n.sink_kind == SinkKind::Table    ? "Sink " + n.sink_table.to_string()
                : n.sink_kind == SinkKind::Result ? "Sink result:" + n.sink_label
                                                  : "Sink export:" + n.sink_path;
        break;
    }
    out << "  n" << n.id << " [label=\"" << n.id << ": " << label << "\"];\n";
  }
  for (const auto& [from, to] : dag.edges()) {
    out << "  n" << from << " -> n" << to << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace recql
