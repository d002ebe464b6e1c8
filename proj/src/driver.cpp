#include "recql/driver.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "recql/csv.hpp"
#include "recql/errors.hpp"
#include "recql/unroll.hpp"

namespace recql {

namespace {

bool items_use_bulk(const std::vector<ExecItem>& items) {
  for (const ExecItem& item : items) {
    if (item.loop) {
      if (items_use_bulk(item.loop->body)) return true;
    } else if (item.stmt->kind == Statement::Kind::AdHocQuery &&
               !item.stmt->bulk_into.empty()) {
      return true;
    }
  }
  return false;
}

bool uses_bulk_collect(const Program& program) {
  for (const Statement& s : program.statements) {
    if (s.kind == Statement::Kind::AdHocQuery && !s.bulk_into.empty()) return true;
    if (s.kind == Statement::Kind::Execute && items_use_bulk(s.exec)) return true;
  }
  return false;
}

// Registers every definition and loads every base table before any sink is
// looked at, so EXECUTE blocks may reference tables defined later in the file.
Catalog register_tables(const Program& program, const std::filesystem::path& base_dir) {
  Catalog catalog;
  for (const Statement& s : program.statements) {
    if (s.kind == Statement::Kind::Define) {
      catalog.register_definition(s.def);
    } else if (s.kind == Statement::Kind::LoadBase) {
      std::vector<std::string> columns;
      std::vector<CellKind> kinds;
      for (const ColumnDecl& col : s.base_columns) {
        columns.push_back(col.name);
        kinds.push_back(col.kind);
      }
      std::filesystem::path file = base_dir / s.base_path;
      try {
        catalog.register_base_table(
            s.base_name, load_relation_csv(file.string(), std::move(columns), std::move(kinds)));
      } catch (const Error& e) {
        if (e.span().valid()) throw;
        throw Error(e.kind(), e.what(), s.span);
      }
    }
  }
  return catalog;
}

// Runs `fn` on every concrete statement of an EXECUTE item list, expanding
// FOR loops under `env`. Bounds evaluate under the bindings in scope; an
// empty range (lower > upper) runs zero iterations.
template <typename Fn>
void walk_items(const std::vector<ExecItem>& items, Binding& env, const Fn& fn) {
  for (const ExecItem& item : items) {
    if (item.loop) {
      const ForLoop& loop = *item.loop;
      long long lo = loop.lower.eval(env);
      long long hi = loop.upper.eval(env);
      size_t depth = env.size();
      for (long long v = lo; v <= hi; ++v) {
        env.bind(loop.var, v);
        walk_items(loop.body, env, fn);
        env.truncate(depth);
      }
    } else {
      fn(*item.stmt);
    }
  }
}

template <typename Fn>
void walk_sink_statements(const Program& program, Binding& env, const Fn& fn) {
  for (const Statement& s : program.statements) {
    if (s.kind == Statement::Kind::Execute) {
      walk_items(s.exec, env, fn);
    } else if (s.kind != Statement::Kind::Define && s.kind != Statement::Kind::LoadBase) {
      fn(s);
    }
  }
}

InstanceKey eval_target(const InstanceRef& ref, const Binding& env) {
  InstanceKey key;
  key.name = ref.name;
  for (const IndexExpr& e : ref.indices) {
    key.indices.push_back(e.eval(env));
  }
  return key;
}

WorkloadHistory load_history(const RunOptions& options) {
  WorkloadHistory history;
  if (options.history_path && std::filesystem::exists(*options.history_path)) {
    std::ifstream in(*options.history_path);
    std::stringstream buf;
    buf << in.rdbuf();
    history = WorkloadHistory::from_json(buf.str());
  }
  return history;
}

// Folds the realized per-edge outcomes of one run into the history file:
// an edge counts as pipelined when both ends share a frame and the consumer
// is the one the producer streams into (the lowest-id same-frame consumer).
// Existing entries for the observed kind pairs are overwritten.
void write_telemetry(const PlanDag& dag, const std::vector<int>& assignment,
                     const RunOptions& options) {
  WorkloadHistory history = load_history(options);
  std::map<std::pair<int, int>, std::pair<int, int>> counts;  // pair -> (pipelined, total)
  std::vector<std::vector<int>> consumers = dag.consumers();
  for (const RaNode& node : dag.nodes) {
    int streamed = -1;
    for (int consumer : consumers[static_cast<size_t>(node.id)]) {
      if (assignment[static_cast<size_t>(consumer)] == assignment[static_cast<size_t>(node.id)]) {
        streamed = consumer;
        break;
      }
    }
    for (int consumer : consumers[static_cast<size_t>(node.id)]) {
      auto& slot = counts[{static_cast<int>(node.kind),
                           static_cast<int>(dag.node(consumer).kind)}];
      slot.first += consumer == streamed ? 1 : 0;
      slot.second += 1;
    }
  }
  for (const auto& [pair, count] : counts) {
    history.record(static_cast<OpKind>(pair.first), static_cast<OpKind>(pair.second),
                   static_cast<double>(count.first) / static_cast<double>(count.second));
  }
  std::ofstream out(*options.history_path, std::ios::trunc);
  out << history.to_json();
}

RunReport run_imperative(const Program& program, const std::filesystem::path& base_dir,
                         MaterializationStore& store, const RunOptions& options) {
  Catalog catalog = register_tables(program, base_dir);
  RunReport report;
  report.mode = "imperative";
  int next_query = 1;
  Binding env;
  walk_sink_statements(program, env, [&](const Statement& s) {
    if (s.kind != Statement::Kind::AdHocQuery) {
      throw Error(ErrorKind::Config,
                  "MATERIALIZE and EXPORT need a declarative program; a program"
                  " with BULK COLLECT runs plain queries only",
                  s.span);
    }
    std::string label = "q" + std::to_string(next_query++);
    Unroller unroller(catalog);
    unroller.add_result(*s.query, label, env);
    PlanDag dag = unroller.finish();
    MaterializationStore step_store(store.root() / ("step" + std::to_string(report.step_count)));
    report.step_count += 1;
    Engine engine(dag, catalog, step_store);
    if (options.byte_budget) engine.set_byte_budget(*options.byte_budget);
    engine.run_monolithic();
    Relation out = step_store.get("result/" + label);
    if (s.bulk_into.empty()) {
      report.results.push_back({std::move(label), std::move(out)});
      return;
    }
    if (!catalog.has_base(s.bulk_into)) {
      throw Error(ErrorKind::MissingInput,
                  "BULK COLLECT target '" + s.bulk_into + "' is not a loaded base table",
                  s.span);
    }
    Relation& base = *catalog.mutable_base_table(s.bulk_into);
    if (base.ncols() != out.ncols()) {
      throw Error(ErrorKind::Type,
                  "BULK COLLECT row width " + std::to_string(out.ncols()) +
                      " does not match table '" + s.bulk_into + "' width " +
                      std::to_string(base.ncols()),
                  s.span);
    }
    for (std::vector<Cell>& row : out.rows) {
      base.add_row(std::move(row));
    }
  });
  return report;
}

}  // namespace

CompiledProgram compile_program(const Program& program, const std::filesystem::path& base_dir) {
  if (uses_bulk_collect(program)) {
    throw Error(ErrorKind::Config,
                "a program with BULK COLLECT runs statement by statement and has"
                " no monolithic plan");
  }
  CompiledProgram compiled;
  compiled.catalog = register_tables(program, base_dir);
  Unroller unroller(compiled.catalog);
  int next_query = 1;
  Binding env;
  walk_sink_statements(program, env, [&](const Statement& s) {
    switch (s.kind) {
      case Statement::Kind::Materialize:
        unroller.add_materialize(eval_target(s.target, env));
        break;
      case Statement::Kind::Export:
        unroller.add_export(eval_target(s.target, env), s.export_path.eval(env));
        break;
      case Statement::Kind::AdHocQuery: {
        std::string label = "q" + std::to_string(next_query++);
        unroller.add_result(*s.query, label, env);
        compiled.result_labels.push_back(std::move(label));
        break;
      }
      default:
        throw Error(ErrorKind::Internal, "unexpected statement kind in sink walk", s.span);
    }
  });
  compiled.dag = unroller.finish();
  return compiled;
}

RunReport run_program(const Program& program, const std::filesystem::path& base_dir,
                      MaterializationStore& store, const RunOptions& options) {
  if (uses_bulk_collect(program)) {
    return run_imperative(program, base_dir, store, options);
  }
  CompiledProgram compiled = compile_program(program, base_dir);
  Engine engine(compiled.dag, compiled.catalog, store);
  if (options.byte_budget) engine.set_byte_budget(*options.byte_budget);
  RunReport report;
  CutResult cut;
  if (options.monolithic) {
    report.mode = "monolithic";
    cut.assignment.assign(compiled.dag.nodes.size(), 0);
    cut.frame_count = 1;
    report.frames = engine.run_monolithic();
  } else {
    report.mode = "framed";
    PipelineBelief belief =
        options.uniform_cost
            ? PipelineBelief::uniform(compiled.dag)
            : PipelineBelief::from_plan(compiled.dag, load_history(options), options.default_f);
    cut = cut_plan(compiled.dag, belief, options.min_frame, options.max_frame, options.starts);
    validate_cut(compiled.dag, cut, options.min_frame, options.max_frame);
    report.planned_cost = cut.total_cost;
    report.frames = engine.run(cut);
  }
  report.frame_count = static_cast<int>(report.frames.size());
  report.realized_breaker_count = realized_breakers(report.frames);
  for (const FrameReport& frame : report.frames) {
    report.peak_frame_bytes = std::max(report.peak_frame_bytes, frame.peak_bytes);
  }
  for (const std::string& label : compiled.result_labels) {
    report.results.push_back({label, store.get("result/" + label)});
  }
  if (options.telemetry && options.history_path) {
    write_telemetry(compiled.dag, cut.assignment, options);
  }
  return report;
}

std::string run_report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["mode"] = report.mode;
  j["frame_count"] = report.frame_count;
  j["step_count"] = report.step_count;
  j["planned_cost"] = report.planned_cost;
  j["realized_breakers"] = report.realized_breaker_count;
  j["peak_frame_bytes"] = report.peak_frame_bytes;
  j["frames"] = nlohmann::json::array();
  for (const FrameReport& frame : report.frames) {
    nlohmann::json f;
    f["frame"] = frame.frame;
    f["nodes"] = frame.nodes;
    f["pipelined_edges"] = frame.pipelined_edges;
    f["spill_events"] = frame.spill_events;
    f["cross_frame_edges"] = frame.cross_frame_edges;
    f["peak_bytes"] = frame.peak_bytes;
    j["frames"].push_back(std::move(f));
  }
  j["results"] = nlohmann::json::array();
  for (const QueryResult& result : report.results) {
    nlohmann::json r;
    r["label"] = result.label;
    r["columns"] = result.rows.columns;
    r["row_count"] = result.rows.rows.size();
    nlohmann::json rows = nlohmann::json::array();
    for (const std::vector<Cell>& row : result.rows.rows) {
      nlohmann::json cells = nlohmann::json::array();
      for (const Cell& cell : row) {
        cells.push_back(format_cell_text(cell));
      }
      rows.push_back(std::move(cells));
    }
    r["rows"] = std::move(rows);
    j["results"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

}  // namespace recql
