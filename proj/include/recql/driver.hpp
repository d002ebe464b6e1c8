#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "recql/ast.hpp"
#include "recql/catalog.hpp"
#include "recql/cut.hpp"
#include "recql/engine.hpp"
#include "recql/plan.hpp"
#include "recql/store.hpp"

namespace recql {

// Frame-shaping and budget knobs for running a program. The defaults match
// the CLI defaults, so a default-constructed RunOptions runs a program the
// same way a bare `recql run` invocation does.
struct RunOptions {
  size_t min_frame = 8;
  size_t max_frame = 64;
  bool monolithic = false;
  bool uniform_cost = false;  // every edge probability 1 instead of history-based
  StartPolicy starts = StartPolicy::All;
  double default_f = 0.5;
  std::optional<std::string> history_path;  // pipelining history JSON, read if present
  std::optional<uint64_t> byte_budget;
  bool telemetry = false;  // write realized fractions back to history_path
};

// Output of one ad-hoc query, labeled q1, q2, ... by position in the program.
struct QueryResult {
  std::string label;
  Relation rows;
};

struct RunReport {
  // "monolithic", "framed", or "imperative" (statement-by-statement).
  std::string mode;
  int frame_count = 0;
  int step_count = 0;  // imperative mode: queries executed
  double planned_cost = 0.0;  // expected breakers of the chosen cut
  uint64_t realized_breaker_count = 0;
  uint64_t peak_frame_bytes = 0;
  std::vector<FrameReport> frames;
  std::vector<QueryResult> results;
};

std::string run_report_to_json(const RunReport& report);

// A declarative program lowered to its monolithic DAG without executing it.
struct CompiledProgram {
  Catalog catalog;
  PlanDag dag;
  std::vector<std::string> result_labels;  // ad-hoc query labels, program order
};

// Parses LOAD data (paths resolve relative to base_dir), registers every
// definition, and unrolls all sinks (MATERIALIZE, EXPORT, ad-hoc queries,
// EXECUTE blocks with loops expanded) into one DAG. Programs that use
// BULK COLLECT have no static plan and throw Config.
CompiledProgram compile_program(const Program& program, const std::filesystem::path& base_dir);

// Executes a program end to end against the store. Programs without
// BULK COLLECT compile into one DAG, are cut per the options (or kept
// monolithic), and run frame by frame. Programs with BULK COLLECT run
// statement by statement in source order: each query executes immediately
// against the current base tables, and BULK COLLECT INTO appends its rows
// to the named loaded table.
RunReport run_program(const Program& program, const std::filesystem::path& base_dir,
                      MaterializationStore& store, const RunOptions& options = {});

}  // namespace recql
