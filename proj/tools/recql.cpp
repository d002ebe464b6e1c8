#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "recql/driver.hpp"
#include "recql/errors.hpp"
#include "recql/ffnn.hpp"
#include "recql/parser.hpp"

using namespace recql;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    throw Error(ErrorKind::Io, "cannot read '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.good()) {
    throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  }
  out << text;
}

// LOAD paths resolve against --data when given, else the program's directory.
fs::path data_base(const std::string& program_path, const std::string& data_dir) {
  if (!data_dir.empty()) return data_dir;
  return fs::path(program_path).parent_path();
}

struct CutFlags {
  size_t min_frame = 8;
  size_t max_frame = 64;
  std::string cost_model = "optimized";
  std::string starts = "all";
  double default_f = 0.5;
  std::string history;
};

void add_cut_flags(CLI::App* cmd, CutFlags& flags) {
  cmd->add_option("--min-frame", flags.min_frame, "Minimum operators per frame");
  cmd->add_option("--max-frame", flags.max_frame, "Maximum operators per frame");
  cmd->add_option("--cost-model", flags.cost_model,
                  "Edge probabilities: optimized (history-based) or uniform (every edge 1)")
      ->check(CLI::IsMember({"optimized", "uniform"}));
  cmd->add_option("--starts", flags.starts,
                  "Frame seeds per round: all unassigned nodes or just the first")
      ->check(CLI::IsMember({"all", "first"}));
  cmd->add_option("--default-f", flags.default_f,
                  "Pipelining fraction assumed for kind pairs without history");
  cmd->add_option("--history", flags.history, "Workload history JSON file");
}

void check_frame_bounds(const CutFlags& flags) {
  if (flags.min_frame == 0 || flags.min_frame > flags.max_frame) {
    throw Error(ErrorKind::Config, "frame bounds need 1 <= min <= max; got min " +
                                       std::to_string(flags.min_frame) + ", max " +
                                       std::to_string(flags.max_frame));
  }
}

RunOptions to_run_options(const CutFlags& flags) {
  RunOptions options;
  options.min_frame = flags.min_frame;
  options.max_frame = flags.max_frame;
  options.uniform_cost = flags.cost_model == "uniform";
  options.starts = flags.starts == "first" ? StartPolicy::First : StartPolicy::All;
  options.default_f = flags.default_f;
  if (!flags.history.empty()) options.history_path = flags.history;
  return options;
}

PipelineBelief belief_for(const PlanDag& dag, const CutFlags& flags) {
  if (flags.cost_model == "uniform") {
    return PipelineBelief::uniform(dag);
  }
  WorkloadHistory history;
  if (!flags.history.empty() && fs::exists(flags.history)) {
    history = WorkloadHistory::from_json(slurp(flags.history));
  }
  return PipelineBelief::from_plan(dag, history, flags.default_f);
}

// Accepts a program (compiled on the fly) or a saved plan JSON file.
PlanDag load_plan(const std::string& input, const std::string& data_dir) {
  if (fs::path(input).extension() == ".json") {
    PlanDag dag = plan_from_json(slurp(input));
    dag.validate();
    return dag;
  }
  return compile_program(parse_program(slurp(input)), data_base(input, data_dir)).dag;
}

size_t distinct_instances(const PlanDag& dag) {
  std::set<InstanceKey> keys;
  for (const auto& [node, key] : dag.provenance_key) {
    keys.insert(key);
  }
  return keys.size();
}

nlohmann::json plan_summary(const CompiledProgram& compiled) {
  nlohmann::json operators;
  for (OpKind kind : {OpKind::Scan, OpKind::Values, OpKind::Project, OpKind::Map,
                      OpKind::Select, OpKind::Join, OpKind::Aggregate, OpKind::Union,
                      OpKind::Sink}) {
    operators[op_kind_name(kind)] = count_operators(compiled.dag, kind);
  }
  return nlohmann::json{{"nodes", compiled.dag.nodes.size()},
                        {"edges", compiled.dag.edges().size()},
                        {"sinks", compiled.dag.sinks.size()},
                        {"instances", distinct_instances(compiled.dag)},
                        {"operators", std::move(operators)},
                        {"result_labels", compiled.result_labels}};
}

fs::path resolve_store_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("RECQL_STORE")) {
    if (*env) return env;
  }
  return "recql_store";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive versioned-table SQL: compile, cut, and run programs over chunked matrices"};
  app.require_subcommand(1);

  std::string program_path, data_dir, plan_json_path, dot_path;
  CLI::App* compile_cmd =
      app.add_subcommand("compile", "Lower a program to one monolithic operator plan");
  compile_cmd->add_option("program", program_path, "Program file")->required();
  compile_cmd->add_option("--data", data_dir, "Directory LOAD paths resolve against");
  compile_cmd->add_option("--plan-json", plan_json_path, "Write the full plan JSON here");
  compile_cmd->add_option("--dot", dot_path, "Write Graphviz DOT of the plan here");
  compile_cmd->callback([&] {
    CompiledProgram compiled =
        compile_program(parse_program(slurp(program_path)), data_base(program_path, data_dir));
    if (!plan_json_path.empty()) spit(plan_json_path, plan_to_json(compiled.dag));
    if (!dot_path.empty()) spit(dot_path, plan_to_dot(compiled.dag));
    std::cout << plan_summary(compiled).dump(2) << "\n";
  });

  std::string cut_input, cut_data_dir, cut_json_path, frame_dot_path;
  CutFlags cut_flags;
  bool with_oracle = false;
  CLI::App* cut_cmd = app.add_subcommand("cut", "Partition a plan into pipeline frames");
  cut_cmd->add_option("input", cut_input, "Program file or plan JSON file")->required();
  cut_cmd->add_option("--data", cut_data_dir, "Directory LOAD paths resolve against");
  add_cut_flags(cut_cmd, cut_flags);
  cut_cmd->add_flag("--oracle", with_oracle,
                    "Also report the exact optimum (plans up to 12 nodes)");
  cut_cmd->add_option("--cut-json", cut_json_path, "Write the cut JSON here");
  cut_cmd->add_option("--frame-dot", frame_dot_path, "Write frame-clustered DOT here");
  cut_cmd->callback([&] {
    check_frame_bounds(cut_flags);
    PlanDag dag = load_plan(cut_input, cut_data_dir);
    PipelineBelief belief = belief_for(dag, cut_flags);
    CutResult cut =
        cut_plan(dag, belief, cut_flags.min_frame, cut_flags.max_frame,
                 cut_flags.starts == "first" ? StartPolicy::First : StartPolicy::All);
    validate_cut(dag, cut, cut_flags.min_frame, cut_flags.max_frame);
    if (!cut_json_path.empty()) spit(cut_json_path, cut_to_json(cut));
    if (!frame_dot_path.empty()) spit(frame_dot_path, cut_to_dot(dag, cut));
    nlohmann::json out = nlohmann::json::parse(cut_to_json(cut));
    if (with_oracle) {
      out["oracle_cost"] = oracle_cut(dag, belief, cut_flags.min_frame, cut_flags.max_frame);
    }
    std::cout << out.dump(2) << "\n";
  });

  std::string run_program_path, run_data_dir, store_flag, report_json_path;
  CutFlags run_flags;
  bool monolithic = false, telemetry = false;
  uint64_t byte_budget = 0;
  CLI::App* run_cmd = app.add_subcommand("run", "Execute a program frame by frame");
  run_cmd->add_option("program", run_program_path, "Program file")->required();
  run_cmd->add_option("--data", run_data_dir, "Directory LOAD paths resolve against");
  run_cmd->add_option("--store", store_flag,
                      "Materialization store directory (default: $RECQL_STORE or recql_store)");
  add_cut_flags(run_cmd, run_flags);
  CLI::Option* budget_opt =
      run_cmd->add_option("--byte-budget", byte_budget, "Per-frame working set ceiling in bytes");
  run_cmd->add_flag("--monolithic", monolithic, "Run the whole plan as a single frame");
  run_cmd->add_flag("--telemetry", telemetry,
                    "Fold realized pipelining fractions back into --history");
  run_cmd->add_option("--report-json", report_json_path, "Also write the run report here");
  run_cmd->callback([&] {
    check_frame_bounds(run_flags);
    RunOptions options = to_run_options(run_flags);
    options.monolithic = monolithic;
    options.telemetry = telemetry;
    if (budget_opt->count() > 0) options.byte_budget = byte_budget;
    Program program = parse_program(slurp(run_program_path));
    MaterializationStore store(resolve_store_dir(store_flag));
    RunReport report =
        run_program(program, data_base(run_program_path, run_data_dir), store, options);
    std::string json = run_report_to_json(report);
    if (!report_json_path.empty()) spit(report_json_path, json);
    std::cout << json;
  });

  std::string ffnn_dir = "ffnn";
  FfnnConfig ffnn_config;
  CLI::App* gen_cmd =
      app.add_subcommand("gen-ffnn", "Generate a network training program with its data files");
  gen_cmd->add_option("--out", ffnn_dir, "Output directory");
  gen_cmd->add_option("--layers", ffnn_config.layer_sizes, "Layer sizes, comma separated")
      ->delimiter(',');
  gen_cmd->add_option("--iterations", ffnn_config.iterations, "Training iterations");
  gen_cmd->add_option("--batch", ffnn_config.batch_size, "Rows per batch");
  gen_cmd->add_option("--alpha", ffnn_config.alpha, "Learning rate");
  gen_cmd->add_option("--chunk", ffnn_config.chunk, "Matrix chunk width");
  gen_cmd->add_option("--seed", ffnn_config.seed, "Data and model seed");
  gen_cmd->add_flag("--rotate-batch", ffnn_config.rotate_batch,
                    "Give every iteration a fresh batch via a BATCH column");
  gen_cmd->callback([&] {
    FfnnFiles files = write_ffnn_files(ffnn_config, ffnn_dir);
    nlohmann::json tables = nlohmann::json::array();
    for (const fs::path& table : files.tables) {
      tables.push_back(table.string());
    }
    std::cout << nlohmann::json{{"program", files.program.string()},
                                {"tables", std::move(tables)}}
                     .dump(2)
              << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << e.diagnostic() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
