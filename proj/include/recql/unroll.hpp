#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "recql/catalog.hpp"
#include "recql/plan.hpp"

namespace recql {

// Compiles concrete table versions into one monolithic operator DAG.
// Each instance is compiled once: a memo maps the instance key to the root
// node of its subplan, and every later reference reuses that root, which
// turns the recursion into shared subgraphs instead of a tree.
class Unroller {
public:
  explicit Unroller(const Catalog& catalog) : catalog_(catalog) {}

  // Recursion guard for definitions whose indices grow without a cycle.
  // The walk is recursive, so the ceiling also protects the call stack.
  void set_max_depth(int depth) { max_depth_ = depth; }

  // Returns the root node id for the instance, compiling it on first use.
  // Throws NoMatch/AmbiguousMatch from resolution, CycleError when an
  // instance depends on itself, DepthLimitError past max_depth.
  int compile_instance(const InstanceKey& key);

  // Compiles a free-standing query under the given variable binding.
  int compile_query(const Query& query, const Binding& binding);

  void add_materialize(const InstanceKey& key);
  void add_export(const InstanceKey& key, const std::string& path);
  void add_result(const Query& query, const std::string& label, const Binding& binding = {});

  PlanDag finish();

  int instances_compiled() const { return instances_compiled_; }
  const std::unordered_map<InstanceKey, int, InstanceKeyHash>& memo() const { return memo_; }

private:
  struct Source {
    int node = -1;
    std::string alias;                 // empty for VALUES
    std::vector<std::string> columns;  // column names of the node
  };
  struct Scope {
    // Per combined column: owning alias (may be empty) and column name.
    std::vector<std::pair<std::string, std::string>> cols;
    const Binding* binding = nullptr;
  };

  int compile_select(const Query& query, const Binding& binding);
  Source compile_from_item(const FromItem& item, const Binding& binding);
  CellExpr compile_cell(const ScalarExpr& expr, const Scope& scope);
  // Resolves a pure column reference within [begin, end) of the scope;
  // returns -1 when it is not a column there. Ambiguity throws.
  int resolve_column(const ScalarExpr& expr, const Scope& scope, size_t begin, size_t end,
                     bool* ambiguous) const;
  int new_node(RaNode node, const SourceSpan& span);

  const Catalog& catalog_;
  PlanDag dag_;
  std::unordered_map<InstanceKey, int, InstanceKeyHash> memo_;
  std::unordered_set<InstanceKey, InstanceKeyHash> in_progress_;
  std::vector<InstanceKey> chain_;
  std::vector<InstanceKey> owner_stack_;
  std::unordered_set<std::string> sunk_;
  int max_depth_ = 5000;
  int depth_ = 0;
  int instances_compiled_ = 0;
  bool finished_ = false;
};

// Convenience: compile materialize targets against a catalog.
PlanDag unroll(const std::vector<InstanceKey>& targets, const Catalog& catalog);

}  // namespace recql
