#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "recql/catalog.hpp"
#include "recql/cut.hpp"
#include "recql/plan.hpp"
#include "recql/store.hpp"

namespace recql {

// What one frame did. Handoffs between operators in the same frame are
// served from RAM; a producer with several same-frame consumers streams
// into the lowest-id one and spills once for the rest; edges into later
// frames always go through the store. Realized pipeline breakers for the
// frame are cross_frame_edges + spill_events.
struct FrameReport {
  int frame = -1;
  std::vector<int> nodes;       // ascending ids, the in-frame execution order
  int pipelined_edges = 0;      // producers streamed into a same-frame consumer
  int spill_events = 0;         // same-frame producers with extra consumers
  int cross_frame_edges = 0;    // edges from this frame into later frames
  uint64_t peak_bytes = 0;      // high-water mark of frame scratch bytes
};

uint64_t realized_breakers(const std::vector<FrameReport>& reports);

// Frame-by-frame evaluator over the store. Scratch (evaluated outputs plus
// inputs reloaded from earlier frames) lives in RAM only for the duration
// of one frame; a cumulative byte check after every operator enforces the
// working-set budget.
class Engine {
public:
  Engine(const PlanDag& dag, const Catalog& catalog, MaterializationStore& store);

  void set_byte_budget(uint64_t bytes) { byte_budget_ = bytes; }
  uint64_t byte_budget() const { return byte_budget_; }

  // `nodes` must be ascending and belong to frame `frame_id` under
  // `assignment`, which classifies each consumer as same-frame or later.
  FrameReport execute_frame(const std::vector<int>& nodes, int frame_id,
                            const std::vector<int>& assignment);

  // Executes every frame of the cut in order.
  std::vector<FrameReport> run(const CutResult& cut);

  // Executes the whole dag as a single frame that never clears scratch.
  std::vector<FrameReport> run_monolithic();

private:
  Relation eval_node(const RaNode& node, const std::vector<const Relation*>& inputs) const;
  const Relation* fetch_input(int producer, int frame_id, const std::vector<int>& assignment);
  void account(uint64_t bytes, int node_id);
  void write_sink(const RaNode& node, const Relation& input);

  const PlanDag& dag_;
  const Catalog& catalog_;
  MaterializationStore& store_;
  std::vector<std::vector<int>> consumers_;
  uint64_t byte_budget_ = 2ull << 30;

  std::unordered_map<int, Relation> scratch_;        // evaluated this frame
  std::unordered_map<int, const Relation*> loaded_;  // reloaded from the store
  uint64_t scratch_bytes_ = 0;
  uint64_t peak_bytes_ = 0;
};

// One operator's output given its input relations; exposed for direct
// kernel-level tests. `node.inputs` sizes and kinds must line up.
Relation eval_operator(const RaNode& node, const std::vector<const Relation*>& inputs,
                       const Catalog& catalog);

}  // namespace recql
