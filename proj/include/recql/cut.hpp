#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recql/plan.hpp"

namespace recql {

// Observed fractions of pipelined executions per producer/consumer operator
// kind pair. Recording an existing pair overwrites its fraction.
class WorkloadHistory {
public:
  void record(OpKind producer, OpKind consumer, double fraction);
  std::optional<double> fraction(OpKind producer, OpKind consumer) const;
  size_t size() const { return fractions_.size(); }

  static WorkloadHistory from_json(const std::string& text);
  std::string to_json() const;

private:
  std::map<std::pair<int, int>, double> fractions_;
};

// Per-edge probability that the edge pipelines when both ends share a frame.
// Cutting the edge forfeits that probability, so the expected number of
// induced pipeline breakers is the sum of p over cut edges.
class PipelineBelief {
public:
  // Derivation per edge (i, j), with k the number of consumers of i:
  //   base = 1 when j is Select or Aggregate (always pipelinable),
  //          else the history fraction for (kind_i, kind_j), else default_f;
  //   p    = base / k  (a producer feeding k consumers pipelines with one).
  static PipelineBelief from_plan(const PlanDag& dag, const WorkloadHistory& history,
                                  double default_f = 0.5);
  // All edges p = 1: minimizes the plain number of cut edges.
  static PipelineBelief uniform(const PlanDag& dag);
  // Explicit edge list for tests and hand-built graphs.
  static PipelineBelief from_edges(int node_count,
                                   const std::vector<std::tuple<int, int, double>>& edges);

  // Throws NotAnEdge when (producer, consumer) is not a dag edge.
  double probability(int producer, int consumer) const;
  int node_count() const { return node_count_; }

private:
  std::unordered_map<uint64_t, double> p_;
  int node_count_ = 0;
};

struct CutResult {
  std::vector<int> assignment;  // node id -> frame id (dense, 0-based)
  int frame_count = 0;
  std::vector<bool> relaxed;    // per frame: size constraints were waived
  double total_cost = 0.0;      // expected induced pipeline breakers
};

// Sum of p over edges whose endpoints live in different frames. Every node
// must be assigned.
double cut_cost(const PlanDag& dag, const PipelineBelief& belief,
                const std::vector<int>& assignment);

struct GrowResult {
  bool found = false;
  std::vector<int> frame;  // sorted node ids
  double cost = 0.0;       // frame-local boundary cost
};

// Grows one frame from `start` over nodes unassigned in `assignment`
// (entry -1). The frame seeds with the unassigned producer closure of the
// start; when that closure alone exceeds max_frame there is no candidate.
// Growth repeatedly adds the adjacent node (with its closure) of minimum
// boundary-cost delta; every intermediate frame of size at least min_frame
// is recorded and the cheapest recorded frame wins (ties: smaller, then
// lexicographically smaller membership).
GrowResult greedy_grow_frame(const PlanDag& dag, const PipelineBelief& belief, int start,
                             size_t min_frame, size_t max_frame,
                             const std::vector<int>& assignment);

enum class StartPolicy { All, First };

// Partitions the dag into frames. Each round grows a candidate frame from
// every unassigned start (or just the lowest id with StartPolicy::First) and
// commits the cheapest one. When fewer than min_frame nodes remain they form
// the final frame as-is; when no start yields a candidate, the smallest
// unassigned producer closure is committed with its size constraints waived
// and flagged relaxed.
CutResult cut_plan(const PlanDag& dag, const PipelineBelief& belief, size_t min_frame,
                   size_t max_frame, StartPolicy starts = StartPolicy::All);

// Exact minimum over all order-valid partitions by bitmask DP; frames are
// arbitrary producer-closed subsets of size min..max (the final frame may be
// smaller when fewer nodes remain). Throws TooLarge past 12 nodes.
double oracle_cut(const PlanDag& dag, const PipelineBelief& belief, size_t min_frame,
                  size_t max_frame);

// Checks that the assignment is a complete partition, every edge satisfies
// assignment[producer] <= assignment[consumer], and frame sizes respect
// min/max except for relaxed frames and an undersized final frame.
void validate_cut(const PlanDag& dag, const CutResult& cut, size_t min_frame,
                  size_t max_frame);

std::string cut_to_json(const CutResult& cut);
CutResult cut_from_json(const std::string& text);
std::string cut_to_dot(const PlanDag& dag, const CutResult& cut);

}  // namespace recql
