#include "recql/cut.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "recql/errors.hpp"

namespace recql {
namespace {

uint64_t edge_key(int producer, int consumer) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(producer)) << 32) |
         static_cast<uint32_t>(consumer);
}

OpKind op_kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(OpKind::Sink); ++k) {
    if (name == op_kind_name(static_cast<OpKind>(k))) return static_cast<OpKind>(k);
  }
  throw Error(ErrorKind::Io, "unknown operator kind '" + name + "' in history file");
}

}  // namespace

void WorkloadHistory::record(OpKind producer, OpKind consumer, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::Config, "history fraction must lie in [0, 1]");
  }
  fractions_[{static_cast<int>(producer), static_cast<int>(consumer)}] = fraction;
}

std::optional<double> WorkloadHistory::fraction(OpKind producer, OpKind consumer) const {
  auto it = fractions_.find({static_cast<int>(producer), static_cast<int>(consumer)});
  if (it == fractions_.end()) return std::nullopt;
  return it->second;
}

WorkloadHistory WorkloadHistory::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, std::string("invalid history file: ") + e.what());
  }
  if (!doc.is_array()) {
    throw Error(ErrorKind::Io, "history file must be a JSON array");
  }
  WorkloadHistory history;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("producer") || !entry.contains("consumer") ||
        !entry.contains("fraction")) {
      throw Error(ErrorKind::Io,
                  "history entries need producer, consumer, and fraction fields");
    }
    history.record(op_kind_from_name(entry["producer"].get<std::string>()),
                   op_kind_from_name(entry["consumer"].get<std::string>()),
                   entry["fraction"].get<double>());
  }
  return history;
}

std::string WorkloadHistory::to_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& [key, fraction] : fractions_) {
    doc.push_back({{"producer", op_kind_name(static_cast<OpKind>(key.first))},
                   {"consumer", op_kind_name(static_cast<OpKind>(key.second))},
                   {"fraction", fraction}});
  }
  return doc.dump(2);
}

PipelineBelief PipelineBelief::from_plan(const PlanDag& dag, const WorkloadHistory& history,
                                         double default_f) {
  if (!(default_f >= 0.0 && default_f <= 1.0)) {
    throw Error(ErrorKind::Config, "default pipelining fraction must lie in [0, 1]");
  }
  PipelineBelief belief;
  belief.node_count_ = static_cast<int>(dag.nodes.size());
  auto consumers = dag.consumers();
  for (const auto& [producer, consumer] : dag.edges()) {
    size_t k = consumers[producer].size();
    OpKind ck = dag.node(consumer).kind;
    double base;
    if (ck == OpKind::Select || ck == OpKind::Aggregate) {
      base = 1.0;
    } else {
      base = history.fraction(dag.node(producer).kind, ck).value_or(default_f);
    }
    belief.p_[edge_key(producer, consumer)] = base / static_cast<double>(k);
  }
  return belief;
}

PipelineBelief PipelineBelief::uniform(const PlanDag& dag) {
  PipelineBelief belief;
  belief.node_count_ = static_cast<int>(dag.nodes.size());
  for (const auto& [producer, consumer] : dag.edges()) {
    belief.p_[edge_key(producer, consumer)] = 1.0;
  }
  return belief;
}

PipelineBelief PipelineBelief::from_edges(
    int node_count, const std::vector<std::tuple<int, int, double>>& edges) {
  PipelineBelief belief;
  belief.node_count_ = node_count;
  for (const auto& [producer, consumer, p] : edges) {
    if (producer < 0 || producer >= node_count || consumer < 0 || consumer >= node_count) {
      throw Error(ErrorKind::Config, "edge endpoint out of range");
    }
    belief.p_[edge_key(producer, consumer)] = p;
  }
  return belief;
}

double PipelineBelief::probability(int producer, int consumer) const {
  auto it = p_.find(edge_key(producer, consumer));
  if (it == p_.end()) {
    std::ostringstream os;
    os << "no edge from node " << producer << " to node " << consumer;
    throw Error(ErrorKind::NotAnEdge, os.str());
  }
  return it->second;
}

double cut_cost(const PlanDag& dag, const PipelineBelief& belief,
                const std::vector<int>& assignment) {
  if (assignment.size() != dag.nodes.size()) {
    throw Error(ErrorKind::Internal, "assignment size does not match plan");
  }
  double total = 0.0;
  for (const auto& [producer, consumer] : dag.edges()) {
    if (assignment[producer] < 0 || assignment[consumer] < 0) {
      throw Error(ErrorKind::Internal, "cut cost requires a complete assignment");
    }
    if (assignment[producer] != assignment[consumer]) {
      total += belief.probability(producer, consumer);
    }
  }
  return total;
}

namespace {

// Epoch-stamped scratch shared across grow calls; avoids O(n) clears.
struct GrowScratch {
  explicit GrowScratch(size_t n)
      : frame_mark(n, 0), set_mark(n, 0), seen_mark(n, 0), read_mark(n, 0) {}
  std::vector<int> frame_mark;
  std::vector<int> set_mark;
  std::vector<int> seen_mark;
  std::vector<int> read_mark;
  int frame_epoch = 0;
  int set_epoch = 0;
  int seen_epoch = 0;
  int read_epoch = 0;
  std::vector<int> stack;
};

// Edge probabilities flattened to the dag's adjacency layout: in_p[m][k] is
// the probability of the edge (inputs[k], m), out_p[m][k] of (m, consumers[k]).
// Built once per cut so the grow inner loops skip the hash probe.
struct EdgeProbabilities {
  std::vector<std::vector<double>> in_p;
  std::vector<std::vector<double>> out_p;

  EdgeProbabilities(const PlanDag& dag, const PipelineBelief& belief,
                    const std::vector<std::vector<int>>& consumers) {
    size_t n = dag.nodes.size();
    in_p.resize(n);
    out_p.resize(n);
    for (size_t m = 0; m < n; ++m) {
      const RaNode& node = dag.node(static_cast<int>(m));
      in_p[m].reserve(node.inputs.size());
      for (int input : node.inputs) {
        in_p[m].push_back(belief.probability(input, static_cast<int>(m)));
      }
      out_p[m].reserve(consumers[m].size());
      for (int consumer : consumers[m]) {
        out_p[m].push_back(belief.probability(static_cast<int>(m), consumer));
      }
    }
  }
};

struct GrowContext {
  const PlanDag& dag;
  const EdgeProbabilities& prob;
  const std::vector<std::vector<int>>& consumers;
  const std::vector<int>& assignment;
  size_t min_frame;
  size_t max_frame;
  GrowScratch& scratch;
  // When set, every node whose assignment entry the grow reads is recorded
  // (deduplicated). A grow re-run under an assignment that agrees on all
  // recorded nodes takes the identical path, so callers may cache results
  // until a recorded node gets assigned.
  std::vector<int>* reads = nullptr;
};

void note_read(const GrowContext& ctx, int node) {
  if (!ctx.reads) return;
  GrowScratch& ws = ctx.scratch;
  if (ws.read_mark[node] == ws.read_epoch) return;
  ws.read_mark[node] = ws.read_epoch;
  ctx.reads->push_back(node);
}

// Unassigned transitive producers of `node` (inclusive) that are not yet in
// the frame. Returns false when the collection would exceed `cap`.
bool collect_closure(const GrowContext& ctx, int node, size_t cap, std::vector<int>& out) {
  out.clear();
  GrowScratch& ws = ctx.scratch;
  ++ws.set_epoch;
  ws.stack.clear();
  ws.stack.push_back(node);
  ws.set_mark[node] = ws.set_epoch;
  while (!ws.stack.empty()) {
    int cur = ws.stack.back();
    ws.stack.pop_back();
    out.push_back(cur);
    if (out.size() > cap) return false;
    for (int input : ctx.dag.node(cur).inputs) {
      note_read(ctx, input);
      if (ctx.assignment[input] >= 0) continue;
      if (ws.frame_mark[input] == ws.frame_epoch) continue;
      if (ws.set_mark[input] == ws.set_epoch) continue;
      ws.set_mark[input] = ws.set_epoch;
      ws.stack.push_back(input);
    }
  }
  return true;
}

// Boundary-cost change from merging `addition` (marked with set_epoch) into
// the frame: edges to the frame stop crossing, all other external edges of
// the addition start crossing.
double addition_delta(const GrowContext& ctx, const std::vector<int>& addition) {
  GrowScratch& ws = ctx.scratch;
  double delta = 0.0;
  for (int s : addition) {
    const std::vector<int>& inputs = ctx.dag.node(s).inputs;
    for (size_t k = 0; k < inputs.size(); ++k) {
      int input = inputs[k];
      note_read(ctx, input);
      if (ws.set_mark[input] == ws.set_epoch && ctx.assignment[input] < 0 &&
          ws.frame_mark[input] != ws.frame_epoch) {
        continue;  // internal to the addition
      }
      double p = ctx.prob.in_p[s][k];
      delta += (ws.frame_mark[input] == ws.frame_epoch) ? -p : p;
    }
    const std::vector<int>& consumers = ctx.consumers[s];
    for (size_t k = 0; k < consumers.size(); ++k) {
      int consumer = consumers[k];
      note_read(ctx, consumer);
      if (ws.set_mark[consumer] == ws.set_epoch && ctx.assignment[consumer] < 0 &&
          ws.frame_mark[consumer] != ws.frame_epoch) {
        continue;
      }
      double p = ctx.prob.out_p[s][k];
      delta += (ws.frame_mark[consumer] == ws.frame_epoch) ? -p : p;
    }
  }
  return delta;
}

double frame_boundary(const GrowContext& ctx, const std::vector<int>& frame) {
  GrowScratch& ws = ctx.scratch;
  double cost = 0.0;
  for (int member : frame) {
    const std::vector<int>& inputs = ctx.dag.node(member).inputs;
    for (size_t k = 0; k < inputs.size(); ++k) {
      if (ws.frame_mark[inputs[k]] != ws.frame_epoch) {
        cost += ctx.prob.in_p[member][k];
      }
    }
    const std::vector<int>& consumers = ctx.consumers[member];
    for (size_t k = 0; k < consumers.size(); ++k) {
      if (ws.frame_mark[consumers[k]] != ws.frame_epoch) {
        cost += ctx.prob.out_p[member][k];
      }
    }
  }
  return cost;
}

GrowResult grow_frame(const GrowContext& ctx, int start) {
  GrowScratch& ws = ctx.scratch;
  ++ws.frame_epoch;
  ++ws.read_epoch;

  std::vector<int> frame;
  if (!collect_closure(ctx, start, ctx.max_frame, frame)) {
    return {};  // the closure alone cannot fit
  }
  for (int member : frame) ws.frame_mark[member] = ws.frame_epoch;
  double cost = frame_boundary(ctx, frame);

  GrowResult best;
  // The copy-and-sort runs only when the snapshot wins; ties are broken by
  // smaller frame, then lexicographically smaller sorted member list.
  auto record = [&](double frame_cost) {
    if (frame.size() < ctx.min_frame) return;
    bool wins = !best.found || frame_cost < best.cost;
    if (!wins && frame_cost == best.cost) {
      if (frame.size() < best.frame.size()) {
        wins = true;
      } else if (frame.size() == best.frame.size()) {
        std::vector<int> sorted = frame;
        std::sort(sorted.begin(), sorted.end());
        if (sorted < best.frame) {
          best.frame = std::move(sorted);
          best.cost = frame_cost;
        }
        return;
      }
    }
    if (!wins) return;
    std::vector<int> sorted = frame;
    std::sort(sorted.begin(), sorted.end());
    best.found = true;
    best.frame = std::move(sorted);
    best.cost = frame_cost;
  };
  record(cost);

  // Candidate list: unassigned neighbors of the frame in either edge
  // direction, kept sorted so the scan meets ids in ascending order. It is
  // maintained incrementally; members absorbed into the frame are dropped
  // lazily during the scan. A node is probed exactly when some adjacent node
  // joins the frame, and the assignment is fixed for the whole grow, so the
  // list always equals the from-scratch rebuild.
  std::vector<int> candidate_set;
  std::vector<int> fresh;
  std::vector<int> addition;
  std::vector<int> best_addition;
  ++ws.seen_epoch;
  auto consider = [&](int node) {
    note_read(ctx, node);
    if (ctx.assignment[node] >= 0) return;
    if (ws.frame_mark[node] == ws.frame_epoch) return;
    if (ws.seen_mark[node] == ws.seen_epoch) return;
    ws.seen_mark[node] = ws.seen_epoch;
    fresh.push_back(node);
  };
  for (int member : frame) {
    for (int input : ctx.dag.node(member).inputs) consider(input);
    for (int consumer : ctx.consumers[member]) consider(consumer);
  }
  std::sort(fresh.begin(), fresh.end());
  candidate_set.swap(fresh);

  while (frame.size() < ctx.max_frame) {
    // Candidates are scanned in ascending id order, so a strict comparison
    // keeps the lowest id on delta ties.
    bool have_choice = false;
    double best_delta = 0.0;
    best_addition.clear();
    size_t live = 0;
    for (int candidate : candidate_set) {
      if (ws.frame_mark[candidate] == ws.frame_epoch) continue;
      candidate_set[live++] = candidate;
      size_t budget = ctx.max_frame - frame.size();
      if (!collect_closure(ctx, candidate, budget, addition)) continue;
      double delta = addition_delta(ctx, addition);
      if (!have_choice || delta < best_delta) {
        have_choice = true;
        best_delta = delta;
        best_addition = addition;
      }
    }
    candidate_set.resize(live);
    if (!have_choice) break;

    for (int node : best_addition) {
      ws.frame_mark[node] = ws.frame_epoch;
      frame.push_back(node);
    }
    cost += best_delta;
    record(cost);

    fresh.clear();
    for (int node : best_addition) {
      for (int input : ctx.dag.node(node).inputs) consider(input);
      for (int consumer : ctx.consumers[node]) consider(consumer);
    }
    std::sort(fresh.begin(), fresh.end());
    size_t mid = candidate_set.size();
    candidate_set.insert(candidate_set.end(), fresh.begin(), fresh.end());
    std::inplace_merge(candidate_set.begin(), candidate_set.begin() + mid,
                       candidate_set.end());
  }
  return best;
}

std::vector<int> full_closure(const PlanDag& dag, const std::vector<int>& assignment,
                              int start) {
  std::vector<int> out;
  std::vector<char> seen(dag.nodes.size(), 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    for (int input : dag.node(cur).inputs) {
      if (assignment[input] >= 0 || seen[input]) continue;
      seen[input] = 1;
      stack.push_back(input);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

GrowResult greedy_grow_frame(const PlanDag& dag, const PipelineBelief& belief, int start,
                             size_t min_frame, size_t max_frame,
                             const std::vector<int>& assignment) {
  if (start < 0 || static_cast<size_t>(start) >= dag.nodes.size() ||
      assignment.size() != dag.nodes.size()) {
    throw Error(ErrorKind::Internal, "grow start or assignment out of range");
  }
  if (assignment[start] >= 0) {
    throw Error(ErrorKind::Internal, "grow start already assigned");
  }
  GrowScratch scratch(dag.nodes.size());
  auto consumers = dag.consumers();
  EdgeProbabilities prob(dag, belief, consumers);
  GrowContext ctx{dag, prob, consumers, assignment, min_frame, max_frame, scratch};
  return grow_frame(ctx, start);
}

CutResult cut_plan(const PlanDag& dag, const PipelineBelief& belief, size_t min_frame,
                   size_t max_frame, StartPolicy starts) {
  if (min_frame == 0 || min_frame > max_frame) {
    throw Error(ErrorKind::Config, "frame size bounds must satisfy 1 <= min <= max");
  }
  size_t n = dag.nodes.size();
  CutResult result;
  result.assignment.assign(n, -1);
  if (n == 0) return result;

  GrowScratch scratch(n);
  auto consumers = dag.consumers();
  EdgeProbabilities prob(dag, belief, consumers);
  GrowContext ctx{dag, prob, consumers, result.assignment, min_frame, max_frame, scratch};

  size_t unassigned = n;

  // Memoized grows per start under StartPolicy::All. A cached result stays
  // exact until a commit assigns one of the nodes that grow read, because a
  // re-run agreeing on every read node takes the identical path.
  struct CachedGrow {
    bool valid = false;
    GrowResult result;
    std::vector<int> reads;
  };
  std::vector<CachedGrow> cache(starts == StartPolicy::All ? n : 0);
  // Inverted index: node -> starts whose cached grow read it. Entries go
  // stale when a slot is regrown; invalidating a stale reader is harmless
  // (the regrow reproduces the same result), so entries are never pruned.
  std::vector<std::vector<int>> readers(cache.empty() ? 0 : n);

  auto commit = [&](const std::vector<int>& frame, bool relaxed) {
    for (int node : frame) result.assignment[node] = result.frame_count;
    result.relaxed.push_back(relaxed);
    ++result.frame_count;
    unassigned -= frame.size();
    if (!cache.empty()) {
      for (int node : frame) {
        for (int start : readers[node]) cache[start].valid = false;
        readers[node].clear();
        cache[node].valid = false;
      }
    }
  };

  while (unassigned > 0) {
    if (unassigned < min_frame) {
      std::vector<int> rest;
      for (size_t i = 0; i < n; ++i) {
        if (result.assignment[i] < 0) rest.push_back(static_cast<int>(i));
      }
      commit(rest, false);
      break;
    }

    // Starts are visited in ascending id order; strict comparison keeps the
    // lowest start id on cost ties.
    bool have_best = false;
    double best_cost = 0.0;
    std::vector<int> best_frame;
    for (size_t i = 0; i < n; ++i) {
      if (result.assignment[i] >= 0) continue;
      const GrowResult* grown;
      GrowResult fresh;
      if (starts == StartPolicy::All) {
        CachedGrow& slot = cache[i];
        if (!slot.valid) {
          slot.reads.clear();
          ctx.reads = &slot.reads;
          slot.result = grow_frame(ctx, static_cast<int>(i));
          ctx.reads = nullptr;
          slot.valid = true;
          for (int read : slot.reads) readers[read].push_back(static_cast<int>(i));
        }
        grown = &slot.result;
      } else {
        fresh = grow_frame(ctx, static_cast<int>(i));
        grown = &fresh;
      }
      if (grown->found && (!have_best || grown->cost < best_cost)) {
        have_best = true;
        best_cost = grown->cost;
        best_frame = grown->frame;
      }
      if (starts == StartPolicy::First) break;
    }

    if (have_best) {
      commit(best_frame, false);
      continue;
    }

    // No start can seed a frame within the bounds: waive them for the
    // smallest unassigned producer closure. Committed frames are closures,
    // so everything below the lowest unassigned id is already assigned and
    // that node's closure is the singleton minimum with the lowest start id.
    int lowest = -1;
    for (size_t i = 0; i < n; ++i) {
      if (result.assignment[i] < 0) {
        lowest = static_cast<int>(i);
        break;
      }
    }
    commit(full_closure(dag, result.assignment, lowest), true);
  }

  result.total_cost = cut_cost(dag, belief, result.assignment);
  return result;
}

double oracle_cut(const PlanDag& dag, const PipelineBelief& belief, size_t min_frame,
                  size_t max_frame) {
  size_t n = dag.nodes.size();
  if (n > 12) {
    throw Error(ErrorKind::TooLarge, "exact cut search supports at most 12 nodes");
  }
  if (n == 0) return 0.0;
  struct WeightedEdge {
    uint32_t producer_bit;
    uint32_t consumer_bit;
    double p;
  };
  std::vector<WeightedEdge> edges;
  for (const auto& [producer, consumer] : dag.edges()) {
    edges.push_back({1u << producer, 1u << consumer, belief.probability(producer, consumer)});
  }

  uint32_t full = (1u << n) - 1;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> f(full + 1, kInf);
  f[0] = 0.0;
  for (uint32_t mask = 1; mask <= full; ++mask) {
    size_t mask_size = static_cast<size_t>(std::popcount(mask));
    for (uint32_t sub = mask;; sub = (sub - 1) & mask) {
      if (sub == 0) break;
      size_t sub_size = static_cast<size_t>(std::popcount(sub));
      bool size_ok = (sub_size >= min_frame && sub_size <= max_frame) ||
                     (sub == mask && mask_size < min_frame);
      if (size_ok) {
        uint32_t rest = mask & ~sub;
        double boundary = 0.0;
        bool closed = true;
        for (const auto& e : edges) {
          bool producer_in_sub = (e.producer_bit & sub) != 0;
          bool consumer_in_sub = (e.consumer_bit & sub) != 0;
          bool producer_in_rest = (e.producer_bit & rest) != 0;
          bool consumer_in_rest = (e.consumer_bit & rest) != 0;
          if (consumer_in_sub && producer_in_rest) {
            closed = false;  // a producer would land in a later frame
            break;
          }
          if ((producer_in_sub && consumer_in_rest) || (consumer_in_sub && producer_in_rest)) {
            boundary += e.p;
          }
        }
        if (closed && f[rest] != kInf && f[rest] + boundary < f[mask]) {
          f[mask] = f[rest] + boundary;
        }
      }
    }
  }
  if (f[full] == kInf) {
    throw Error(ErrorKind::Internal, "no order-valid partition within the size bounds");
  }
  return f[full];
}

void validate_cut(const PlanDag& dag, const CutResult& cut, size_t min_frame,
                  size_t max_frame) {
  size_t n = dag.nodes.size();
  if (cut.assignment.size() != n) {
    throw Error(ErrorKind::Internal, "cut assignment size does not match plan");
  }
  if (cut.relaxed.size() != static_cast<size_t>(cut.frame_count)) {
    throw Error(ErrorKind::Internal, "cut relaxed flags do not match frame count");
  }
  std::vector<size_t> sizes(cut.frame_count, 0);
  for (size_t i = 0; i < n; ++i) {
    int frame = cut.assignment[i];
    if (frame < 0 || frame >= cut.frame_count) {
      throw Error(ErrorKind::Internal, "node assigned to an out-of-range frame");
    }
    ++sizes[frame];
  }
  for (int frame = 0; frame < cut.frame_count; ++frame) {
    if (sizes[frame] == 0) {
      throw Error(ErrorKind::Internal, "cut contains an empty frame");
    }
    if (cut.relaxed[frame]) continue;
    bool final_frame = frame == cut.frame_count - 1;
    if (sizes[frame] > max_frame || (sizes[frame] < min_frame && !final_frame)) {
      std::ostringstream os;
      os << "frame " << frame << " has " << sizes[frame] << " nodes outside ["
         << min_frame << ", " << max_frame << "]";
      throw Error(ErrorKind::Internal, os.str());
    }
  }
  for (const auto& [producer, consumer] : dag.edges()) {
    if (cut.assignment[producer] > cut.assignment[consumer]) {
      std::ostringstream os;
      os << "edge " << producer << " -> " << consumer << " runs backward across frames";
      throw Error(ErrorKind::Internal, os.str());
    }
  }
}

std::string cut_to_json(const CutResult& cut) {
  nlohmann::json frames = nlohmann::json::array();
  for (int frame = 0; frame < cut.frame_count; ++frame) {
    nlohmann::json nodes = nlohmann::json::array();
    for (size_t i = 0; i < cut.assignment.size(); ++i) {
      if (cut.assignment[i] == frame) nodes.push_back(i);
    }
    frames.push_back({{"id", frame},
                      {"relaxed", static_cast<bool>(cut.relaxed[frame])},
                      {"nodes", std::move(nodes)}});
  }
  nlohmann::json doc{{"version", 1},
                     {"frame_count", cut.frame_count},
                     {"total_cost", cut.total_cost},
                     {"frames", std::move(frames)}};
  return doc.dump(2);
}

CutResult cut_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, std::string("invalid cut file: ") + e.what());
  }
  CutResult cut;
  try {
    cut.frame_count = doc.at("frame_count").get<int>();
    cut.total_cost = doc.at("total_cost").get<double>();
    size_t n = 0;
    for (const auto& frame : doc.at("frames")) {
      for (const auto& node : frame.at("nodes")) {
        n = std::max(n, node.get<size_t>() + 1);
      }
    }
    cut.assignment.assign(n, -1);
    cut.relaxed.assign(cut.frame_count, false);
    for (const auto& frame : doc.at("frames")) {
      int id = frame.at("id").get<int>();
      if (id < 0 || id >= cut.frame_count) {
        throw Error(ErrorKind::Io, "cut frame id out of range");
      }
      cut.relaxed[id] = frame.at("relaxed").get<bool>();
      for (const auto& node : frame.at("nodes")) {
        cut.assignment[node.get<size_t>()] = id;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, std::string("invalid cut file: ") + e.what());
  }
  return cut;
}

std::string cut_to_dot(const PlanDag& dag, const CutResult& cut) {
  std::ostringstream os;
  os << "digraph cut {\n  rankdir=BT;\n  node [shape=box, fontsize=10];\n";
  for (int frame = 0; frame < cut.frame_count; ++frame) {
    os << "  subgraph cluster_" << frame << " {\n"
       << "    label=\"frame " << frame << (cut.relaxed[frame] ? " (relaxed)" : "")
       << "\";\n";
    for (size_t i = 0; i < cut.assignment.size(); ++i) {
      if (cut.assignment[i] != frame) continue;
      os << "    n" << i << " [label=\"" << op_kind_name(dag.node(static_cast<int>(i)).kind)
         << " " << i << "\"];\n";
    }
    os << "  }\n";
  }
  for (const auto& [producer, consumer] : dag.edges()) {
    os << "  n" << producer << " -> n" << consumer << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace recql
