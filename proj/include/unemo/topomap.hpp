#pragma once

#include <map>
#include <vector>

#include "unemo/graphworld.hpp"
#include "unemo/nn.hpp"
#include "unemo/param_store.hpp"

namespace unemo {

enum class NodeStatus { Visited, Frontier };

struct NodeRecord {
  NodeStatus status = NodeStatus::Frontier;
  Feature own_observation;             // mean panorama feature; visited only
  std::vector<Feature> partial_views;  // views accumulated while a frontier
};

// The agent's evolving map of visited and frontier nodes. Episode-local and
// single-threaded; mutated only between policy steps.
class TopoMap {
 public:
  bool empty() const { return records_.empty(); }
  int current() const { return current_; }
  bool contains(int node) const { return records_.count(node) != 0; }
  const NodeRecord& record(int node) const;
  const std::vector<int>& visited_order() const { return visited_order_; }
  const std::map<int, std::map<int, double>>& adjacency() const {
    return adjacency_;
  }

  // Arrival at a node: promotes it to visited (own_observation = mean view),
  // accumulates one partial view per observed neighbor, extends adjacency,
  // and makes it current. The node must be adjacent to the current node in
  // the map, unless the map is empty.
  void update(int arrived, const Panorama& pano);

  // Traversal through already-known territory without re-observation.
  void advance_to(int node);

  // Dijkstra over known adjacency. Returns ({}, inf) when unreachable.
  std::pair<std::vector<int>, double> known_path(int from, int to) const;

 private:
  std::map<int, NodeRecord> records_;
  std::map<int, std::map<int, double>> adjacency_;
  std::vector<int> visited_order_;
  int current_ = -1;
};

// Mean over accumulated partial views; permutation-invariant.
Feature frontier_embedding(const NodeRecord& rec);

// Raw feature-space basis used by the TNE and as E^o_j: frontier nodes use
// the partial-view mean, visited nodes their own observation.
Feature node_basis(const TopoMap& map, int node);

struct CandidateSet {
  static constexpr int kStop = -1;
  std::vector<int> entries;  // node ids; kStop is always the last entry

  int size() const { return static_cast<int>(entries.size()); }
  int index_of(int node) const;  // -1 when absent
};

// Visited nodes in visit order, then frontier nodes by id, then STOP.
CandidateSet candidate_set(const TopoMap& map);

// tne.proj (linear feature_dim -> d_model), tne.stop (learned STOP row),
// tne.attn (cross-attention over instruction tokens), tne.mlp (2-layer).
void add_tne_params(ParamStore& params, int feature_dim, int d_model);

// Instruction-conditioned candidate embeddings, one row per candidate in
// CandidateSet order (STOP last). Residual around both the attention layer
// and the MLP so that zeroed output weights reduce to the linear projection
// of the raw node bases.
Tensor tne_encode(const TopoMap& map, const Tensor& instr_features,
                  const ParamStore& params);

}  // namespace unemo
