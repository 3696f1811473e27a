#include "unemo/topomap.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace unemo {

const NodeRecord& TopoMap::record(int node) const {
  auto it = records_.find(node);
  if (it == records_.end())
    throw LookupError("map has no record for node " + std::to_string(node));
  return it->second;
}

void TopoMap::update(int arrived, const Panorama& pano) {
  if (pano.at != arrived)
    throw ContractError("panorama taken at a different node");
  if (!empty() && arrived != current_ &&
      !adjacency_.at(current_).count(arrived))
    throw ContractError("arrival at node " + std::to_string(arrived) +
                        " not adjacent to current node " +
                        std::to_string(current_));

  NodeRecord& rec = records_[arrived];
  if (rec.status != NodeStatus::Visited) {
    rec.status = NodeStatus::Visited;
    visited_order_.push_back(arrived);
  }
  if (pano.views.empty())
    throw ContractError("panorama with no views");
  Feature mean = pano.views[0].feature;
  for (std::size_t i = 1; i < pano.views.size(); ++i)
    mean += pano.views[i].feature;
  rec.own_observation = mean / static_cast<double>(pano.views.size());

  for (const View& v : pano.views) {
    NodeRecord& nb = records_[v.neighbor];
    if (nb.status != NodeStatus::Visited) nb.partial_views.push_back(v.feature);
    adjacency_[arrived][v.neighbor] = v.distance;
    adjacency_[v.neighbor][arrived] = v.distance;
  }
  current_ = arrived;
}

void TopoMap::advance_to(int node) {
  if (!contains(node))
    throw ContractError("advance_to unknown node " + std::to_string(node));
  if (node != current_ && !adjacency_.at(current_).count(node))
    throw ContractError("advance_to non-adjacent node " + std::to_string(node));
  current_ = node;
}

std::pair<std::vector<int>, double> TopoMap::known_path(int from, int to) const {
  const double inf = std::numeric_limits<double>::infinity();
  if (!contains(from) || !contains(to)) return {{}, inf};
  if (from == to) return {{from}, 0.0};
  std::map<int, double> dist;
  std::map<int, int> prev;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[from] = 0.0;
  pq.push({0.0, from});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist.at(u)) continue;
    auto adj = adjacency_.find(u);
    if (adj == adjacency_.end()) continue;
    for (auto [v, w] : adj->second) {
      double nd = d + w;
      auto it = dist.find(v);
      if (it == dist.end() || nd < it->second - 1e-15 ||
          (std::abs(nd - it->second) <= 1e-15 && u < prev[v])) {
        dist[v] = nd;
        prev[v] = u;
        pq.push({nd, v});
      }
    }
  }
  if (!dist.count(to)) return {{}, inf};
  std::vector<int> path{to};
  int cur = to;
  while (cur != from) {
    cur = prev.at(cur);
    path.push_back(cur);
  }
  std::reverse(path.begin(), path.end());
  return {std::move(path), dist.at(to)};
}

Feature frontier_embedding(const NodeRecord& rec) {
  if (rec.status != NodeStatus::Frontier)
    throw ContractError("frontier_embedding on a visited record");
  if (rec.partial_views.empty())
    throw ContractError("frontier record with no partial views");
  Feature mean = rec.partial_views[0];
  for (std::size_t i = 1; i < rec.partial_views.size(); ++i)
    mean += rec.partial_views[i];
  return mean / static_cast<double>(rec.partial_views.size());
}

Feature node_basis(const TopoMap& map, int node) {
  const NodeRecord& rec = map.record(node);
  if (rec.status == NodeStatus::Frontier) return frontier_embedding(rec);
  return rec.own_observation;
}

int CandidateSet::index_of(int node) const {
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i] == node) return static_cast<int>(i);
  return -1;
}

CandidateSet candidate_set(const TopoMap& map) {
  if (map.empty()) throw ContractError("candidate_set on empty map");
  CandidateSet cs;
  for (int v : map.visited_order()) cs.entries.push_back(v);
  std::vector<int> frontier;
  for (const auto& [id, rec] : map.adjacency()) {
    if (map.contains(id) && map.record(id).status == NodeStatus::Frontier)
      frontier.push_back(id);
  }
  std::sort(frontier.begin(), frontier.end());
  for (int f : frontier) cs.entries.push_back(f);
  cs.entries.push_back(CandidateSet::kStop);
  return cs;
}

void add_tne_params(ParamStore& params, int feature_dim, int d_model) {
  add_linear_params(params, "tne.proj", feature_dim, d_model);
  params.add_glorot("tne.stop", 1, d_model);
  add_attention_params(params, "tne.attn", d_model, d_model, d_model, d_model);
  add_mlp_params(params, "tne.mlp", d_model, d_model, d_model);
}

Tensor tne_encode(const TopoMap& map, const Tensor& instr_features,
                  const ParamStore& params) {
  if (instr_features.rows() < 1)
    throw ContractError("tne_encode: empty instruction features");
  CandidateSet cs = candidate_set(map);
  Matrix bases(cs.size(), map.record(map.current()).own_observation.size());
  for (int i = 0; i < cs.size(); ++i) {
    // The STOP row is anchored at the current node's arrival view so the
    // stop decision can depend on where the agent is.
    int node = cs.entries[i] == CandidateSet::kStop ? map.current()
                                                    : cs.entries[i];
    const NodeRecord& rec = map.record(node);
    if (cs.entries[i] == CandidateSet::kStop && !rec.partial_views.empty()) {
      Feature mean = rec.partial_views[0];
      for (std::size_t k = 1; k < rec.partial_views.size(); ++k)
        mean += rec.partial_views[k];
      bases.row(i) = mean / static_cast<double>(rec.partial_views.size());
    } else {
      bases.row(i) = node_basis(map, node);
    }
  }
  Tensor projected = linear(Tensor::constant(bases), params, "tne.proj");
  // learned STOP offset on the final row
  Matrix stop_mask = Matrix::Zero(cs.size(), 1);
  stop_mask(cs.size() - 1, 0) = 1.0;
  Tensor with_stop =
      add(projected,
          matmul(Tensor::constant(stop_mask), params.get("tne.stop")));
  Tensor fused =
      add(with_stop, cross_attention(with_stop, instr_features, params, "tne.attn"));
  return add(fused, mlp(fused, params, "tne.mlp"));
}

}  // namespace unemo
