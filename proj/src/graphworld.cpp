#include "unemo/graphworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace unemo {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Plain Dijkstra distance field.
std::vector<double> dijkstra(const World& w, int src) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(w.node_count(), inf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[src] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (int v : w.neighbors(u)) {
      double nd = d + w.edge_length(u, v);
      if (nd < dist[v]) {
        dist[v] = nd;
        pq.push({nd, v});
      }
    }
  }
  return dist;
}

}  // namespace

const Eigen::Vector2d& World::position(int node) const {
  if (node < 0 || node >= node_count())
    throw LookupError("unknown node " + std::to_string(node));
  return positions_[node];
}

const std::vector<int>& World::neighbors(int node) const {
  if (node < 0 || node >= node_count())
    throw LookupError("unknown node " + std::to_string(node));
  return adjacency_[node];
}

double World::edge_length(int a, int b) const {
  if (!has_edge(a, b))
    throw LookupError("no edge " + std::to_string(a) + "-" + std::to_string(b));
  return (position(a) - position(b)).norm();
}

bool World::has_edge(int a, int b) const {
  const auto& adj = neighbors(a);
  return std::binary_search(adj.begin(), adj.end(), b);
}

int World::landmark(int node) const {
  if (node < 0 || node >= node_count())
    throw LookupError("unknown node " + std::to_string(node));
  return landmarks_[node];
}

const Feature& World::base_feature(int node) const {
  if (node < 0 || node >= node_count())
    throw LookupError("unknown node " + std::to_string(node));
  return base_features_[node];
}

World World::from_parts(WorldSpec spec, std::vector<Eigen::Vector2d> positions,
                        std::vector<std::pair<int, int>> edges,
                        std::vector<int> landmarks,
                        std::vector<Feature> base_features) {
  World w;
  w.spec_ = spec;
  w.positions_ = std::move(positions);
  w.landmarks_ = std::move(landmarks);
  w.base_features_ = std::move(base_features);
  w.adjacency_.assign(w.positions_.size(), {});
  for (auto [a, b] : edges) {
    if (a == b) throw ContractError("self-loop edge");
    w.adjacency_[a].push_back(b);
    w.adjacency_[b].push_back(a);
  }
  for (auto& adj : w.adjacency_) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
  return w;
}

namespace {

// Smooth feature field over the unit square: a single bilinear patch between
// four fixed corner anchors. Visual context varies continuously with
// position, the way adjacent rooms of a real scene shade into one another.
Feature feature_field(double x, double y, int feature_dim) {
  auto anchor = [feature_dim](int r, int c) {
    Rng rng(Rng(0x414e43484f52ULL).split(r * 16 + c).seed());
    Feature f(feature_dim);
    for (int i = 0; i < feature_dim; ++i) f(i) = rng.normal();
    f /= f.norm();
    return f;
  };
  const double fu = std::clamp(x, 0.0, 1.0);
  const double fv = std::clamp(y, 0.0, 1.0);
  return (1 - fu) * (1 - fv) * anchor(0, 0) + fu * (1 - fv) * anchor(0, 1) +
         (1 - fu) * fv * anchor(1, 0) + fu * fv * anchor(1, 1);
}

Feature landmark_jitter(int landmark_id, int feature_dim) {
  Rng rng(Rng(0x4c414e444d41524bULL).split(landmark_id).seed());
  Feature f(feature_dim);
  for (int i = 0; i < feature_dim; ++i) f(i) = rng.normal();
  f /= f.norm();
  return f;
}

}  // namespace

Feature landmark_feature(int landmark_id, int feature_dim) {
  // Landmark ids index cells of a kLandmarkGrid-wide grid (see generate_world);
  // a landmark's feature is the field sampled at its cell centre plus a small
  // per-id jitter that keeps every id distinguishable.
  const int u = landmark_id % kLandmarkGrid;
  const int v = landmark_id / kLandmarkGrid;
  Feature f = feature_field((u + 0.5) / kLandmarkGrid, (v + 0.5) / kLandmarkGrid,
                            feature_dim) +
              0.03 * landmark_jitter(landmark_id, feature_dim);
  f /= f.norm();
  return f;
}

Feature direction_encoding(double angle, int feature_dim) {
  static const auto basis = [](std::uint64_t tag, int dim) {
    Rng rng(Rng(0x4449524543ULL).split(tag).seed());
    Feature f(dim);
    for (int i = 0; i < dim; ++i) f(i) = rng.normal();
    f /= f.norm();
    return f;
  };
  // Regenerating the two basis vectors per call keeps this a pure function
  // of (angle, feature_dim); cached per dim below.
  thread_local int cached_dim = -1;
  thread_local Feature u, v;
  if (cached_dim != feature_dim) {
    u = basis(1, feature_dim);
    v = basis(2, feature_dim);
    cached_dim = feature_dim;
  }
  // Small relative to the landmark part: bearings must be readable in a
  // single view yet should not dominate a node's pooled visual state.
  return 0.15 * (std::cos(angle) * u + std::sin(angle) * v);
}

int direction_bin(double angle) {
  double a = std::fmod(angle + kPi / 8.0, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  int bin = static_cast<int>(a / (kPi / 4.0));
  return bin % 8;
}

World generate_world(const WorldSpec& spec) {
  if (spec.node_count < 2) throw GenerationError("node_count must be >= 2");
  if (spec.connection_radius <= 0)
    throw GenerationError("connection_radius must be positive");
  if (spec.landmark_count < 1)
    throw GenerationError("landmark_count must be >= 1");

  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng rng = Rng(spec.seed).split(0x776f726cULL + attempt);
    std::vector<Eigen::Vector2d> pts(spec.node_count);
    for (auto& p : pts) {
      double x = rng.uniform(), y = rng.uniform();
      p = Eigen::Vector2d(x, y);
    }
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < spec.node_count; ++i)
      for (int j = i + 1; j < spec.node_count; ++j)
        if ((pts[i] - pts[j]).norm() <= spec.connection_radius)
          edges.emplace_back(i, j);

    // connectivity via BFS
    std::vector<std::vector<int>> adj(spec.node_count);
    for (auto [a, b] : edges) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    std::vector<char> seen(spec.node_count, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          stack.push_back(v);
        }
    }
    if (reached != spec.node_count) continue;

    std::vector<int> landmarks(spec.node_count);
    std::vector<Feature> feats(spec.node_count);
    for (int i = 0; i < spec.node_count; ++i) {
      // spatial landmark assignment: the grid cell the node falls in
      const int gx = std::min(kLandmarkGrid - 1,
                              static_cast<int>(pts[i].x() * kLandmarkGrid));
      const int gy = std::min(kLandmarkGrid - 1,
                              static_cast<int>(pts[i].y() * kLandmarkGrid));
      landmarks[i] = std::min(spec.landmark_count - 1, gy * kLandmarkGrid + gx);
      Rng prng = Rng(spec.seed).split(0x666561ULL).split(i);
      Feature pert(spec.feature_dim);
      for (int d = 0; d < spec.feature_dim; ++d) pert(d) = prng.normal();
      // field at the node's own position, jitter of its landmark, and a tiny
      // per-node perturbation: close to landmark_feature(landmarks[i]) but
      // continuous in where the node actually sits
      feats[i] = feature_field(pts[i].x(), pts[i].y(), spec.feature_dim) +
                 0.03 * landmark_jitter(landmarks[i], spec.feature_dim) +
                 0.01 * pert;
      feats[i] /= feats[i].norm();
    }
    for (auto& p : pts) p *= kWorldScale;
    return World::from_parts(spec, std::move(pts), std::move(edges),
                             std::move(landmarks), std::move(feats));
  }
  throw GenerationError(
      "could not generate a connected world after 100 attempts; "
      "connection_radius too small");
}

std::pair<std::vector<int>, double> shortest_path(const World& world, int a,
                                                  int b) {
  if (a < 0 || a >= world.node_count() || b < 0 || b >= world.node_count())
    throw LookupError("shortest_path: node out of range");
  if (a == b) return {{a}, 0.0};
  std::vector<double> dist_to_b = dijkstra(world, b);
  const double total = dist_to_b[a];
  if (!std::isfinite(total))
    throw LookupError("shortest_path: nodes are disconnected");
  // Greedy reconstruction toward b; picking the smallest admissible
  // neighbor id at every hop yields the lexicographically smallest geodesic.
  std::vector<int> path{a};
  int cur = a;
  while (cur != b) {
    int next = -1;
    for (int n : world.neighbors(cur)) {
      double w = world.edge_length(cur, n);
      if (std::abs(w + dist_to_b[n] - dist_to_b[cur]) <=
          1e-9 * (1.0 + dist_to_b[cur])) {
        next = n;
        break;  // neighbors are sorted by id
      }
    }
    if (next < 0) throw ContractError("shortest_path: reconstruction failed");
    path.push_back(next);
    cur = next;
  }
  return {std::move(path), total};
}

std::vector<int> synthesize_instruction(const std::vector<int>& path,
                                        const World& world) {
  if (path.empty()) throw ContractError("empty path");
  TokenLayout tok{world.spec().landmark_count};
  std::vector<int> out;
  out.reserve(2 * path.size());
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    Eigen::Vector2d d = world.position(path[i + 1]) - world.position(path[i]);
    out.push_back(tok.dir(direction_bin(std::atan2(d.y(), d.x()))));
    out.push_back(tok.landmark(world.landmark(path[i + 1])));
  }
  out.push_back(tok.goal());
  out.push_back(tok.landmark(world.landmark(path.back())));
  return out;
}

namespace {

// True when greedily following (direction, landmark) token pairs on the true
// graph reproduces the expert path. Spatial landmark assignment can give two
// neighbors the same cell and bearing bin; such ambiguous episodes are
// rejected so instructions always decode uniquely.
bool instruction_decodes(const World& world, const Episode& ep) {
  TokenLayout tok{world.spec().landmark_count};
  int cur = ep.start;
  std::vector<int> decoded{cur};
  for (std::size_t h = 0; 2 * h + 1 < ep.instruction.size(); ++h) {
    const int dtok = ep.instruction[2 * h];
    if (dtok == tok.goal()) break;
    const int lmtok = ep.instruction[2 * h + 1];
    int next = -1;
    for (int n : world.neighbors(cur)) {
      Eigen::Vector2d d = world.position(n) - world.position(cur);
      if (tok.dir(direction_bin(std::atan2(d.y(), d.x()))) == dtok &&
          tok.landmark(world.landmark(n)) == lmtok) {
        next = n;
        break;
      }
    }
    if (next < 0) return false;
    decoded.push_back(next);
    cur = next;
  }
  return decoded == ep.expert_path;
}

}  // namespace

Episode sample_episode(const World& world, Rng& rng, int path_node_cap) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    int start = static_cast<int>(rng.uniform_int(world.node_count()));
    std::vector<int> goals;
    for (int g = 0; g < world.node_count(); ++g) {
      if (g == start) continue;
      auto [path, len] = shortest_path(world, start, g);
      if (static_cast<int>(path.size()) >= 2 &&
          static_cast<int>(path.size()) <= path_node_cap)
        goals.push_back(g);
    }
    if (goals.empty()) continue;
    int goal = goals[rng.uniform_int(goals.size())];
    Episode ep;
    ep.start = start;
    ep.goal = goal;
    ep.expert_path = shortest_path(world, start, goal).first;
    ep.instruction = synthesize_instruction(ep.expert_path, world);
    if (!instruction_decodes(world, ep)) continue;
    return ep;
  }
  throw GenerationError("sample_episode: no admissible (start, goal) pair");
}

Panorama observe(const World& world, int node, Rng& rng) {
  Panorama pano;
  pano.at = node;
  for (int n : world.neighbors(node)) {
    Eigen::Vector2d d = world.position(n) - world.position(node);
    double angle = std::atan2(d.y(), d.x());
    Feature f = world.base_feature(n) +
                direction_encoding(angle, world.spec().feature_dim);
    if (world.spec().view_noise_std > 0) {
      for (int i = 0; i < f.size(); ++i)
        f(i) += world.spec().view_noise_std * rng.normal();
    }
    pano.views.push_back({n, angle, d.norm(), std::move(f)});
  }
  return pano;
}

Eigen::MatrixXd node_visual_state_raw(const World& world, int node) {
  const auto& nbrs = world.neighbors(node);
  if (nbrs.empty()) throw ContractError("node has no neighbors");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(nbrs.size()),
                      world.spec().feature_dim);
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    Eigen::Vector2d d = world.position(nbrs[i]) - world.position(node);
    out.row(static_cast<Eigen::Index>(i)) =
        world.base_feature(nbrs[i]) +
        direction_encoding(std::atan2(d.y(), d.x()), world.spec().feature_dim);
  }
  return out;
}

// --- corpus files -----------------------------------------------------

std::string serialize_world(const WorldFile& wf) {
  const World& w = wf.world;
  const WorldSpec& s = w.spec();
  std::ostringstream os;
  os << "unemo-world v1\n";
  os << "spec node_count=" << s.node_count
     << " connection_radius=" << fmt_double(s.connection_radius)
     << " feature_dim=" << s.feature_dim
     << " landmark_count=" << s.landmark_count
     << " view_noise_std=" << fmt_double(s.view_noise_std)
     << " seed=" << s.seed << "\n";
  for (int i = 0; i < w.node_count(); ++i) {
    os << "node " << i << " " << fmt_double(w.position(i).x()) << " "
       << fmt_double(w.position(i).y()) << " " << w.landmark(i);
    const Feature& f = w.base_feature(i);
    for (int d = 0; d < f.size(); ++d) os << " " << fmt_double(f(d));
    os << "\n";
  }
  for (int i = 0; i < w.node_count(); ++i)
    for (int j : w.neighbors(i))
      if (j > i) os << "edge " << i << " " << j << "\n";
  for (const Episode& ep : wf.episodes) {
    os << "episode " << ep.start << " " << ep.goal << " path";
    for (int n : ep.expert_path) os << " " << n;
    os << " instr";
    for (int t : ep.instruction) os << " " << t;
    os << "\n";
  }
  return os.str();
}

WorldFile parse_world(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "unemo-world v1")
    throw IoError("world file: bad or missing version line");
  WorldSpec spec;
  std::vector<Eigen::Vector2d> positions;
  std::vector<int> landmarks;
  std::vector<Feature> feats;
  std::vector<std::pair<int, int>> edges;
  std::vector<Episode> episodes;
  bool have_spec = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "spec") {
      std::string kv;
      while (ls >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw IoError("world file: bad spec item " + kv);
        std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "node_count") spec.node_count = std::stoi(val);
        else if (key == "connection_radius") spec.connection_radius = std::stod(val);
        else if (key == "feature_dim") spec.feature_dim = std::stoi(val);
        else if (key == "landmark_count") spec.landmark_count = std::stoi(val);
        else if (key == "view_noise_std") spec.view_noise_std = std::stod(val);
        else if (key == "seed") spec.seed = std::stoull(val);
        else throw IoError("world file: unknown spec key " + key);
      }
      have_spec = true;
    } else if (kind == "node") {
      int id, lm;
      double x, y;
      ls >> id >> x >> y >> lm;
      if (id != static_cast<int>(positions.size()))
        throw IoError("world file: nodes out of order");
      positions.emplace_back(x, y);
      landmarks.push_back(lm);
      Feature f(spec.feature_dim);
      for (int d = 0; d < spec.feature_dim; ++d)
        if (!(ls >> f(d))) throw IoError("world file: truncated node features");
      feats.push_back(std::move(f));
    } else if (kind == "edge") {
      int a, b;
      ls >> a >> b;
      edges.emplace_back(a, b);
    } else if (kind == "episode") {
      Episode ep;
      ls >> ep.start >> ep.goal;
      std::string tag;
      ls >> tag;
      if (tag != "path") throw IoError("world file: expected path");
      std::string tokstr;
      while (ls >> tokstr) {
        if (tokstr == "instr") break;
        ep.expert_path.push_back(std::stoi(tokstr));
      }
      int t;
      while (ls >> t) ep.instruction.push_back(t);
      episodes.push_back(std::move(ep));
    } else {
      throw IoError("world file: unknown record " + kind);
    }
  }
  if (!have_spec) throw IoError("world file: missing spec line");
  WorldFile wf;
  wf.world = World::from_parts(spec, std::move(positions), std::move(edges),
                               std::move(landmarks), std::move(feats));
  wf.episodes = std::move(episodes);
  return wf;
}

void save_world(const WorldFile& wf, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << serialize_world(wf);
}

WorldFile load_world(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_world(ss.str());
}

}  // namespace unemo
