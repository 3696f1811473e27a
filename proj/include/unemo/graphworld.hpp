#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "unemo/errors.hpp"
#include "unemo/rng.hpp"

namespace unemo {

using Feature = Eigen::RowVectorXd;

struct WorldSpec {
  int node_count = 30;
  double connection_radius = 0.3;  // unit-square units
  int feature_dim = 24;
  int landmark_count = 25;
  double view_noise_std = 0.02;
  std::uint64_t seed = 0;
};

// Positions live on the unit square scaled by 10, so Euclidean distances are
// meters-like and the 3.0 success threshold is meaningful.
inline constexpr double kWorldScale = 10.0;

// Landmark ids are laid out on a kLandmarkGrid x kLandmarkGrid spatial grid:
// a node's landmark is the cell its position falls in, and landmark features
// vary smoothly across the grid (see landmark_feature).
inline constexpr int kLandmarkGrid = 5;

struct Episode {
  int start = 0;
  int goal = 0;
  std::vector<int> expert_path;    // geodesic from start to goal
  std::vector<int> instruction;    // token ids
};

struct View {
  int neighbor = 0;
  double angle = 0.0;     // radians, bearing from the observing node
  double distance = 0.0;  // edge length, plane units
  Feature feature;
};

struct Panorama {
  int at = 0;
  std::vector<View> views;  // one per neighbor, ordered by neighbor id
};

class World {
 public:
  World() = default;

  const WorldSpec& spec() const { return spec_; }
  int node_count() const { return static_cast<int>(positions_.size()); }
  const Eigen::Vector2d& position(int node) const;
  const std::vector<int>& neighbors(int node) const;  // sorted by id
  double edge_length(int a, int b) const;
  bool has_edge(int a, int b) const;
  int landmark(int node) const;
  const Feature& base_feature(int node) const;

  // Assembly used by the generator, the loader and hand-built test fixtures.
  static World from_parts(WorldSpec spec, std::vector<Eigen::Vector2d> positions,
                          std::vector<std::pair<int, int>> edges,
                          std::vector<int> landmarks,
                          std::vector<Feature> base_features);

 private:
  WorldSpec spec_;
  std::vector<Eigen::Vector2d> positions_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<int> landmarks_;
  std::vector<Feature> base_features_;
};

// Fixed per-landmark unit vector, a function of the landmark id alone so the
// landmark vocabulary is shared across every world in a corpus.
Feature landmark_feature(int landmark_id, int feature_dim);

// Smooth encoding of a bearing into feature space.
Feature direction_encoding(double angle, int feature_dim);

// 8-way quantized bearing bin, 0 = east, counter-clockwise.
int direction_bin(double angle);

// Token-id layout shared with the instruction encoder.
struct TokenLayout {
  int landmark_count;
  int dir(int bin) const { return bin; }
  int landmark(int lm) const { return 8 + lm; }
  int goal() const { return 8 + landmark_count; }
  int pad() const { return 9 + landmark_count; }
  int vocab_size() const { return landmark_count + 10; }
};

World generate_world(const WorldSpec& spec);

// Euclidean-weighted geodesic; equal-length ties resolved toward the
// lexicographically smallest node-id sequence.
std::pair<std::vector<int>, double> shortest_path(const World& world, int a,
                                                  int b);

std::vector<int> synthesize_instruction(const std::vector<int>& path,
                                        const World& world);

Episode sample_episode(const World& world, Rng& rng, int path_node_cap = 8);

Panorama observe(const World& world, int node, Rng& rng);

// Stacked noiseless outgoing views (one per neighbor, by id): the
// pre-compression ground-truth visual state of a node.
Eigen::MatrixXd node_visual_state_raw(const World& world, int node);

// --- corpus files -----------------------------------------------------

struct WorldFile {
  World world;
  std::vector<Episode> episodes;
};

std::string serialize_world(const WorldFile& wf);
WorldFile parse_world(const std::string& text);
void save_world(const WorldFile& wf, const std::string& path);
WorldFile load_world(const std::string& path);

}  // namespace unemo
