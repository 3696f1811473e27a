#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "unemo/encoders.hpp"
#include "unemo/topomap.hpp"

using namespace unemo;

namespace {

World star_world() {
  // node 0 center; 1,2 spokes; 3 hangs off 1 (5-node worlds add 4 off 2)
  WorldSpec s;
  s.node_count = 5;
  s.feature_dim = 6;
  s.landmark_count = 5;
  s.view_noise_std = 0.0;
  std::vector<Eigen::Vector2d> pts{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {0, 2}};
  std::vector<Feature> feats;
  for (int i = 0; i < 5; ++i) feats.push_back(landmark_feature(i, 6));
  return World::from_parts(s, pts, {{0, 1}, {0, 2}, {1, 3}, {2, 4}},
                           {0, 1, 2, 3, 4}, feats);
}

TopoMap start_map(const World& w, int at, Rng& rng) {
  TopoMap m;
  m.update(at, observe(w, at, rng));
  return m;
}

}  // namespace

TEST_CASE("update: construction, frontier means, replay") {
  World w = star_world();
  Rng rng(1);

  SUBCASE("first update yields one visited plus degree frontiers") {
    TopoMap m = start_map(w, 0, rng);
    CHECK(m.current() == 0);
    CHECK(m.visited_order() == std::vector<int>{0});
    CHECK(m.record(1).status == NodeStatus::Frontier);
    CHECK(m.record(2).status == NodeStatus::Frontier);
    CHECK_FALSE(m.contains(3));
    CHECK(candidate_set(m).entries == std::vector<int>{0, 1, 2, CandidateSet::kStop});
  }

  SUBCASE("frontier seen from two visited nodes stores the two-view mean") {
    TopoMap m = start_map(w, 0, rng);
    m.update(1, observe(w, 1, rng));
    m.advance_to(0);
    m.update(2, observe(w, 2, rng));
    // node 0 is visited; its neighbors 1,2 visited; frontier now 3, 4
    CHECK(m.record(3).status == NodeStatus::Frontier);
    Feature fe = frontier_embedding(m.record(3));
    CHECK(fe.size() == 6);
    // frontier 3 observed only from 1: single view mean equals the view
    CHECK((fe - m.record(3).partial_views[0]).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("non-adjacent arrival is rejected") {
    TopoMap m = start_map(w, 0, rng);
    CHECK_THROWS_AS(m.update(3, observe(w, 3, rng)), ContractError);
  }

  SUBCASE("replaying a full path visits exactly the path nodes") {
    TopoMap m = start_map(w, 3, rng);
    for (int n : {1, 0, 2, 4}) m.update(n, observe(w, n, rng));
    CHECK(m.visited_order() == std::vector<int>{3, 1, 0, 2, 4});
    for (int n = 0; n < 5; ++n)
      CHECK(m.record(n).status == NodeStatus::Visited);
  }
}

TEST_CASE("frontier_embedding: singleton, permutation, mean oracle") {
  NodeRecord rec;
  rec.status = NodeStatus::Frontier;
  Rng rng(5);
  std::vector<Feature> vs;
  for (int i = 0; i < 5; ++i) {
    Feature f(4);
    for (int j = 0; j < 4; ++j) f(j) = rng.uniform(-1, 1);
    vs.push_back(f);
  }

  rec.partial_views = {vs[0]};
  CHECK((frontier_embedding(rec) - vs[0]).cwiseAbs().maxCoeff() == 0.0);

  rec.partial_views = {vs[0], vs[1]};
  Feature a = frontier_embedding(rec);
  rec.partial_views = {vs[1], vs[0]};
  CHECK((frontier_embedding(rec) - a).cwiseAbs().maxCoeff() == 0.0);

  rec.partial_views = vs;
  Feature mean = Feature::Zero(4);
  for (const auto& v : vs) mean += v;
  mean /= 5.0;
  CHECK((frontier_embedding(rec) - mean).cwiseAbs().maxCoeff() <= 1e-12);

  NodeRecord visited;
  visited.status = NodeStatus::Visited;
  CHECK_THROWS_AS(frontier_embedding(visited), ContractError);
}

TEST_CASE("candidate_set: counts, order stability, hand enumeration") {
  World w = star_world();
  Rng rng(2);
  TopoMap m = start_map(w, 0, rng);
  CHECK(candidate_set(m).size() == 4);  // 1 visited + 2 frontier + STOP
  CHECK(candidate_set(m).entries == candidate_set(m).entries);

  // full-path replay on the 5-node world
  m.update(1, observe(w, 1, rng));
  m.update(3, observe(w, 3, rng));
  CandidateSet cs = candidate_set(m);
  // visited {0,1,3} in order, frontier {2} (4 unseen), STOP
  CHECK(cs.entries == std::vector<int>{0, 1, 3, 2, CandidateSet::kStop});
  CHECK(cs.size() == 3 + 1 + 1);
  CHECK(cs.index_of(CandidateSet::kStop) == cs.size() - 1);
}

TEST_CASE("known_path runs over the explored graph only") {
  World w = star_world();
  Rng rng(3);
  TopoMap m = start_map(w, 0, rng);
  m.update(1, observe(w, 1, rng));
  auto [p, len] = m.known_path(1, 2);
  CHECK(p == std::vector<int>{1, 0, 2});
  CHECK(len == doctest::Approx(2.0));
  CHECK(std::isinf(m.known_path(1, 4).second));
}

TEST_CASE("tne_encode: shape, residual zero case, attention symmetry") {
  World w = star_world();
  Rng rng(4);
  TopoMap m = start_map(w, 0, rng);
  const int d_model = 8;
  ParamStore params(7);
  add_encoder_params(params, 16, d_model, 6);
  add_tne_params(params, 6, d_model);
  Tensor instr = encode_instruction({1, 9, 2, 10}, params);

  CandidateSet cs = candidate_set(m);
  Tensor out = tne_encode(m, instr, params);
  CHECK(out.rows() == cs.size());
  CHECK(out.cols() == d_model);

  SUBCASE("zeroed attention-value and MLP output weights leave the projection") {
    params.set_value("tne.attn.wv", Matrix::Zero(d_model, d_model));
    params.set_value("tne.mlp.l2_w", Matrix::Zero(d_model, d_model));
    Tensor reduced = tne_encode(m, instr, params);
    // non-STOP rows equal the linear projection of the raw bases
    for (int i = 0; i + 1 < cs.size(); ++i) {
      Feature basis = node_basis(m, cs.entries[i]);
      Matrix proj = basis * params.get("tne.proj.w").value() +
                    params.get("tne.proj.b").value();
      CHECK((reduced.value().row(i) - proj.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  SUBCASE("permuting identical instruction tokens changes nothing") {
    Tensor instr_a = encode_instruction({5, 5, 5}, params);
    // identical rows: strip positional encoding so the rows really match
    Matrix rows = instr_a.value();
    Matrix pos = params.get("enc.pos").value();
    for (int i = 0; i < 3; ++i) rows.row(i) -= pos.row(i);
    Matrix perm(3, d_model);
    perm << rows.row(2), rows.row(0), rows.row(1);
    Tensor o1 = tne_encode(m, Tensor::constant(rows), params);
    Tensor o2 = tne_encode(m, Tensor::constant(perm), params);
    CHECK((o1.value() - o2.value()).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("K nodes in, K+1 rows out") {
    // 1 visited + 2 frontier nodes, plus the STOP row
    CHECK(out.rows() == 4);
  }

  SUBCASE("missing parameters raise a configuration error") {
    ParamStore bare(0);
    CHECK_THROWS_AS(tne_encode(m, instr, bare), ConfigError);
  }

  SUBCASE("empty instruction is rejected") {
    Tensor empty = Tensor::constant(Matrix(0, d_model));
    CHECK_THROWS_AS(tne_encode(m, empty, params), ContractError);
  }
}
