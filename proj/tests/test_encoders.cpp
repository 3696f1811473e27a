#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "unemo/encoders.hpp"
#include "unemo/gradcheck.hpp"

using namespace unemo;

namespace {

std::vector<Feature> synthetic_view_corpus(int n, int feature_dim, int lms,
                                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Feature> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Feature f = landmark_feature(static_cast<int>(rng.uniform_int(lms)), feature_dim) +
                direction_encoding(rng.uniform(-M_PI, M_PI), feature_dim);
    for (int d = 0; d < feature_dim; ++d) f(d) += 0.05 * rng.normal();
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

TEST_CASE("encode_instruction: empty, positional rows, table lookup") {
  ParamStore params(3);
  add_encoder_params(params, 20, 8, 6);

  CHECK(encode_instruction({}, params).rows() == 0);
  CHECK_THROWS_AS(encode_instruction({20}, params), LookupError);
  CHECK_THROWS_AS(encode_instruction({-1}, params), LookupError);

  Tensor two = encode_instruction({5, 5}, params);
  Matrix pos = params.get("enc.pos").value();
  Matrix diff = two.value().row(0) - two.value().row(1);
  CHECK((diff - (pos.row(0) - pos.row(1))).cwiseAbs().maxCoeff() <= 1e-15);

  Matrix table = params.get("enc.tok").value();
  Tensor one = encode_instruction({7}, params);
  CHECK(((one.value().row(0) - pos.row(0)) - table.row(7)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encode_view zero/identity/oracle") {
  Rng rng(4);
  ParamStore params(8);
  add_encoder_params(params, 10, 5, 5);

  Matrix x(1, 5);
  for (int i = 0; i < 5; ++i) x(0, i) = rng.uniform(-1, 1);

  SUBCASE("zero weights give zero output") {
    params.set_value("enc.view.l1_w", Matrix::Zero(5, 5));
    params.set_value("enc.view.l2_w", Matrix::Zero(5, 5));
    CHECK(encode_view(Tensor::constant(x), params).value().cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("identity-like config passes input through") {
    params.set_value("enc.view.l1_w", Matrix::Identity(5, 5) * 1e-8);
    params.set_value("enc.view.l2_w", Matrix::Identity(5, 5) * 1e8);
    Matrix got = encode_view(Tensor::constant(x), params).value();
    CHECK((got - x).cwiseAbs().maxCoeff() <= 1e-6);  // tanh(eps*x)/eps ~ x
  }

  SUBCASE("matches composed affine/tanh oracle") {
    Matrix h = ((x * params.get("enc.view.l1_w").value()).rowwise() +
                params.get("enc.view.l1_b").value().row(0))
                   .array()
                   .tanh();
    Matrix expect = (h * params.get("enc.view.l2_w").value()).rowwise() +
                    params.get("enc.view.l2_b").value().row(0);
    Matrix got = encode_view(Tensor::constant(x), params).value();
    CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("width mismatch raises dimension error") {
    CHECK_THROWS_AS(encode_view(Tensor::constant(Matrix::Zero(1, 7)), params),
                    DimensionError);
  }
}

TEST_CASE("autoencoder_compress: pooling properties") {
  ParamStore ae(12);
  add_autoencoder_params(ae, 6, 4);
  Rng rng(9);
  Matrix stack(3, 6);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 6; ++j) stack(i, j) = rng.uniform(-1, 1);

  SUBCASE("singleton pool is identity on the encoded row") {
    Matrix one = stack.topRows(1);
    Matrix enc = ae_encode_rows(Tensor::constant(one), ae).value();
    Matrix pooled = autoencoder_compress(Tensor::constant(one), ae).value();
    CHECK((enc - pooled).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("permutation invariance") {
    Matrix perm(3, 6);
    perm << stack.row(2), stack.row(0), stack.row(1);
    Matrix a = autoencoder_compress(Tensor::constant(stack), ae).value();
    Matrix b = autoencoder_compress(Tensor::constant(perm), ae).value();
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-15);
  }

  SUBCASE("duplicated row shifts the pool per mean arithmetic") {
    Matrix dup(4, 6);
    dup << stack, stack.row(0);
    Matrix enc = ae_encode_rows(Tensor::constant(dup), ae).value();
    Matrix expect = enc.colwise().mean();
    Matrix got = autoencoder_compress(Tensor::constant(dup), ae).value();
    CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("autoencoder_train: memorization, held-out ratio, gradients") {
  SUBCASE("one-sample corpus is memorized") {
    ParamStore ae(1);
    add_autoencoder_params(ae, 6, 4);
    std::vector<Feature> corpus = synthetic_view_corpus(1, 6, 3, 5);
    Rng rng(1);
    auto log = autoencoder_train(corpus, ae, 400, 3e-3, rng);
    CHECK(log.final_train_mse <= 1e-4);
  }

  SUBCASE("held-out MSE drops to <= 10% of untrained value") {
    ParamStore ae(2);
    add_autoencoder_params(ae, 12, 8);
    std::vector<Feature> corpus = synthetic_view_corpus(400, 12, 10, 6);
    Rng rng(2);
    auto log = autoencoder_train(corpus, ae, 60, 3e-3, rng);
    INFO("holdout ", log.initial_holdout_mse, " -> ", log.final_holdout_mse);
    CHECK(log.final_holdout_mse <= 0.10 * log.initial_holdout_mse);
    // training MSE strictly decreases over the first epoch
    CHECK(log.epoch_train_mse.front() < log.initial_train_mse);
  }

  SUBCASE("reconstruction loss passes the gradient check") {
    ParamStore ae(3);
    add_autoencoder_params(ae, 4, 3);
    Rng rng(3);
    Matrix data(5, 4);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j) data(i, j) = rng.uniform(-1, 1);
    auto loss = [&](ParamStore& p) {
      Tensor x = Tensor::constant(data);
      return mse(ae_decode_rows(ae_encode_rows(x, p), p), x);
    };
    auto rep = finite_diff_grad_check(loss, ae, 1e-5, 1e-4, 100000);
    INFO(rep.worst_param, " rel err ", rep.max_rel_err);
    CHECK(rep.pass);
  }
}

TEST_CASE("node_state_label: determinism, separation, composition") {
  WorldSpec s;
  s.node_count = 15;
  s.connection_radius = 0.5;
  s.feature_dim = 12;
  s.landmark_count = 12;
  s.seed = 10;
  World w = generate_world(s);
  ParamStore ae(20);
  add_autoencoder_params(ae, 12, 8);
  std::vector<Feature> corpus;
  for (int n = 0; n < w.node_count(); ++n) {
    Matrix raw = node_visual_state_raw(w, n);
    for (Eigen::Index r = 0; r < raw.rows(); ++r) corpus.push_back(raw.row(r));
  }
  Rng rng(11);
  autoencoder_train(corpus, ae, 40, 3e-3, rng);

  Matrix l1 = node_state_label(w, 0, ae);
  Matrix l2 = node_state_label(w, 0, ae);
  CHECK(l1 == l2);

  Matrix direct =
      autoencoder_compress(Tensor::constant(node_visual_state_raw(w, 0)), ae).value();
  CHECK(l1 == direct);

  // distinct-landmark separation: labels not all collinear
  bool separated = false;
  for (int a = 0; a < w.node_count() && !separated; ++a)
    for (int b = a + 1; b < w.node_count() && !separated; ++b) {
      if (w.landmark(a) == w.landmark(b)) continue;
      Matrix la = node_state_label(w, a, ae), lb = node_state_label(w, b, ae);
      double cos = (la * lb.transpose())(0, 0) / (la.norm() * lb.norm());
      if (cos < 0.99) separated = true;
    }
  CHECK(separated);
}
