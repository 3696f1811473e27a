#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "unemo/gradcheck.hpp"
#include "unemo/mwm.hpp"

using namespace unemo;

namespace {

Matrix rand_mat(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-1, 1);
  return m;
}

MwmDims small_dims() {
  MwmDims d;
  d.d_model = 6;
  d.z_dim = 3;
  d.s_dim = 4;
  d.layers = 3;
  d.feature_dim = 5;
  d.v_max = 4;
  return d;
}

}  // namespace

TEST_CASE("mwm_encode: degeneracy, shape, composition oracle") {
  Rng rng(1);
  MwmDims d = small_dims();
  ParamStore params(2);
  add_mwm_params(params, d);

  SUBCASE("L=1, single token: c_j = view + Wv * token") {
    Matrix view = rand_mat(1, d.d_model, rng);
    Matrix token = rand_mat(1, d.d_model, rng);
    Tensor c = mwm_encode(Tensor::constant(view), Tensor::constant(token), params, 1);
    Matrix expect = view + token * params.get("mwm.layer0.wv").value();
    CHECK((c.value() - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("output is 1 x d_model for any N") {
    for (int n : {1, 3, 9}) {
      Tensor c = mwm_encode(Tensor::constant(rand_mat(1, d.d_model, rng)),
                            Tensor::constant(rand_mat(n, d.d_model, rng)),
                            params, d.layers);
      CHECK(c.rows() == 1);
      CHECK(c.cols() == d.d_model);
    }
  }

  SUBCASE("L=3 equals a direct 3-fold composition") {
    Matrix view = rand_mat(1, d.d_model, rng);
    Matrix instr = rand_mat(4, d.d_model, rng);
    Tensor got = mwm_encode(Tensor::constant(view), Tensor::constant(instr),
                            params, 3);
    Tensor x = Tensor::constant(view);
    Tensor f = Tensor::constant(instr);
    for (int l = 0; l < 3; ++l)
      x = add(x, cross_attention(x, f, params, "mwm.layer" + std::to_string(l)));
    CHECK((got.value() - x.value()).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SUBCASE("duplicate identical instruction rows change nothing") {
    Matrix view = rand_mat(1, d.d_model, rng);
    Matrix one = rand_mat(1, d.d_model, rng);
    Matrix dup(3, d.d_model);
    dup << one, one, one;
    Tensor a = mwm_encode(Tensor::constant(view), Tensor::constant(one), params, 3);
    Tensor b = mwm_encode(Tensor::constant(view), Tensor::constant(dup), params, 3);
    CHECK((a.value() - b.value()).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("empty instruction is a contract error") {
    CHECK_THROWS_AS(mwm_encode(Tensor::constant(rand_mat(1, d.d_model, rng)),
                               Tensor::constant(Matrix(0, d.d_model)), params, 1),
                    ContractError);
  }
}

TEST_CASE("mwm_heads: zero weights, positivity, gradcheck") {
  Rng rng(2);
  MwmDims d = small_dims();

  SUBCASE("zero heads give mu = 0 and sigma = ln 2") {
    ParamStore zero(0);
    for (const char* tag : {"mwm.mu", "mwm.sigma"}) {
      zero.add_zeros(std::string(tag) + ".l1_w", d.d_model, d.d_model);
      zero.add_zeros(std::string(tag) + ".l1_b", 1, d.d_model);
      zero.add_zeros(std::string(tag) + ".l2_w", d.d_model, d.z_dim);
      zero.add_zeros(std::string(tag) + ".l2_b", 1, d.z_dim);
    }
    auto [mu, sigma] = mwm_heads(Tensor::constant(rand_mat(1, d.d_model, rng)), zero);
    CHECK(mu.value().cwiseAbs().maxCoeff() == 0.0);
    CHECK((sigma.value().array() - std::log(2.0)).abs().maxCoeff() <= 1e-15);
  }

  SUBCASE("sigma strictly positive over random inputs") {
    ParamStore params(3);
    add_mwm_params(params, d);
    for (int t = 0; t < 10000; ++t) {
      auto [mu, sigma] =
          mwm_heads(Tensor::constant(rand_mat(1, d.d_model, rng) * 5.0), params);
      CHECK((sigma.value().array() > 0).all());
    }
  }

  SUBCASE("gradients through both heads pass at 1e-4") {
    ParamStore params(4);
    add_mwm_params(params, d);
    Matrix c = rand_mat(1, d.d_model, rng);
    auto loss = [&](ParamStore& p) {
      auto [mu, sigma] = mwm_heads(Tensor::constant(c), p);
      return add(sum_all(cmul(mu, mu)), sum_all(cmul(sigma, sigma)));
    };
    auto rep = finite_diff_grad_check(loss, params, 1e-5, 1e-4, 100000);
    INFO(rep.worst_param, " ", rep.max_rel_err);
    CHECK(rep.pass);
  }
}

TEST_CASE("mwm_decode zero weights / shape / oracle") {
  Rng rng(3);
  MwmDims d = small_dims();
  ParamStore params(5);
  add_mwm_params(params, d);
  Matrix z = rand_mat(1, d.z_dim, rng), v = rand_mat(1, d.d_model, rng);

  Tensor out = mwm_decode(Tensor::constant(z), Tensor::constant(v), params);
  CHECK(out.rows() == 1);
  CHECK(out.cols() == d.s_dim);

  Matrix cat(1, d.z_dim + d.d_model);
  cat << z, v;
  Matrix h = ((cat * params.get("mwm.dec.l1_w").value()).rowwise() +
              params.get("mwm.dec.l1_b").value().row(0))
                 .array()
                 .tanh();
  Matrix expect = (h * params.get("mwm.dec.l2_w").value()).rowwise() +
                  params.get("mwm.dec.l2_b").value().row(0);
  CHECK((out.value() - expect).cwiseAbs().maxCoeff() <= 1e-12);

  params.set_value("mwm.dec.l1_w", Matrix::Zero(d.z_dim + d.d_model, d.d_model));
  params.set_value("mwm.dec.l2_w", Matrix::Zero(d.d_model, d.s_dim));
  CHECK(mwm_decode(Tensor::constant(z), Tensor::constant(v), params)
            .value()
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("mwm_predict determinism and seeding") {
  Rng rng(4);
  MwmDims d = small_dims();
  ParamStore params(6);
  add_mwm_params(params, d);
  Matrix view = rand_mat(1, d.d_model, rng), instr = rand_mat(3, d.d_model, rng),
         v = rand_mat(1, d.d_model, rng);

  MWMOutput a = mwm_predict(Tensor::constant(view), Tensor::constant(instr),
                            Tensor::constant(v), params, d,
                            SampleMode::Deterministic, nullptr);
  MWMOutput b = mwm_predict(Tensor::constant(view), Tensor::constant(instr),
                            Tensor::constant(v), params, d,
                            SampleMode::Deterministic, nullptr);
  CHECK(a.s_hat.value() == b.s_hat.value());
  CHECK(a.z.value() == a.mu.value());

  Rng r1(9), r2(9);
  MWMOutput s1 = mwm_predict(Tensor::constant(view), Tensor::constant(instr),
                             Tensor::constant(v), params, d,
                             SampleMode::Stochastic, &r1);
  MWMOutput s2 = mwm_predict(Tensor::constant(view), Tensor::constant(instr),
                             Tensor::constant(v), params, d,
                             SampleMode::Stochastic, &r2);
  CHECK(s1.s_hat.value() == s2.s_hat.value());
}

TEST_CASE("stochastic decode mean matches deterministic under a linear decoder") {
  Rng rng(5);
  MwmDims d = small_dims();
  ParamStore params(7);
  add_mwm_params(params, d);
  // make the decoder linear: first layer near-identity scaling into tanh's
  // linear regime, compensated by the second layer
  const double eps = 1e-4;
  Matrix l1 = Matrix::Zero(d.z_dim + d.d_model, d.d_model);
  for (int i = 0; i < d.z_dim + d.d_model && i < d.d_model; ++i) l1(i, i) = eps;
  params.set_value("mwm.dec.l1_w", l1);
  params.set_value("mwm.dec.l1_b", Matrix::Zero(1, d.d_model));
  Matrix l2 = rand_mat(d.d_model, d.s_dim, rng) / eps;
  params.set_value("mwm.dec.l2_w", l2);

  Matrix view = rand_mat(1, d.d_model, rng), instr = rand_mat(2, d.d_model, rng),
         v = rand_mat(1, d.d_model, rng);
  MWMOutput det = mwm_predict(Tensor::constant(view), Tensor::constant(instr),
                              Tensor::constant(v), params, d,
                              SampleMode::Deterministic, nullptr);
  Rng sr(123);
  Matrix acc = Matrix::Zero(1, d.s_dim);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    acc += mwm_predict(Tensor::constant(view), Tensor::constant(instr),
                       Tensor::constant(v), params, d, SampleMode::Stochastic,
                       &sr)
               .s_hat.value();
  }
  acc /= n;
  // Monte-Carlo tolerance: sigma is O(1), decoder weights O(1/eps)*eps ~ O(1)
  CHECK((acc - det.s_hat.value()).cwiseAbs().maxCoeff() <= 0.15);
}

TEST_CASE("mwm_loss values and full gradient check") {
  Rng rng(6);
  MwmDims d = small_dims();
  ParamStore params(8);
  add_mwm_params(params, d);

  SUBCASE("perfect fit at the prior gives zero") {
    MWMOutput out;
    out.mu = Tensor::constant(Matrix::Zero(1, d.z_dim));
    out.sigma = Tensor::constant(Matrix::Ones(1, d.z_dim));
    out.s_hat = Tensor::constant(rand_mat(1, d.s_dim, rng));
    CHECK(mwm_loss(out, Tensor::constant(out.s_hat.value()), 0.7).scalar() == 0.0);
  }

  SUBCASE("beta = 0 is pure MSE; random case matches the sum of oracles") {
    MWMOutput out;
    out.mu = Tensor::constant(rand_mat(1, d.z_dim, rng));
    out.sigma = Tensor::constant(rand_mat(1, d.z_dim, rng).cwiseAbs() +
                                 Matrix::Constant(1, d.z_dim, 0.1));
    out.s_hat = Tensor::constant(rand_mat(1, d.s_dim, rng));
    Matrix label = rand_mat(1, d.s_dim, rng);
    double m = (out.s_hat.value() - label).squaredNorm() / d.s_dim;
    CHECK(std::abs(mwm_loss(out, Tensor::constant(label), 0.0).scalar() - m) <= 1e-15);
    double kl = 0.5 * (out.mu.value().array().square() +
                       out.sigma.value().array().square() - 1.0 -
                       2.0 * out.sigma.value().array().log())
                          .sum();
    CHECK(std::abs(mwm_loss(out, Tensor::constant(label), 0.5).scalar() -
                   (m + 0.5 * kl)) <= 1e-12);
  }

  SUBCASE("full pipeline gradient check, deterministic and stochastic") {
    Matrix view = rand_mat(1, d.d_model, rng), instr = rand_mat(3, d.d_model, rng),
           v = rand_mat(1, d.d_model, rng), label = rand_mat(1, d.s_dim, rng);
    Matrix eps = rand_mat(1, d.z_dim, rng);
    auto loss = [&](ParamStore& p) {
      Tensor c = mwm_encode(Tensor::constant(view), Tensor::constant(instr), p,
                            d.layers);
      auto [mu, sigma] = mwm_heads(c, p);
      Tensor z = reparameterize(mu, sigma, Tensor::constant(eps));
      MWMOutput out{c, mu, sigma, z,
                    mwm_decode(z, Tensor::constant(v), p)};
      return mwm_loss(out, Tensor::constant(label), 0.5);
    };
    auto rep = finite_diff_grad_check(loss, params, 1e-5, 1e-4, 100000);
    INFO(rep.worst_param, " ", rep.max_rel_err);
    CHECK(rep.pass);
  }

  SUBCASE("deterministic mode: KL gradient w.r.t. decoder weights is zero") {
    Matrix view = rand_mat(1, d.d_model, rng), instr = rand_mat(3, d.d_model, rng);
    params.zero_grads();
    Tensor c = mwm_encode(Tensor::constant(view), Tensor::constant(instr),
                          params, d.layers);
    auto [mu, sigma] = mwm_heads(c, params);
    Tensor kl = kl_to_standard_normal(mu, sigma);
    backward(kl);
    CHECK_FALSE(params.get("mwm.dec.l1_w").has_grad());
    CHECK(params.get("mwm.mu.l1_w").has_grad());
  }
}

TEST_CASE("topostate_predict: singleton, permutation invariance, oracle") {
  Rng rng(7);
  MwmDims d = small_dims();
  ParamStore params(9);
  add_topostate_params(params, d);

  Matrix one = rand_mat(1, d.d_model, rng);
  Matrix viaMlp = mlp(Tensor::constant(one), params, "topo").value();
  CHECK((topostate_predict(Tensor::constant(one), params).value() - viaMlp)
            .cwiseAbs()
            .maxCoeff() <= 1e-15);

  Matrix three = rand_mat(3, d.d_model, rng);
  Matrix perm(3, d.d_model);
  perm << three.row(1), three.row(2), three.row(0);
  CHECK((topostate_predict(Tensor::constant(three), params).value() -
         topostate_predict(Tensor::constant(perm), params).value())
            .cwiseAbs()
            .maxCoeff() <= 1e-12);

  Matrix pooled = three.colwise().mean();
  Matrix expect = mlp(Tensor::constant(pooled), params, "topo").value();
  CHECK((topostate_predict(Tensor::constant(three), params).value() - expect)
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
}

TEST_CASE("dense_predict: zero weights, shape, masked oracle") {
  Rng rng(8);
  MwmDims d = small_dims();
  ParamStore params(10);
  add_cond2vis_params(params, d);
  Matrix emb = rand_mat(3, d.d_model, rng);

  Tensor pred = dense_predict(Tensor::constant(emb), 1, params, d);
  CHECK(pred.rows() == d.v_max);
  CHECK(pred.cols() == d.feature_dim);
  CHECK_THROWS_AS(dense_predict(Tensor::constant(emb), 5, params, d), LookupError);

  params.set_value("c2v.l1_w", Matrix::Zero(d.d_model, d.d_model));
  params.set_value("c2v.l2_w", Matrix::Zero(d.d_model, d.v_max * d.feature_dim));
  CHECK(dense_predict(Tensor::constant(emb), 0, params, d).value().cwiseAbs().maxCoeff() == 0.0);

  // masked-MSE against a hand-masked oracle
  WorldSpec ws;
  ws.node_count = 6;
  ws.connection_radius = 0.9;
  ws.feature_dim = d.feature_dim;
  ws.landmark_count = 4;
  ws.seed = 3;
  World w = generate_world(ws);
  auto [label, mask] = dense_label(w, 0, d.v_max);
  Matrix praw = rand_mat(d.v_max, d.feature_dim, rng);
  double got = masked_mse(Tensor::constant(praw), Tensor::constant(label), mask)
                   .scalar();
  double acc = 0;
  int cnt = 0;
  Matrix raw = node_visual_state_raw(w, 0);
  for (Eigen::Index r = 0; r < d.v_max; ++r)
    for (Eigen::Index c = 0; c < d.feature_dim; ++c)
      if (r < raw.rows()) {
        acc += std::pow(praw(r, c) - raw(r, c), 2);
        ++cnt;
      }
  CHECK(std::abs(got - acc / cnt) <= 1e-12);
}

TEST_CASE("viswm_predict ignores instructions and passes gradcheck") {
  Rng rng(9);
  MwmDims d = small_dims();
  ParamStore params(11);
  add_mwm_params(params, d);
  add_viswm_params(params, d);
  Matrix view = rand_mat(1, d.d_model, rng), v = rand_mat(1, d.d_model, rng);

  MWMOutput a = viswm_predict(Tensor::constant(view), Tensor::constant(v),
                              params, d, SampleMode::Deterministic, nullptr);
  MWMOutput b = viswm_predict(Tensor::constant(view), Tensor::constant(v),
                              params, d, SampleMode::Deterministic, nullptr);
  CHECK(a.s_hat.value() == b.s_hat.value());

  Matrix label = rand_mat(1, d.s_dim, rng);
  auto loss = [&](ParamStore& p) {
    MWMOutput out = viswm_predict(Tensor::constant(view), Tensor::constant(v),
                                  p, d, SampleMode::Deterministic, nullptr);
    return mwm_loss(out, Tensor::constant(label), 0.5);
  };
  auto rep = finite_diff_grad_check(loss, params, 1e-5, 1e-4, 100000);
  INFO(rep.worst_param, " ", rep.max_rel_err);
  CHECK(rep.pass);
}
