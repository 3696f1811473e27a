#include "unemo/encoders.hpp"

#include <algorithm>
#include <cmath>

namespace unemo {

namespace {

Matrix sinusoidal_table(int max_len, int d_model) {
  Matrix t(max_len, d_model);
  for (int p = 0; p < max_len; ++p)
    for (int i = 0; i < d_model; ++i) {
      double rate = std::pow(10000.0, -2.0 * (i / 2) / d_model);
      t(p, i) = (i % 2 == 0) ? std::sin(p * rate) : std::cos(p * rate);
    }
  return t * 0.5;
}

constexpr int kLadder[3] = {32, 64, 128};

}  // namespace

void add_encoder_params(ParamStore& params, int vocab_size, int d_model,
                        int feature_dim, int max_len) {
  params.add_glorot("enc.tok", vocab_size, d_model, 4.0);
  params.add("enc.pos", sinusoidal_table(max_len, d_model));
  add_mlp_params(params, "enc.view", feature_dim, d_model, d_model);
}

Tensor encode_instruction(const std::vector<int>& tokens,
                          const ParamStore& params) {
  Tensor table = params.get("enc.tok");
  Tensor pos = params.get("enc.pos");
  if (tokens.empty())
    return Tensor::constant(Matrix(0, table.cols()));
  std::vector<Tensor> rows;
  rows.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    int t = tokens[i];
    if (t < 0 || t >= table.rows())
      throw LookupError("token id " + std::to_string(t) +
                        " outside vocabulary of size " +
                        std::to_string(table.rows()));
    if (static_cast<Eigen::Index>(i) >= pos.rows())
      throw DimensionError("instruction longer than positional table");
    rows.push_back(add(row(table, t), row(pos, static_cast<Eigen::Index>(i))));
  }
  return vstack(rows);
}

Tensor encode_view(const Tensor& view_feature, const ParamStore& params) {
  return mlp(view_feature, params, "enc.view");
}

void add_autoencoder_params(ParamStore& params, int feature_dim, int s_dim) {
  std::vector<Eigen::Index> enc{feature_dim, kLadder[0], kLadder[1], kLadder[2], s_dim};
  for (int l = 0; l < 4; ++l)
    add_linear_params(params, "ae.enc.l" + std::to_string(l), enc[l], enc[l + 1]);
  for (int l = 0; l < 4; ++l)
    add_linear_params(params, "ae.dec.l" + std::to_string(l), enc[4 - l], enc[3 - l]);
}

Tensor ae_encode_rows(const Tensor& x, const ParamStore& params) {
  Tensor h = x;
  for (int l = 0; l < 4; ++l) {
    h = linear(h, params, "ae.enc.l" + std::to_string(l));
    if (l < 3) h = tanh_op(h);
  }
  return h;
}

Tensor ae_decode_rows(const Tensor& z, const ParamStore& params) {
  Tensor h = z;
  for (int l = 0; l < 4; ++l) {
    h = linear(h, params, "ae.dec.l" + std::to_string(l));
    if (l < 3) h = tanh_op(h);
  }
  return h;
}

Tensor autoencoder_compress(const Tensor& raw_state, const ParamStore& params) {
  if (raw_state.rows() < 1)
    throw ContractError("autoencoder_compress: empty view stack");
  return mean_rows(ae_encode_rows(raw_state, params));
}

AeTrainLog autoencoder_train(const std::vector<Feature>& views,
                             ParamStore& params, int epochs, double lr,
                             Rng& rng) {
  if (views.empty()) throw ContractError("autoencoder_train: empty corpus");
  std::vector<std::size_t> idx(views.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
  const std::size_t holdout = views.size() / 10;
  const std::size_t ntrain = views.size() - holdout;

  auto stack = [&](std::size_t lo, std::size_t hi) {
    Matrix m(static_cast<Eigen::Index>(hi - lo), views[0].size());
    for (std::size_t i = lo; i < hi; ++i)
      m.row(static_cast<Eigen::Index>(i - lo)) = views[idx[i]];
    return m;
  };
  Matrix train_m = stack(0, ntrain);
  Matrix hold_m = holdout ? stack(ntrain, views.size()) : Matrix();

  auto recon_mse = [&](const Matrix& data) {
    Tensor x = Tensor::constant(data);
    Tensor y = ae_decode_rows(ae_encode_rows(x, params), params);
    return mse(y, x);
  };

  AeTrainLog log;
  log.initial_train_mse = recon_mse(train_m).scalar();
  log.initial_holdout_mse =
      holdout ? recon_mse(hold_m).scalar() : log.initial_train_mse;

  Adam opt(lr);
  const Eigen::Index batch = 32;
  for (int e = 0; e < epochs; ++e) {
    for (Eigen::Index at = 0; at < train_m.rows(); at += batch) {
      Eigen::Index n = std::min(batch, train_m.rows() - at);
      params.zero_grads();
      Tensor x = Tensor::constant(train_m.middleRows(at, n));
      Tensor loss = mse(ae_decode_rows(ae_encode_rows(x, params), params), x);
      if (!std::isfinite(loss.scalar()))
        throw TrainingError("autoencoder_train: loss diverged");
      backward(loss);
      opt.step(params);
    }
    log.epoch_train_mse.push_back(recon_mse(train_m).scalar());
  }
  log.final_train_mse = recon_mse(train_m).scalar();
  log.final_holdout_mse =
      holdout ? recon_mse(hold_m).scalar() : log.final_train_mse;
  return log;
}

Matrix node_state_label(const World& world, int node,
                        const ParamStore& ae_params) {
  Tensor raw = Tensor::constant(node_visual_state_raw(world, node));
  return autoencoder_compress(raw, ae_params).value();
}

}  // namespace unemo
