#pragma once

#include <vector>

#include "unemo/graphworld.hpp"
#include "unemo/nn.hpp"
#include "unemo/param_store.hpp"
#include "unemo/tensor.hpp"

namespace unemo {

// Token-embedding + positional table + view-projection MLP.
// Registers: enc.tok (vocab x d_model), enc.pos (max_len x d_model),
//            enc.view.{l1_w,l1_b,l2_w,l2_b}.
void add_encoder_params(ParamStore& params, int vocab_size, int d_model,
                        int feature_dim, int max_len = 32);

// Embedding lookup plus additive positional rows; N x d_model.
Tensor encode_instruction(const std::vector<int>& tokens,
                          const ParamStore& params);

// 2-layer MLP projection of a raw view feature to d_model.
Tensor encode_view(const Tensor& view_feature, const ParamStore& params);

// --- visual-state compressor -------------------------------------------

// Affine ladder mirroring the compressor's width progression
// feature_dim -> 32 -> 64 -> 128 -> s_dim, decoder reversed.
void add_autoencoder_params(ParamStore& params, int feature_dim, int s_dim);

Tensor ae_encode_rows(const Tensor& x, const ParamStore& params);
Tensor ae_decode_rows(const Tensor& z, const ParamStore& params);

// Encode every view row, average-pool over rows; 1 x s_dim.
Tensor autoencoder_compress(const Tensor& raw_state, const ParamStore& params);

struct AeTrainLog {
  double initial_holdout_mse = 0.0;
  double final_holdout_mse = 0.0;
  double initial_train_mse = 0.0;
  double final_train_mse = 0.0;
  std::vector<double> epoch_train_mse;
};

// Minimizes reconstruction MSE with Adam; the last 10% of a deterministic
// shuffle is held out.
AeTrainLog autoencoder_train(const std::vector<Feature>& views,
                             ParamStore& params, int epochs, double lr,
                             Rng& rng);

// Compressed ground-truth visual state of a node; the regression target for
// the world model.
Matrix node_state_label(const World& world, int node,
                        const ParamStore& ae_params);

}  // namespace unemo
