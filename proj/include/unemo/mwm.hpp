#pragma once

#include <optional>
#include <string>

#include "unemo/graphworld.hpp"
#include "unemo/nn.hpp"
#include "unemo/param_store.hpp"

namespace unemo {

enum class PredictorVariant { Mwm, VisWm, Cond2Vis, TopoState };

PredictorVariant parse_variant(const std::string& s);
std::string variant_name(PredictorVariant v);

enum class SampleMode { Deterministic, Stochastic };

struct MwmDims {
  int d_model = 64;
  int z_dim = 16;
  int s_dim = 32;
  int layers = 3;      // stacked cross-attention layers
  int feature_dim = 24;
  int v_max = 12;      // padded view-stack height for the dense predictor
};

struct MWMOutput {
  Tensor c_j;    // fused cross-modal embedding, 1 x d_model
  Tensor mu;     // 1 x z_dim
  Tensor sigma;  // 1 x z_dim, strictly positive
  Tensor z;      // 1 x z_dim
  Tensor s_hat;  // predicted compressed next visual state, 1 x s_dim
};

void add_mwm_params(ParamStore& params, const MwmDims& dims);
void add_viswm_params(ParamStore& params, const MwmDims& dims);
void add_cond2vis_params(ParamStore& params, const MwmDims& dims);
void add_topostate_params(ParamStore& params, const MwmDims& dims);

// L stacked cross-attention layers with a residual around each; view is the
// query, instruction tokens are keys/values. 1 x d_model.
Tensor mwm_encode(const Tensor& view, const Tensor& instr,
                  const ParamStore& params, int layers);

// (mu, softplus-activated sigma)
std::pair<Tensor, Tensor> mwm_heads(const Tensor& c_j, const ParamStore& params);

// MLP over concat(z, v_j) -> 1 x s_dim.
Tensor mwm_decode(const Tensor& z, const Tensor& v_j, const ParamStore& params);

// encode -> heads -> sample (z = mu when deterministic) -> decode.
MWMOutput mwm_predict(const Tensor& view, const Tensor& instr,
                      const Tensor& v_j, const ParamStore& params,
                      const MwmDims& dims, SampleMode mode, Rng* rng);

// Same latent pipeline but the encoder is an instruction-free MLP on the view.
MWMOutput viswm_predict(const Tensor& view, const Tensor& v_j,
                        const ParamStore& params, const MwmDims& dims,
                        SampleMode mode, Rng* rng);

// MSE(s_hat, label) + beta * KL(N(mu, sigma^2) || N(0, I))
Tensor mwm_loss(const MWMOutput& out, const Tensor& label, double beta);

// Mean-pool node embeddings, then an MLP; predicts the pooled map state after
// the expert action. Auxiliary-loss-only.
Tensor topostate_predict(const Tensor& node_embeddings, const ParamStore& params);

// Dense padded view-stack prediction from candidate row j. Auxiliary-loss-only.
Tensor dense_predict(const Tensor& node_embeddings, int j,
                     const ParamStore& params, const MwmDims& dims);

// Padded ground-truth view stack and its row mask for the dense predictor.
std::pair<Matrix, Matrix> dense_label(const World& world, int node, int v_max);

}  // namespace unemo
