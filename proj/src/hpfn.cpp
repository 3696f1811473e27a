#include "unemo/hpfn.hpp"

#include "unemo/encoders.hpp"

namespace unemo {

void add_policy_params(ParamStore& params, int d_model, int s_dim,
                       int feedback_layers) {
  add_mlp_params(params, "hpfn.s1", d_model, d_model, 1);
  for (int l = 0; l < feedback_layers; ++l)
    add_attention_params(params, "hpfn.fb" + std::to_string(l), d_model, s_dim,
                         d_model, d_model, 0.1);
  add_mlp_params(params, "hpfn.s2", d_model, d_model, 1);
}

int argmax_logits(const Matrix& logits) {
  if (logits.rows() < 1 || logits.cols() != 1)
    throw DimensionError("argmax_logits expects a non-empty column");
  int best = 0;
  for (Eigen::Index i = 1; i < logits.rows(); ++i)
    if (logits(i, 0) > logits(best, 0)) best = static_cast<int>(i);
  return best;
}

Tensor score_stage1(const Tensor& node_embeddings, const ParamStore& params) {
  if (node_embeddings.rows() < 2)
    throw ContractError("score_stage1 needs at least one node plus STOP");
  return mlp(node_embeddings, params, "hpfn.s1");
}

int select_lookahead(const Tensor& logits1, const CandidateSet& candidates) {
  if (logits1.rows() != candidates.size())
    throw DimensionError("logit count " + std::to_string(logits1.rows()) +
                         " does not match candidate count " +
                         std::to_string(candidates.size()));
  return candidates.entries[argmax_logits(logits1.value())];
}

Tensor refine_embeddings(const Tensor& node_embeddings, const Tensor& s_hat,
                         const ParamStore& params, int feedback_layers) {
  if (s_hat.rows() != 1)
    throw ContractError("refine_embeddings: predicted state must be one row");
  Tensor x = node_embeddings;
  for (int l = 0; l < feedback_layers; ++l)
    x = add(x, cross_attention(x, s_hat, params, "hpfn.fb" + std::to_string(l)));
  return x;
}

Tensor score_stage2(const Tensor& refined, const ParamStore& params) {
  return mlp(refined, params, "hpfn.s2");
}

StepDecision step_policy(const TopoMap& map, const Tensor& instr_features,
                         const ParamStore& params, const MwmDims& dims,
                         const StepConfig& config) {
  StepDecision d;
  d.candidates = candidate_set(map);
  d.embeddings = tne_encode(map, instr_features, params);
  d.logits1 = score_stage1(d.embeddings, params);
  d.a_prime = argmax_logits(d.logits1.value());
  d.lookahead = d.candidates.entries[d.a_prime];

  const bool can_feed_back = config.variant == PredictorVariant::Mwm ||
                             config.variant == PredictorVariant::VisWm;
  if (!config.feedback_off && can_feed_back &&
      d.lookahead != CandidateSet::kStop) {
    Tensor e_j =
        encode_view(Tensor::constant(node_basis(map, d.lookahead)), params);
    Tensor v_j = row(d.embeddings, d.a_prime);
    d.mwm_out = config.variant == PredictorVariant::VisWm
                    ? viswm_predict(e_j, v_j, params, dims, config.mode,
                                    config.rng)
                    : mwm_predict(e_j, instr_features, v_j, params, dims,
                                  config.mode, config.rng);
    d.refined = refine_embeddings(d.embeddings, d.mwm_out->s_hat, params,
                                  config.feedback_layers);
  } else {
    d.refined = d.embeddings;
  }
  d.logits2 = score_stage2(d.refined, params);
  d.a_dprime = argmax_logits(d.logits2.value());
  return d;
}

}  // namespace unemo
