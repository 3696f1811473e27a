#pragma once

#include <optional>

#include "unemo/mwm.hpp"
#include "unemo/topomap.hpp"

namespace unemo {

// Registers the policy: hpfn.s1 (coarse FFN, one logit per row),
// hpfn.fb{0..M-1} (feedback cross-attention, keys come from s_dim space),
// hpfn.s2 (fine FFN). The feedback value projections start small so early
// refinement is a gentle perturbation of the raw embeddings.
void add_policy_params(ParamStore& params, int d_model, int s_dim,
                       int feedback_layers = 2);

// Lowest-index argmax over a column of logits.
int argmax_logits(const Matrix& logits);

// Row-wise 2-layer FFN producing one logit per candidate row; C x 1.
Tensor score_stage1(const Tensor& node_embeddings, const ParamStore& params);

// Node id (or CandidateSet::kStop) of the highest-scoring candidate.
int select_lookahead(const Tensor& logits1, const CandidateSet& candidates);

// M stacked cross-attention layers with residuals; queries are the node
// embeddings, key/value is the predicted next-state embedding. C x d_model.
Tensor refine_embeddings(const Tensor& node_embeddings, const Tensor& s_hat,
                         const ParamStore& params, int feedback_layers);

// Second row-wise FFN over the refined embeddings; C x 1.
Tensor score_stage2(const Tensor& refined, const ParamStore& params);

struct StepConfig {
  bool feedback_off = false;
  int feedback_layers = 2;
  SampleMode mode = SampleMode::Deterministic;
  Rng* rng = nullptr;
  // Only the CVAE variants produce a compressed-state prediction to feed
  // back; the dense and pooled predictors are auxiliary-loss-only, so the
  // policy behaves as if feedback were off under them.
  PredictorVariant variant = PredictorVariant::Mwm;
};

struct StepDecision {
  CandidateSet candidates;
  Tensor embeddings;  // V_t, C x d_model
  Tensor logits1;     // C x 1
  int a_prime = -1;   // candidate index
  int lookahead = CandidateSet::kStop;  // node id or kStop
  std::optional<MWMOutput> mwm_out;
  Tensor refined;  // V_t' (== V_t when feedback is skipped)
  Tensor logits2;  // C x 1
  int a_dprime = -1;  // candidate index of the executed action
};

// Full coarse -> lookahead -> world-model feedback -> fine pipeline.
// Feedback is skipped when the lookahead is STOP or feedback is disabled;
// stage 2 then scores the unrefined embeddings.
StepDecision step_policy(const TopoMap& map, const Tensor& instr_features,
                         const ParamStore& params, const MwmDims& dims,
                         const StepConfig& config);

}  // namespace unemo
