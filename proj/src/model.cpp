#include "unemo/model.hpp"

namespace unemo {

ModelDims make_dims(const WorldSpec& spec) {
  ModelDims d;
  d.mwm.feature_dim = spec.feature_dim;
  d.vocab_size = TokenLayout{spec.landmark_count}.vocab_size();
  return d;
}

void add_model_params(ParamStore& params, const ModelDims& dims,
                      PredictorVariant variant) {
  add_encoder_params(params, dims.vocab_size, dims.mwm.d_model,
                     dims.mwm.feature_dim, dims.max_len);
  add_tne_params(params, dims.mwm.feature_dim, dims.mwm.d_model);
  add_mwm_params(params, dims.mwm);
  add_policy_params(params, dims.mwm.d_model, dims.mwm.s_dim,
                    dims.feedback_layers);
  switch (variant) {
    case PredictorVariant::Mwm: break;
    case PredictorVariant::VisWm: add_viswm_params(params, dims.mwm); break;
    case PredictorVariant::Cond2Vis: add_cond2vis_params(params, dims.mwm); break;
    case PredictorVariant::TopoState: add_topostate_params(params, dims.mwm); break;
  }
}

std::vector<std::string> predictor_param_names(const ParamStore& params,
                                               PredictorVariant variant) {
  std::string prefix;
  switch (variant) {
    case PredictorVariant::Mwm: prefix = "mwm."; break;
    case PredictorVariant::VisWm: prefix = "viswm."; break;
    case PredictorVariant::Cond2Vis: prefix = "c2v."; break;
    case PredictorVariant::TopoState: prefix = "topo."; break;
  }
  std::vector<std::string> out;
  for (const auto& name : params.names()) {
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
    // the visual-only ablation shares the latent heads and decoder
    if (variant == PredictorVariant::VisWm &&
        (name.rfind("mwm.mu", 0) == 0 || name.rfind("mwm.sigma", 0) == 0 ||
         name.rfind("mwm.dec", 0) == 0))
      out.push_back(name);
  }
  return out;
}

}  // namespace unemo
