#pragma once

#include "unemo/encoders.hpp"
#include "unemo/hpfn.hpp"
#include "unemo/mwm.hpp"
#include "unemo/topomap.hpp"

namespace unemo {

struct ModelDims {
  MwmDims mwm;
  int vocab_size = 35;
  int feedback_layers = 2;
  int max_len = 32;
};

// Dimension bundle derived from a world spec: the token vocabulary follows
// the landmark count and the view width follows the feature dimension.
ModelDims make_dims(const WorldSpec& spec);

// Registers every parameter the navigator touches for the given predictor
// variant (encoder, map encoder, world model, policy, variant extras).
void add_model_params(ParamStore& params, const ModelDims& dims,
                      PredictorVariant variant);

// Names owned by the state predictor of the given variant (the subset that
// periodic retraining fine-tunes or re-initializes).
std::vector<std::string> predictor_param_names(const ParamStore& params,
                                               PredictorVariant variant);

}  // namespace unemo
