#include "unemo/mwm.hpp"

namespace unemo {

PredictorVariant parse_variant(const std::string& s) {
  if (s == "mwm") return PredictorVariant::Mwm;
  if (s == "viswm") return PredictorVariant::VisWm;
  if (s == "cond2vis") return PredictorVariant::Cond2Vis;
  if (s == "topostate") return PredictorVariant::TopoState;
  throw ConfigError("unknown predictor variant: " + s);
}

std::string variant_name(PredictorVariant v) {
  switch (v) {
    case PredictorVariant::Mwm: return "mwm";
    case PredictorVariant::VisWm: return "viswm";
    case PredictorVariant::Cond2Vis: return "cond2vis";
    case PredictorVariant::TopoState: return "topostate";
  }
  throw ConfigError("bad variant tag");
}

void add_mwm_params(ParamStore& params, const MwmDims& dims) {
  for (int l = 0; l < dims.layers; ++l)
    add_attention_params(params, "mwm.layer" + std::to_string(l), dims.d_model,
                         dims.d_model, dims.d_model, dims.d_model);
  add_mlp_params(params, "mwm.mu", dims.d_model, dims.d_model, dims.z_dim);
  add_mlp_params(params, "mwm.sigma", dims.d_model, dims.d_model, dims.z_dim);
  add_mlp_params(params, "mwm.dec", dims.z_dim + dims.d_model, dims.d_model,
                 dims.s_dim);
}

void add_viswm_params(ParamStore& params, const MwmDims& dims) {
  add_mlp_params(params, "viswm.enc", dims.d_model, dims.d_model, dims.d_model);
  // shares mwm.mu / mwm.sigma / mwm.dec
}

void add_cond2vis_params(ParamStore& params, const MwmDims& dims) {
  add_mlp_params(params, "c2v", dims.d_model, dims.d_model,
                 dims.v_max * dims.feature_dim);
}

void add_topostate_params(ParamStore& params, const MwmDims& dims) {
  add_mlp_params(params, "topo", dims.d_model, dims.d_model, dims.d_model);
}

Tensor mwm_encode(const Tensor& view, const Tensor& instr,
                  const ParamStore& params, int layers) {
  if (instr.rows() < 1)
    throw ContractError("mwm_encode: empty instruction features");
  Tensor x = view;
  for (int l = 0; l < layers; ++l)
    x = add(x, cross_attention(x, instr, params, "mwm.layer" + std::to_string(l)));
  return x;
}

std::pair<Tensor, Tensor> mwm_heads(const Tensor& c_j, const ParamStore& params) {
  Tensor mu = mlp(c_j, params, "mwm.mu");
  Tensor sigma = softplus(mlp(c_j, params, "mwm.sigma"));
  return {mu, sigma};
}

Tensor mwm_decode(const Tensor& z, const Tensor& v_j, const ParamStore& params) {
  return mlp(concat_cols(z, v_j), params, "mwm.dec");
}

namespace {

MWMOutput finish_latent(Tensor c_j, const Tensor& v_j, const ParamStore& params,
                        const MwmDims& dims, SampleMode mode, Rng* rng) {
  MWMOutput out;
  out.c_j = std::move(c_j);
  std::tie(out.mu, out.sigma) = mwm_heads(out.c_j, params);
  if (mode == SampleMode::Stochastic) {
    if (!rng) throw ContractError("stochastic sampling requires an rng");
    Matrix eps(1, dims.z_dim);
    for (int i = 0; i < dims.z_dim; ++i) eps(0, i) = rng->normal();
    out.z = reparameterize(out.mu, out.sigma, Tensor::constant(eps));
  } else {
    out.z = out.mu;
  }
  out.s_hat = mwm_decode(out.z, v_j, params);
  return out;
}

}  // namespace

MWMOutput mwm_predict(const Tensor& view, const Tensor& instr,
                      const Tensor& v_j, const ParamStore& params,
                      const MwmDims& dims, SampleMode mode, Rng* rng) {
  return finish_latent(mwm_encode(view, instr, params, dims.layers), v_j,
                       params, dims, mode, rng);
}

MWMOutput viswm_predict(const Tensor& view, const Tensor& v_j,
                        const ParamStore& params, const MwmDims& dims,
                        SampleMode mode, Rng* rng) {
  return finish_latent(mlp(view, params, "viswm.enc"), v_j, params, dims, mode,
                       rng);
}

Tensor mwm_loss(const MWMOutput& out, const Tensor& label, double beta) {
  if (beta < 0) throw DomainError("mwm_loss: beta must be >= 0");
  Tensor rec = mse(out.s_hat, label);
  if (beta == 0) return rec;
  Tensor kl = kl_to_standard_normal(out.mu, out.sigma);
  Tensor total = add(rec, scale(kl, beta));
  if (!std::isfinite(total.scalar()))
    throw TrainingError("mwm_loss: non-finite loss");
  return total;
}

Tensor topostate_predict(const Tensor& node_embeddings, const ParamStore& params) {
  if (node_embeddings.rows() < 1)
    throw ContractError("topostate_predict: no node embeddings");
  return mlp(mean_rows(node_embeddings), params, "topo");
}

Tensor dense_predict(const Tensor& node_embeddings, int j,
                     const ParamStore& params, const MwmDims& dims) {
  if (j < 0 || j >= node_embeddings.rows())
    throw LookupError("dense_predict: candidate index out of range");
  Tensor flat = mlp(row(node_embeddings, j), params, "c2v");
  // reshape 1 x (v_max*feature_dim) into v_max x feature_dim
  std::vector<Tensor> rows;
  rows.reserve(dims.v_max);
  for (int r = 0; r < dims.v_max; ++r)
    rows.push_back(make_op(
        flat.value().block(0, r * dims.feature_dim, 1, dims.feature_dim),
        {flat}, [r, fd = dims.feature_dim](detail::Node& n) {
          n.parents[0]->grad_ref().block(0, r * fd, 1, fd) += n.grad;
        }));
  return vstack(rows);
}

std::pair<Matrix, Matrix> dense_label(const World& world, int node, int v_max) {
  Matrix raw = node_visual_state_raw(world, node);
  const int fd = world.spec().feature_dim;
  Matrix label = Matrix::Zero(v_max, fd);
  Matrix mask = Matrix::Zero(v_max, fd);
  const Eigen::Index n = std::min<Eigen::Index>(raw.rows(), v_max);
  label.topRows(n) = raw.topRows(n);
  mask.topRows(n).setOnes();
  return {label, mask};
}

}  // namespace unemo
