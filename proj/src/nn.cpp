#include "unemo/nn.hpp"

#include <cmath>

#include "unemo/errors.hpp"

namespace unemo {

void add_attention_params(ParamStore& params, const std::string& tag,
                          Eigen::Index d_query_in, Eigen::Index d_key_in,
                          Eigen::Index d_attn, Eigen::Index d_out,
                          double value_gain) {
  params.add_glorot(tag + ".wq", d_query_in, d_attn);
  params.add_glorot(tag + ".wk", d_key_in, d_attn);
  params.add_glorot(tag + ".wv", d_key_in, d_out, value_gain);
}

Tensor cross_attention(const Tensor& query, const Tensor& keys,
                       const ParamStore& params, const std::string& tag) {
  Tensor wq = params.get(tag + ".wq");
  Tensor wk = params.get(tag + ".wk");
  Tensor wv = params.get(tag + ".wv");
  if (query.cols() != wq.rows())
    throw DimensionError("cross_attention: query width mismatch for " + tag);
  if (keys.cols() != wk.rows())
    throw DimensionError("cross_attention: key width mismatch for " + tag);
  Tensor q = matmul(query, wq);
  Tensor k = matmul(keys, wk);
  Tensor v = matmul(keys, wv);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(k.cols()));
  Tensor scores = scale(matmul(q, transpose(k)), inv_sqrt_d);
  return matmul(softmax_rows(scores), v);
}

void add_mlp_params(ParamStore& params, const std::string& tag,
                    Eigen::Index d_in, Eigen::Index d_hidden,
                    Eigen::Index d_out) {
  params.add_glorot(tag + ".l1_w", d_in, d_hidden);
  params.add_zeros(tag + ".l1_b", 1, d_hidden);
  params.add_glorot(tag + ".l2_w", d_hidden, d_out);
  params.add_zeros(tag + ".l2_b", 1, d_out);
}

Tensor mlp(const Tensor& x, const ParamStore& params, const std::string& tag) {
  Tensor h = tanh_op(
      add_rowwise(matmul(x, params.get(tag + ".l1_w")), params.get(tag + ".l1_b")));
  return add_rowwise(matmul(h, params.get(tag + ".l2_w")),
                     params.get(tag + ".l2_b"));
}

void add_linear_params(ParamStore& params, const std::string& tag,
                       Eigen::Index d_in, Eigen::Index d_out) {
  params.add_glorot(tag + ".w", d_in, d_out);
  params.add_zeros(tag + ".b", 1, d_out);
}

Tensor linear(const Tensor& x, const ParamStore& params,
              const std::string& tag) {
  return add_rowwise(matmul(x, params.get(tag + ".w")),
                     params.get(tag + ".b"));
}

}  // namespace unemo
