#pragma once

#include <string>

#include "unemo/param_store.hpp"
#include "unemo/tensor.hpp"

namespace unemo {

// Registers <tag>.wq (dq x dk), <tag>.wk (dkeys x dk), <tag>.wv (dkeys x dv).
void add_attention_params(ParamStore& params, const std::string& tag,
                          Eigen::Index d_query_in, Eigen::Index d_key_in,
                          Eigen::Index d_attn, Eigen::Index d_out,
                          double value_gain = 1.0);

// softmax(Q K^T / sqrt(d)) V with Q = query*Wq, K = keys*Wk, V = keys*Wv.
// d is the key projection width.
Tensor cross_attention(const Tensor& query, const Tensor& keys,
                       const ParamStore& params, const std::string& tag);

// Registers <tag>.l1_w/.l1_b/.l2_w/.l2_b for an affine-tanh-affine block.
void add_mlp_params(ParamStore& params, const std::string& tag,
                    Eigen::Index d_in, Eigen::Index d_hidden,
                    Eigen::Index d_out);

// affine -> tanh -> affine
Tensor mlp(const Tensor& x, const ParamStore& params, const std::string& tag);

// Registers <tag>.w/.b for a single affine layer.
void add_linear_params(ParamStore& params, const std::string& tag,
                       Eigen::Index d_in, Eigen::Index d_out);

Tensor linear(const Tensor& x, const ParamStore& params,
              const std::string& tag);

}  // namespace unemo
