#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "unemo/errors.hpp"

namespace unemo {

using Matrix = Eigen::MatrixXd;

// When enabled, tensor construction rejects NaN/Inf values. On by default;
// training loops may disable it for speed.
bool& strict_checks();

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;  // empty until touched by backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;  // accumulates into parents' grads

  Matrix& grad_ref() {
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
    return grad;
  }
};

}  // namespace detail

// A 2-D tensor handle over a shared autodiff node. Copies are shallow; the
// computation graph is built by the free functions below and torn down when
// the handles go out of scope.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix v);
  static Tensor param(Matrix v);  // leaf with requires_grad = true

  bool empty() const { return !n_; }
  const Matrix& value() const { return n_->value; }
  Matrix& mutable_value() { return n_->value; }
  const Matrix& grad() const { return n_->grad_ref(); }
  Matrix& mutable_grad() { return n_->grad_ref(); }
  bool has_grad() const { return n_ && n_->grad.size() != 0; }
  void clear_grad() { if (n_) n_->grad.resize(0, 0); }
  bool requires_grad() const { return n_ && n_->requires_grad; }
  Eigen::Index rows() const { return n_->value.rows(); }
  Eigen::Index cols() const { return n_->value.cols(); }
  double scalar() const;

  detail::Node* node() const { return n_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : n_(std::move(n)) {}
  std::shared_ptr<detail::Node> n_;

  friend Tensor make_op(Matrix value, std::vector<Tensor> parents,
                        std::function<void(detail::Node&)> backward);
};

// Graph construction helper shared by all ops.
Tensor make_op(Matrix value, std::vector<Tensor> parents,
               std::function<void(detail::Node&)> backward);

// --- primitive operations -------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor cmul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& x, double s);
Tensor add_rowwise(const Tensor& m, const Tensor& row);  // broadcast row over m
Tensor tanh_op(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
Tensor vstack(std::span<const Tensor> rows);
Tensor row(const Tensor& x, Eigen::Index i);
Tensor rows_slice(const Tensor& x, Eigen::Index i, Eigen::Index count);
Tensor mean_rows(const Tensor& x);  // 1 x cols
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor sum_all(const Tensor& x);  // 1 x 1
Tensor mse(const Tensor& a, const Tensor& b);  // mean squared error, 1 x 1
Tensor masked_mse(const Tensor& a, const Tensor& b, const Matrix& mask);
Tensor detach(const Tensor& x);

// z = mu + sigma .* eps; gradient reaches mu and sigma only.
Tensor reparameterize(const Tensor& mu, const Tensor& sigma, const Tensor& eps);

// sum_i 0.5 * (mu_i^2 + sigma_i^2 - 1 - ln sigma_i^2), 1 x 1
Tensor kl_to_standard_normal(const Tensor& mu, const Tensor& sigma);

// -log softmax(logits)[label]; logits is a column vector (C x 1).
Tensor cross_entropy_logits(const Tensor& logits, Eigen::Index label);

// Reverse-mode sweep from a 1x1 loss tensor.
void backward(const Tensor& loss);

}  // namespace unemo
