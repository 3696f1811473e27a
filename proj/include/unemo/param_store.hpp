#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "unemo/rng.hpp"
#include "unemo/tensor.hpp"

namespace unemo {

// Named trainable parameters with deterministic (insertion) iteration order.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t rng_seed = 0) : rng_seed_(rng_seed) {}

  Tensor add(const std::string& name, Matrix init);
  // Glorot-uniform initialized matrix, drawn from a stream derived from the
  // store seed and the parameter name.
  Tensor add_glorot(const std::string& name, Eigen::Index rows,
                    Eigen::Index cols, double gain = 1.0);
  Tensor add_zeros(const std::string& name, Eigen::Index rows,
                   Eigen::Index cols);

  bool contains(const std::string& name) const;
  Tensor get(const std::string& name) const;  // throws ConfigError if absent
  void set_value(const std::string& name, Matrix v);

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }
  std::uint64_t rng_seed() const { return rng_seed_; }

  void zero_grads();
  std::size_t coordinate_count() const;

 private:
  std::uint64_t rng_seed_;
  std::vector<std::string> order_;
  std::unordered_map<std::string, Tensor> entries_;
};

// Standard Adam with bias correction; moment state is kept per parameter
// name inside the optimizer.
class Adam {
 public:
  Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // One update over every parameter in the store; every parameter must have
  // a populated gradient.
  void step(ParamStore& params);
  void step_subset(ParamStore& params, const std::vector<std::string>& names);

  void reset() { t_ = 0; m_.clear(); v_.clear(); }
  int step_count() const { return t_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  void update_one(const std::string& name, Tensor& p);

  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::unordered_map<std::string, Matrix> m_, v_;
};

}  // namespace unemo
