#include "unemo/param_store.hpp"

#include <cmath>

#include "unemo/errors.hpp"

namespace unemo {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Tensor ParamStore::add(const std::string& name, Matrix init) {
  if (entries_.count(name))
    throw ConfigError("duplicate parameter name: " + name);
  Tensor t = Tensor::param(std::move(init));
  entries_.emplace(name, t);
  order_.push_back(name);
  return t;
}

Tensor ParamStore::add_glorot(const std::string& name, Eigen::Index rows,
                              Eigen::Index cols, double gain) {
  Rng rng(rng_seed_ ^ fnv1a(name));
  const double a =
      gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-a, a);
  return add(name, std::move(m));
}

Tensor ParamStore::add_zeros(const std::string& name, Eigen::Index rows,
                             Eigen::Index cols) {
  return add(name, Matrix::Zero(rows, cols));
}

bool ParamStore::contains(const std::string& name) const {
  return entries_.count(name) != 0;
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw ConfigError("missing parameter: " + name);
  return it->second;
}

void ParamStore::set_value(const std::string& name, Matrix v) {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw ConfigError("missing parameter: " + name);
  if (v.rows() != it->second.rows() || v.cols() != it->second.cols())
    throw DimensionError("set_value: shape mismatch for " + name);
  it->second.mutable_value() = std::move(v);
}

void ParamStore::zero_grads() {
  for (const auto& name : order_) entries_.at(name).clear_grad();
}

std::size_t ParamStore::coordinate_count() const {
  std::size_t n = 0;
  for (const auto& name : order_)
    n += static_cast<std::size_t>(entries_.at(name).value().size());
  return n;
}

void Adam::step(ParamStore& params) {
  ++t_;
  for (const auto& name : params.names()) {
    Tensor p = params.get(name);
    if (!p.has_grad())
      throw TrainingError("adam: missing gradient for parameter " + name);
    update_one(name, p);
  }
}

void Adam::step_subset(ParamStore& params,
                       const std::vector<std::string>& names) {
  ++t_;
  for (const auto& name : names) {
    Tensor p = params.get(name);
    if (!p.has_grad())
      throw TrainingError("adam: missing gradient for parameter " + name);
    update_one(name, p);
  }
}

void Adam::update_one(const std::string& name, Tensor& p) {
  const Matrix& g = p.grad();
  Matrix& m = m_.try_emplace(name, Matrix::Zero(g.rows(), g.cols()))
                  .first->second;
  Matrix& v = v_.try_emplace(name, Matrix::Zero(g.rows(), g.cols()))
                  .first->second;
  m = beta1_ * m + (1.0 - beta1_) * g;
  v = beta2_ * v.array().matrix() + (1.0 - beta2_) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  p.mutable_value().array() -=
      lr_ * (m.array() / bc1) /
      ((v.array() / bc2).sqrt() + eps_);
}

}  // namespace unemo
