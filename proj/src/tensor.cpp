#include "unemo/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace unemo {

bool& strict_checks() {
  static bool enabled = true;
  return enabled;
}

namespace {

void check_finite(const Matrix& v, const char* where) {
  if (strict_checks() && !v.allFinite()) {
    throw DomainError(std::string("non-finite values in ") + where);
  }
}

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

[[noreturn]] void dim_error(const char* op, const Matrix& a, const Matrix& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_str(a) + " and " + shape_str(b));
}

}  // namespace

Tensor Tensor::constant(Matrix v) {
  check_finite(v, "Tensor::constant");
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(v);
  return Tensor(std::move(n));
}

Tensor Tensor::param(Matrix v) {
  check_finite(v, "Tensor::param");
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

double Tensor::scalar() const {
  if (rows() != 1 || cols() != 1) {
    throw DimensionError("scalar() on tensor of shape " + shape_str(value()));
  }
  return value()(0, 0);
}

Tensor make_op(Matrix value, std::vector<Tensor> parents,
               std::function<void(detail::Node&)> backward) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(value);
  bool any_grad = false;
  for (const Tensor& p : parents) {
    n->parents.push_back(p.n_);
    any_grad = any_grad || p.requires_grad();
  }
  n->requires_grad = any_grad;
  if (any_grad) n->backward = std::move(backward);
  return Tensor(std::move(n));
}

// --- ops --------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) dim_error("matmul", a.value(), b.value());
  Matrix out = a.value() * b.value();
  return make_op(std::move(out), {a, b}, [](detail::Node& n) {
    detail::Node& pa = *n.parents[0];
    detail::Node& pb = *n.parents[1];
    if (pa.requires_grad) pa.grad_ref().noalias() += n.grad * pb.value.transpose();
    if (pb.requires_grad) pb.grad_ref().noalias() += pa.value.transpose() * n.grad;
  });
}

Tensor transpose(const Tensor& x) {
  return make_op(x.value().transpose(), {x}, [](detail::Node& n) {
    n.parents[0]->grad_ref() += n.grad.transpose();
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    dim_error("add", a.value(), b.value());
  return make_op(a.value() + b.value(), {a, b}, [](detail::Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad_ref() += n.grad;
    if (n.parents[1]->requires_grad) n.parents[1]->grad_ref() += n.grad;
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    dim_error("sub", a.value(), b.value());
  return make_op(a.value() - b.value(), {a, b}, [](detail::Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad_ref() += n.grad;
    if (n.parents[1]->requires_grad) n.parents[1]->grad_ref() -= n.grad;
  });
}

Tensor cmul(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    dim_error("cmul", a.value(), b.value());
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [](detail::Node& n) {
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad_ref() += n.grad.cwiseProduct(n.parents[1]->value);
    if (n.parents[1]->requires_grad)
      n.parents[1]->grad_ref() += n.grad.cwiseProduct(n.parents[0]->value);
  });
}

Tensor scale(const Tensor& x, double s) {
  return make_op(x.value() * s, {x}, [s](detail::Node& n) {
    n.parents[0]->grad_ref() += n.grad * s;
  });
}

Tensor add_rowwise(const Tensor& m, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != m.cols())
    dim_error("add_rowwise", m.value(), row.value());
  Matrix out = m.value().rowwise() + row.value().row(0);
  return make_op(std::move(out), {m, row}, [](detail::Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad_ref() += n.grad;
    if (n.parents[1]->requires_grad)
      n.parents[1]->grad_ref() += n.grad.colwise().sum();
  });
}

Tensor tanh_op(const Tensor& x) {
  Matrix y = x.value().array().tanh();
  return make_op(std::move(y), {x}, [](detail::Node& n) {
    n.parents[0]->grad_ref().array() +=
        n.grad.array() * (1.0 - n.value.array().square());
  });
}

Tensor softplus(const Tensor& x) {
  // log(1 + exp(x)) evaluated stably
  Matrix y = x.value().unaryExpr([](double v) {
    return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  });
  return make_op(std::move(y), {x}, [](detail::Node& n) {
    const Matrix& xin = n.parents[0]->value;
    n.parents[0]->grad_ref().array() +=
        n.grad.array() / (1.0 + (-xin.array()).exp());
  });
}

Tensor softmax_rows(const Tensor& x) {
  Matrix y = x.value();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    double m = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  return make_op(std::move(y), {x}, [](detail::Node& n) {
    Matrix& gx = n.parents[0]->grad_ref();
    for (Eigen::Index i = 0; i < n.value.rows(); ++i) {
      double dot = n.grad.row(i).dot(n.value.row(i));
      gx.row(i).array() +=
          (n.grad.row(i).array() - dot) * n.value.row(i).array();
    }
  });
}

Tensor vstack(std::span<const Tensor> rows) {
  if (rows.empty()) throw DimensionError("vstack: empty input");
  Eigen::Index cols = rows[0].cols();
  Eigen::Index total = 0;
  for (const Tensor& r : rows) {
    if (r.cols() != cols) dim_error("vstack", rows[0].value(), r.value());
    total += r.rows();
  }
  Matrix out(total, cols);
  Eigen::Index at = 0;
  for (const Tensor& r : rows) {
    out.middleRows(at, r.rows()) = r.value();
    at += r.rows();
  }
  std::vector<Tensor> parents(rows.begin(), rows.end());
  return make_op(std::move(out), std::move(parents), [](detail::Node& n) {
    Eigen::Index at = 0;
    for (auto& p : n.parents) {
      Eigen::Index r = p->value.rows();
      if (p->requires_grad) p->grad_ref() += n.grad.middleRows(at, r);
      at += r;
    }
  });
}

Tensor row(const Tensor& x, Eigen::Index i) {
  return rows_slice(x, i, 1);
}

Tensor rows_slice(const Tensor& x, Eigen::Index i, Eigen::Index count) {
  if (i < 0 || i + count > x.rows())
    throw LookupError("rows_slice: range out of bounds");
  Matrix out = x.value().middleRows(i, count);
  return make_op(std::move(out), {x}, [i, count](detail::Node& n) {
    n.parents[0]->grad_ref().middleRows(i, count) += n.grad;
  });
}

Tensor mean_rows(const Tensor& x) {
  Matrix out = x.value().colwise().mean();
  return make_op(std::move(out), {x}, [](detail::Node& n) {
    const double inv = 1.0 / static_cast<double>(n.parents[0]->value.rows());
    Eigen::RowVectorXd g = n.grad.row(0) * inv;
    n.parents[0]->grad_ref().rowwise() += g;
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) dim_error("concat_cols", a.value(), b.value());
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a.value();
  out.rightCols(b.cols()) = b.value();
  return make_op(std::move(out), {a, b}, [](detail::Node& n) {
    Eigen::Index ca = n.parents[0]->value.cols();
    Eigen::Index cb = n.parents[1]->value.cols();
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad_ref() += n.grad.leftCols(ca);
    if (n.parents[1]->requires_grad)
      n.parents[1]->grad_ref() += n.grad.rightCols(cb);
  });
}

Tensor sum_all(const Tensor& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return make_op(std::move(out), {x}, [](detail::Node& n) {
    n.parents[0]->grad_ref().array() += n.grad(0, 0);
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    dim_error("mse", a.value(), b.value());
  const double inv = 1.0 / static_cast<double>(a.value().size());
  Matrix out(1, 1);
  out(0, 0) = (a.value() - b.value()).squaredNorm() * inv;
  return make_op(std::move(out), {a, b}, [inv](detail::Node& n) {
    Matrix d = (n.parents[0]->value - n.parents[1]->value) *
               (2.0 * inv * n.grad(0, 0));
    if (n.parents[0]->requires_grad) n.parents[0]->grad_ref() += d;
    if (n.parents[1]->requires_grad) n.parents[1]->grad_ref() -= d;
  });
}

Tensor masked_mse(const Tensor& a, const Tensor& b, const Matrix& mask) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    dim_error("masked_mse", a.value(), b.value());
  double count = mask.sum();
  if (count <= 0) throw DomainError("masked_mse: empty mask");
  const double inv = 1.0 / count;
  Matrix out(1, 1);
  out(0, 0) =
      ((a.value() - b.value()).cwiseProduct(mask)).squaredNorm() * inv;
  return make_op(std::move(out), {a, b}, [inv, mask](detail::Node& n) {
    Matrix d = ((n.parents[0]->value - n.parents[1]->value).cwiseProduct(mask))
                   .cwiseProduct(mask) *
               (2.0 * inv * n.grad(0, 0));
    if (n.parents[0]->requires_grad) n.parents[0]->grad_ref() += d;
    if (n.parents[1]->requires_grad) n.parents[1]->grad_ref() -= d;
  });
}

Tensor detach(const Tensor& x) { return Tensor::constant(x.value()); }

Tensor reparameterize(const Tensor& mu, const Tensor& sigma, const Tensor& eps) {
  if (mu.rows() != sigma.rows() || mu.cols() != sigma.cols() ||
      mu.rows() != eps.rows() || mu.cols() != eps.cols())
    dim_error("reparameterize", mu.value(), sigma.value());
  if ((sigma.value().array() < 0).any())
    throw DomainError("reparameterize: negative sigma");
  Matrix out = mu.value() + sigma.value().cwiseProduct(eps.value());
  return make_op(std::move(out), {mu, sigma, eps}, [](detail::Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->grad_ref() += n.grad;
    if (n.parents[1]->requires_grad)
      n.parents[1]->grad_ref() += n.grad.cwiseProduct(n.parents[2]->value);
    // eps is noise: no gradient by contract
  });
}

Tensor kl_to_standard_normal(const Tensor& mu, const Tensor& sigma) {
  if (mu.rows() != sigma.rows() || mu.cols() != sigma.cols())
    dim_error("kl_to_standard_normal", mu.value(), sigma.value());
  if ((sigma.value().array() <= 0).any())
    throw DomainError("kl_to_standard_normal: sigma must be positive");
  Matrix out(1, 1);
  out(0, 0) = 0.5 * (mu.value().array().square() +
                     sigma.value().array().square() - 1.0 -
                     2.0 * sigma.value().array().log())
                        .sum();
  return make_op(std::move(out), {mu, sigma}, [](detail::Node& n) {
    double g = n.grad(0, 0);
    if (n.parents[0]->requires_grad)
      n.parents[0]->grad_ref() += g * n.parents[0]->value;
    if (n.parents[1]->requires_grad)
      n.parents[1]->grad_ref().array() +=
          g * (n.parents[1]->value.array() - 1.0 / n.parents[1]->value.array());
  });
}

Tensor cross_entropy_logits(const Tensor& logits, Eigen::Index label) {
  if (logits.cols() != 1)
    throw DimensionError("cross_entropy_logits: expected a column vector");
  if (label < 0 || label >= logits.rows())
    throw LookupError("cross_entropy_logits: label out of range");
  const auto& v = logits.value();
  double m = v.maxCoeff();
  double lse = m + std::log((v.array() - m).exp().sum());
  Matrix out(1, 1);
  out(0, 0) = lse - v(label, 0);
  return make_op(std::move(out), {logits}, [label, lse](detail::Node& n) {
    double g = n.grad(0, 0);
    Matrix p = (n.parents[0]->value.array() - lse).exp();
    p(label, 0) -= 1.0;
    n.parents[0]->grad_ref() += g * p;
  });
}

void backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1)
    throw DimensionError("backward: loss must be 1x1");
  if (!loss.requires_grad()) return;
  // Iterative post-order DFS for a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  struct Frame {
    detail::Node* n;
    std::size_t next_child;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.node(), 0});
  visited.insert(loss.node());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.n->parents.size()) {
      detail::Node* c = f.n->parents[f.next_child++].get();
      if (c->requires_grad && !visited.count(c)) {
        visited.insert(c);
        stack.push_back({c, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  loss.node()->grad_ref()(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
}

}  // namespace unemo
