#include "unemo/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "unemo/errors.hpp"
#include "unemo/rng.hpp"

namespace unemo {

GradCheckReport finite_diff_grad_check(
    const std::function<Tensor(ParamStore&)>& loss_fn, ParamStore& params,
    double h, double tol, std::size_t max_exhaustive,
    std::uint64_t sample_seed) {
  GradCheckReport rep;

  params.zero_grads();
  Tensor loss = loss_fn(params);
  if (!std::isfinite(loss.scalar())) {
    rep.failure = "non-finite loss at base point";
    return rep;
  }
  backward(loss);

  // Snapshot analytic gradients (absent gradient means the parameter is
  // unused by this loss; treated as zero).
  std::unordered_map<std::string, Matrix> analytic;
  for (const auto& name : params.names()) {
    Tensor p = params.get(name);
    analytic[name] = p.has_grad()
                         ? p.grad()
                         : Matrix::Zero(p.rows(), p.cols()).eval();
  }

  const std::size_t total = params.coordinate_count();
  const bool exhaustive = total <= max_exhaustive;
  const std::size_t target =
      exhaustive ? total : std::max<std::size_t>(200, total / 50);
  Rng rng(sample_seed ^ 0x67726164ULL);

  // Flat coordinate enumeration over all parameters.
  std::vector<std::pair<std::string, Eigen::Index>> coords;
  coords.reserve(target);
  if (exhaustive) {
    for (const auto& name : params.names()) {
      Tensor p = params.get(name);
      for (Eigen::Index i = 0; i < p.value().size(); ++i)
        coords.emplace_back(name, i);
    }
  } else {
    // At least one coordinate per parameter, remainder sampled.
    for (const auto& name : params.names()) {
      Tensor p = params.get(name);
      coords.emplace_back(name,
                          static_cast<Eigen::Index>(rng.uniform_int(
                              static_cast<std::uint64_t>(p.value().size()))));
    }
    while (coords.size() < target) {
      const auto& name =
          params.names()[rng.uniform_int(params.names().size())];
      Tensor p = params.get(name);
      coords.emplace_back(name,
                          static_cast<Eigen::Index>(rng.uniform_int(
                              static_cast<std::uint64_t>(p.value().size()))));
    }
  }

  rep.max_rel_err = 0.0;
  for (const auto& [name, flat] : coords) {
    Tensor p = params.get(name);
    double* slot = p.mutable_value().data() + flat;
    const double saved = *slot;
    *slot = saved + h;
    double fp = loss_fn(params).scalar();
    *slot = saved - h;
    double fm = loss_fn(params).scalar();
    *slot = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      rep.failure = "non-finite loss at " + name + "[" +
                    std::to_string(flat) + "]";
      return rep;
    }
    const double fd = (fp - fm) / (2.0 * h);
    const double an = analytic.at(name)(flat);
    const double rel =
        std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_param = name;
      // Eigen default storage is column-major.
      rep.worst_row = flat % p.rows();
      rep.worst_col = flat / p.rows();
    }
    ++rep.coords_checked;
  }
  rep.pass = rep.max_rel_err <= tol;
  return rep;
}

}  // namespace unemo
