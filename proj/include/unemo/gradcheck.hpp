#pragma once

#include <functional>
#include <string>

#include "unemo/param_store.hpp"
#include "unemo/tensor.hpp"

namespace unemo {

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::string worst_param;
  Eigen::Index worst_row = -1, worst_col = -1;
  std::size_t coords_checked = 0;
  std::string failure;  // non-empty on non-finite loss or missing gradient
};

// Central-difference check of reverse-mode gradients. loss_fn must be a
// deterministic scalar function of the store. Checks every coordinate when
// the store has at most max_exhaustive of them, otherwise a seeded subsample
// of at least 200 coordinates spread over all parameters.
GradCheckReport finite_diff_grad_check(
    const std::function<Tensor(ParamStore&)>& loss_fn, ParamStore& params,
    double h = 1e-5, double tol = 1e-4, std::size_t max_exhaustive = 2000,
    std::uint64_t sample_seed = 0);

}  // namespace unemo
