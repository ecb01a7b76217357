#pragma once

#include <functional>
#include <span>

#include "disco/tensor.hpp"

namespace disco {

// Central-difference gradient check. `f` must rebuild the loss from scratch on
// the supplied graph using the given parameters; it is evaluated repeatedly
// under per-coordinate perturbations. Returns
//   max over parameter entries of |analytic - central| / max(1, |central|).
// A non-deterministic f (two baseline evaluations disagree) is an error.
double finite_diff_check(std::span<Tensor> params, const std::function<Tensor(Graph&)>& f,
                         double h = 1e-3);

}  // namespace disco
