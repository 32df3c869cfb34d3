#pragma once

#include <functional>
#include <string>

#include "tascom/tensor.hpp"

namespace tascom {

// Central finite differences (f(x+h*e_i) - f(x-h*e_i)) / (2h) coordinate by
// coordinate. `f` must be evaluable at every probe point; a non-finite value
// raises an error naming the offending coordinate.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double h = 1e-5);

struct GradCompareResult {
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

// Relative error with a denominator floor of 1e-4 * (largest coordinate of
// either gradient), so coordinates far below the block's gradient scale do not
// register spurious relative errors. Two all-zero gradients compare equal.
GradCompareResult compare_gradients(const Tensor& analytic, const Tensor& numeric);

} // namespace tascom
