#include "tascom/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace tascom {

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
    Tensor grad(x.shape());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + h;
        const double fp = f(probe);
        probe[i] = saved - h;
        const double fm = f(probe);
        probe[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::runtime_error("finite_diff_grad: non-finite value at coordinate " + std::to_string(i));
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

GradCompareResult compare_gradients(const Tensor& analytic, const Tensor& numeric) {
    require_same_shape(analytic, numeric, "compare_gradients");
    GradCompareResult result;
    double scale = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        scale = std::max(scale, std::max(std::fabs(analytic[i]), std::fabs(numeric[i])));
    }
    if (scale == 0.0) return result;
    const double floor = std::max(1e-4 * scale, 1e-12);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), floor});
        const double rel = std::fabs(analytic[i] - numeric[i]) / denom;
        if (rel > result.max_rel_err) {
            result.max_rel_err = rel;
            result.worst_index = i;
            result.analytic_at_worst = analytic[i];
            result.numeric_at_worst = numeric[i];
        }
    }
    return result;
}

} // namespace tascom
