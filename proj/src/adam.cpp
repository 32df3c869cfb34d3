#include "tascom/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace tascom {

void AdamState::init(const ParamRefs& params, const AdamConfig& cfg) {
    config = cfg;
    step_count = 0;
    first_moment.clear();
    second_moment.clear();
    first_moment.reserve(params.size());
    second_moment.reserve(params.size());
    for (const auto& p : params) {
        first_moment.emplace_back(Tensor::zeros(p.value->shape()));
        second_moment.emplace_back(Tensor::zeros(p.value->shape()));
    }
}

void adam_step(const ParamRefs& params, const std::vector<const Tensor*>& grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
    }
    state.step_count += 1;
    const double b1 = state.config.beta1;
    const double b2 = state.config.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k].value;
        const Tensor& g = *grads[k];
        if (!p.same_shape(g)) {
            throw std::invalid_argument("adam_step: gradient shape mismatch for " + params[k].name);
        }
        Tensor& m = state.first_moment[k];
        Tensor& v = state.second_moment[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            p[i] -= state.config.learning_rate * m_hat / (std::sqrt(v_hat) + state.config.epsilon);
        }
        require_finite(p, "adam_step: " + params[k].name);
    }
}

} // namespace tascom
