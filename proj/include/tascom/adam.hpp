#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tascom/tensor.hpp"

namespace tascom {

// Named view into a parameter tensor owned elsewhere. The name doubles as the
// checkpoint key, so it must stay stable across versions.
struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
};

using ParamRefs = std::vector<ParamRef>;

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::uint64_t step_count = 0;

    void init(const ParamRefs& params, const AdamConfig& cfg);
};

// Standard Adam update with bias correction. `grads[i]` must shape-match
// `params[i]`; violations are hard errors. Deterministic: identical inputs
// give bit-identical outputs.
void adam_step(const ParamRefs& params, const std::vector<const Tensor*>& grads, AdamState& state);

} // namespace tascom
