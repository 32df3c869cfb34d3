#pragma once

#include <string>

#include "tascom/adam.hpp"
#include "tascom/rng.hpp"
#include "tascom/tensor.hpp"

namespace tascom {

// Single-head scaled dot-product self-attention with a residual add:
//   out = tokens + softmax(Q K^T / sqrt(q)) V Wo,  Q/K/V = tokens * Wq/Wk/Wv.
// Permutation-equivariant in the token order (positions enter only through
// embeddings added upstream).
struct AttentionParams {
    Tensor wq, wk, wv, wo; // each {q, q}

    explicit AttentionParams(std::size_t token_dim = 0);
    void init(Rng& rng);
    ParamRefs params(const std::string& prefix);
};

struct AttentionGrads {
    Tensor wq, wk, wv, wo;
    explicit AttentionGrads(const AttentionParams& p);
    void accumulate_refs(std::vector<const Tensor*>& out) const;
};

struct AttentionCache {
    Tensor input;   // {N, q}
    Tensor q, k, v; // {N, q}
    Tensor attn;    // {N, N} softmax weights
    Tensor context; // {N, q} = attn * v
};

Tensor attention_forward(const Tensor& tokens, const AttentionParams& p, AttentionCache& cache);

// Returns the gradient w.r.t. the input tokens; parameter gradients are
// accumulated into `grads`.
Tensor attention_backward(const AttentionParams& p, const AttentionCache& cache, const Tensor& grad_out,
                          AttentionGrads& grads);

} // namespace tascom
