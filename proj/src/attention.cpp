#include "tascom/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace tascom {

AttentionParams::AttentionParams(std::size_t token_dim)
    : wq(token_dim, token_dim), wk(token_dim, token_dim), wv(token_dim, token_dim), wo(token_dim, token_dim) {}

void AttentionParams::init(Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(wq.rows()));
    for (Tensor* t : {&wq, &wk, &wv, &wo}) {
        for (double& v : *t) v = rng.uniform(-s, s);
    }
}

ParamRefs AttentionParams::params(const std::string& prefix) {
    return {{prefix + ".wq", &wq}, {prefix + ".wk", &wk}, {prefix + ".wv", &wv}, {prefix + ".wo", &wo}};
}

AttentionGrads::AttentionGrads(const AttentionParams& p)
    : wq(Tensor::zeros(p.wq.shape())),
      wk(Tensor::zeros(p.wk.shape())),
      wv(Tensor::zeros(p.wv.shape())),
      wo(Tensor::zeros(p.wo.shape())) {}

void AttentionGrads::accumulate_refs(std::vector<const Tensor*>& out) const {
    out.push_back(&wq);
    out.push_back(&wk);
    out.push_back(&wv);
    out.push_back(&wo);
}

Tensor attention_forward(const Tensor& tokens, const AttentionParams& p, AttentionCache& cache) {
    if (tokens.rank() != 2 || tokens.rows() == 0) {
        throw std::invalid_argument("attention_forward: need at least one token");
    }
    if (tokens.cols() != p.wq.rows()) {
        throw std::invalid_argument("attention_forward: token dim mismatch");
    }
    const std::size_t n = tokens.rows(), d = tokens.cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    cache.input = tokens;
    cache.q = matmul(tokens, p.wq);
    cache.k = matmul(tokens, p.wk);
    cache.v = matmul(tokens, p.wv);

    Tensor scores = matmul_nt(cache.q, cache.k);
    scale_inplace(scores, scale);
    cache.attn = Tensor(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = scores.data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        double* arow = cache.attn.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            arow[j] = std::exp(row[j] - mx);
            z += arow[j];
        }
        for (std::size_t j = 0; j < n; ++j) arow[j] /= z;
    }

    cache.context = matmul(cache.attn, cache.v);
    Tensor out = matmul(cache.context, p.wo);
    add_inplace(out, tokens);
    return out;
}

Tensor attention_backward(const AttentionParams& p, const AttentionCache& cache, const Tensor& grad_out,
                          AttentionGrads& grads) {
    const std::size_t n = cache.input.rows(), d = cache.input.cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    Tensor grad_in = grad_out; // residual path

    add_inplace(grads.wo, matmul_tn(cache.context, grad_out));
    Tensor d_context = matmul_nt(grad_out, p.wo);

    Tensor d_attn = matmul_nt(d_context, cache.v);
    Tensor d_v = matmul_tn(cache.attn, d_context);

    // Row-wise softmax backward, then the score scale.
    Tensor d_scores(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = cache.attn.data() + i * n;
        const double* darow = d_attn.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += arow[j] * darow[j];
        double* dsrow = d_scores.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) dsrow[j] = arow[j] * (darow[j] - dot) * scale;
    }

    Tensor d_q = matmul(d_scores, cache.k);
    Tensor d_k = matmul_tn(d_scores, cache.q);

    add_inplace(grads.wq, matmul_tn(cache.input, d_q));
    add_inplace(grads.wk, matmul_tn(cache.input, d_k));
    add_inplace(grads.wv, matmul_tn(cache.input, d_v));

    add_inplace(grad_in, matmul_nt(d_q, p.wq));
    add_inplace(grad_in, matmul_nt(d_k, p.wk));
    add_inplace(grad_in, matmul_nt(d_v, p.wv));
    return grad_in;
}

} // namespace tascom
