#include "tascom/codec.hpp"

#include <cmath>
#include <stdexcept>

#include "tascom/channel.hpp"

namespace tascom {

void CodecConfig::validate() const {
    if (patch_count == 0 || patch_dim == 0) throw std::invalid_argument("CodecConfig: empty geometry");
    if (token_dim > patch_dim) {
        throw std::invalid_argument("CodecConfig: token_dim must not exceed patch_dim");
    }
    if (token_dim % 8 != 0) {
        throw std::invalid_argument("CodecConfig: token_dim must be a multiple of 8");
    }
}

ParamRefs ModelParams::params() {
    ParamRefs refs;
    refs.push_back({"theta1.embed", &embed});
    refs.push_back({"theta1.pos", &enc_pos});
    for (auto& r : enc_attn.params("theta1.attn")) refs.push_back(r);
    const auto lv = config.levels();
    for (std::size_t i = 0; i < 3; ++i) {
        refs.push_back({"theta2.w" + std::to_string(lv[i]), &down_proj[i]});
    }
    for (std::size_t i = 0; i < 3; ++i) {
        refs.push_back({"chi2.w" + std::to_string(lv[i]), &up_proj[i]});
    }
    refs.push_back({"chi1.R", &latent_set});
    refs.push_back({"chi1.pos", &dec_pos});
    for (auto& r : dec_attn.params("chi1.attn")) refs.push_back(r);
    refs.push_back({"chi1.out", &out_map});
    return refs;
}

std::vector<const Tensor*> ModelParams::param_values() const {
    std::vector<const Tensor*> out = {&embed, &enc_pos, &enc_attn.wq, &enc_attn.wk, &enc_attn.wv, &enc_attn.wo};
    for (const auto& t : down_proj) out.push_back(&t);
    for (const auto& t : up_proj) out.push_back(&t);
    out.push_back(&latent_set);
    out.push_back(&dec_pos);
    out.push_back(&dec_attn.wq);
    out.push_back(&dec_attn.wk);
    out.push_back(&dec_attn.wv);
    out.push_back(&dec_attn.wo);
    out.push_back(&out_map);
    return out;
}

std::size_t ModelParams::level_index(std::size_t delta) const {
    const auto lv = config.levels();
    for (std::size_t i = 0; i < 3; ++i) {
        if (lv[i] == delta) return i;
    }
    throw std::invalid_argument("level_index: illegal embedding dimension " + std::to_string(delta));
}

namespace {

void init_uniform(Tensor& t, double fan_in, Rng& rng) {
    const double s = 1.0 / std::sqrt(fan_in);
    for (double& v : t) v = rng.uniform(-s, s);
}

} // namespace

ModelParams init_model(const CodecConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t m = config.patch_count, l = config.patch_dim, q = config.token_dim;
    ModelParams p;
    p.config = config;
    p.embed = Tensor(l, q);
    p.enc_pos = Tensor(m, q);
    p.enc_attn = AttentionParams(q);
    p.dec_attn = AttentionParams(q);
    p.latent_set = Tensor(m, q); // zeros
    p.dec_pos = Tensor(m, q);
    p.out_map = Tensor(q, l);
    const auto lv = config.levels();
    Rng rng(seed);
    Rng re = rng.split("theta1.embed");
    init_uniform(p.embed, static_cast<double>(l), re);
    Rng rp = rng.split("theta1.pos");
    init_uniform(p.enc_pos, static_cast<double>(q), rp);
    Rng ra = rng.split("theta1.attn");
    p.enc_attn.init(ra);
    for (std::size_t i = 0; i < 3; ++i) {
        p.down_proj[i] = Tensor(q, lv[i]);
        Rng r = rng.split("theta2.w" + std::to_string(lv[i]));
        init_uniform(p.down_proj[i], static_cast<double>(q), r);
        p.up_proj[i] = Tensor(lv[i], q);
        Rng r2 = rng.split("chi2.w" + std::to_string(lv[i]));
        init_uniform(p.up_proj[i], static_cast<double>(lv[i]), r2);
    }
    Rng rdp = rng.split("chi1.pos");
    init_uniform(p.dec_pos, static_cast<double>(q), rdp);
    Rng rda = rng.split("chi1.attn");
    p.dec_attn.init(rda);
    Rng ro = rng.split("chi1.out");
    init_uniform(p.out_map, static_cast<double>(q), ro);
    return p;
}

ModelGrads::ModelGrads(const ModelParams& p)
    : embed(Tensor::zeros(p.embed.shape())),
      enc_pos(Tensor::zeros(p.enc_pos.shape())),
      enc_attn(p.enc_attn),
      latent_set(Tensor::zeros(p.latent_set.shape())),
      dec_pos(Tensor::zeros(p.dec_pos.shape())),
      dec_attn(p.dec_attn),
      out_map(Tensor::zeros(p.out_map.shape())) {
    for (std::size_t i = 0; i < 3; ++i) {
        down_proj[i] = Tensor::zeros(p.down_proj[i].shape());
        up_proj[i] = Tensor::zeros(p.up_proj[i].shape());
    }
}

std::vector<const Tensor*> ModelGrads::refs() const {
    std::vector<const Tensor*> out = {&embed, &enc_pos};
    enc_attn.accumulate_refs(out);
    for (const auto& t : down_proj) out.push_back(&t);
    for (const auto& t : up_proj) out.push_back(&t);
    out.push_back(&latent_set);
    out.push_back(&dec_pos);
    dec_attn.accumulate_refs(out);
    out.push_back(&out_map);
    return out;
}

void ModelGrads::scale(double factor) {
    for (Tensor* t : {&embed, &enc_pos, &enc_attn.wq, &enc_attn.wk, &enc_attn.wv, &enc_attn.wo, &latent_set,
                      &dec_pos, &dec_attn.wq, &dec_attn.wk, &dec_attn.wv, &dec_attn.wo, &out_map}) {
        scale_inplace(*t, factor);
    }
    for (auto& t : down_proj) scale_inplace(t, factor);
    for (auto& t : up_proj) scale_inplace(t, factor);
}

Tensor semantic_encode(const PatchGrid& patches, const std::vector<int>& retained_positions,
                       const ModelParams& p, EncodeCache* cache) {
    const std::size_t m = p.config.patch_count, l = p.config.patch_dim, q = p.config.token_dim;
    if (patches.patch_count() != m || patches.patch_dim() != l) {
        throw std::invalid_argument("semantic_encode: patch grid does not match codec config");
    }
    if (retained_positions.empty()) {
        throw std::invalid_argument("semantic_encode: retained set is empty (caller must keep at least one)");
    }
    const std::size_t n = retained_positions.size();
    Tensor selected(n, l);
    for (std::size_t i = 0; i < n; ++i) {
        const int pos = retained_positions[i];
        if (pos < 0 || static_cast<std::size_t>(pos) >= m) {
            throw std::invalid_argument("semantic_encode: position out of range");
        }
        if (i > 0 && retained_positions[i - 1] >= pos) {
            throw std::invalid_argument("semantic_encode: positions must be strictly increasing");
        }
        const double* src = patches.patches.data() + static_cast<std::size_t>(pos) * l;
        std::copy(src, src + l, selected.data() + i * l);
    }
    Tensor embedded = matmul(selected, p.embed);
    for (std::size_t i = 0; i < n; ++i) {
        const double* pos_row = p.enc_pos.data() + static_cast<std::size_t>(retained_positions[i]) * q;
        double* row = embedded.data() + i * q;
        for (std::size_t j = 0; j < q; ++j) row[j] += pos_row[j];
    }
    AttentionCache local;
    AttentionCache& attn_cache = cache ? cache->attn : local;
    Tensor out = attention_forward(embedded, p.enc_attn, attn_cache);
    if (cache) {
        cache->positions = retained_positions;
        cache->retained_patches = std::move(selected);
        cache->embedded = std::move(embedded);
    }
    return out;
}

void semantic_encode_backward(const ModelParams& p, const EncodeCache& cache, const Tensor& grad_tokens,
                              ModelGrads& grads) {
    Tensor d_embedded = attention_backward(p.enc_attn, cache.attn, grad_tokens, grads.enc_attn);
    const std::size_t q = p.config.token_dim;
    for (std::size_t i = 0; i < cache.positions.size(); ++i) {
        double* pos_row = grads.enc_pos.data() + static_cast<std::size_t>(cache.positions[i]) * q;
        const double* row = d_embedded.data() + i * q;
        for (std::size_t j = 0; j < q; ++j) pos_row[j] += row[j];
    }
    add_inplace(grads.embed, matmul_tn(cache.retained_patches, d_embedded));
}

EncodedChannelFrame channel_encode(const Tensor& tokens, const std::vector<int>& positions,
                                   const std::vector<std::size_t>& delta, const ModelParams& p,
                                   ChannelCodeCache* cache) {
    const std::size_t n = tokens.rows(), q = p.config.token_dim;
    if (delta.size() != n || positions.size() != n) {
        throw std::invalid_argument("channel_encode: delta/position length must match token count");
    }
    if (tokens.cols() != q) throw std::invalid_argument("channel_encode: token dim mismatch");
    EncodedChannelFrame frame;
    frame.tokens.resize(n);
    if (cache) {
        cache->tokens = tokens;
        cache->pre_norm.assign(n, {});
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t li = p.level_index(delta[i]);
        const Tensor& w = p.down_proj[li];
        std::vector<double> projected(delta[i], 0.0);
        const double* trow = tokens.data() + i * q;
        for (std::size_t a = 0; a < q; ++a) {
            const double tv = trow[a];
            if (tv == 0.0) continue;
            const double* wrow = w.data() + a * delta[i];
            for (std::size_t b = 0; b < delta[i]; ++b) projected[b] += tv * wrow[b];
        }
        NormalizeResult norm = normalize_power(projected);
        TokenSymbols& tok = frame.tokens[i];
        tok.position = positions[i];
        tok.delta = delta[i];
        tok.scale = norm.scale;
        tok.zero_input = norm.zero_input;
        tok.symbols = TokenSymbols::pack_complex(norm.value);
        if (cache) cache->pre_norm[i] = std::move(projected);
    }
    return frame;
}

void channel_encode_backward(const ModelParams& p, const ChannelCodeCache& cache,
                             const std::vector<std::size_t>& delta,
                             const std::vector<std::vector<double>>& grad_real, ModelGrads& grads,
                             Tensor* grad_tokens) {
    const std::size_t n = cache.tokens.rows(), q = p.config.token_dim;
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double>& u = cache.pre_norm[i];
        const std::vector<double>& gx = grad_real[i];
        const std::size_t d = delta[i];
        std::vector<double> du(d, 0.0);
        double energy = 0.0;
        for (double v : u) energy += v * v;
        if (energy == 0.0) {
            du = gx; // zero token passed through unscaled
        } else {
            const double k = static_cast<double>(d) / 2.0;
            const double power = energy / k;
            const double inv_sqrt = 1.0 / std::sqrt(power);
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += gx[j] * u[j];
            const double correction = dot / (k * power * std::sqrt(power));
            for (std::size_t j = 0; j < d; ++j) du[j] = gx[j] * inv_sqrt - u[j] * correction;
        }
        const std::size_t li = p.level_index(d);
        const Tensor& w = p.down_proj[li];
        Tensor& gw = grads.down_proj[li];
        const double* trow = cache.tokens.data() + i * q;
        double* gtrow = grad_tokens ? grad_tokens->data() + i * q : nullptr;
        for (std::size_t a = 0; a < q; ++a) {
            const double tv = trow[a];
            double* gwrow = gw.data() + a * d;
            const double* wrow = w.data() + a * d;
            double acc = 0.0;
            for (std::size_t b = 0; b < d; ++b) {
                gwrow[b] += tv * du[b];
                acc += wrow[b] * du[b];
            }
            if (gtrow) gtrow[a] += acc;
        }
    }
}

Tensor channel_decode(const EncodedChannelFrame& received, const ModelParams& p, ChannelDecodeCache* cache) {
    const std::size_t n = received.tokens.size(), q = p.config.token_dim;
    Tensor tokens(n, q);
    if (cache) {
        cache->received_real.assign(n, {});
        cache->delta.assign(n, 0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const TokenSymbols& tok = received.tokens[i];
        if (tok.symbols.size() * 2 != tok.delta) {
            throw std::invalid_argument("channel_decode: token layout mismatch");
        }
        const std::vector<double> real_vec = tok.to_real();
        const std::size_t li = p.level_index(tok.delta);
        const Tensor& w = p.up_proj[li];
        double* out = tokens.data() + i * q;
        for (std::size_t a = 0; a < tok.delta; ++a) {
            const double v = real_vec[a];
            if (v == 0.0) continue;
            const double* wrow = w.data() + a * q;
            for (std::size_t b = 0; b < q; ++b) out[b] += v * wrow[b];
        }
        if (cache) {
            cache->received_real[i] = real_vec;
            cache->delta[i] = tok.delta;
        }
    }
    return tokens;
}

void channel_decode_backward(const ModelParams& p, const ChannelDecodeCache& cache, const Tensor& grad_tokens,
                             ModelGrads& grads, std::vector<std::vector<double>>* grad_received) {
    const std::size_t n = cache.received_real.size(), q = p.config.token_dim;
    if (grad_received) grad_received->assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t d = cache.delta[i];
        const std::size_t li = p.level_index(d);
        const Tensor& w = p.up_proj[li];
        Tensor& gw = grads.up_proj[li];
        const double* gt = grad_tokens.data() + i * q;
        std::vector<double> gy(d, 0.0);
        const std::vector<double>& y = cache.received_real[i];
        for (std::size_t a = 0; a < d; ++a) {
            double* gwrow = gw.data() + a * q;
            const double* wrow = w.data() + a * q;
            double acc = 0.0;
            for (std::size_t b = 0; b < q; ++b) {
                gwrow[b] += y[a] * gt[b];
                acc += wrow[b] * gt[b];
            }
            gy[a] = acc;
        }
        if (grad_received) (*grad_received)[i] = std::move(gy);
    }
}

PatchGrid semantic_decode(const Tensor& estimated_tokens, const std::vector<int>& retained_positions,
                          const ModelParams& p, std::size_t patch_side, DecodeCache* cache) {
    const std::size_t m = p.config.patch_count, q = p.config.token_dim, l = p.config.patch_dim;
    if (estimated_tokens.rows() != retained_positions.size()) {
        throw std::invalid_argument("semantic_decode: token count does not match retained positions");
    }
    Tensor full(m, q);
    std::vector<char> is_retained(m, 0);
    for (std::size_t i = 0; i < retained_positions.size(); ++i) {
        const auto pos = static_cast<std::size_t>(retained_positions[i]);
        std::copy(estimated_tokens.data() + i * q, estimated_tokens.data() + (i + 1) * q,
                  full.data() + pos * q);
        is_retained[pos] = 1;
    }
    for (std::size_t pos = 0; pos < m; ++pos) {
        double* row = full.data() + pos * q;
        if (!is_retained[pos]) {
            const double* latent = p.latent_set.data() + pos * q;
            std::copy(latent, latent + q, row);
        }
        const double* pe = p.dec_pos.data() + pos * q;
        for (std::size_t j = 0; j < q; ++j) row[j] += pe[j];
    }

    AttentionCache local;
    AttentionCache& attn_cache = cache ? cache->attn : local;
    Tensor attn_out = attention_forward(full, p.dec_attn, attn_cache);
    Tensor patches = matmul(attn_out, p.out_map);

    PatchGrid grid;
    grid.patch_side = patch_side;
    grid.grid_side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(m))));
    grid.patches = std::move(patches);
    if (cache) {
        cache->positions = retained_positions;
        cache->is_retained = std::move(is_retained);
        cache->full_tokens = std::move(full);
        cache->attn_out = std::move(attn_out);
    }
    return grid;
}

void semantic_decode_backward(const ModelParams& p, const DecodeCache& cache, const Tensor& grad_patches,
                              ModelGrads& grads, Tensor* grad_tokens) {
    const std::size_t m = p.config.patch_count, q = p.config.token_dim;
    add_inplace(grads.out_map, matmul_tn(cache.attn_out, grad_patches));
    Tensor d_attn_out = matmul_nt(grad_patches, p.out_map);
    Tensor d_full = attention_backward(p.dec_attn, cache.attn, d_attn_out, grads.dec_attn);

    add_inplace(grads.dec_pos, d_full);
    for (std::size_t pos = 0; pos < m; ++pos) {
        if (!cache.is_retained[pos]) {
            double* latent_grad = grads.latent_set.data() + pos * q;
            const double* row = d_full.data() + pos * q;
            for (std::size_t j = 0; j < q; ++j) latent_grad[j] += row[j];
        }
    }
    if (grad_tokens) {
        for (std::size_t i = 0; i < cache.positions.size(); ++i) {
            const auto pos = static_cast<std::size_t>(cache.positions[i]);
            const double* row = d_full.data() + pos * q;
            double* out = grad_tokens->data() + i * q;
            for (std::size_t j = 0; j < q; ++j) out[j] += row[j];
        }
    }
}

} // namespace tascom
