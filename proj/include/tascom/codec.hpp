#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tascom/adam.hpp"
#include "tascom/attention.hpp"
#include "tascom/frame.hpp"
#include "tascom/patches.hpp"
#include "tascom/rng.hpp"
#include "tascom/tensor.hpp"

namespace tascom {

struct CodecConfig {
    std::size_t patch_count = 64; // M
    std::size_t patch_dim = 16;   // l
    std::size_t token_dim = 16;   // q; q <= l and q % 8 == 0 so every
                                  // embedding level maps to whole complex symbols

    std::array<std::size_t, 3> levels() const {
        return {token_dim / 2, 3 * token_dim / 4, token_dim};
    }
    void validate() const;
};

// All trainable codec parameters. Checkpoint names are stable:
//   theta1.embed, theta1.pos, theta1.attn.{wq,wk,wv,wo},
//   theta2.w<level> (one down-projection per embedding level),
//   chi2.w<level>   (matching up-projections),
//   chi1.R, chi1.pos, chi1.attn.{wq,wk,wv,wo}, chi1.out
struct ModelParams {
    CodecConfig config;

    Tensor embed;             // {l, q}
    Tensor enc_pos;           // {M, q}
    AttentionParams enc_attn; // token_dim x token_dim each

    std::array<Tensor, 3> down_proj; // {q, level}
    std::array<Tensor, 3> up_proj;   // {level, q}

    Tensor latent_set;        // R, {M, q}; fills never-transmitted positions
    Tensor dec_pos;           // {M, q}
    AttentionParams dec_attn;
    Tensor out_map;           // {q, l}

    ParamRefs params();
    std::vector<const Tensor*> param_values() const;
    // Index into levels() for a delta value; throws on an illegal level.
    std::size_t level_index(std::size_t delta) const;
};

ModelParams init_model(const CodecConfig& config, std::uint64_t seed);

struct ModelGrads {
    Tensor embed, enc_pos;
    AttentionGrads enc_attn;
    std::array<Tensor, 3> down_proj, up_proj;
    Tensor latent_set, dec_pos;
    AttentionGrads dec_attn;
    Tensor out_map;

    explicit ModelGrads(const ModelParams& p);
    std::vector<const Tensor*> refs() const; // same order as ModelParams::params()
    void scale(double factor);
};

// ---- semantic encoder ----

struct EncodeCache {
    std::vector<int> positions;
    Tensor retained_patches; // {N, l}
    Tensor embedded;         // {N, q} pre-attention
    AttentionCache attn;
};

// Per-patch linear embedding + positional embedding; non-retained tokens are
// dropped before the attention block, which sees only the N retained tokens.
Tensor semantic_encode(const PatchGrid& patches, const std::vector<int>& retained_positions,
                       const ModelParams& p, EncodeCache* cache);
void semantic_encode_backward(const ModelParams& p, const EncodeCache& cache, const Tensor& grad_tokens,
                              ModelGrads& grads);

// ---- channel encoder / decoder ----

struct ChannelCodeCache {
    Tensor tokens;                        // E, {N, q}
    std::vector<std::vector<double>> pre_norm; // per-token projection before normalization
};

// Projects token n by the level-delta[n] matrix, power-normalizes, and packs
// consecutive real pairs into complex symbols.
EncodedChannelFrame channel_encode(const Tensor& tokens, const std::vector<int>& positions,
                                   const std::vector<std::size_t>& delta, const ModelParams& p,
                                   ChannelCodeCache* cache);
// grad_real: per-token gradient w.r.t. the transmitted real vectors.
void channel_encode_backward(const ModelParams& p, const ChannelCodeCache& cache,
                             const std::vector<std::size_t>& delta,
                             const std::vector<std::vector<double>>& grad_real, ModelGrads& grads,
                             Tensor* grad_tokens);

struct ChannelDecodeCache {
    std::vector<std::vector<double>> received_real; // per token, length delta
    std::vector<std::size_t> delta;
};

// Complex -> real unpacking followed by the matching up-projection back to q
// dims per token.
Tensor channel_decode(const EncodedChannelFrame& received, const ModelParams& p, ChannelDecodeCache* cache);
void channel_decode_backward(const ModelParams& p, const ChannelDecodeCache& cache, const Tensor& grad_tokens,
                             ModelGrads& grads, std::vector<std::vector<double>>* grad_received);

// ---- semantic decoder ----

struct DecodeCache {
    std::vector<int> positions;
    std::vector<char> is_retained; // per patch position
    Tensor full_tokens;            // {M, q} after latent substitution + positions
    AttentionCache attn;
    Tensor attn_out; // {M, q}
};

// Builds M full tokens (received at retained positions, latent r_m elsewhere),
// adds positional embeddings, runs the decoder attention block, and maps every
// token back to patch space. Output is always M x l.
PatchGrid semantic_decode(const Tensor& estimated_tokens, const std::vector<int>& retained_positions,
                          const ModelParams& p, std::size_t patch_side, DecodeCache* cache);
void semantic_decode_backward(const ModelParams& p, const DecodeCache& cache, const Tensor& grad_patches,
                              ModelGrads& grads, Tensor* grad_tokens);

} // namespace tascom
