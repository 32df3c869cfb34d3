#pragma once

#include <complex>
#include <vector>

#include "tascom/acc.hpp"
#include "tascom/channel.hpp"
#include "tascom/codec.hpp"
#include "tascom/losses.hpp"
#include "tascom/patches.hpp"

namespace tascom {

// Frozen channel randomness for one frame: with a fixed realization the whole
// forward pass is a pure function of the parameters, which is what both the
// finite-difference checks and reproducible training need.
struct ChannelRealization {
    std::complex<double> h{1.0, 0.0};
    std::vector<std::complex<double>> noise; // one draw per complex symbol
};

ChannelRealization draw_realization(const ChannelConfig& config, std::uint64_t frame_index,
                                    std::size_t symbol_count);
ChannelRealization noiseless_realization(std::size_t symbol_count);

struct CodecForward {
    EncodeCache enc;
    ChannelCodeCache chan_enc;
    std::vector<std::size_t> delta;
    EncodedChannelFrame sent;      // power-normalized channel input X
    EncodedChannelFrame equalized; // (h X + G) / h
    ChannelDecodeCache chan_dec;
    DecodeCache dec;
    PatchGrid recon;
    double max_power_deviation = 0.0; // worst |avg token power - 1| over nonzero tokens
};

// encode -> project/normalize -> channel (y = h x + g, then /h) -> decode ->
// reconstruct. Throws DeepFadeError when |h| is below the equalization floor.
CodecForward codec_forward(const ModelParams& params, const PatchGrid& input,
                           const std::vector<int>& retained, const std::vector<std::size_t>& delta,
                           const ChannelRealization& realization);

// Pushes d objective / d reconstruction back through the whole codec,
// accumulating parameter gradients. The channel is identity under the frozen
// realization (the equalized signal is x + g/h).
void codec_backward(const ModelParams& params, const CodecForward& fwd, const Tensor& grad_recon,
                    ModelGrads& grads);

struct BatchImage {
    const PatchGrid* patches = nullptr;
    const Tensor* image = nullptr;
    const AccDecision* decision = nullptr;
    const ChannelRealization* realization = nullptr;
};

struct BatchEvaluation {
    double objective = 0.0;
    double region_mean = 0.0;
    double feature_mean = 0.0;
    double gen_term = 0.0;
    double disc_term = 0.0;
    double max_power_deviation = 0.0;
    std::vector<PatchGrid> recons;
    std::vector<Tensor> recon_images;
};

// Evaluates the three-term objective over a batch; when grad sinks are given,
// also accumulates codec gradients (of the objective) and discriminator
// gradients (of the discriminator term).
BatchEvaluation evaluate_batch(const ModelParams& params, const LossNets& nets,
                               const std::vector<BatchImage>& batch, ModelGrads* codec_grads,
                               DiscGrads* disc_grads);

} // namespace tascom
