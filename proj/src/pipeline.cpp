#include "tascom/pipeline.hpp"

#include <cmath>
#include <stdexcept>

namespace tascom {

ChannelRealization draw_realization(const ChannelConfig& config, std::uint64_t frame_index,
                                    std::size_t symbol_count) {
    ChannelRealization real;
    real.h = draw_channel_state(config, frame_index).h;
    real.noise.assign(symbol_count, {0.0, 0.0});
    if (config.noise_power > 0.0) {
        Rng rng = make_noise_rng(config, frame_index);
        const double s = std::sqrt(config.noise_power / 2.0);
        for (auto& g : real.noise) g = {rng.normal(0.0, s), rng.normal(0.0, s)};
    }
    return real;
}

ChannelRealization noiseless_realization(std::size_t symbol_count) {
    ChannelRealization real;
    real.noise.assign(symbol_count, {0.0, 0.0});
    return real;
}

CodecForward codec_forward(const ModelParams& params, const PatchGrid& input,
                           const std::vector<int>& retained, const std::vector<std::size_t>& delta,
                           const ChannelRealization& realization) {
    CodecForward fwd;
    fwd.delta = delta;
    const Tensor encoded = semantic_encode(input, retained, params, &fwd.enc);
    fwd.sent = channel_encode(encoded, retained, delta, params, &fwd.chan_enc);
    if (realization.noise.size() < fwd.sent.total_symbols()) {
        throw std::invalid_argument("codec_forward: realization too short for frame");
    }
    if (std::abs(realization.h) < 1e-12) {
        throw DeepFadeError("codec_forward: |h| below equalization floor");
    }
    for (const auto& tok : fwd.sent.tokens) {
        if (!tok.zero_input) {
            fwd.max_power_deviation = std::max(fwd.max_power_deviation, std::fabs(tok.average_power() - 1.0));
        }
    }
    fwd.equalized = fwd.sent;
    std::size_t sym = 0;
    for (auto& tok : fwd.equalized.tokens) {
        for (auto& x : tok.symbols) {
            x = equalize_symbol(realization.h * x + realization.noise[sym], realization.h);
            ++sym;
        }
    }
    const Tensor est_tokens = channel_decode(fwd.equalized, params, &fwd.chan_dec);
    fwd.recon = semantic_decode(est_tokens, retained, params, input.patch_side, &fwd.dec);
    return fwd;
}

void codec_backward(const ModelParams& params, const CodecForward& fwd, const Tensor& grad_recon,
                    ModelGrads& grads) {
    const std::size_t n = fwd.enc.positions.size(), q = params.config.token_dim;
    Tensor grad_tokens(n, q);
    semantic_decode_backward(params, fwd.dec, grad_recon, grads, &grad_tokens);
    std::vector<std::vector<double>> grad_received;
    channel_decode_backward(params, fwd.chan_dec, grad_tokens, grads, &grad_received);
    Tensor grad_encoded(n, q);
    channel_encode_backward(params, fwd.chan_enc, fwd.delta, grad_received, grads, &grad_encoded);
    semantic_encode_backward(params, fwd.enc, grad_encoded, grads);
}

BatchEvaluation evaluate_batch(const ModelParams& params, const LossNets& nets,
                               const std::vector<BatchImage>& batch, ModelGrads* codec_grads,
                               DiscGrads* disc_grads) {
    if (batch.empty()) throw std::invalid_argument("evaluate_batch: empty batch");
    const double b = static_cast<double>(batch.size());
    BatchEvaluation eval;
    std::vector<CodecForward> forwards;
    forwards.reserve(batch.size());
    std::vector<double> region_values(batch.size());
    std::vector<FeatureLossResult> feature_results(batch.size());

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const BatchImage& item = batch[i];
        forwards.push_back(codec_forward(params, *item.patches, item.decision->retained,
                                         item.decision->allocation.delta, *item.realization));
        const CodecForward& fwd = forwards.back();
        eval.max_power_deviation = std::max(eval.max_power_deviation, fwd.max_power_deviation);
        eval.recons.push_back(fwd.recon);
        eval.recon_images.push_back(unpatchify(fwd.recon));
        region_values[i] = region_loss(*item.patches, fwd.recon, item.decision->weights.gamma);
        if (codec_grads) {
            feature_results[i] = feature_loss_with_grad(*item.image, eval.recon_images[i], nets.phi);
        } else {
            feature_results[i].value = feature_loss(*item.image, eval.recon_images[i], nets.phi);
        }
        eval.region_mean += region_values[i] / b;
        eval.feature_mean += feature_results[i].value / b;
    }

    std::vector<const Tensor*> originals, recons;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        originals.push_back(batch[i].image);
        recons.push_back(&eval.recon_images[i]);
    }
    const GanEvaluation gan = gan_terms(originals, recons, nets.disc, nets.gan_form);
    eval.gen_term = gan.generator_term;
    eval.disc_term = gan.discriminator_term;
    eval.objective = total_objective(eval.region_mean, eval.feature_mean, eval.gen_term, nets.lambda1,
                                     nets.lambda2, nets.lambda3, nets.gan_form);

    if (codec_grads) {
        // d objective / d generator_term: +lambda3 for hinge, -lambda3 for the
        // literal log form.
        const double gen_coeff = nets.gan_form == GanForm::hinge ? nets.lambda3 : -nets.lambda3;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            Tensor grad_patches =
                region_loss_grad(*batch[i].patches, forwards[i].recon, batch[i].decision->weights.gamma);
            scale_inplace(grad_patches, nets.lambda1 / b);

            Tensor image_grad = feature_results[i].recon_image_grad;
            scale_inplace(image_grad, nets.lambda2 / b);
            const double d_fake = gen_coeff * gan.d_gen_d_fake(i);
            if (d_fake != 0.0) {
                add_inplace(image_grad, disc_recon_grad(nets.disc, gan.fake_caches[i], d_fake));
            }
            const PatchGrid image_grad_patches = patchify(image_grad, batch[i].patches->patch_side);
            add_inplace(grad_patches, image_grad_patches.patches);

            codec_backward(params, forwards[i], grad_patches, *codec_grads);
        }
    }
    if (disc_grads) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            disc_param_backward(nets.disc, gan.real_caches[i], gan.d_disc_d_real(i), *disc_grads);
            disc_param_backward(nets.disc, gan.fake_caches[i], gan.d_disc_d_fake(i), *disc_grads);
        }
    }
    return eval;
}

} // namespace tascom
