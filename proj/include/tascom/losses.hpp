#pragma once

#include <cstdint>
#include <vector>

#include "tascom/adam.hpp"
#include "tascom/patches.hpp"
#include "tascom/rng.hpp"
#include "tascom/tensor.hpp"

namespace tascom {

enum class GanForm { hinge, literal_log };

// Fixed random-weight feature network for the feature reconstruction loss:
// two stride-2 valid 3x3 convs with ReLU, flattened. Frozen after
// construction; the seed is recorded so checkpoints can re-derive it. The
// identity mode (features = raw pixels) exists for tests.
struct PhiNet {
    bool identity = false;
    std::uint64_t seed = 0;
    Tensor conv1_w{std::vector<std::size_t>{4, 1, 3, 3}};
    Tensor conv1_b{std::vector<std::size_t>{4}};
    Tensor conv2_w{std::vector<std::size_t>{8, 4, 3, 3}};
    Tensor conv2_b{std::vector<std::size_t>{8}};

    struct Cache {
        Tensor input, z1, a1, z2, a2;
    };

    Tensor features(const Tensor& image, Cache* cache) const;
    // Gradient w.r.t. the input image (weights are frozen).
    Tensor input_grad(const Cache& cache, const Tensor& grad_features) const;
};

PhiNet init_phi(std::uint64_t seed);
PhiNet identity_phi();

// Small conv scorer over the (reconstruction, original) channel pair.
struct Discriminator {
    Tensor conv1_w{std::vector<std::size_t>{8, 2, 3, 3}};
    Tensor conv1_b{std::vector<std::size_t>{8}};
    Tensor conv2_w{std::vector<std::size_t>{16, 8, 3, 3}};
    Tensor conv2_b{std::vector<std::size_t>{16}};
    Tensor fc_w{std::vector<std::size_t>{16, 1}};
    Tensor fc_b{std::vector<std::size_t>{1}};
    std::uint64_t seed = 0;

    struct Cache {
        Tensor input; // {2, side, side}
        Tensor z1, a1, z2, a2, pooled;
        double score = 0.0;
    };

    double score(const Tensor& recon, const Tensor& original, Cache* cache) const;
    ParamRefs params();
    std::vector<const Tensor*> param_values() const;
};

Discriminator init_discriminator(std::uint64_t seed);

struct DiscGrads {
    Tensor conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;
    explicit DiscGrads(const Discriminator& d);
    std::vector<const Tensor*> refs() const;
};

// d score / d params, scaled by upstream, accumulated into grads.
void disc_param_backward(const Discriminator& d, const Discriminator::Cache& cache, double upstream,
                         DiscGrads& grads);
// d score / d recon-channel pixels, scaled by upstream.
Tensor disc_recon_grad(const Discriminator& d, const Discriminator::Cache& cache, double upstream);

struct LossNets {
    PhiNet phi;
    Discriminator disc;
    double lambda1 = 10.0;
    double lambda2 = 1.0;
    double lambda3 = 2.0;
    GanForm gan_form = GanForm::hinge;
};

// (1/M) sum_m gamma_m ||i_m - i_hat_m||^2
double region_loss(const PatchGrid& input, const PatchGrid& recon, const std::vector<double>& gamma);
// d region_loss / d recon patches.
Tensor region_loss_grad(const PatchGrid& input, const PatchGrid& recon, const std::vector<double>& gamma);

// ||phi(I) - phi(I_hat)||^2
double feature_loss(const Tensor& input_image, const Tensor& recon_image, const PhiNet& phi);
struct FeatureLossResult {
    double value = 0.0;
    Tensor recon_image_grad;
};
FeatureLossResult feature_loss_with_grad(const Tensor& input_image, const Tensor& recon_image,
                                         const PhiNet& phi);

// Batch GAN terms. Hinge (default):
//   discriminator_term = mean(max(0, 1 - D(I,I)) + max(0, 1 + D(I_hat,I)))
//   generator_term     = -mean(D(I_hat,I))
// and the gate masks flag samples whose hinge is inactive (real score >= 1,
// fake score <= -1); those contribute exactly zero discriminator gradient.
// literal_log keeps the written log form: generator_term = L_gan =
// -mean(log s(D(I_hat,I))) with s the logistic squash, and the discriminator
// trains on the matching log loss.
struct GanEvaluation {
    double generator_term = 0.0;
    double discriminator_term = 0.0;
    std::vector<bool> real_gated, fake_gated;
    std::vector<double> real_scores, fake_scores;
    std::vector<Discriminator::Cache> real_caches, fake_caches;
    GanForm form = GanForm::hinge;

    // d generator_term / d fake score i, and d discriminator_term / d scores.
    double d_gen_d_fake(std::size_t i) const;
    double d_disc_d_real(std::size_t i) const;
    double d_disc_d_fake(std::size_t i) const;
};

GanEvaluation gan_terms(const std::vector<const Tensor*>& originals,
                        const std::vector<const Tensor*>& recons, const Discriminator& disc, GanForm form);

// Hinge: lambda1*L_reg + lambda2*L_fea + lambda3*generator_term.
// Literal log form: lambda1*L_reg + lambda2*L_fea - lambda3*L_gan.
double total_objective(double region, double feature, double gan_generator_term, double lambda1,
                       double lambda2, double lambda3, GanForm form);

} // namespace tascom
