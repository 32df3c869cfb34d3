#include "tascom/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "tascom/conv.hpp"

namespace tascom {

namespace {

Tensor as_channel_image(const Tensor& image) {
    Tensor x({1, image.rows(), image.cols()});
    std::copy(image.begin(), image.end(), x.begin());
    return x;
}

void init_uniform(Tensor& t, double fan_in, Rng& rng) {
    const double s = 1.0 / std::sqrt(fan_in);
    for (double& v : t) v = rng.uniform(-s, s);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

Tensor PhiNet::features(const Tensor& image, Cache* cache) const {
    if (identity) {
        Tensor flat({image.size()});
        std::copy(image.begin(), image.end(), flat.begin());
        if (cache) cache->input = image;
        return flat;
    }
    Cache local;
    Cache& c = cache ? *cache : local;
    c.input = as_channel_image(image);
    c.z1 = conv2d_forward(c.input, conv1_w, conv1_b, 2);
    c.a1 = relu(c.z1);
    c.z2 = conv2d_forward(c.a1, conv2_w, conv2_b, 2);
    c.a2 = relu(c.z2);
    Tensor flat({c.a2.size()});
    std::copy(c.a2.begin(), c.a2.end(), flat.begin());
    return flat;
}

Tensor PhiNet::input_grad(const Cache& cache, const Tensor& grad_features) const {
    if (identity) {
        Tensor g(cache.input.shape());
        std::copy(grad_features.begin(), grad_features.end(), g.begin());
        return g;
    }
    Tensor da2(cache.a2.shape());
    std::copy(grad_features.begin(), grad_features.end(), da2.begin());
    Tensor dz2 = relu_backward(cache.z2, da2);
    Tensor da1(cache.a1.shape());
    Tensor scratch_w2 = Tensor::zeros(conv2_w.shape());
    Tensor scratch_b2 = Tensor::zeros(conv2_b.shape());
    conv2d_backward(cache.a1, conv2_w, 2, dz2, &da1, scratch_w2, scratch_b2);
    Tensor dz1 = relu_backward(cache.z1, da1);
    Tensor dinput(cache.input.shape());
    Tensor scratch_w1 = Tensor::zeros(conv1_w.shape());
    Tensor scratch_b1 = Tensor::zeros(conv1_b.shape());
    conv2d_backward(cache.input, conv1_w, 2, dz1, &dinput, scratch_w1, scratch_b1);
    Tensor g(std::vector<std::size_t>{cache.input.dim(1), cache.input.dim(2)});
    std::copy(dinput.begin(), dinput.end(), g.begin());
    return g;
}

PhiNet init_phi(std::uint64_t seed) {
    PhiNet phi;
    phi.seed = seed;
    Rng rng(seed);
    Rng r1 = rng.split("conv1");
    Rng r2 = rng.split("conv2");
    init_uniform(phi.conv1_w, 1 * 3 * 3, r1);
    init_uniform(phi.conv2_w, 4 * 3 * 3, r2);
    return phi;
}

PhiNet identity_phi() {
    PhiNet phi;
    phi.identity = true;
    return phi;
}

double Discriminator::score(const Tensor& recon, const Tensor& original, Cache* cache) const {
    require_same_shape(recon, original, "Discriminator::score");
    Cache local;
    Cache& c = cache ? *cache : local;
    const std::size_t side = recon.rows();
    c.input = Tensor({2, side, side});
    std::copy(recon.begin(), recon.end(), c.input.begin());
    std::copy(original.begin(), original.end(), c.input.begin() + static_cast<std::ptrdiff_t>(side * side));
    c.z1 = conv2d_forward(c.input, conv1_w, conv1_b, 2);
    c.a1 = relu(c.z1);
    c.z2 = conv2d_forward(c.a1, conv2_w, conv2_b, 2);
    c.a2 = relu(c.z2);
    c.pooled = gap(c.a2);
    const Tensor out = linear_forward(c.pooled, fc_w, fc_b);
    c.score = out[0];
    return c.score;
}

ParamRefs Discriminator::params() {
    return {{"disc.conv1.w", &conv1_w}, {"disc.conv1.b", &conv1_b}, {"disc.conv2.w", &conv2_w},
            {"disc.conv2.b", &conv2_b}, {"disc.fc.w", &fc_w},       {"disc.fc.b", &fc_b}};
}

std::vector<const Tensor*> Discriminator::param_values() const {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
}

Discriminator init_discriminator(std::uint64_t seed) {
    Discriminator d;
    d.seed = seed;
    Rng rng(seed);
    Rng r1 = rng.split("conv1");
    Rng r2 = rng.split("conv2");
    Rng r3 = rng.split("fc");
    init_uniform(d.conv1_w, 2 * 3 * 3, r1);
    init_uniform(d.conv2_w, 8 * 3 * 3, r2);
    init_uniform(d.fc_w, 16, r3);
    return d;
}

DiscGrads::DiscGrads(const Discriminator& d)
    : conv1_w(Tensor::zeros(d.conv1_w.shape())),
      conv1_b(Tensor::zeros(d.conv1_b.shape())),
      conv2_w(Tensor::zeros(d.conv2_w.shape())),
      conv2_b(Tensor::zeros(d.conv2_b.shape())),
      fc_w(Tensor::zeros(d.fc_w.shape())),
      fc_b(Tensor::zeros(d.fc_b.shape())) {}

std::vector<const Tensor*> DiscGrads::refs() const {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
}

void disc_param_backward(const Discriminator& d, const Discriminator::Cache& cache, double upstream,
                         DiscGrads& grads) {
    if (upstream == 0.0) return;
    Tensor dscore({1});
    dscore[0] = upstream;
    Tensor dpooled({16});
    linear_backward(cache.pooled, d.fc_w, dscore, &dpooled, grads.fc_w, grads.fc_b);
    Tensor da2 = gap_backward(cache.a2, dpooled);
    Tensor dz2 = relu_backward(cache.z2, da2);
    Tensor da1(cache.a1.shape());
    conv2d_backward(cache.a1, d.conv2_w, 2, dz2, &da1, grads.conv2_w, grads.conv2_b);
    Tensor dz1 = relu_backward(cache.z1, da1);
    conv2d_backward(cache.input, d.conv1_w, 2, dz1, nullptr, grads.conv1_w, grads.conv1_b);
}

Tensor disc_recon_grad(const Discriminator& d, const Discriminator::Cache& cache, double upstream) {
    const std::size_t side = cache.input.dim(1);
    Tensor g(side, side);
    if (upstream == 0.0) return g;
    Tensor dscore({1});
    dscore[0] = upstream;
    Tensor dpooled({16});
    Tensor scratch_fcw = Tensor::zeros(d.fc_w.shape());
    Tensor scratch_fcb = Tensor::zeros(d.fc_b.shape());
    linear_backward(cache.pooled, d.fc_w, dscore, &dpooled, scratch_fcw, scratch_fcb);
    Tensor da2 = gap_backward(cache.a2, dpooled);
    Tensor dz2 = relu_backward(cache.z2, da2);
    Tensor da1(cache.a1.shape());
    Tensor scratch_w2 = Tensor::zeros(d.conv2_w.shape());
    Tensor scratch_b2 = Tensor::zeros(d.conv2_b.shape());
    conv2d_backward(cache.a1, d.conv2_w, 2, dz2, &da1, scratch_w2, scratch_b2);
    Tensor dz1 = relu_backward(cache.z1, da1);
    Tensor dinput(cache.input.shape());
    Tensor scratch_w1 = Tensor::zeros(d.conv1_w.shape());
    Tensor scratch_b1 = Tensor::zeros(d.conv1_b.shape());
    conv2d_backward(cache.input, d.conv1_w, 2, dz1, &dinput, scratch_w1, scratch_b1);
    // Only the reconstruction channel feeds back into the codec.
    std::copy(dinput.begin(), dinput.begin() + static_cast<std::ptrdiff_t>(side * side), g.begin());
    return g;
}

double region_loss(const PatchGrid& input, const PatchGrid& recon, const std::vector<double>& gamma) {
    require_same_shape(input.patches, recon.patches, "region_loss");
    const std::size_t m = input.patch_count(), l = input.patch_dim();
    if (gamma.size() != m) throw std::invalid_argument("region_loss: gamma length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = input.patches.data() + i * l;
        const double* b = recon.patches.data() + i * l;
        double d2 = 0.0;
        for (std::size_t j = 0; j < l; ++j) {
            const double d = a[j] - b[j];
            d2 += d * d;
        }
        total += gamma[i] * d2;
    }
    return total / static_cast<double>(m);
}

Tensor region_loss_grad(const PatchGrid& input, const PatchGrid& recon, const std::vector<double>& gamma) {
    const std::size_t m = input.patch_count(), l = input.patch_dim();
    Tensor grad(m, l);
    for (std::size_t i = 0; i < m; ++i) {
        const double c = 2.0 * gamma[i] / static_cast<double>(m);
        const double* a = input.patches.data() + i * l;
        const double* b = recon.patches.data() + i * l;
        double* g = grad.data() + i * l;
        for (std::size_t j = 0; j < l; ++j) g[j] = c * (b[j] - a[j]);
    }
    return grad;
}

double feature_loss(const Tensor& input_image, const Tensor& recon_image, const PhiNet& phi) {
    const Tensor fa = phi.features(input_image, nullptr);
    const Tensor fb = phi.features(recon_image, nullptr);
    double total = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double d = fa[i] - fb[i];
        total += d * d;
    }
    return total;
}

FeatureLossResult feature_loss_with_grad(const Tensor& input_image, const Tensor& recon_image,
                                         const PhiNet& phi) {
    const Tensor fa = phi.features(input_image, nullptr);
    PhiNet::Cache cache;
    const Tensor fb = phi.features(recon_image, &cache);
    FeatureLossResult result;
    Tensor dfeat(fb.shape());
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double d = fb[i] - fa[i];
        result.value += d * d;
        dfeat[i] = 2.0 * d;
    }
    result.recon_image_grad = phi.input_grad(cache, dfeat);
    return result;
}

double GanEvaluation::d_gen_d_fake(std::size_t i) const {
    const double b = static_cast<double>(fake_scores.size());
    if (form == GanForm::hinge) return -1.0 / b;
    return -(1.0 - sigmoid(fake_scores[i])) / b;
}

double GanEvaluation::d_disc_d_real(std::size_t i) const {
    const double b = static_cast<double>(real_scores.size());
    if (form == GanForm::hinge) return real_gated[i] ? 0.0 : -1.0 / b;
    return -(1.0 - sigmoid(real_scores[i])) / b;
}

double GanEvaluation::d_disc_d_fake(std::size_t i) const {
    const double b = static_cast<double>(fake_scores.size());
    if (form == GanForm::hinge) return fake_gated[i] ? 0.0 : 1.0 / b;
    return sigmoid(fake_scores[i]) / b;
}

GanEvaluation gan_terms(const std::vector<const Tensor*>& originals,
                        const std::vector<const Tensor*>& recons, const Discriminator& disc, GanForm form) {
    if (originals.size() != recons.size() || originals.empty()) {
        throw std::invalid_argument("gan_terms: need matching non-empty batches");
    }
    const std::size_t b = originals.size();
    GanEvaluation eval;
    eval.form = form;
    eval.real_caches.resize(b);
    eval.fake_caches.resize(b);
    eval.real_scores.resize(b);
    eval.fake_scores.resize(b);
    eval.real_gated.assign(b, false);
    eval.fake_gated.assign(b, false);
    double gen = 0.0, dsc = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        eval.real_scores[i] = disc.score(*originals[i], *originals[i], &eval.real_caches[i]);
        eval.fake_scores[i] = disc.score(*recons[i], *originals[i], &eval.fake_caches[i]);
        if (form == GanForm::hinge) {
            eval.real_gated[i] = eval.real_scores[i] >= 1.0;
            eval.fake_gated[i] = eval.fake_scores[i] <= -1.0;
            dsc += std::max(0.0, 1.0 - eval.real_scores[i]) + std::max(0.0, 1.0 + eval.fake_scores[i]);
            gen += -eval.fake_scores[i];
        } else {
            dsc += -(std::log(sigmoid(eval.real_scores[i])) + std::log(1.0 - sigmoid(eval.fake_scores[i])));
            gen += -std::log(sigmoid(eval.fake_scores[i]));
        }
    }
    eval.generator_term = gen / static_cast<double>(b);
    eval.discriminator_term = dsc / static_cast<double>(b);
    return eval;
}

double total_objective(double region, double feature, double gan_generator_term, double lambda1,
                       double lambda2, double lambda3, GanForm form) {
    if (form == GanForm::hinge) {
        return lambda1 * region + lambda2 * feature + lambda3 * gan_generator_term;
    }
    return lambda1 * region + lambda2 * feature - lambda3 * gan_generator_term;
}

} // namespace tascom
