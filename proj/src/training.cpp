#include "tascom/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "tascom/checkpoint.hpp"

namespace tascom {

void TrainConfig::validate() const {
    if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) {
        throw std::invalid_argument("TrainConfig: mask_ratio must be in [0, 1)");
    }
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("TrainConfig: mu must be in [0, 1]");
    if (!(epsilon_th > 0.0)) throw std::invalid_argument("TrainConfig: epsilon_th must be > 0");
    link.validate();
}

std::pair<std::vector<double>, std::vector<int>> random_mask_weights(std::size_t m, double eta,
                                                                     double epsilon_th, Rng& rng) {
    if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("random_mask_weights: eta must be in [0, 1)");
    auto masked_count = static_cast<std::size_t>(std::llround(eta * static_cast<double>(m)));
    if (masked_count >= m) masked_count = m - 1; // always retain at least one

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i < masked_count; ++i) {
        const std::size_t j = i + rng.uniform_index(m - i);
        std::swap(perm[i], perm[j]);
    }
    std::vector<char> is_masked(m, 0);
    for (std::size_t i = 0; i < masked_count; ++i) is_masked[perm[i]] = 1;

    std::vector<double> gamma(m);
    std::vector<int> retained;
    retained.reserve(m - masked_count);
    for (std::size_t i = 0; i < m; ++i) {
        if (is_masked[i]) {
            gamma[i] = rng.uniform(0.0, epsilon_th); // strictly below the threshold
        } else {
            gamma[i] = rng.uniform(epsilon_th, 1.0);
            retained.push_back(static_cast<int>(i));
        }
    }
    return {std::move(gamma), std::move(retained)};
}

namespace {

struct PreparedImage {
    PatchGrid patches;
    Tensor image;
};

nlohmann::json config_manifest(const TrainConfig& config, const Rng& root) {
    nlohmann::json j;
    j["stage"] = config.stage == TrainStage::pretrain ? "pretrain" : "finetune";
    j["seed"] = config.seed;
    j["epochs"] = config.epochs;
    j["learning_rate"] = config.learning_rate;
    j["batch_size"] = config.batch_size;
    j["mask_ratio"] = config.mask_ratio;
    j["train_snr_db"] = config.train_snr_db;
    j["lambda"] = {config.lambda1, config.lambda2, config.lambda3};
    j["mu"] = config.mu;
    j["epsilon_th"] = config.epsilon_th;
    j["gan_form"] = config.gan_form == GanForm::hinge ? "hinge" : "literal_log";
    j["channel_mode"] = config.channel_mode == ChannelMode::awgn ? "awgn" : "rayleigh";
    j["noiseless"] = config.noiseless;
    j["budget_mode"] = config.budget_mode == BudgetMode::link ? "link" : "jitter";
    j["token_dim"] = config.token_dim;
    j["link"] = {{"bandwidth_hz", config.link.bandwidth_hz},
                 {"delay_s", config.link.delay_s},
                 {"constellation_bits", config.link.constellation_bits},
                 {"fading_power", config.link.fading_power}};
    j["sub_seeds"] = {{"codec_init", root.split("codec_init").seed()},
                      {"phi", root.split("phi").seed()},
                      {"disc_init", root.split("disc_init").seed()},
                      {"channel", root.split("channel").seed()},
                      {"order", root.split("order").seed()},
                      {"mask", root.split("mask").seed()}};
    return j;
}

TrainResult run_training_loop(const std::vector<LabeledImage>& corpus, const TrainConfig& config,
                              ModelParams params, LossNets nets, const TaskModel* task_model) {
    config.validate();
    if (corpus.empty()) throw std::invalid_argument("training: empty corpus");
    const char* stage_name = config.stage == TrainStage::pretrain ? "pretrain_stage1" : "finetune_stage2";

    Rng root(config.seed);
    const LinkConfig train_link = link_at_snr_db(config.train_snr_db, config.link);
    const std::int64_t l_max_link = compute_l_max(train_link);
    ChannelConfig chan_cfg;
    chan_cfg.mode = config.channel_mode;
    chan_cfg.noise_power = config.noiseless ? 0.0 : train_link.noise_power;
    chan_cfg.fading_power = train_link.fading_power;
    chan_cfg.seed = root.split("channel").seed();

    const std::size_t m = params.config.patch_count, q = params.config.token_dim;

    std::vector<PreparedImage> prepared(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        prepared[i].image = corpus[i].pixels;
        prepared[i].patches = patchify(corpus[i].pixels, kPatchSide);
    }

    // Stage II: the controller's outputs depend only on the frozen task model
    // and the image, so plan each image once.
    std::vector<AccDecision> acc_decisions;
    if (config.stage == TrainStage::finetune) {
        if (!task_model) throw std::invalid_argument("finetune_stage2: task model required");
        acc_decisions.reserve(corpus.size());
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            FeatureWeights w = compute_feature_weights(prepared[i].image, prepared[i].patches, *task_model,
                                                       config.mu, config.epsilon_th);
            acc_decisions.push_back(plan_transmission(w, q, l_max_link, config.train_snr_db));
        }
    }

    AdamState codec_adam;
    codec_adam.init(params.params(), AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
    AdamState disc_adam;
    disc_adam.init(nets.disc.params(), AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});

    TrainResult result;
    result.manifest = config_manifest(config, root);
    result.manifest["corpus_size"] = corpus.size();
    result.manifest["phi_seed"] = nets.phi.seed;
    result.manifest["l_max_train"] = l_max_link;

    Rng order_rng = root.split("order");
    Rng mask_rng = root.split("mask");
    std::uint64_t frame_counter = 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order(corpus.size());
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle = order_rng.split(epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle.uniform_index(i)]);
        }

        EpochLoss epoch_loss;
        epoch_loss.epoch = epoch + 1;
        std::size_t images_seen = 0;

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::size_t bsz = end - start;
            const std::size_t batch_index = start / config.batch_size;

            std::vector<AccDecision> batch_decisions(bsz);
            std::vector<ChannelRealization> realizations(bsz);
            std::vector<BatchImage> batch(bsz);
            for (std::size_t k = 0; k < bsz; ++k) {
                const std::size_t idx = order[start + k];
                if (config.stage == TrainStage::pretrain) {
                    Rng img_mask = mask_rng.split(frame_counter);
                    auto [gamma, retained] = random_mask_weights(m, config.mask_ratio, config.epsilon_th,
                                                                 img_mask);
                    std::int64_t budget = l_max_link;
                    if (config.budget_mode == BudgetMode::jitter) {
                        const auto n = static_cast<std::int64_t>(retained.size());
                        const double u = img_mask.uniform(0.55, 1.0);
                        const auto lo = n * static_cast<std::int64_t>(q) / 2;
                        const auto hi = static_cast<std::int64_t>(
                            std::floor(u * static_cast<double>(n) * static_cast<double>(q)));
                        budget = std::min(l_max_link, std::max(lo, hi));
                    }
                    batch_decisions[k] =
                        plan_from_gamma(gamma, config.mu, config.epsilon_th, q, budget, config.train_snr_db);
                } else {
                    batch_decisions[k] = acc_decisions[idx];
                }
                const std::size_t symbol_count = batch_decisions[k].allocation.sum_delta / 2;
                realizations[k] = draw_realization(chan_cfg, frame_counter, symbol_count);
                ++frame_counter;

                if (static_cast<std::int64_t>(batch_decisions[k].allocation.sum_delta) >
                    batch_decisions[k].l_max) {
                    throw std::logic_error("training: batch violates the symbol budget");
                }
                batch[k] = BatchImage{&prepared[idx].patches, &prepared[idx].image, &batch_decisions[k],
                                      &realizations[k]};
            }

            ModelGrads codec_grads(params);
            DiscGrads disc_grads(nets.disc);
            BatchEvaluation eval;
            try {
                eval = evaluate_batch(params, nets, batch, &codec_grads, &disc_grads);
            } catch (const DeepFadeError&) {
                continue; // dropped frame batch; extraordinarily rare in training SNRs
            }
            if (!std::isfinite(eval.objective)) {
                throw std::runtime_error(std::string(stage_name) + ": non-finite loss at epoch " +
                                         std::to_string(epoch + 1) + " batch " +
                                         std::to_string(batch_index + 1));
            }
            adam_step(params.params(), codec_grads.refs(), codec_adam);
            adam_step(nets.disc.params(), disc_grads.refs(), disc_adam);

            const double w = static_cast<double>(bsz);
            epoch_loss.region += eval.region_mean * w;
            epoch_loss.feature += eval.feature_mean * w;
            epoch_loss.gen_term += eval.gen_term * w;
            epoch_loss.disc_term += eval.disc_term * w;
            epoch_loss.total += eval.objective * w;
            images_seen += bsz;
        }

        const double inv = 1.0 / static_cast<double>(images_seen);
        epoch_loss.region *= inv;
        epoch_loss.feature *= inv;
        epoch_loss.gen_term *= inv;
        epoch_loss.disc_term *= inv;
        epoch_loss.total *= inv;
        result.log.push_back(epoch_loss);

        if (!config.out_dir.empty() && config.checkpoint_every > 0 &&
            (epoch + 1) % config.checkpoint_every == 0 && epoch + 1 < config.epochs) {
            save_model_checkpoint(config.out_dir + "/" + config.run_name + "_epoch" + std::to_string(epoch + 1),
                                  params, nets, result.manifest);
        }
    }

    result.params = std::move(params);
    result.nets = std::move(nets);
    if (!config.out_dir.empty()) {
        save_model_checkpoint(config.out_dir + "/" + config.run_name + "_final", result.params, result.nets,
                              result.manifest);
        write_loss_log_csv(config.out_dir + "/" + config.run_name + "_losses.csv", result.log);
        std::ofstream mout(config.out_dir + "/" + config.run_name + "_manifest.json", std::ios::trunc);
        if (!mout) throw std::runtime_error("training: cannot write run manifest");
        mout << result.manifest.dump(2) << "\n";
    }
    return result;
}

} // namespace

TrainResult pretrain_stage1(const std::vector<LabeledImage>& corpus, const TrainConfig& config) {
    if (config.stage != TrainStage::pretrain) {
        throw std::invalid_argument("pretrain_stage1: config.stage must be pretrain");
    }
    Rng root(config.seed);
    CodecConfig codec_cfg;
    codec_cfg.patch_count = kPatchCount;
    codec_cfg.patch_dim = kPatchDim;
    codec_cfg.token_dim = config.token_dim;
    ModelParams params = init_model(codec_cfg, root.split("codec_init").seed());
    LossNets nets;
    nets.phi = init_phi(root.split("phi").seed());
    nets.disc = init_discriminator(root.split("disc_init").seed());
    nets.lambda1 = config.lambda1;
    nets.lambda2 = config.lambda2;
    nets.lambda3 = config.lambda3;
    nets.gan_form = config.gan_form;
    return run_training_loop(corpus, config, std::move(params), std::move(nets), nullptr);
}

TrainResult finetune_stage2(const std::vector<LabeledImage>& corpus, const TaskModel& task_model,
                            const TrainConfig& config, const ModelParams& pretrained,
                            const LossNets& pretrained_nets) {
    if (config.stage != TrainStage::finetune) {
        throw std::invalid_argument("finetune_stage2: config.stage must be finetune");
    }
    LossNets nets = pretrained_nets;
    nets.lambda1 = config.lambda1;
    nets.lambda2 = config.lambda2;
    nets.lambda3 = config.lambda3;
    nets.gan_form = config.gan_form;
    return run_training_loop(corpus, config, pretrained, std::move(nets), &task_model);
}

void save_model_checkpoint(const std::string& base_path, const ModelParams& params, const LossNets& nets,
                           const nlohmann::json& extra_provenance) {
    ModelParams params_copy = params;
    Discriminator disc_copy = nets.disc;
    ParamRefs refs = params_copy.params();
    for (auto& r : disc_copy.params()) refs.push_back(r);
    nlohmann::json prov;
    prov["run"] = extra_provenance;
    prov["phi_seed"] = nets.phi.seed;
    prov["disc_seed"] = nets.disc.seed;
    prov["model"] = {{"patch_count", params.config.patch_count},
                     {"patch_dim", params.config.patch_dim},
                     {"token_dim", params.config.token_dim}};
    save_checkpoint(base_path, refs, prov);
}

std::pair<ModelParams, LossNets> load_model_checkpoint(const std::string& base_path) {
    const nlohmann::json manifest = read_checkpoint_manifest(base_path);
    const auto& prov = manifest.at("seed_provenance");
    CodecConfig cfg;
    cfg.patch_count = prov.at("model").at("patch_count").get<std::size_t>();
    cfg.patch_dim = prov.at("model").at("patch_dim").get<std::size_t>();
    cfg.token_dim = prov.at("model").at("token_dim").get<std::size_t>();
    ModelParams params = init_model(cfg, 0);
    LossNets nets;
    nets.phi = init_phi(prov.at("phi_seed").get<std::uint64_t>());
    nets.disc.seed = prov.at("disc_seed").get<std::uint64_t>();
    ParamRefs refs = params.params();
    for (auto& r : nets.disc.params()) refs.push_back(r);
    load_checkpoint(base_path, refs);
    return {std::move(params), std::move(nets)};
}

void write_loss_log_csv(const std::string& path, const std::vector<EpochLoss>& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_loss_log_csv: cannot write " + path);
    out << "epoch,region_loss,feature_loss,gan_generator_term,discriminator_term,total\n";
    char buf[192];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6g,%.6g,%.6g,%.6g,%.6g\n", row.epoch, row.region, row.feature,
                      row.gen_term, row.disc_term, row.total);
        out << buf;
    }
}

} // namespace tascom
