#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tascom/acc.hpp"
#include "tascom/codec.hpp"
#include "tascom/dataset.hpp"
#include "tascom/losses.hpp"
#include "tascom/pipeline.hpp"
#include "tascom/task_model.hpp"

#include <json.hpp>

namespace tascom {

enum class TrainStage { pretrain, finetune };

// How the per-frame symbol budget is chosen during stage-I training. `link`
// takes L_max from the configured link at the training SNR (at desk-scale
// link parameters that budget is slack, so every token rides at full
// dimension). `jitter` draws a per-image budget inside [N q/2, N q] so all
// three embedding levels see gradient traffic.
enum class BudgetMode { link, jitter };

struct TrainConfig {
    TrainStage stage = TrainStage::pretrain;
    std::uint64_t seed = 42;
    std::size_t epochs = 200;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    double mask_ratio = 0.7;    // eta
    double train_snr_db = 12.0; // phi_train
    double lambda1 = 10.0, lambda2 = 1.0, lambda3 = 2.0;
    double mu = 0.5;
    double epsilon_th = 0.1;
    GanForm gan_form = GanForm::hinge;
    ChannelMode channel_mode = ChannelMode::awgn;
    bool noiseless = false;
    BudgetMode budget_mode = BudgetMode::link;
    LinkConfig link; // bandwidth / Q_mod / delay / fading; noise follows train_snr_db
    std::size_t token_dim = 16;
    std::size_t checkpoint_every = 0; // 0 = final checkpoint only
    std::string out_dir;              // empty = no file output
    std::string run_name = "run";

    void validate() const;
};

struct EpochLoss {
    std::size_t epoch = 0;
    double region = 0.0, feature = 0.0, gen_term = 0.0, disc_term = 0.0, total = 0.0;
};

struct TrainResult {
    ModelParams params;
    LossNets nets;
    std::vector<EpochLoss> log;
    nlohmann::json manifest;
};

// Random feature weights for the masking scheme: round(eta*M) positions drawn
// without replacement get weights below the threshold, the rest sit above it,
// so mask_select reproduces exactly this partition. eta rounding to M falls
// back to retaining a single position.
std::pair<std::vector<double>, std::vector<int>> random_mask_weights(std::size_t m, double eta,
                                                                     double epsilon_th, Rng& rng);

// Stage I: end-to-end pre-training of the codec under random masking.
TrainResult pretrain_stage1(const std::vector<LabeledImage>& corpus, const TrainConfig& config);

// Stage II: fine-tuning with weights and rates supplied by the adaptive
// controller driven by the frozen task model.
TrainResult finetune_stage2(const std::vector<LabeledImage>& corpus, const TaskModel& task_model,
                            const TrainConfig& config, const ModelParams& pretrained,
                            const LossNets& pretrained_nets);

// Codec + discriminator in one checkpoint; phi is re-derived from its seed.
void save_model_checkpoint(const std::string& base_path, const ModelParams& params, const LossNets& nets,
                           const nlohmann::json& extra_provenance);
std::pair<ModelParams, LossNets> load_model_checkpoint(const std::string& base_path);

void write_loss_log_csv(const std::string& path, const std::vector<EpochLoss>& log);

} // namespace tascom
