#pragma once

#include <cstdint>
#include <vector>

#include "tascom/adam.hpp"
#include "tascom/dataset.hpp"
#include "tascom/tensor.hpp"

namespace tascom {

// Frozen downstream classifier F_xi: conv 1->8 3x3 valid, ReLU, conv 8->16
// 3x3 valid, ReLU, global average pool, linear -> C. The last conv layer's 16
// post-ReLU feature maps (28x28) are what saliency extraction consumes.
struct TaskModel {
    Tensor conv1_w{std::vector<std::size_t>{8, 1, 3, 3}};
    Tensor conv1_b{std::vector<std::size_t>{8}};
    Tensor conv2_w{std::vector<std::size_t>{16, 8, 3, 3}};
    Tensor conv2_b{std::vector<std::size_t>{16}};
    Tensor fc_w{std::vector<std::size_t>{16, 4}};
    Tensor fc_b{std::vector<std::size_t>{4}};
    int class_count = 4;
    std::uint64_t seed = 0;

    static constexpr std::size_t feature_map_count = 16; // T
    static std::size_t feature_side() { return kImageSide - 4; }

    struct Cache {
        Tensor input;  // {1, 32, 32}
        Tensor z1, a1; // {8, 30, 30}
        Tensor z2, a2; // {16, 28, 28}; a2 holds the feature maps A_t
        Tensor pooled; // {16}
        Tensor logits; // {C}
    };

    Cache forward(const Tensor& image) const;
    Tensor logits(const Tensor& image) const;
    // Argmax with ties broken by lowest class id.
    int predict(const Tensor& image) const;

    // d logits[class_id] / d a2, for saliency extraction.
    Tensor feature_map_grad(const Cache& cache, int class_id) const;

    ParamRefs params();
    std::vector<const Tensor*> param_values() const;
};

TaskModel init_task_model(int class_count, std::uint64_t seed);

struct TaskTrainConfig {
    std::uint64_t seed = 1;
    std::size_t epochs = 60;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    double target_accuracy = 0.95;
    double train_fraction = 0.8;
};

struct TaskTrainResult {
    TaskModel model;
    double heldout_accuracy = 0.0;
    std::size_t epochs_run = 0;
    std::vector<std::size_t> heldout_indices;
};

// Trains on an 80/20 split until the held-out accuracy target is reached;
// throws if the epoch budget runs out first (advising a larger corpus or
// budget). Deterministic given (corpus, config).
TaskTrainResult train_task_model(const std::vector<LabeledImage>& corpus, const TaskTrainConfig& config);

// Fraction of argmax-correct predictions. Empty image list is an error.
double task_accuracy(const TaskModel& model, const std::vector<Tensor>& images, const std::vector<int>& labels);
double task_accuracy(const TaskModel& model, const std::vector<LabeledImage>& images);

void save_task_model(const std::string& base_path, const TaskModel& model);
TaskModel load_task_model(const std::string& base_path);

} // namespace tascom
