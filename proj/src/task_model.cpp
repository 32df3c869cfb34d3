#include "tascom/task_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tascom/checkpoint.hpp"
#include "tascom/conv.hpp"
#include "tascom/rng.hpp"

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

// Softmax cross entropy; returns loss and writes d loss / d logits.
double softmax_ce(const Tensor& logits, int label, Tensor& grad) {
    const std::size_t c = logits.size();
    double mx = logits[0];
    for (std::size_t i = 1; i < c; ++i) mx = std::max(mx, logits[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < c; ++i) z += std::exp(logits[i] - mx);
    const double log_z = std::log(z) + mx;
    for (std::size_t i = 0; i < c; ++i) {
        grad[i] = std::exp(logits[i] - log_z);
    }
    grad[static_cast<std::size_t>(label)] -= 1.0;
    return log_z - logits[static_cast<std::size_t>(label)];
}

struct TaskGrads {
    Tensor conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;

    explicit TaskGrads(const TaskModel& m)
        : conv1_w(Tensor::zeros(m.conv1_w.shape())),
          conv1_b(Tensor::zeros(m.conv1_b.shape())),
          conv2_w(Tensor::zeros(m.conv2_w.shape())),
          conv2_b(Tensor::zeros(m.conv2_b.shape())),
          fc_w(Tensor::zeros(m.fc_w.shape())),
          fc_b(Tensor::zeros(m.fc_b.shape())) {}

    std::vector<const Tensor*> refs() const {
        return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
    }
};

void backward_from_logits(const TaskModel& m, const TaskModel::Cache& cache, const Tensor& dlogits,
                          TaskGrads& grads) {
    Tensor dpooled({16});
    linear_backward(cache.pooled, m.fc_w, dlogits, &dpooled, grads.fc_w, grads.fc_b);
    Tensor da2 = gap_backward(cache.a2, dpooled);
    Tensor dz2 = relu_backward(cache.z2, da2);
    Tensor da1(cache.a1.shape());
    conv2d_backward(cache.a1, m.conv2_w, 1, dz2, &da1, grads.conv2_w, grads.conv2_b);
    Tensor dz1 = relu_backward(cache.z1, da1);
    conv2d_backward(cache.input, m.conv1_w, 1, dz1, nullptr, grads.conv1_w, grads.conv1_b);
}

} // namespace

TaskModel::Cache TaskModel::forward(const Tensor& image) const {
    Cache c;
    c.input = as_channel_image(image);
    c.z1 = conv2d_forward(c.input, conv1_w, conv1_b, 1);
    c.a1 = relu(c.z1);
    c.z2 = conv2d_forward(c.a1, conv2_w, conv2_b, 1);
    c.a2 = relu(c.z2);
    c.pooled = gap(c.a2);
    c.logits = linear_forward(c.pooled, fc_w, fc_b);
    return c;
}

Tensor TaskModel::logits(const Tensor& image) const { return forward(image).logits; }

int TaskModel::predict(const Tensor& image) const {
    const Tensor l = logits(image);
    int best = 0;
    for (int i = 1; i < class_count; ++i) {
        if (l[static_cast<std::size_t>(i)] > l[static_cast<std::size_t>(best)]) best = i;
    }
    return best;
}

Tensor TaskModel::feature_map_grad(const Cache& cache, int class_id) const {
    if (class_id < 0 || class_id >= class_count) {
        throw std::invalid_argument("feature_map_grad: class id out of range");
    }
    Tensor dlogits({static_cast<std::size_t>(class_count)});
    dlogits[static_cast<std::size_t>(class_id)] = 1.0;
    Tensor dpooled({16});
    Tensor scratch_w = Tensor::zeros(fc_w.shape());
    Tensor scratch_b = Tensor::zeros(fc_b.shape());
    linear_backward(cache.pooled, fc_w, dlogits, &dpooled, scratch_w, scratch_b);
    return gap_backward(cache.a2, dpooled);
}

ParamRefs TaskModel::params() {
    return {{"task.conv1.w", &conv1_w}, {"task.conv1.b", &conv1_b}, {"task.conv2.w", &conv2_w},
            {"task.conv2.b", &conv2_b}, {"task.fc.w", &fc_w},       {"task.fc.b", &fc_b}};
}

std::vector<const Tensor*> TaskModel::param_values() const {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
}

TaskModel init_task_model(int class_count, std::uint64_t seed) {
    if (class_count < 2) throw std::invalid_argument("init_task_model: class_count must be >= 2");
    TaskModel m;
    m.class_count = class_count;
    m.seed = seed;
    m.fc_w = Tensor(16, static_cast<std::size_t>(class_count));
    m.fc_b = Tensor({static_cast<std::size_t>(class_count)});
    Rng rng(seed);
    Rng r1 = rng.split("conv1");
    Rng r2 = rng.split("conv2");
    Rng r3 = rng.split("fc");
    init_uniform(m.conv1_w, 1 * 3 * 3, r1);
    init_uniform(m.conv2_w, 8 * 3 * 3, r2);
    init_uniform(m.fc_w, 16, r3);
    return m;
}

TaskTrainResult train_task_model(const std::vector<LabeledImage>& corpus, const TaskTrainConfig& config) {
    if (corpus.empty()) throw std::invalid_argument("train_task_model: empty corpus");
    int class_count = 0;
    for (const auto& img : corpus) class_count = std::max(class_count, img.label + 1);
    class_count = std::max(class_count, 2);

    Rng rng(config.seed);
    TaskModel model = init_task_model(class_count, rng.split("init").seed());

    // Deterministic 80/20 split.
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng = rng.split("split");
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[split_rng.uniform_index(i)]);
    }
    const std::size_t train_count =
        std::max<std::size_t>(1, static_cast<std::size_t>(config.train_fraction * corpus.size()));
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + train_count);
    std::vector<std::size_t> test_idx(order.begin() + train_count, order.end());
    if (test_idx.empty()) test_idx.push_back(order.back());

    std::vector<Tensor> test_images;
    std::vector<int> test_labels;
    for (std::size_t i : test_idx) {
        test_images.push_back(corpus[i].pixels);
        test_labels.push_back(corpus[i].label);
    }

    AdamState adam;
    adam.init(model.params(), AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});

    TaskTrainResult result;
    result.heldout_indices = test_idx;
    Rng epoch_rng = rng.split("epochs");
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng = epoch_rng.split(epoch);
        std::vector<std::size_t> perm = train_idx;
        for (std::size_t i = perm.size(); i > 1; --i) {
            std::swap(perm[i - 1], perm[shuffle_rng.uniform_index(i)]);
        }
        for (std::size_t start = 0; start < perm.size(); start += config.batch_size) {
            const std::size_t end = std::min(perm.size(), start + config.batch_size);
            TaskGrads grads(model);
            for (std::size_t bi = start; bi < end; ++bi) {
                const LabeledImage& img = corpus[perm[bi]];
                TaskModel::Cache cache = model.forward(img.pixels);
                Tensor dlogits({static_cast<std::size_t>(class_count)});
                softmax_ce(cache.logits, img.label, dlogits);
                scale_inplace(dlogits, 1.0 / static_cast<double>(end - start));
                backward_from_logits(model, cache, dlogits, grads);
            }
            adam_step(model.params(), grads.refs(), adam);
        }
        result.epochs_run = epoch + 1;
        result.heldout_accuracy = task_accuracy(model, test_images, test_labels);
        if (result.heldout_accuracy >= config.target_accuracy) {
            result.model = model;
            return result;
        }
    }
    throw std::runtime_error("train_task_model: held-out accuracy " +
                             std::to_string(result.heldout_accuracy) + " below target " +
                             std::to_string(config.target_accuracy) + " after " +
                             std::to_string(config.epochs) +
                             " epochs; increase the corpus size or the epoch budget");
}

double task_accuracy(const TaskModel& model, const std::vector<Tensor>& images,
                     const std::vector<int>& labels) {
    if (images.empty()) throw std::invalid_argument("task_accuracy: empty image list");
    if (images.size() != labels.size()) throw std::invalid_argument("task_accuracy: image/label count mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (model.predict(images[i]) == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(images.size());
}

double task_accuracy(const TaskModel& model, const std::vector<LabeledImage>& images) {
    std::vector<Tensor> pix;
    std::vector<int> labels;
    for (const auto& img : images) {
        pix.push_back(img.pixels);
        labels.push_back(img.label);
    }
    return task_accuracy(model, pix, labels);
}

void save_task_model(const std::string& base_path, const TaskModel& model) {
    TaskModel copy = model;
    nlohmann::json prov;
    prov["seed"] = model.seed;
    prov["class_count"] = model.class_count;
    save_checkpoint(base_path, copy.params(), prov);
}

TaskModel load_task_model(const std::string& base_path) {
    const nlohmann::json manifest = read_checkpoint_manifest(base_path);
    const auto& prov = manifest.at("seed_provenance");
    TaskModel model;
    model.class_count = prov.at("class_count").get<int>();
    model.seed = prov.at("seed").get<std::uint64_t>();
    model.fc_w = Tensor(16, static_cast<std::size_t>(model.class_count));
    model.fc_b = Tensor({static_cast<std::size_t>(model.class_count)});
    load_checkpoint(base_path, model.params());
    return model;
}

} // namespace tascom
