#include "tascom/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "tascom/rng.hpp"

#include <json.hpp>

namespace tascom {

namespace {

constexpr int kShapeKinds = 6;

// Foreground mask for one shape instance; cx/cy is the center, r the
// half-extent in pixels.
bool inside_shape(int kind, int x, int y, int cx, int cy, int r) {
    const int dx = x - cx, dy = y - cy;
    switch (kind) {
        case 0: // disk
            return dx * dx + dy * dy <= r * r;
        case 1: // square
            return std::abs(dx) <= r - 1 && std::abs(dy) <= r - 1;
        case 2: { // cross
            const int arm = std::max(1, r / 3);
            return (std::abs(dx) <= arm && std::abs(dy) <= r) || (std::abs(dy) <= arm && std::abs(dx) <= r);
        }
        case 3: { // triangle, apex up
            if (dy < -r || dy > r) return false;
            const double half_width = (static_cast<double>(dy + r) / (2.0 * r)) * r;
            return std::abs(dx) <= half_width;
        }
        case 4: // diamond
            return std::abs(dx) + std::abs(dy) <= r;
        case 5: { // ring
            const int d2 = dx * dx + dy * dy;
            const int inner = std::max(1, r - 2);
            return d2 <= r * r && d2 >= inner * inner;
        }
        default:
            return false;
    }
}

LabeledImage make_image(Rng& rng, int label, double noise_level) {
    const int side = static_cast<int>(kImageSide);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const int r = 4 + static_cast<int>(rng.uniform_index(4)); // half-extent 4..7
        if (2 * r + 1 > side) continue;
        const int cx = r + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(side - 2 * r)));
        const int cy = r + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(side - 2 * r)));

        const double bg_base = rng.uniform(0.15, 0.35);
        const double gx = rng.uniform(-0.1, 0.1);
        const double gy = rng.uniform(-0.1, 0.1);
        const double fg_base = rng.uniform(0.6, 0.8);

        LabeledImage img;
        img.label = label;
        img.pixels = Tensor(kImageSide, kImageSide);
        std::set<int> box;
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                double v;
                if (inside_shape(label, x, y, cx, cy, r)) {
                    v = fg_base + noise_level * rng.normal(0.0, 0.12);
                    box.insert(static_cast<int>((y / kPatchSide) * kGridSide + (x / kPatchSide)));
                } else {
                    v = bg_base + gx * (static_cast<double>(x) / side) + gy * (static_cast<double>(y) / side) +
                        noise_level * rng.normal(0.0, 0.02);
                }
                img.pixels.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                    std::clamp(v, 0.0, 1.0);
            }
        }
        if (box.empty() || box.size() > kPatchCount / 2) continue; // regenerate, never emit invalid images
        img.object_box.assign(box.begin(), box.end());
        return img;
    }
    throw std::runtime_error("generate_corpus: could not place a shape after 64 attempts");
}

} // namespace

std::vector<LabeledImage> generate_corpus(const DatasetConfig& config) {
    if (config.count == 0) throw std::invalid_argument("generate_corpus: count must be > 0");
    if (config.class_count < 2 || config.class_count > kShapeKinds) {
        throw std::invalid_argument("generate_corpus: class_count must be in [2, " +
                                    std::to_string(kShapeKinds) + "]");
    }
    Rng corpus_rng(config.seed);
    std::vector<LabeledImage> corpus;
    corpus.reserve(config.count);
    for (std::size_t i = 0; i < config.count; ++i) {
        Rng image_rng = corpus_rng.split(i);
        corpus.push_back(make_image(image_rng, static_cast<int>(i % config.class_count), config.noise_level));
    }
    return corpus;
}

void save_corpus(const std::string& base_path, const std::vector<LabeledImage>& corpus,
                 const DatasetConfig& config) {
    nlohmann::json header;
    header["count"] = corpus.size();
    header["image_side"] = kImageSide;
    header["patch_side"] = kPatchSide;
    header["classes"] = config.class_count;
    header["seed"] = config.seed;
    header["noise_level"] = config.noise_level;
    header["pixels_file"] = base_path.substr(base_path.find_last_of('/') + 1) + "_pixels.f32";
    header["labels_file"] = base_path.substr(base_path.find_last_of('/') + 1) + "_labels.json";
    std::ofstream hout(base_path + "_header.json", std::ios::trunc);
    if (!hout) throw std::runtime_error("save_corpus: cannot write header");
    hout << header.dump(2) << "\n";

    std::ofstream pout(base_path + "_pixels.f32", std::ios::binary | std::ios::trunc);
    if (!pout) throw std::runtime_error("save_corpus: cannot write pixel blob");
    for (const auto& img : corpus) {
        for (double v : img.pixels) {
            float f = static_cast<float>(v);
            if constexpr (std::endian::native != std::endian::little) {
                unsigned char b[4];
                std::memcpy(b, &f, 4);
                std::swap(b[0], b[3]);
                std::swap(b[1], b[2]);
                std::memcpy(&f, b, 4);
            }
            pout.write(reinterpret_cast<const char*>(&f), 4);
        }
    }

    nlohmann::json labels = nlohmann::json::array();
    for (const auto& img : corpus) {
        labels.push_back({{"label", img.label}, {"object_box", img.object_box}});
    }
    std::ofstream lout(base_path + "_labels.json", std::ios::trunc);
    if (!lout) throw std::runtime_error("save_corpus: cannot write labels");
    lout << labels.dump() << "\n";
}

std::vector<LabeledImage> load_corpus(const std::string& base_path) {
    std::ifstream hin(base_path + "_header.json");
    if (!hin) throw std::runtime_error("load_corpus: cannot read " + base_path + "_header.json");
    nlohmann::json header;
    hin >> header;
    const std::size_t count = header.at("count").get<std::size_t>();
    if (header.at("image_side").get<std::size_t>() != kImageSide) {
        throw std::runtime_error("load_corpus: unsupported image side");
    }

    std::ifstream pin(base_path + "_pixels.f32", std::ios::binary);
    if (!pin) throw std::runtime_error("load_corpus: cannot read pixel blob");
    std::ifstream lin(base_path + "_labels.json");
    if (!lin) throw std::runtime_error("load_corpus: cannot read labels");
    nlohmann::json labels;
    lin >> labels;
    if (labels.size() != count) throw std::runtime_error("load_corpus: label count mismatch");

    std::vector<LabeledImage> corpus(count);
    for (std::size_t i = 0; i < count; ++i) {
        corpus[i].pixels = Tensor(kImageSide, kImageSide);
        for (double& v : corpus[i].pixels) {
            float f;
            pin.read(reinterpret_cast<char*>(&f), 4);
            if constexpr (std::endian::native != std::endian::little) {
                unsigned char b[4];
                std::memcpy(b, &f, 4);
                std::swap(b[0], b[3]);
                std::swap(b[1], b[2]);
                std::memcpy(&f, b, 4);
            }
            v = static_cast<double>(f);
        }
        corpus[i].label = labels[i].at("label").get<int>();
        corpus[i].object_box = labels[i].at("object_box").get<std::vector<int>>();
    }
    if (!pin) throw std::runtime_error("load_corpus: pixel blob truncated");
    return corpus;
}

} // namespace tascom
