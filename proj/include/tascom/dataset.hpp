#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tascom/tensor.hpp"

namespace tascom {

inline constexpr std::size_t kImageSide = 32;
inline constexpr std::size_t kPatchSide = 4;
inline constexpr std::size_t kGridSide = kImageSide / kPatchSide; // 8
inline constexpr std::size_t kPatchCount = kGridSide * kGridSide; // M = 64
inline constexpr std::size_t kPatchDim = kPatchSide * kPatchSide; // l = 16

struct LabeledImage {
    Tensor pixels; // {32, 32}, values in [0, 1]
    int label = 0;
    std::vector<int> object_box; // patch indices containing foreground pixels
};

struct DatasetConfig {
    std::uint64_t seed = 7;
    std::size_t count = 2000;
    int class_count = 4;
    double noise_level = 1.0;
};

// One shape (disk / square / cross / triangle / diamond / ring, class id in
// that order) per image at random position and scale on a textured
// background. Labels are balanced to within +-1; generation is deterministic
// given the config and parallelizable per image (split seeds).
std::vector<LabeledImage> generate_corpus(const DatasetConfig& config);

// Corpus on disk: <base>_header.json + <base>_pixels.f32 (raw little-endian
// 32-bit floats, images concatenated row-major) + <base>_labels.json
// (label and object_box per image).
void save_corpus(const std::string& base_path, const std::vector<LabeledImage>& corpus,
                 const DatasetConfig& config);
std::vector<LabeledImage> load_corpus(const std::string& base_path);

} // namespace tascom
