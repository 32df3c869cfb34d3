#pragma once

#include "tascom/tensor.hpp"

namespace tascom {

// An image as M non-overlapping patches of l pixels each, row-major in both
// the patch grid and within each patch. unpatchify(patchify(I)) == I exactly.
struct PatchGrid {
    Tensor patches;         // {M, l}
    std::size_t patch_side = 0;
    std::size_t grid_side = 0; // image_side / patch_side

    std::size_t patch_count() const { return patches.rows(); }
    std::size_t patch_dim() const { return patches.cols(); }
};

// Throws std::invalid_argument when the image side is not divisible by
// patch_side.
PatchGrid patchify(const Tensor& image, std::size_t patch_side);
Tensor unpatchify(const PatchGrid& grid);

} // namespace tascom
