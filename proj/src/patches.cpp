#include "tascom/patches.hpp"

#include <stdexcept>

namespace tascom {

PatchGrid patchify(const Tensor& image, std::size_t patch_side) {
    if (image.rank() != 2 || image.rows() != image.cols()) {
        throw std::invalid_argument("patchify: expected a square rank-2 image");
    }
    const std::size_t side = image.rows();
    if (patch_side == 0 || side % patch_side != 0) {
        throw std::invalid_argument("patchify: image side " + std::to_string(side) +
                                    " not divisible by patch side " + std::to_string(patch_side));
    }
    const std::size_t grid = side / patch_side;
    const std::size_t m = grid * grid, l = patch_side * patch_side;
    PatchGrid out;
    out.patch_side = patch_side;
    out.grid_side = grid;
    out.patches = Tensor(m, l);
    for (std::size_t pr = 0; pr < grid; ++pr) {
        for (std::size_t pc = 0; pc < grid; ++pc) {
            double* dst = out.patches.data() + (pr * grid + pc) * l;
            for (std::size_t y = 0; y < patch_side; ++y) {
                const double* src = image.data() + (pr * patch_side + y) * side + pc * patch_side;
                for (std::size_t x = 0; x < patch_side; ++x) dst[y * patch_side + x] = src[x];
            }
        }
    }
    return out;
}

Tensor unpatchify(const PatchGrid& grid) {
    const std::size_t side = grid.grid_side * grid.patch_side;
    Tensor image(side, side);
    const std::size_t l = grid.patch_dim();
    for (std::size_t pr = 0; pr < grid.grid_side; ++pr) {
        for (std::size_t pc = 0; pc < grid.grid_side; ++pc) {
            const double* src = grid.patches.data() + (pr * grid.grid_side + pc) * l;
            for (std::size_t y = 0; y < grid.patch_side; ++y) {
                double* dst = image.data() + (pr * grid.patch_side + y) * side + pc * grid.patch_side;
                for (std::size_t x = 0; x < grid.patch_side; ++x) dst[x] = src[y * grid.patch_side + x];
            }
        }
    }
    return image;
}

} // namespace tascom
