#pragma once

#include <cstdint>
#include <string_view>

namespace tascom {

// xoshiro256++ seeded through splitmix64. Chosen over std engines because the
// full draw path (uniform / normal included) is specified here and therefore
// bit-reproducible across standard libraries.
//
// Streams: split(key) derives an independent child generator from the parent
// seed and a 64-bit key without advancing the parent. Per-run master seed ->
// per-component sub-seeds, e.g.
//   Rng run(seed);
//   Rng corpus = run.split("corpus");
//   Rng image7 = corpus.split(7);
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();
    // Uniform in [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer in [0, n), n > 0.
    std::uint64_t uniform_index(std::uint64_t n);
    // Standard normal via Box-Muller (second value cached).
    double normal();
    double normal(double mean, double stddev);

    // Child generator for stream `key`; the parent state is not consumed.
    Rng split(std::uint64_t key) const;
    Rng split(std::string_view label) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t state_[4] = {0, 0, 0, 0};
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// FNV-1a, used to hash stream labels into split keys.
std::uint64_t hash_label(std::string_view label);

} // namespace tascom
