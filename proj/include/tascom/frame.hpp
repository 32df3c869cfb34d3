#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace tascom {

// One token's worth of channel symbols. `delta` real dimensions pack into
// k = delta/2 complex symbols (consecutive real pairs become real, imaginary).
struct TokenSymbols {
    int position = 0;            // original patch index
    std::size_t delta = 0;       // real dimensions
    double scale = 1.0;          // power-normalization multiplier applied
    bool zero_input = false;     // pre-normalization vector was all zero
    std::vector<std::complex<double>> symbols; // k = delta/2

    std::size_t symbol_count() const { return symbols.size(); }
    // (1/k) sum |x|^2; the transmit-power constraint fixes this at 1 for
    // nonzero tokens.
    double average_power() const;
    std::vector<double> to_real() const;
    static std::vector<std::complex<double>> pack_complex(const std::vector<double>& real_vec);
};

struct EncodedChannelFrame {
    std::vector<TokenSymbols> tokens;

    std::size_t total_real_dims() const;
    std::size_t total_symbols() const;
};

} // namespace tascom
