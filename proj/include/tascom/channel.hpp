#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tascom/frame.hpp"
#include "tascom/rng.hpp"

namespace tascom {

enum class ChannelMode { awgn, rayleigh };

struct ChannelConfig {
    ChannelMode mode = ChannelMode::awgn;
    double noise_power = 0.0;  // sigma^2 per complex symbol
    double fading_power = 1.0; // sigma_h^2
    std::uint64_t seed = 0;
};

// Per-frame channel draw: h is constant across the frame (slow fading) and
// redrawn per frame. awgn mode fixes h = 1.
struct ChannelState {
    std::complex<double> h{1.0, 0.0};
    double noise_power = 0.0;
    ChannelMode mode = ChannelMode::awgn;
    std::uint64_t seed = 0;
};

// Receiver saw |h| below the equalization floor; the frame is dropped and
// counted by the caller.
class DeepFadeError : public std::runtime_error {
public:
    explicit DeepFadeError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic given (config.seed, frame_index).
ChannelState draw_channel_state(const ChannelConfig& config, std::uint64_t frame_index);
Rng make_noise_rng(const ChannelConfig& config, std::uint64_t frame_index);

// y = h*x + g per complex symbol, g circularly-symmetric complex normal with
// per-symbol variance state.noise_power (half per real component).
EncodedChannelFrame transmit(const EncodedChannelFrame& frame, const ChannelState& state, Rng& rng);

// Zero-forcing equalization with known h. Throws DeepFadeError when |h| < 1e-12.
EncodedChannelFrame equalize(const EncodedChannelFrame& received, std::complex<double> h);
std::complex<double> equalize_symbol(std::complex<double> y, std::complex<double> h);

struct NormalizeResult {
    std::vector<double> value;
    double scale = 1.0;
    bool zero_input = false;
};

// Scales a real token vector (consecutive pairs = complex symbols) so the
// average complex-symbol power is exactly 1. Zero vectors come back unchanged
// with the flag set.
NormalizeResult normalize_power(const std::vector<double>& token);

// Optional per-frame draw log (one row per frame: id, h, sigma^2).
struct ChannelLogRow {
    std::uint64_t frame_id = 0;
    double h_re = 0.0;
    double h_im = 0.0;
    double noise_power = 0.0;
};

void write_channel_log_csv(const std::string& path, const std::vector<ChannelLogRow>& rows);

} // namespace tascom
