#include "tascom/channel.hpp"

#include <cmath>
#include <fstream>

namespace tascom {

double TokenSymbols::average_power() const {
    if (symbols.empty()) return 0.0;
    double s = 0.0;
    for (const auto& c : symbols) s += std::norm(c);
    return s / static_cast<double>(symbols.size());
}

std::vector<double> TokenSymbols::to_real() const {
    std::vector<double> out(symbols.size() * 2);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        out[2 * i] = symbols[i].real();
        out[2 * i + 1] = symbols[i].imag();
    }
    return out;
}

std::vector<std::complex<double>> TokenSymbols::pack_complex(const std::vector<double>& real_vec) {
    std::vector<std::complex<double>> out(real_vec.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = {real_vec[2 * i], real_vec[2 * i + 1]};
    }
    return out;
}

std::size_t EncodedChannelFrame::total_real_dims() const {
    std::size_t n = 0;
    for (const auto& t : tokens) n += t.delta;
    return n;
}

std::size_t EncodedChannelFrame::total_symbols() const {
    std::size_t n = 0;
    for (const auto& t : tokens) n += t.symbol_count();
    return n;
}

ChannelState draw_channel_state(const ChannelConfig& config, std::uint64_t frame_index) {
    ChannelState state;
    state.mode = config.mode;
    state.noise_power = config.noise_power;
    state.seed = config.seed;
    if (config.mode == ChannelMode::rayleigh) {
        Rng rng = Rng(config.seed).split("fading").split(frame_index);
        const double s = std::sqrt(config.fading_power / 2.0);
        state.h = {rng.normal(0.0, s), rng.normal(0.0, s)};
    }
    return state;
}

Rng make_noise_rng(const ChannelConfig& config, std::uint64_t frame_index) {
    return Rng(config.seed).split("noise").split(frame_index);
}

EncodedChannelFrame transmit(const EncodedChannelFrame& frame, const ChannelState& state, Rng& rng) {
    EncodedChannelFrame out = frame;
    const double s = state.noise_power > 0.0 ? std::sqrt(state.noise_power / 2.0) : 0.0;
    for (auto& token : out.tokens) {
        for (auto& x : token.symbols) {
            std::complex<double> y = state.h * x;
            if (s > 0.0) y += std::complex<double>(rng.normal(0.0, s), rng.normal(0.0, s));
            x = y;
        }
    }
    return out;
}

std::complex<double> equalize_symbol(std::complex<double> y, std::complex<double> h) { return y / h; }

EncodedChannelFrame equalize(const EncodedChannelFrame& received, std::complex<double> h) {
    if (std::abs(h) < 1e-12) {
        throw DeepFadeError("equalize: |h| = " + std::to_string(std::abs(h)) + " below floor");
    }
    EncodedChannelFrame out = received;
    for (auto& token : out.tokens) {
        for (auto& y : token.symbols) y = equalize_symbol(y, h);
    }
    return out;
}

NormalizeResult normalize_power(const std::vector<double>& token) {
    NormalizeResult result;
    result.value = token;
    double energy = 0.0;
    for (double v : token) energy += v * v;
    if (energy == 0.0) {
        result.zero_input = true;
        return result;
    }
    const double k = static_cast<double>(token.size()) / 2.0;
    result.scale = std::sqrt(k / energy);
    for (double& v : result.value) v *= result.scale;
    return result;
}

void write_channel_log_csv(const std::string& path, const std::vector<ChannelLogRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_channel_log_csv: cannot write " + path);
    out << "frame_id,h_re,h_im,noise_power\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%llu,%.6g,%.6g,%.6g\n",
                      static_cast<unsigned long long>(r.frame_id), r.h_re, r.h_im, r.noise_power);
        out << buf;
    }
}

} // namespace tascom
