#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tascom/patches.hpp"
#include "tascom/task_model.hpp"
#include "tascom/tensor.hpp"

#include <json.hpp>

namespace tascom {

// ---- semantic sampling ----

struct FeatureWeights {
    std::vector<double> gamma;     // combined weights, in [0, 1]
    std::vector<double> gamma_g;   // gradient-weighted map after max-normalization
    std::vector<double> gamma_c;   // content-weighted map (softmax over entropies, sums to 1)
    std::vector<double> entropies; // per-patch entropy in nats
    double mu = 0.5;
    double epsilon_th = 0.1;
};

// Saliency from the frozen task model: pool the predicted-class logit's
// gradient over each of the last conv layer's feature maps, combine the maps
// with those pooled weights, clamp negatives, resample to the patch grid and
// divide by the max (an all-zero map stays all-zero).
std::vector<double> grad_weighted_map(const Tensor& image, const TaskModel& model);

// The reduction half of the above, exposed for direct testing: ReLU ->
// nearest-neighbor resample to grid_side x grid_side -> max-normalize.
std::vector<double> cam_reduce(const Tensor& combined_map, std::size_t grid_side);

struct ContentWeights {
    std::vector<double> gamma_c;
    std::vector<double> entropies;
};

// Plug-in Shannon entropy (nats) of a 32-bin histogram per patch, then a
// softmax over the entropies.
ContentWeights content_weighted_map(const PatchGrid& patches);

// gamma = gamma_g * mu + gamma_c * (1 - mu), elementwise. Inputs are expected
// min-max normalized; mu outside [0, 1] is an error.
std::vector<double> combine_weights(const std::vector<double>& gamma_g, const std::vector<double>& gamma_c,
                                    double mu);

// (v - min) / (max - min); a constant vector maps to all zeros.
std::vector<double> min_max_normalize(const std::vector<double>& v);

FeatureWeights compute_feature_weights(const Tensor& image, const PatchGrid& patches, const TaskModel& model,
                                       double mu, double epsilon_th);

// Retain exactly {m : gamma_m >= epsilon_th}; if empty, retain the argmax
// only (lowest index on ties). Returned positions are strictly increasing.
std::vector<int> mask_select(const std::vector<double>& gamma, double epsilon_th);

// Repeated bisection-search variant of the masking scheme: each round halves
// intervals to locate the minimum weight, removes it if below the threshold,
// replaces it with the 2*epsilon_th sentinel and repeats until the minimum
// clears the threshold. Must return the same retained set as mask_select.
std::vector<int> mask_select_bisection(const std::vector<double>& gamma, double epsilon_th);

// ---- rate allocation ----

struct LinkConfig {
    double bandwidth_hz = 20e6;   // B
    double transmit_power = 1.0;  // P_T
    double noise_power = 1.0;     // sigma^2
    double fading_power = 1.0;    // sigma_h^2
    int constellation_bits = 8;   // Q_mod, bits per real symbol
    double delay_s = 0.010;       // D

    void validate() const;
    double snr_db() const;
};

// Channel SNR x dB fixes sigma^2 = sigma_h^2 * P_T / 10^(x/10).
LinkConfig link_at_snr_db(double snr_db, const LinkConfig& base = LinkConfig{});

struct LinkRates {
    double r_cap_bits_per_s = 0.0; // B log2(1 + P_T sigma_h^2 / sigma^2)
    double r_sym_per_s = 0.0;      // B log2(1 + sigma_h^2 / sigma^2) / Q_mod
};

LinkRates compute_symbol_rate(const LinkConfig& link);
// floor(D * R_sym), in real channel-input symbols.
std::int64_t compute_l_max(const LinkConfig& link);

class InsufficientBudgetError : public std::runtime_error {
public:
    explicit InsufficientBudgetError(const std::string& what) : std::runtime_error(what) {}
};

struct RateAllocation {
    std::vector<std::size_t> delta; // per retained token, values in {q/2, 3q/4, q}
    std::int64_t l_max = 0;
    std::size_t sum_delta = 0;
    bool feasible = false;
};

// Maximizes sum(delta) under sum(delta) <= l_max, three embedding levels, and
// the pairwise order consistency (delta_n - delta_t)(gamma_n - gamma_t) >= 0.
// Greedy: all tokens start at q; the lowest-weight token is downgraded one
// level at a time (ties: higher original index first) until the budget holds.
// Throws InsufficientBudgetError when even all-q/2 exceeds l_max.
RateAllocation allocate_rates(const std::vector<double>& gamma_retained, std::size_t q, std::int64_t l_max);

// ---- combined per-image plan ----

struct AccDecision {
    FeatureWeights weights;
    std::vector<int> retained;
    RateAllocation allocation;
    std::int64_t l_max = 0;
    double snr_db = 0.0;
};

// mask_select + allocate_rates with the budget-infeasibility retry: drop the
// lowest-weight retained token (ties: higher patch index) and reallocate until
// the budget fits; rethrows when a single token no longer fits.
AccDecision plan_transmission(const FeatureWeights& weights, std::size_t q, std::int64_t l_max,
                              double snr_db);
// Same retry policy for an externally supplied gamma (e.g. the random
// weights used in pre-training).
AccDecision plan_from_gamma(const std::vector<double>& gamma, double mu, double epsilon_th, std::size_t q,
                            std::int64_t l_max, double snr_db);

nlohmann::json acc_decision_to_json(const AccDecision& decision, double mu, double epsilon_th);

} // namespace tascom
