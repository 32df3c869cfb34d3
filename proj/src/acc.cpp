#include "tascom/acc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tascom {

std::vector<double> cam_reduce(const Tensor& combined_map, std::size_t grid_side) {
    const std::size_t h = combined_map.dim(0), w = combined_map.dim(1);
    std::vector<double> out(grid_side * grid_side, 0.0);
    for (std::size_t gr = 0; gr < grid_side; ++gr) {
        const auto sy = static_cast<std::size_t>((static_cast<double>(gr) + 0.5) *
                                                 static_cast<double>(h) / static_cast<double>(grid_side));
        for (std::size_t gc = 0; gc < grid_side; ++gc) {
            const auto sx = static_cast<std::size_t>((static_cast<double>(gc) + 0.5) *
                                                     static_cast<double>(w) / static_cast<double>(grid_side));
            out[gr * grid_side + gc] = std::max(0.0, combined_map.at(sy, sx));
        }
    }
    const double mx = *std::max_element(out.begin(), out.end());
    if (mx > 0.0) {
        for (double& v : out) v /= mx;
    }
    return out;
}

std::vector<double> grad_weighted_map(const Tensor& image, const TaskModel& model) {
    const TaskModel::Cache cache = model.forward(image);
    int predicted = 0;
    for (int c = 1; c < model.class_count; ++c) {
        if (cache.logits[static_cast<std::size_t>(c)] > cache.logits[static_cast<std::size_t>(predicted)]) {
            predicted = c;
        }
    }
    const Tensor grad_maps = model.feature_map_grad(cache, predicted); // {T, h, w}
    const std::size_t t_count = grad_maps.dim(0), h = grad_maps.dim(1), w = grad_maps.dim(2);
    const double spatial = static_cast<double>(h * w);

    Tensor combined(h, w);
    for (std::size_t t = 0; t < t_count; ++t) {
        const double* gplane = grad_maps.data() + t * h * w;
        double alpha = 0.0;
        for (std::size_t i = 0; i < h * w; ++i) alpha += gplane[i];
        alpha /= spatial;
        if (alpha == 0.0) continue;
        const double* aplane = cache.a2.data() + t * h * w;
        for (std::size_t i = 0; i < h * w; ++i) combined[i] += alpha * aplane[i];
    }
    return cam_reduce(combined, kGridSide);
}

ContentWeights content_weighted_map(const PatchGrid& patches) {
    constexpr std::size_t kBins = 32;
    const std::size_t m = patches.patch_count(), l = patches.patch_dim();
    ContentWeights out;
    out.entropies.resize(m);
    out.gamma_c.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::array<std::size_t, kBins> hist{};
        const double* row = patches.patches.data() + i * l;
        for (std::size_t j = 0; j < l; ++j) {
            const double v = std::clamp(row[j], 0.0, 1.0);
            auto bin = static_cast<std::size_t>(v * kBins);
            if (bin >= kBins) bin = kBins - 1;
            hist[bin] += 1;
        }
        double entropy = 0.0;
        for (std::size_t c : hist) {
            if (c == 0) continue;
            const double prob = static_cast<double>(c) / static_cast<double>(l);
            entropy -= prob * std::log(prob);
        }
        out.entropies[i] = entropy;
    }
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        out.gamma_c[i] = std::exp(out.entropies[i]);
        z += out.gamma_c[i];
    }
    for (double& v : out.gamma_c) v /= z;
    return out;
}

std::vector<double> combine_weights(const std::vector<double>& gamma_g, const std::vector<double>& gamma_c,
                                    double mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("combine_weights: mu must be in [0, 1]");
    if (gamma_g.size() != gamma_c.size()) throw std::invalid_argument("combine_weights: length mismatch");
    std::vector<double> gamma(gamma_g.size());
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        gamma[i] = gamma_g[i] * mu + gamma_c[i] * (1.0 - mu);
    }
    return gamma;
}

std::vector<double> min_max_normalize(const std::vector<double>& v) {
    if (v.empty()) return {};
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    std::vector<double> out(v.size(), 0.0);
    if (*hi > *lo) {
        const double range = *hi - *lo;
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / range;
    }
    return out;
}

FeatureWeights compute_feature_weights(const Tensor& image, const PatchGrid& patches, const TaskModel& model,
                                       double mu, double epsilon_th) {
    FeatureWeights w;
    w.mu = mu;
    w.epsilon_th = epsilon_th;
    w.gamma_g = grad_weighted_map(image, model);
    ContentWeights cw = content_weighted_map(patches);
    w.gamma_c = std::move(cw.gamma_c);
    w.entropies = std::move(cw.entropies);
    w.gamma = combine_weights(min_max_normalize(w.gamma_g), min_max_normalize(w.gamma_c), mu);
    return w;
}

std::vector<int> mask_select(const std::vector<double>& gamma, double epsilon_th) {
    if (gamma.empty()) throw std::invalid_argument("mask_select: empty gamma");
    std::vector<int> retained;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        if (gamma[i] >= epsilon_th) retained.push_back(static_cast<int>(i));
    }
    if (retained.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < gamma.size(); ++i) {
            if (gamma[i] > gamma[best]) best = i;
        }
        retained.push_back(static_cast<int>(best));
    }
    return retained;
}

namespace {

// Interval-halving argmin over [lo, hi); ties resolve to the lower index.
std::size_t argmin_bisect(const std::vector<double>& g, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return lo;
    const std::size_t mid = (lo + hi) / 2;
    const std::size_t a = argmin_bisect(g, lo, mid);
    const std::size_t b = argmin_bisect(g, mid, hi);
    return g[b] < g[a] ? b : a;
}

} // namespace

std::vector<int> mask_select_bisection(const std::vector<double>& gamma, double epsilon_th) {
    if (gamma.empty()) throw std::invalid_argument("mask_select_bisection: empty gamma");
    std::vector<double> work = gamma;
    std::vector<char> masked(gamma.size(), 0);
    while (true) {
        const std::size_t mid = argmin_bisect(work, 0, work.size());
        if (!(work[mid] < epsilon_th)) break; // termination flag raised
        masked[mid] = 1;
        work[mid] = 2.0 * epsilon_th; // sentinel: cleared for later rounds
    }
    std::vector<int> retained;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        if (!masked[i]) retained.push_back(static_cast<int>(i));
    }
    if (retained.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < gamma.size(); ++i) {
            if (gamma[i] > gamma[best]) best = i;
        }
        retained.push_back(static_cast<int>(best));
    }
    return retained;
}

void LinkConfig::validate() const {
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("LinkConfig: bandwidth must be > 0");
    if (!(noise_power > 0.0)) throw std::invalid_argument("LinkConfig: noise power must be > 0");
    if (!(fading_power > 0.0)) throw std::invalid_argument("LinkConfig: fading power must be > 0");
    if (constellation_bits < 1) throw std::invalid_argument("LinkConfig: constellation bits must be >= 1");
    if (delay_s < 0.0) throw std::invalid_argument("LinkConfig: delay must be >= 0");
    if (transmit_power != 1.0) throw std::invalid_argument("LinkConfig: transmit power is fixed at 1");
}

double LinkConfig::snr_db() const {
    return 10.0 * std::log10(fading_power * transmit_power / noise_power);
}

LinkConfig link_at_snr_db(double snr_db, const LinkConfig& base) {
    LinkConfig link = base;
    link.noise_power = base.fading_power * base.transmit_power / std::pow(10.0, snr_db / 10.0);
    return link;
}

LinkRates compute_symbol_rate(const LinkConfig& link) {
    link.validate();
    LinkRates rates;
    rates.r_cap_bits_per_s =
        link.bandwidth_hz * std::log2(1.0 + link.transmit_power * link.fading_power / link.noise_power);
    rates.r_sym_per_s = link.bandwidth_hz * std::log2(1.0 + link.fading_power / link.noise_power) /
                        static_cast<double>(link.constellation_bits);
    return rates;
}

std::int64_t compute_l_max(const LinkConfig& link) {
    return static_cast<std::int64_t>(std::floor(link.delay_s * compute_symbol_rate(link).r_sym_per_s));
}

namespace {

void validate_allocation(const RateAllocation& alloc, const std::vector<double>& gamma, std::size_t q) {
    const auto half = q / 2, three_quarter = 3 * q / 4;
    std::size_t sum = 0;
    for (std::size_t d : alloc.delta) {
        if (d != half && d != three_quarter && d != q) {
            throw std::logic_error("allocate_rates: produced an illegal level");
        }
        sum += d;
    }
    if (sum != alloc.sum_delta || static_cast<std::int64_t>(sum) > alloc.l_max) {
        throw std::logic_error("allocate_rates: budget violated");
    }
    for (std::size_t n = 0; n < gamma.size(); ++n) {
        for (std::size_t t = n + 1; t < gamma.size(); ++t) {
            const double lhs = (static_cast<double>(alloc.delta[n]) - static_cast<double>(alloc.delta[t])) *
                               (gamma[n] - gamma[t]);
            if (lhs < 0.0) throw std::logic_error("allocate_rates: order consistency violated");
        }
    }
}

} // namespace

RateAllocation allocate_rates(const std::vector<double>& gamma_retained, std::size_t q, std::int64_t l_max) {
    const std::size_t n = gamma_retained.size();
    if (n == 0) throw std::invalid_argument("allocate_rates: need at least one retained token");
    if (q % 8 != 0) throw std::invalid_argument("allocate_rates: q must be a multiple of 8");
    const std::int64_t min_sum = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(q / 2);
    if (min_sum > l_max) {
        throw InsufficientBudgetError("allocate_rates: minimum " + std::to_string(min_sum) +
                                      " symbols exceed budget " + std::to_string(l_max));
    }

    // Downgrade queue: lowest weight first, higher original index first on ties.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (gamma_retained[a] != gamma_retained[b]) return gamma_retained[a] < gamma_retained[b];
        return a > b;
    });

    RateAllocation alloc;
    alloc.l_max = l_max;
    alloc.delta.assign(n, q);
    std::int64_t sum = static_cast<std::int64_t>(n * q);
    const std::int64_t step = static_cast<std::int64_t>(q / 4);
    std::size_t cursor = 0;
    while (sum > l_max) {
        while (alloc.delta[order[cursor]] == q / 2) ++cursor;
        alloc.delta[order[cursor]] -= q / 4;
        sum -= step;
    }
    alloc.sum_delta = static_cast<std::size_t>(sum);
    alloc.feasible = true;
    validate_allocation(alloc, gamma_retained, q);
    return alloc;
}

AccDecision plan_transmission(const FeatureWeights& weights, std::size_t q, std::int64_t l_max,
                              double snr_db) {
    AccDecision decision;
    decision.weights = weights;
    decision.l_max = l_max;
    decision.snr_db = snr_db;
    decision.retained = mask_select(weights.gamma, weights.epsilon_th);
    while (true) {
        std::vector<double> gamma_retained;
        gamma_retained.reserve(decision.retained.size());
        for (int pos : decision.retained) {
            gamma_retained.push_back(weights.gamma[static_cast<std::size_t>(pos)]);
        }
        try {
            decision.allocation = allocate_rates(gamma_retained, q, l_max);
            return decision;
        } catch (const InsufficientBudgetError&) {
            if (decision.retained.size() <= 1) throw;
            // Drop the lowest-weight retained token; higher patch index first on ties.
            std::size_t drop = 0;
            for (std::size_t i = 1; i < gamma_retained.size(); ++i) {
                if (gamma_retained[i] <= gamma_retained[drop]) drop = i;
            }
            decision.retained.erase(decision.retained.begin() + static_cast<std::ptrdiff_t>(drop));
        }
    }
}

AccDecision plan_from_gamma(const std::vector<double>& gamma, double mu, double epsilon_th, std::size_t q,
                            std::int64_t l_max, double snr_db) {
    FeatureWeights w;
    w.gamma = gamma;
    w.mu = mu;
    w.epsilon_th = epsilon_th;
    return plan_transmission(w, q, l_max, snr_db);
}

nlohmann::json acc_decision_to_json(const AccDecision& decision, double mu, double epsilon_th) {
    nlohmann::json j;
    j["gamma"] = decision.weights.gamma;
    j["retained"] = decision.retained;
    j["delta"] = decision.allocation.delta;
    j["L_max"] = decision.l_max;
    j["snr_db"] = decision.snr_db;
    j["mu"] = mu;
    j["epsilon_th"] = epsilon_th;
    return j;
}

} // namespace tascom
