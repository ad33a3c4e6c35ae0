#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "twmr/errors.hpp"
#include "twmr/relay_select.hpp"

namespace twmr {

/// Per-subcarrier link quantities after relay selection, plus the constants
/// every allocator needs.
struct LinkConfig {
    std::vector<double> h2;       ///< selected squared gain, A side
    std::vector<double> g2;       ///< selected squared gain, B side
    std::vector<double> eta;      ///< integrated noise-channel coefficient
    std::vector<double> log2_eta; ///< cached log2(eta)
    double sigma2 = 1.0;          ///< noise power, watts
    double w = 1.0;               ///< per-subcarrier bandwidth, Hz

    std::size_t size() const { return eta.size(); }
};

inline LinkConfig make_link(const RelayChoice& choice, const ChannelRealization& chan) {
    LinkConfig link;
    link.h2 = choice.h2;
    link.g2 = choice.g2;
    link.eta = choice.eta;
    link.log2_eta.resize(link.eta.size());
    for (std::size_t n = 0; n < link.eta.size(); ++n) link.log2_eta[n] = std::log2(link.eta[n]);
    link.sigma2 = chan.noise_power;
    link.w = chan.subcarrier_bandwidth();
    return link;
}

/// Rates below this are treated as assignment errors and excluded; values in
/// [-kExcludeTol, 0] are floating-point noise at the water line and clamp to 0.
constexpr double kExcludeTol = 1e-12;

/// Water level over a set of subcarriers carrying total demand R:
/// B = (2^(2R/w) * prod eta_n)^(1/k), computed in the log domain so large
/// demands cannot overflow.
inline double water_level(std::span<const double> etas, double demand, double w) {
    if (etas.empty()) throw validation_error("water_level: empty eta set");
    if (!(demand >= 0)) throw validation_error("water_level: demand must be >= 0");
    double sum_log = 0.0;
    for (double e : etas) {
        if (!(e > 0)) throw validation_error("water_level: eta must be positive");
        sum_log += std::log2(e);
    }
    const double k = static_cast<double>(etas.size());
    return std::exp2((2.0 * demand / w + sum_log) / k);
}

/// One direction of the per-service rate allocation.
struct DirectionFill {
    double water_level = 0.0;   ///< B, watts (over the final active set)
    std::vector<double> rates;  ///< bits/s, parallel to the input eta list
    std::vector<char> active;   ///< 1 where the subcarrier stayed in the active set
};

namespace detail {

/// Core exclusion loop on cached log2(eta) values indexed by `idx`.
/// `active` and `rates` are caller-provided scratch parallel to `idx`.
/// Returns log2 of the final water level.
inline double fill_direction_core(std::span<const double> log2_eta, std::span<const std::size_t> idx,
                                  double demand, double w, std::span<char> active,
                                  std::span<double> rates) {
    const std::size_t k = idx.size();
    double sum_log = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        active[i] = 1;
        sum_log += log2_eta[idx[i]];
    }
    std::size_t n_active = k;
    const double half_w = 0.5 * w;

    double log2_b = 0.0;
    for (;;) {
        log2_b = (2.0 * demand / w + sum_log) / static_cast<double>(n_active);
        bool excluded = false;
        for (std::size_t i = 0; i < k; ++i) {
            if (!active[i]) continue;
            const double r = half_w * (log2_b - log2_eta[idx[i]]);
            if (r < -kExcludeTol) {
                active[i] = 0;
                sum_log -= log2_eta[idx[i]];
                --n_active;
                excluded = true;
            }
        }
        if (!excluded) break;
        // cannot happen: a single subcarrier always admits the full demand
        if (n_active == 0) throw consistency_error("fill_direction: active set became empty");
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (!active[i]) {
            rates[i] = 0.0;
            continue;
        }
        const double r = half_w * (log2_b - log2_eta[idx[i]]);
        rates[i] = r > 0.0 ? r : 0.0;
    }
    return log2_b;
}

} // namespace detail

/// Water-filling rate allocation for one direction of one service over its
/// owned subcarriers: r_n = (w/2) log2(B / eta_n), recomputing the water level
/// after excluding any subcarrier whose rate comes out negative (it never
/// re-enters). Terminates in at most k rounds; final rates are nonnegative and
/// sum to the demand.
inline DirectionFill fill_direction(std::span<const double> etas, double demand, double w) {
    if (etas.empty()) throw validation_error("fill_direction: no owned subcarriers");
    if (!(demand >= 0) || !std::isfinite(demand))
        throw validation_error("fill_direction: demand must be finite and >= 0");
    const std::size_t k = etas.size();
    std::vector<double> log2_eta(k);
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(etas[i] > 0)) throw validation_error("fill_direction: eta must be positive");
        log2_eta[i] = std::log2(etas[i]);
        idx[i] = i;
    }
    DirectionFill fill;
    fill.rates.resize(k);
    fill.active.resize(k);
    const double log2_b = detail::fill_direction_core(log2_eta, idx, demand, w, fill.active, fill.rates);
    fill.water_level = std::exp2(log2_b);
    return fill;
}

/// Both directions of one service; the KKT system separates per direction, so
/// the two fills run independently over the same owned set.
struct ServiceAllocation {
    DirectionFill down;
    DirectionFill up;
};

inline ServiceAllocation allocate_service(std::span<const double> etas, double demand_down,
                                          double demand_up, double w) {
    return ServiceAllocation{fill_direction(etas, demand_down, w), fill_direction(etas, demand_up, w)};
}

/// Transmit powers on one subcarrier that realize the rate pair (r_down, r_up)
/// through the selected relay at the optimal amplification factor.
struct NodePowers {
    double node_a = 0.0;
    double node_b = 0.0;
    double relay = 0.0;
    double total() const { return node_a + node_b + relay; }
};

/// Combined demand term for one rate pair: (2^(2 r1/w)-1) + (2^(2 r2/w)-1).
inline double demand_term(double rate_down, double rate_up, double w) {
    return std::exp2(2.0 * rate_down / w) - 1.0 + std::exp2(2.0 * rate_up / w) - 1.0;
}

inline NodePowers recover_powers(double rate_down, double rate_up, double h2, double g2,
                                 double sigma2, double w) {
    if (!(rate_down >= 0) || !(rate_up >= 0))
        throw validation_error("recover_powers: rates must be >= 0");
    if (!(h2 > 0) || !(g2 > 0)) throw validation_error("recover_powers: gains must be positive");
    if (rate_down == 0.0 && rate_up == 0.0) return {};
    const double mr = demand_term(rate_down, rate_up, w);
    const double alpha = alpha_star(mr, h2, g2);
    NodePowers p;
    p.node_a = (std::exp2(2.0 * rate_down / w) - 1.0) * (1.0 + g2 * alpha) * sigma2 / (h2 * g2 * alpha);
    p.node_b = (std::exp2(2.0 * rate_up / w) - 1.0) * (1.0 + h2 * alpha) * sigma2 / (h2 * g2 * alpha);
    p.relay = alpha * (h2 * p.node_a + g2 * p.node_b + sigma2);
    return p;
}

/// Achievable end-to-end rates given transmit powers and an amplification
/// factor; the forward direction of the closed forms recover_powers inverts.
inline double rate_down_from_power(double power_a, double alpha, double h2, double g2,
                                   double sigma2, double w) {
    return 0.5 * w * std::log2(1.0 + h2 * g2 * alpha * power_a / (sigma2 * (1.0 + g2 * alpha)));
}

inline double rate_up_from_power(double power_b, double alpha, double h2, double g2, double sigma2,
                                 double w) {
    return 0.5 * w * std::log2(1.0 + h2 * g2 * alpha * power_b / (sigma2 * (1.0 + h2 * alpha)));
}

/// Full per-trial allocation across all subcarriers and services.
struct RateAllocation {
    std::vector<double> rate_down; ///< bits/s per subcarrier (0 where unowned/excluded)
    std::vector<double> rate_up;
    std::vector<int> owner;        ///< owning service per subcarrier
    std::vector<char> active_down; ///< water-filling active set membership
    std::vector<char> active_up;
    std::vector<double> power_a; ///< watts per subcarrier
    std::vector<double> power_b;
    std::vector<double> power_r;
    std::vector<double> water_down; ///< per-service water level B1 (0 if not meaningful)
    std::vector<double> water_up;   ///< per-service water level B2

    std::size_t size() const { return rate_down.size(); }
};

/// Exact objective: total transmit power over all nodes and subcarriers.
inline double total_power(const RateAllocation& alloc) {
    double sum = 0.0;
    for (std::size_t n = 0; n < alloc.size(); ++n)
        sum += alloc.power_a[n] + alloc.power_b[n] + alloc.power_r[n];
    return sum;
}

/// Approximate objective sum_n mr_n eta_n used for relay selection, the GA
/// evaluating index, and oracle cross-checks.
inline double approx_objective(const RateAllocation& alloc, const LinkConfig& link) {
    double sum = 0.0;
    for (std::size_t n = 0; n < alloc.size(); ++n)
        sum += demand_term(alloc.rate_down[n], alloc.rate_up[n], link.w) * link.eta[n];
    return sum;
}

/// Compute and store the per-subcarrier node powers for an allocation whose
/// rates are already set.
inline void attach_powers(RateAllocation& alloc, const LinkConfig& link) {
    const std::size_t n_sub = alloc.size();
    alloc.power_a.assign(n_sub, 0.0);
    alloc.power_b.assign(n_sub, 0.0);
    alloc.power_r.assign(n_sub, 0.0);
    for (std::size_t n = 0; n < n_sub; ++n) {
        const NodePowers p = recover_powers(alloc.rate_down[n], alloc.rate_up[n], link.h2[n],
                                            link.g2[n], link.sigma2, link.w);
        alloc.power_a[n] = p.node_a;
        alloc.power_b[n] = p.node_b;
        alloc.power_r[n] = p.relay;
    }
}

} // namespace twmr
