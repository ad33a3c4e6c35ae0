#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "twmr/errors.hpp"
#include "twmr/rng.hpp"
#include "twmr/water_fill.hpp"

namespace twmr {

/// Per-service sum-rate demands in bits/s (one pair per service).
struct ServiceDemand {
    double down = 0.0;
    double up = 0.0;
};

/// Defaults are calibrated so the search reliably reaches the exhaustive
/// optimum on desk-scale instances (N around 10, S up to 3); selection
/// pressure from roulette on the reciprocal objective is mild, so the search
/// leans on mutation plus elitism and favors generations over population.
struct GaConfig {
    std::size_t popsize = 40;
    std::size_t generations = 800;
    double crossover_prob = 0.8;
    double mutation_prob = 0.10; ///< per gene
    std::size_t elitism = 1;
    std::uint64_t seed = 0;

    friend bool operator==(const GaConfig&, const GaConfig&) = default;
};

inline void validate_ga_config(const GaConfig& cfg) {
    if (cfg.popsize < 2) throw validation_error("ga: popsize must be >= 2");
    if (cfg.elitism < 1 || cfg.elitism > cfg.popsize)
        throw validation_error("ga: elitism_count must be in [1, popsize]");
    if (!(cfg.crossover_prob >= 0 && cfg.crossover_prob <= 1))
        throw validation_error("ga: crossover_prob must be in [0,1]");
    if (!(cfg.mutation_prob >= 0 && cfg.mutation_prob <= 1))
        throw validation_error("ga: mutation_prob must be in [0,1]");
}

/// Single-virtual-service bound: the water levels and per-subcarrier rates
/// obtained by pooling all demands onto all subcarriers. This is the fixed
/// reference the equivalent objective measures against; no exclusion is
/// applied, so reference rates may be negative on very poor subcarriers.
struct IdealReference {
    double water_down = 0.0; ///< B1*
    double water_up = 0.0;   ///< B2*
    std::vector<double> rate_down;
    std::vector<double> rate_up;

    /// Objective value attained by the reference itself: N (B1* + B2*).
    double floor_value() const {
        return static_cast<double>(rate_down.size()) * (water_down + water_up);
    }
};

inline IdealReference ideal_water_levels(std::span<const double> etas, double total_down,
                                         double total_up, double w) {
    IdealReference ref;
    ref.water_down = water_level(etas, total_down, w);
    ref.water_up = water_level(etas, total_up, w);
    ref.rate_down.resize(etas.size());
    ref.rate_up.resize(etas.size());
    for (std::size_t n = 0; n < etas.size(); ++n) {
        ref.rate_down[n] = 0.5 * w * std::log2(ref.water_down / etas[n]);
        ref.rate_up[n] = 0.5 * w * std::log2(ref.water_up / etas[n]);
    }
    return ref;
}

/// Evaluating index for the GA: the distance of a rate allocation from the
/// single-virtual-service bound,
///   B1* sum_n 2^(2 dr1_n / w) + B2* sum_n 2^(2 dr2_n / w),  dr = r - r*.
/// Identically equal to sum_n (2^(2 r1_n/w) + 2^(2 r2_n/w)) eta_n, i.e. the
/// approximate power objective plus the constant 2 sum eta.
inline double equivalent_objective(std::span<const double> rate_down,
                                   std::span<const double> rate_up, const IdealReference& ideal,
                                   double w) {
    double sum_down = 0.0, sum_up = 0.0;
    for (std::size_t n = 0; n < rate_down.size(); ++n) {
        sum_down += std::exp2(2.0 * (rate_down[n] - ideal.rate_down[n]) / w);
        sum_up += std::exp2(2.0 * (rate_up[n] - ideal.rate_up[n]) / w);
    }
    return ideal.water_down * sum_down + ideal.water_up * sum_up;
}

enum class FitnessMode {
    equivalent_objective, ///< fitness = 1 / (equivalent objective)
    exact_power           ///< fitness = 1 / (exact total transmit power)
};

namespace detail {

/// Scratch for slicing an assignment into per-service owned index lists.
struct OwnerBuckets {
    std::vector<std::size_t> counts;
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> flat;

    void build(std::span<const int> genes, std::size_t n_services) {
        counts.assign(n_services, 0);
        for (int g : genes) ++counts[static_cast<std::size_t>(g)];
        offsets.assign(n_services + 1, 0);
        for (std::size_t s = 0; s < n_services; ++s) offsets[s + 1] = offsets[s] + counts[s];
        flat.resize(genes.size());
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t n = 0; n < genes.size(); ++n)
            flat[cursor[static_cast<std::size_t>(genes[n])]++] = n;
    }

    std::span<const std::size_t> owned(std::size_t s) const {
        return {flat.data() + offsets[s], counts[s]};
    }
};

} // namespace detail

/// Decodes assignments via per-service two-way water filling and scores them.
/// One instance per trial; not shareable across threads (holds scratch).
///
/// The direction fills run against `eta_fill_*`, which default to the joint
/// integrated coefficient; scoring always uses the joint coefficient. Passing
/// different per-direction lists yields the MWF baseline behavior.
class WaterfillDecoder {
  public:
    WaterfillDecoder(LinkConfig link, std::vector<ServiceDemand> demands,
                     FitnessMode mode = FitnessMode::equivalent_objective,
                     std::vector<double> eta_fill_down = {}, std::vector<double> eta_fill_up = {})
        : link_(std::move(link)), demands_(std::move(demands)), mode_(mode) {
        eta_fill_down_ = eta_fill_down.empty() ? link_.eta : std::move(eta_fill_down);
        eta_fill_up_ = eta_fill_up.empty() ? link_.eta : std::move(eta_fill_up);
        log2_fill_down_.resize(eta_fill_down_.size());
        log2_fill_up_.resize(eta_fill_up_.size());
        for (std::size_t n = 0; n < eta_fill_down_.size(); ++n)
            log2_fill_down_[n] = std::log2(eta_fill_down_[n]);
        for (std::size_t n = 0; n < eta_fill_up_.size(); ++n)
            log2_fill_up_[n] = std::log2(eta_fill_up_[n]);
        eta_total_ = std::accumulate(link_.eta.begin(), link_.eta.end(), 0.0);
        active_.resize(link_.size());
        rates_.resize(link_.size());
    }

    std::size_t n_subcarriers() const { return link_.size(); }
    std::size_t n_services() const { return demands_.size(); }
    const LinkConfig& link() const { return link_; }
    double eta_total() const { return eta_total_; }
    FitnessMode mode() const { return mode_; }

    /// Objective value used for fitness (equivalent objective or exact power,
    /// by mode). If `approx_power` is given, also reports sum_n mr_n eta_n.
    double score(std::span<const int> genes, double* approx_power = nullptr) {
        double eoc = 0.0;       // sum (2^{2r1/w} + 2^{2r2/w}) eta
        double exact = 0.0;     // sum pmin_exact(mr)
        const bool need_exact = mode_ == FitnessMode::exact_power;
        buckets_.build(genes, demands_.size());
        for (std::size_t s = 0; s < demands_.size(); ++s) {
            const auto idx = buckets_.owned(s);
            if (idx.empty()) throw consistency_error("waterfill decode: service owns no subcarrier");
            accumulate_service(idx, demands_[s], need_exact, eoc, exact);
        }
        if (approx_power) *approx_power = eoc - 2.0 * eta_total_;
        return need_exact ? exact : eoc;
    }

    double approx_power(std::span<const int> genes) {
        double approx = 0.0;
        score(genes, &approx);
        return approx;
    }

    /// Full decoded allocation (rates, active sets, water levels, powers).
    RateAllocation decode(std::span<const int> genes) {
        const std::size_t n_sub = link_.size();
        RateAllocation alloc;
        alloc.rate_down.assign(n_sub, 0.0);
        alloc.rate_up.assign(n_sub, 0.0);
        alloc.owner.assign(genes.begin(), genes.end());
        alloc.active_down.assign(n_sub, 0);
        alloc.active_up.assign(n_sub, 0);
        alloc.water_down.assign(demands_.size(), 0.0);
        alloc.water_up.assign(demands_.size(), 0.0);
        buckets_.build(genes, demands_.size());
        for (std::size_t s = 0; s < demands_.size(); ++s) {
            const auto idx = buckets_.owned(s);
            if (idx.empty()) throw consistency_error("waterfill decode: service owns no subcarrier");
            const double b1 = detail::fill_direction_core(log2_fill_down_, idx, demands_[s].down,
                                                          link_.w, active_, rates_);
            alloc.water_down[s] = std::exp2(b1);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                alloc.rate_down[idx[i]] = rates_[i];
                alloc.active_down[idx[i]] = active_[i];
            }
            const double b2 = detail::fill_direction_core(log2_fill_up_, idx, demands_[s].up,
                                                          link_.w, active_, rates_);
            alloc.water_up[s] = std::exp2(b2);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                alloc.rate_up[idx[i]] = rates_[i];
                alloc.active_up[idx[i]] = active_[i];
            }
        }
        attach_powers(alloc, link_);
        return alloc;
    }

  private:
    /// Adds one service's contributions to the evaluating index and, when
    /// needed, the exact power. Uses 2^{2r/w} = B_fill / eta_fill on the
    /// active set, so no per-subcarrier transcendentals are required.
    void accumulate_service(std::span<const std::size_t> idx, const ServiceDemand& demand,
                            bool need_exact, double& eoc, double& exact) {
        const std::size_t k = idx.size();
        if (pow2_down_.size() < k) pow2_down_.resize(k);
        if (pow2_up_.size() < k) pow2_up_.resize(k);
        const double b_down = std::exp2(
            detail::fill_direction_core(log2_fill_down_, idx, demand.down, link_.w, active_, rates_));
        for (std::size_t i = 0; i < k; ++i) {
            const double p = active_[i] ? b_down / eta_fill_down_[idx[i]] : 1.0;
            pow2_down_[i] = p > 1.0 ? p : 1.0; // clamp of tiny negative rates
        }
        const double b_up = std::exp2(
            detail::fill_direction_core(log2_fill_up_, idx, demand.up, link_.w, active_, rates_));
        for (std::size_t i = 0; i < k; ++i) {
            const double p = active_[i] ? b_up / eta_fill_up_[idx[i]] : 1.0;
            pow2_up_[i] = p > 1.0 ? p : 1.0;
        }
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t n = idx[i];
            eoc += (pow2_down_[i] + pow2_up_[i]) * link_.eta[n];
            if (need_exact) {
                const double mr = pow2_down_[i] - 1.0 + pow2_up_[i] - 1.0;
                exact += mr > 0.0 ? pmin_exact(mr, link_.h2[n], link_.g2[n], link_.sigma2) : 0.0;
            }
        }
    }

    LinkConfig link_;
    std::vector<ServiceDemand> demands_;
    FitnessMode mode_;
    std::vector<double> eta_fill_down_, eta_fill_up_;
    std::vector<double> log2_fill_down_, log2_fill_up_;
    double eta_total_ = 0.0;
    detail::OwnerBuckets buckets_;
    std::vector<char> active_;
    std::vector<double> rates_;
    std::vector<double> pow2_down_, pow2_up_;
};

/// Equal-split decoder: every owned subcarrier carries demand / owned_count in
/// each direction (the MA baseline).
class EqualSplitDecoder {
  public:
    EqualSplitDecoder(LinkConfig link, std::vector<ServiceDemand> demands)
        : link_(std::move(link)), demands_(std::move(demands)) {
        eta_total_ = std::accumulate(link_.eta.begin(), link_.eta.end(), 0.0);
    }

    std::size_t n_subcarriers() const { return link_.size(); }
    std::size_t n_services() const { return demands_.size(); }
    const LinkConfig& link() const { return link_; }
    double eta_total() const { return eta_total_; }

    double score(std::span<const int> genes, double* approx_power = nullptr) {
        buckets_.build(genes, demands_.size());
        double eoc = 0.0;
        for (std::size_t s = 0; s < demands_.size(); ++s) {
            const auto idx = buckets_.owned(s);
            if (idx.empty()) throw consistency_error("equal-split decode: service owns no subcarrier");
            const double k = static_cast<double>(idx.size());
            const double p1 = std::exp2(2.0 * demands_[s].down / (k * link_.w));
            const double p2 = std::exp2(2.0 * demands_[s].up / (k * link_.w));
            double eta_sum = 0.0;
            for (std::size_t n : idx) eta_sum += link_.eta[n];
            eoc += (p1 + p2) * eta_sum;
        }
        if (approx_power) *approx_power = eoc - 2.0 * eta_total_;
        return eoc;
    }

    double approx_power(std::span<const int> genes) {
        double approx = 0.0;
        score(genes, &approx);
        return approx;
    }

    RateAllocation decode(std::span<const int> genes) {
        const std::size_t n_sub = link_.size();
        RateAllocation alloc;
        alloc.rate_down.assign(n_sub, 0.0);
        alloc.rate_up.assign(n_sub, 0.0);
        alloc.owner.assign(genes.begin(), genes.end());
        alloc.active_down.assign(n_sub, 1);
        alloc.active_up.assign(n_sub, 1);
        alloc.water_down.assign(demands_.size(), 0.0);
        alloc.water_up.assign(demands_.size(), 0.0);
        buckets_.build(genes, demands_.size());
        for (std::size_t s = 0; s < demands_.size(); ++s) {
            const auto idx = buckets_.owned(s);
            if (idx.empty()) throw consistency_error("equal-split decode: service owns no subcarrier");
            const double k = static_cast<double>(idx.size());
            for (std::size_t n : idx) {
                alloc.rate_down[n] = demands_[s].down / k;
                alloc.rate_up[n] = demands_[s].up / k;
            }
        }
        attach_powers(alloc, link_);
        return alloc;
    }

  private:
    LinkConfig link_;
    std::vector<ServiceDemand> demands_;
    double eta_total_ = 0.0;
    detail::OwnerBuckets buckets_;
};

/// Make every service own at least one subcarrier: an empty service steals a
/// uniformly random subcarrier from the service currently owning the most.
inline void repair_assignment(std::vector<int>& genes, std::size_t n_services, Rng& rng) {
    std::vector<std::size_t> counts(n_services, 0);
    for (int g : genes) ++counts[static_cast<std::size_t>(g)];
    for (std::size_t s = 0; s < n_services; ++s) {
        while (counts[s] == 0) {
            std::size_t donor = 0;
            for (std::size_t t = 1; t < n_services; ++t)
                if (counts[t] > counts[donor]) donor = t;
            std::size_t pick = rng.below(counts[donor]);
            for (std::size_t n = 0; n < genes.size(); ++n) {
                if (static_cast<std::size_t>(genes[n]) != donor) continue;
                if (pick-- == 0) {
                    genes[n] = static_cast<int>(s);
                    break;
                }
            }
            --counts[donor];
            ++counts[s];
        }
    }
}

struct GaResult {
    std::vector<int> best;                    ///< best-ever assignment
    double best_score = 0.0;                  ///< its objective value (per fitness mode)
    double best_approx_power = 0.0;           ///< its sum mr eta
    std::vector<double> fitness_history;      ///< best-ever fitness per generation
    std::vector<double> approx_power_history; ///< best-ever approx power per generation
    std::size_t converged_generation = 0;     ///< first generation attaining the final best
};

/// Elitist-selection GA over subcarrier assignments: roulette selection on
/// fitness = 1/objective, time-invariant single-point crossover, per-gene
/// mutation, and the top `elitism` individuals copied unchanged. Works with
/// any decoder exposing score()/n_subcarriers()/n_services().
template <typename Decoder>
GaResult esga_evolve(Decoder& decoder, const GaConfig& cfg) {
    validate_ga_config(cfg);
    const std::size_t n_sub = decoder.n_subcarriers();
    const std::size_t n_srv = decoder.n_services();
    if (n_sub < n_srv) throw validation_error("esga: fewer subcarriers than services");

    Rng rng(cfg.seed);
    GaResult result;

    if (n_srv == 1) {
        result.best.assign(n_sub, 0);
        result.best_score = decoder.score(result.best, &result.best_approx_power);
        result.fitness_history.push_back(1.0 / result.best_score);
        result.approx_power_history.push_back(result.best_approx_power);
        return result;
    }

    const std::size_t pop = cfg.popsize;
    std::vector<std::vector<int>> population(pop, std::vector<int>(n_sub));
    std::vector<std::vector<int>> next(pop, std::vector<int>(n_sub));
    std::vector<double> scores(pop), approx(pop), cumulative(pop);
    std::vector<std::size_t> order(pop);

    for (auto& genes : population) {
        for (auto& g : genes) g = static_cast<int>(rng.below(n_srv));
        repair_assignment(genes, n_srv, rng);
    }
    for (std::size_t i = 0; i < pop; ++i) scores[i] = decoder.score(population[i], &approx[i]);

    double best_score = std::numeric_limits<double>::infinity();
    auto record_generation = [&](std::size_t gen) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < pop; ++i)
            if (scores[i] < scores[arg]) arg = i;
        if (scores[arg] < best_score) {
            best_score = scores[arg];
            result.best = population[arg];
            result.best_score = scores[arg];
            result.best_approx_power = approx[arg];
            result.converged_generation = gen;
        }
        result.fitness_history.push_back(1.0 / best_score);
        result.approx_power_history.push_back(result.best_approx_power);
    };
    record_generation(0);

    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        // elitism: carry the current best individuals over unchanged
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        for (std::size_t e = 0; e < cfg.elitism; ++e) next[e] = population[order[e]];

        // roulette wheel on fitness = 1/objective
        double total = 0.0;
        for (std::size_t i = 0; i < pop; ++i) {
            total += 1.0 / scores[i];
            cumulative[i] = total;
        }
        auto spin = [&]() {
            const double u = rng.uniform() * total;
            const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            const std::size_t i = static_cast<std::size_t>(it - cumulative.begin());
            return i < pop ? i : pop - 1;
        };

        std::size_t filled = cfg.elitism;
        while (filled < pop) {
            const auto& pa = population[spin()];
            const auto& pb = population[spin()];
            auto& child1 = next[filled];
            auto* child2 = filled + 1 < pop ? &next[filled + 1] : nullptr;
            child1 = pa;
            if (child2) *child2 = pb;
            if (rng.uniform() < cfg.crossover_prob && n_sub >= 2) {
                const std::size_t cut = 1 + rng.below(n_sub - 1);
                for (std::size_t n = cut; n < n_sub; ++n) {
                    child1[n] = pb[n];
                    if (child2) (*child2)[n] = pa[n];
                }
            }
            for (std::size_t c = 0; c < (child2 ? 2u : 1u); ++c) {
                auto& child = c == 0 ? child1 : *child2;
                for (auto& g : child)
                    if (rng.uniform() < cfg.mutation_prob) g = static_cast<int>(rng.below(n_srv));
                repair_assignment(child, n_srv, rng);
            }
            filled += child2 ? 2 : 1;
        }

        population.swap(next);
        for (std::size_t i = 0; i < pop; ++i) scores[i] = decoder.score(population[i], &approx[i]);
        record_generation(gen);
    }
    return result;
}

struct EsgaOutput {
    std::vector<int> assignment;
    RateAllocation allocation;
    GaResult stats;
};

/// The mapped two-way water-filling assignment search: ESGA over assignments,
/// each individual decoded by per-service two-way water filling.
inline EsgaOutput esga_optimize(const LinkConfig& link, std::vector<ServiceDemand> demands,
                                const GaConfig& cfg,
                                FitnessMode mode = FitnessMode::equivalent_objective) {
    WaterfillDecoder decoder(link, std::move(demands), mode);
    GaResult stats = esga_evolve(decoder, cfg);
    EsgaOutput out;
    out.assignment = stats.best;
    out.allocation = decoder.decode(stats.best);
    out.stats = std::move(stats);
    return out;
}

struct OracleResult {
    std::vector<int> assignment;
    double approx_power = 0.0;
};

/// Ground truth for small instances: enumerate every assignment that gives
/// each service at least one subcarrier, decode it, and keep the minimizer of
/// the approximate objective sum mr eta. Guarded to ~5e5 assignments.
template <typename Decoder>
OracleResult exhaustive_search(Decoder& decoder) {
    const std::size_t n_sub = decoder.n_subcarriers();
    const std::size_t n_srv = decoder.n_services();
    if (n_sub < n_srv) throw validation_error("exhaustive_search: fewer subcarriers than services");
    double combos = 1.0;
    for (std::size_t n = 0; n < n_sub; ++n) {
        combos *= static_cast<double>(n_srv);
        if (combos > 6.0e5) throw validation_error("exhaustive_search: S^N too large");
    }

    std::vector<int> genes(n_sub, 0);
    std::vector<std::size_t> counts(n_srv, 0);
    OracleResult best;
    best.approx_power = std::numeric_limits<double>::infinity();
    for (;;) {
        counts.assign(n_srv, 0);
        for (int g : genes) ++counts[static_cast<std::size_t>(g)];
        if (std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; })) {
            const double approx = decoder.approx_power(genes);
            if (approx < best.approx_power) {
                best.approx_power = approx;
                best.assignment = genes;
            }
        }
        std::size_t pos = 0;
        while (pos < n_sub) {
            if (++genes[pos] < static_cast<int>(n_srv)) break;
            genes[pos++] = 0;
        }
        if (pos == n_sub) break;
    }
    return best;
}

inline OracleResult exhaustive_oracle(const LinkConfig& link, std::vector<ServiceDemand> demands) {
    WaterfillDecoder decoder(link, std::move(demands));
    return exhaustive_search(decoder);
}

} // namespace twmr
