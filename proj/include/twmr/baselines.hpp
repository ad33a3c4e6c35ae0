#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "twmr/assign.hpp"
#include "twmr/errors.hpp"
#include "twmr/rng.hpp"
#include "twmr/water_fill.hpp"

namespace twmr {

/// MA rate allocation: each service splits its demand equally across its
/// owned subcarriers in both directions.
inline RateAllocation ma_allocate(const LinkConfig& link, std::span<const int> genes,
                                  std::vector<ServiceDemand> demands) {
    EqualSplitDecoder decoder(link, std::move(demands));
    return decoder.decode(genes);
}

/// MWF rate allocation: traditional per-direction water filling. Each
/// direction fills against its own cost list (`eta_down`/`eta_up`, defaulting
/// to the joint integrated coefficient), with no coupling between directions.
inline RateAllocation mwf_allocate(const LinkConfig& link, std::span<const int> genes,
                                   std::vector<ServiceDemand> demands,
                                   std::vector<double> eta_down = {},
                                   std::vector<double> eta_up = {}) {
    WaterfillDecoder decoder(link, std::move(demands), FitnessMode::equivalent_objective,
                             std::move(eta_down), std::move(eta_up));
    return decoder.decode(genes);
}

/// MGA chromosome: the assignment genes plus one nonnegative share gene per
/// subcarrier and direction. Shares normalize per service so rates meet the
/// demand exactly.
struct MgaChromosome {
    std::vector<int> assign;
    std::vector<double> share_down;
    std::vector<double> share_up;
};

/// Rates implied by an MGA chromosome. A service whose shares sum to (near)
/// zero in a direction falls back to an equal split.
inline RateAllocation mga_decode(const LinkConfig& link, std::span<const ServiceDemand> demands,
                                 const MgaChromosome& chrom) {
    const std::size_t n_sub = link.size();
    const std::size_t n_srv = demands.size();
    RateAllocation alloc;
    alloc.rate_down.assign(n_sub, 0.0);
    alloc.rate_up.assign(n_sub, 0.0);
    alloc.owner.assign(chrom.assign.begin(), chrom.assign.end());
    alloc.active_down.assign(n_sub, 1);
    alloc.active_up.assign(n_sub, 1);
    alloc.water_down.assign(n_srv, 0.0);
    alloc.water_up.assign(n_srv, 0.0);

    std::vector<double> sum_down(n_srv, 0.0), sum_up(n_srv, 0.0);
    std::vector<std::size_t> counts(n_srv, 0);
    for (std::size_t n = 0; n < n_sub; ++n) {
        const auto s = static_cast<std::size_t>(chrom.assign[n]);
        sum_down[s] += chrom.share_down[n];
        sum_up[s] += chrom.share_up[n];
        ++counts[s];
    }
    for (std::size_t s = 0; s < n_srv; ++s)
        if (counts[s] == 0) throw consistency_error("mga decode: service owns no subcarrier");
    for (std::size_t n = 0; n < n_sub; ++n) {
        const auto s = static_cast<std::size_t>(chrom.assign[n]);
        const double k = static_cast<double>(counts[s]);
        alloc.rate_down[n] = sum_down[s] > 1e-12
                                 ? demands[s].down * chrom.share_down[n] / sum_down[s]
                                 : demands[s].down / k;
        alloc.rate_up[n] = sum_up[s] > 1e-12 ? demands[s].up * chrom.share_up[n] / sum_up[s]
                                             : demands[s].up / k;
    }
    attach_powers(alloc, link);
    return alloc;
}

struct MgaResult {
    MgaChromosome best;
    RateAllocation allocation;
    GaResult stats;
};

/// MGA: the same elitist GA evolving subcarrier assignment and rate shares
/// together. Share genes use per-gene blend crossover and Gaussian mutation
/// (stddev `share_mut_stddev`), clamped to [0, 1] before normalization.
inline MgaResult mga_optimize(const LinkConfig& link, std::vector<ServiceDemand> demands,
                              const GaConfig& cfg, double share_mut_stddev = 0.1) {
    validate_ga_config(cfg);
    const std::size_t n_sub = link.size();
    const std::size_t n_srv = demands.size();
    if (n_sub < n_srv) throw validation_error("mga: fewer subcarriers than services");

    double eta_total = 0.0;
    for (double e : link.eta) eta_total += e;

    // evaluating index, same as ESGA: sum (2^{2r1/w} + 2^{2r2/w}) eta
    std::vector<double> rate_down(n_sub), rate_up(n_sub);
    std::vector<double> sum_down(n_srv), sum_up(n_srv);
    std::vector<std::size_t> counts(n_srv);
    auto score = [&](const MgaChromosome& c) {
        std::fill(sum_down.begin(), sum_down.end(), 0.0);
        std::fill(sum_up.begin(), sum_up.end(), 0.0);
        std::fill(counts.begin(), counts.end(), std::size_t{0});
        for (std::size_t n = 0; n < n_sub; ++n) {
            const auto s = static_cast<std::size_t>(c.assign[n]);
            sum_down[s] += c.share_down[n];
            sum_up[s] += c.share_up[n];
            ++counts[s];
        }
        double eoc = 0.0;
        for (std::size_t n = 0; n < n_sub; ++n) {
            const auto s = static_cast<std::size_t>(c.assign[n]);
            const double k = static_cast<double>(counts[s]);
            const double r1 = sum_down[s] > 1e-12 ? demands[s].down * c.share_down[n] / sum_down[s]
                                                  : demands[s].down / k;
            const double r2 = sum_up[s] > 1e-12 ? demands[s].up * c.share_up[n] / sum_up[s]
                                                : demands[s].up / k;
            eoc += (std::exp2(2.0 * r1 / link.w) + std::exp2(2.0 * r2 / link.w)) * link.eta[n];
        }
        return eoc;
    };

    Rng rng(cfg.seed);
    const std::size_t pop = cfg.popsize;
    std::vector<MgaChromosome> population(pop), next(pop);
    for (auto& c : population) {
        c.assign.resize(n_sub);
        c.share_down.resize(n_sub);
        c.share_up.resize(n_sub);
        for (auto& g : c.assign) g = static_cast<int>(rng.below(n_srv));
        repair_assignment(c.assign, n_srv, rng);
        for (auto& v : c.share_down) v = rng.uniform();
        for (auto& v : c.share_up) v = rng.uniform();
    }
    for (auto& c : next) {
        c.assign.resize(n_sub);
        c.share_down.resize(n_sub);
        c.share_up.resize(n_sub);
    }

    std::vector<double> scores(pop), cumulative(pop);
    std::vector<std::size_t> order(pop);
    for (std::size_t i = 0; i < pop; ++i) scores[i] = score(population[i]);

    GaResult stats;
    MgaChromosome best;
    double best_score = std::numeric_limits<double>::infinity();
    auto record_generation = [&](std::size_t gen) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < pop; ++i)
            if (scores[i] < scores[arg]) arg = i;
        if (scores[arg] < best_score) {
            best_score = scores[arg];
            best = population[arg];
            stats.converged_generation = gen;
        }
        stats.fitness_history.push_back(1.0 / best_score);
        stats.approx_power_history.push_back(best_score - 2.0 * eta_total);
    };
    record_generation(0);

    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        for (std::size_t e = 0; e < cfg.elitism; ++e) next[e] = population[order[e]];

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
            if (rng.uniform() < cfg.crossover_prob) {
                if (n_sub >= 2) {
                    const std::size_t cut = 1 + rng.below(n_sub - 1);
                    for (std::size_t n = cut; n < n_sub; ++n) {
                        child1.assign[n] = pb.assign[n];
                        if (child2) (*child2).assign[n] = pa.assign[n];
                    }
                }
                for (std::size_t n = 0; n < n_sub; ++n) {
                    const double u1 = rng.uniform();
                    child1.share_down[n] = u1 * pa.share_down[n] + (1.0 - u1) * pb.share_down[n];
                    const double u2 = rng.uniform();
                    child1.share_up[n] = u2 * pa.share_up[n] + (1.0 - u2) * pb.share_up[n];
                    if (child2) {
                        (*child2).share_down[n] =
                            (1.0 - u1) * pa.share_down[n] + u1 * pb.share_down[n];
                        (*child2).share_up[n] = (1.0 - u2) * pa.share_up[n] + u2 * pb.share_up[n];
                    }
                }
            }
            for (std::size_t c = 0; c < (child2 ? 2u : 1u); ++c) {
                auto& child = c == 0 ? child1 : *child2;
                for (auto& g : child.assign)
                    if (rng.uniform() < cfg.mutation_prob) g = static_cast<int>(rng.below(n_srv));
                auto mutate_share = [&](double& v) {
                    if (rng.uniform() < cfg.mutation_prob) {
                        v += rng.normal(0.0, share_mut_stddev);
                        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                    }
                };
                for (auto& v : child.share_down) mutate_share(v);
                for (auto& v : child.share_up) mutate_share(v);
                repair_assignment(child.assign, n_srv, rng);
            }
            filled += child2 ? 2 : 1;
        }

        population.swap(next);
        for (std::size_t i = 0; i < pop; ++i) scores[i] = score(population[i]);
        record_generation(gen);
    }

    MgaResult result;
    result.best = std::move(best);
    result.allocation = mga_decode(link, demands, result.best);
    result.stats.best = result.best.assign;
    result.stats.best_score = best_score;
    result.stats.best_approx_power = best_score - 2.0 * eta_total;
    result.stats.fitness_history = std::move(stats.fitness_history);
    result.stats.approx_power_history = std::move(stats.approx_power_history);
    result.stats.converged_generation = stats.converged_generation;
    return result;
}

} // namespace twmr
