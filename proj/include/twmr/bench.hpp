#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "twmr/assign.hpp"
#include "twmr/baselines.hpp"
#include "twmr/channel.hpp"
#include "twmr/config.hpp"
#include "twmr/errors.hpp"
#include "twmr/relay_select.hpp"
#include "twmr/water_fill.hpp"

namespace twmr {

/// Metrics of one scheme on one trial.
struct AllocationReport {
    Scheme scheme = Scheme::mtwf;
    std::size_t trial = 0;
    std::uint64_t trial_seed = 0;   ///< stream the trial's channel and GA derive from
    double total_power = 0.0;       ///< watts, transmit power (+ circuit power if configured)
    double ee = 0.0;                ///< bits/joule, sum of both-direction demands over power
    double energy_per_bit_db = 0.0; ///< 10 log10(P / sum rates)
    double normalized_energy = std::numeric_limits<double>::quiet_NaN(); ///< P / P_MA, same trial
    std::size_t converged_generation = 0;
};

/// Worst constraint-satisfaction errors of one allocation.
struct VerificationReport {
    double max_sum_rate_rel_err = 0.0;  ///< per service per direction |sum r - R| / R
    double max_rate_roundtrip_err = 0.0; ///< rates recomputed from recovered powers
    double min_power = 0.0;
    double min_rate = 0.0;
};

/// Check an allocation against its demands: sum-rate equality per service and
/// direction, and reproduction of every per-subcarrier rate from the recovered
/// powers through the achievable-rate formulas.
inline VerificationReport verify_allocation(const RateAllocation& alloc, const LinkConfig& link,
                                            std::span<const ServiceDemand> demands) {
    VerificationReport rep;
    rep.min_power = std::numeric_limits<double>::infinity();
    rep.min_rate = std::numeric_limits<double>::infinity();
    const std::size_t n_srv = demands.size();
    std::vector<double> sum_down(n_srv, 0.0), sum_up(n_srv, 0.0);
    for (std::size_t n = 0; n < alloc.size(); ++n) {
        const auto s = static_cast<std::size_t>(alloc.owner[n]);
        sum_down[s] += alloc.rate_down[n];
        sum_up[s] += alloc.rate_up[n];
        rep.min_rate = std::min({rep.min_rate, alloc.rate_down[n], alloc.rate_up[n]});
        rep.min_power = std::min({rep.min_power, alloc.power_a[n], alloc.power_b[n], alloc.power_r[n]});

        const double r1 = alloc.rate_down[n], r2 = alloc.rate_up[n];
        if (r1 > 0.0 || r2 > 0.0) {
            const double mr = demand_term(r1, r2, link.w);
            const double alpha = alpha_star(mr, link.h2[n], link.g2[n]);
            const double r1_back = rate_down_from_power(alloc.power_a[n], alpha, link.h2[n],
                                                        link.g2[n], link.sigma2, link.w);
            const double r2_back = rate_up_from_power(alloc.power_b[n], alpha, link.h2[n],
                                                      link.g2[n], link.sigma2, link.w);
            const double e1 = std::fabs(r1_back - r1) / std::max(1.0, std::fabs(r1));
            const double e2 = std::fabs(r2_back - r2) / std::max(1.0, std::fabs(r2));
            rep.max_rate_roundtrip_err = std::max({rep.max_rate_roundtrip_err, e1, e2});
        }
    }
    for (std::size_t s = 0; s < n_srv; ++s) {
        const double e1 =
            demands[s].down > 0 ? std::fabs(sum_down[s] - demands[s].down) / demands[s].down : 0.0;
        const double e2 =
            demands[s].up > 0 ? std::fabs(sum_up[s] - demands[s].up) / demands[s].up : 0.0;
        rep.max_sum_rate_rel_err = std::max({rep.max_sum_rate_rel_err, e1, e2});
    }
    return rep;
}

/// Everything produced by one scheme on one trial that the CSV layer or tests
/// may want to inspect.
struct TrialResult {
    AllocationReport report;
    RateAllocation allocation;
    VerificationReport verification;
    GaResult ga_stats;
};

namespace detail {

inline GaConfig trial_ga_config(const Scenario& s, std::uint64_t trial_seed) {
    GaConfig cfg = s.ga;
    cfg.seed = derive_seed(trial_seed, "ga");
    return cfg;
}

} // namespace detail

/// Run one scheme on one prepared trial (channel already drawn, relays
/// selected). All schemes of a trial share the same GA seed so that identical
/// fitness landscapes (e.g. at plc = 0) evolve identically.
inline TrialResult run_scheme_on_trial(const Scenario& s, Scheme scheme, const LinkConfig& link,
                                       const std::vector<ServiceDemand>& demands,
                                       std::uint64_t trial_seed, std::size_t trial_index) {
    const GaConfig cfg = detail::trial_ga_config(s, trial_seed);
    TrialResult out;
    switch (scheme) {
        case Scheme::mtwf: {
            WaterfillDecoder decoder(link, demands);
            out.ga_stats = esga_evolve(decoder, cfg);
            out.allocation = decoder.decode(out.ga_stats.best);
            break;
        }
        case Scheme::mwf: {
            // per-direction traditional water filling; cost lists default to
            // the joint integrated coefficient (see module docs)
            WaterfillDecoder decoder(link, demands, FitnessMode::equivalent_objective, link.eta,
                                     link.eta);
            out.ga_stats = esga_evolve(decoder, cfg);
            out.allocation = decoder.decode(out.ga_stats.best);
            break;
        }
        case Scheme::ma: {
            EqualSplitDecoder decoder(link, demands);
            out.ga_stats = esga_evolve(decoder, cfg);
            out.allocation = decoder.decode(out.ga_stats.best);
            break;
        }
        case Scheme::mga: {
            GaConfig mga_cfg = cfg;
            if (s.mga_generations > 0) mga_cfg.generations = s.mga_generations;
            MgaResult res = mga_optimize(link, demands, mga_cfg);
            out.ga_stats = std::move(res.stats);
            out.allocation = std::move(res.allocation);
            break;
        }
    }

    out.verification = verify_allocation(out.allocation, link, demands);
    if (out.verification.max_sum_rate_rel_err > 1e-6)
        throw consistency_error("trial " + std::to_string(trial_index) + " scheme " +
                                to_string(scheme) + ": sum-rate constraint violated by " +
                                std::to_string(out.verification.max_sum_rate_rel_err));

    double total_rate = 0.0;
    for (const auto& d : demands) total_rate += d.down + d.up;
    const double power = total_power(out.allocation) + s.circuit_power;

    out.report.scheme = scheme;
    out.report.trial = trial_index;
    out.report.trial_seed = trial_seed;
    out.report.total_power = power;
    out.report.ee = total_rate / power;
    out.report.energy_per_bit_db = 10.0 * std::log10(power / total_rate);
    out.report.converged_generation = out.ga_stats.converged_generation;
    return out;
}

/// One full trial: draw the channel, select relays by the integrated
/// noise-channel criterion, run every requested scheme.
inline std::vector<TrialResult> run_trial(const Scenario& s,
                                          const std::vector<ServiceDemand>& demands,
                                          std::size_t trial_index) {
    const std::uint64_t trial_seed = derive_seed(s.seed, "trial", trial_index);
    const ChannelRealization chan =
        generate_channel(s.n_subcarriers, s.n_relays, s.plc, s.noise_power, s.bandwidth,
                         derive_seed(trial_seed, "chan"), s.base_dist);
    const RelayChoice choice = select_relays(chan, SelectionCriterion::approximate);
    const LinkConfig link = make_link(choice, chan);

    std::vector<TrialResult> results;
    results.reserve(s.schemes.size());
    for (Scheme scheme : kAllSchemes) {
        if (std::find(s.schemes.begin(), s.schemes.end(), scheme) == s.schemes.end()) continue;
        results.push_back(run_scheme_on_trial(s, scheme, link, demands, trial_seed, trial_index));
    }

    // normalized energy is defined against MA on the same trial
    double p_ma = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : results)
        if (r.report.scheme == Scheme::ma) p_ma = r.report.total_power;
    for (auto& r : results) r.report.normalized_energy = r.report.total_power / p_ma;
    return results;
}

/// All trials of a scenario, optionally spread over worker threads. Trials
/// derive independent streams from (seed, trial index), so the result is
/// identical regardless of the thread count; reports come back in trial-major,
/// scheme-canonical order.
inline std::vector<TrialResult> run_scenario(const Scenario& s, std::size_t n_threads = 1) {
    validate_scenario(s);
    const std::vector<ServiceDemand> demands = resolve_demands(s);
    std::vector<std::vector<TrialResult>> per_trial(s.trials);

    if (n_threads <= 1 || s.trials == 1) {
        for (std::size_t t = 0; t < s.trials; ++t) per_trial[t] = run_trial(s, demands, t);
    } else {
        std::atomic<std::size_t> cursor{0};
        std::atomic<bool> failed{false};
        std::string first_error;
        std::mutex error_mutex;
        auto worker = [&]() {
            for (;;) {
                const std::size_t t = cursor.fetch_add(1);
                if (t >= s.trials || failed.load()) return;
                try {
                    per_trial[t] = run_trial(s, demands, t);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) first_error = e.what();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        const std::size_t n = std::min<std::size_t>(n_threads, s.trials);
        pool.reserve(n);
        for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (failed.load()) throw consistency_error(first_error);
    }

    std::vector<TrialResult> flat;
    flat.reserve(s.trials * s.schemes.size());
    for (auto& trial : per_trial)
        for (auto& r : trial) flat.push_back(std::move(r));
    return flat;
}

namespace detail {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd ms;
    if (xs.empty()) return ms;
    for (double x : xs) ms.mean += x;
    ms.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - ms.mean) * (x - ms.mean);
        ms.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return ms;
}

} // namespace detail

/// Trial-level CSV: the effective config echoed as `# key = value` comment
/// lines, then one row per (trial, scheme) plus mean/std aggregate rows.
inline void write_trial_csv(std::ostream& out, const Scenario& s,
                            const std::vector<TrialResult>& results) {
    const std::string hash = scenario_hash(s);
    std::istringstream cfg(serialize_scenario(s));
    std::string line;
    while (std::getline(cfg, line)) out << "# " << line << "\n";
    out << "scenario_hash,trial,scheme,total_power_w,ee_bits_per_joule,energy_per_bit_db,"
           "normalized_energy,converged_generation\n";
    auto fmt = detail::format_double;
    for (const auto& r : results) {
        out << hash << ',' << r.report.trial << ',' << to_string(r.report.scheme) << ','
            << fmt(r.report.total_power) << ',' << fmt(r.report.ee) << ','
            << fmt(r.report.energy_per_bit_db) << ','
            << (std::isnan(r.report.normalized_energy) ? std::string()
                                                       : fmt(r.report.normalized_energy))
            << ',' << r.report.converged_generation << "\n";
    }
    for (Scheme scheme : kAllSchemes) {
        std::vector<double> power, ee, epb, norm, conv;
        for (const auto& r : results) {
            if (r.report.scheme != scheme) continue;
            power.push_back(r.report.total_power);
            ee.push_back(r.report.ee);
            epb.push_back(r.report.energy_per_bit_db);
            if (!std::isnan(r.report.normalized_energy))
                norm.push_back(r.report.normalized_energy);
            conv.push_back(static_cast<double>(r.report.converged_generation));
        }
        if (power.empty()) continue;
        auto row = [&](const char* tag, auto pick) {
            out << hash << ',' << tag << ',' << to_string(scheme) << ','
                << fmt(pick(detail::mean_std(power))) << ',' << fmt(pick(detail::mean_std(ee)))
                << ',' << fmt(pick(detail::mean_std(epb))) << ','
                << (norm.empty() ? std::string() : fmt(pick(detail::mean_std(norm)))) << ','
                << fmt(pick(detail::mean_std(conv))) << "\n";
        };
        row("mean", [](detail::MeanStd ms) { return ms.mean; });
        row("std", [](detail::MeanStd ms) { return ms.std; });
    }
}

inline std::string trial_csv_string(const Scenario& s, const std::vector<TrialResult>& results) {
    std::ostringstream out;
    write_trial_csv(out, s, results);
    return out.str();
}

enum class SweepParam {
    rate,
    rate_ratio_direction,
    rate_ratio_service,
    plc,
    relays,
    service_count,
    ga_generations,
    rate_iterations
};

inline std::string to_string(SweepParam p) {
    switch (p) {
        case SweepParam::rate: return "rate";
        case SweepParam::rate_ratio_direction: return "rate_ratio_direction";
        case SweepParam::rate_ratio_service: return "rate_ratio_service";
        case SweepParam::plc: return "plc";
        case SweepParam::relays: return "relays";
        case SweepParam::service_count: return "service_count";
        case SweepParam::ga_generations: return "ga_generations";
        case SweepParam::rate_iterations: return "rate_iterations";
    }
    return "?";
}

inline SweepParam sweep_param_from_string(const std::string& s) {
    for (SweepParam p :
         {SweepParam::rate, SweepParam::rate_ratio_direction, SweepParam::rate_ratio_service,
          SweepParam::plc, SweepParam::relays, SweepParam::service_count,
          SweepParam::ga_generations, SweepParam::rate_iterations})
        if (to_string(p) == s) return p;
    throw validation_error("unknown sweep parameter '" + s + "'");
}

/// Scenario for one grid point. The base seed is left untouched so every grid
/// point reuses the same per-trial random streams (common random numbers).
inline Scenario apply_sweep_value(const Scenario& base, SweepParam param, double value) {
    Scenario s = base;
    const std::vector<ServiceDemand> demands = resolve_demands(base);
    auto as_direct = [&](std::size_t i) {
        Scenario::ServiceConfig svc;
        svc.direct = true;
        svc.rate_down = demands[i].down;
        svc.rate_up = demands[i].up;
        return svc;
    };
    switch (param) {
        case SweepParam::rate:
            for (std::size_t i = 0; i < s.services.size(); ++i) {
                auto svc = as_direct(i);
                svc.rate_down = svc.rate_up = value;
                s.services[i] = svc;
            }
            break;
        case SweepParam::rate_ratio_direction:
            if (!(value > 0 && value < 1))
                throw validation_error("rate_ratio_direction values must lie in (0,1)");
            for (std::size_t i = 0; i < s.services.size(); ++i) {
                auto svc = as_direct(i);
                const double total = demands[i].down + demands[i].up;
                svc.rate_down = value * total;
                svc.rate_up = (1.0 - value) * total;
                s.services[i] = svc;
            }
            break;
        case SweepParam::rate_ratio_service: {
            if (s.services.size() < 2)
                throw validation_error("rate_ratio_service sweep needs at least two services");
            if (!(value > 0 && value < 1))
                throw validation_error("rate_ratio_service values must lie in (0,1)");
            double total_down = 0.0, total_up = 0.0;
            for (const auto& d : demands) {
                total_down += d.down;
                total_up += d.up;
            }
            const double rest = static_cast<double>(s.services.size() - 1);
            for (std::size_t i = 0; i < s.services.size(); ++i) {
                auto svc = as_direct(i);
                const double f = i == 0 ? value : (1.0 - value) / rest;
                svc.rate_down = f * total_down;
                svc.rate_up = f * total_up;
                s.services[i] = svc;
            }
            break;
        }
        case SweepParam::plc:
            s.plc = value;
            break;
        case SweepParam::relays:
            s.n_relays = static_cast<std::size_t>(value);
            break;
        case SweepParam::service_count: {
            const auto count = static_cast<std::size_t>(value);
            if (count < 1) throw validation_error("service_count must be >= 1");
            double total_down = 0.0, total_up = 0.0;
            for (const auto& d : demands) {
                total_down += d.down;
                total_up += d.up;
            }
            s.services.clear();
            for (std::size_t i = 0; i < count; ++i) {
                Scenario::ServiceConfig svc;
                svc.direct = true;
                svc.rate_down = total_down / static_cast<double>(count);
                svc.rate_up = total_up / static_cast<double>(count);
                s.services.push_back(svc);
            }
            break;
        }
        case SweepParam::ga_generations:
            s.ga.generations = static_cast<std::size_t>(value);
            break;
        case SweepParam::rate_iterations:
            s.mga_generations = static_cast<std::size_t>(value);
            break;
    }
    validate_scenario(s);
    return s;
}

struct SweepRow {
    double value = 0.0;
    Scheme scheme = Scheme::mtwf;
    std::string metric;
    double mean = 0.0;
    double std = 0.0;
};

/// One run_scenario per grid point, aggregated per scheme and metric.
inline std::vector<SweepRow> sweep(const Scenario& base, SweepParam param,
                                   const std::vector<double>& grid, std::size_t n_threads = 1) {
    if (grid.empty()) throw validation_error("sweep: empty grid");
    std::vector<SweepRow> rows;
    for (double value : grid) {
        const Scenario s = apply_sweep_value(base, param, value);
        const auto results = run_scenario(s, n_threads);
        for (Scheme scheme : kAllSchemes) {
            std::vector<double> power, ee, epb, norm, conv;
            for (const auto& r : results) {
                if (r.report.scheme != scheme) continue;
                power.push_back(r.report.total_power);
                ee.push_back(r.report.ee);
                epb.push_back(r.report.energy_per_bit_db);
                if (!std::isnan(r.report.normalized_energy))
                    norm.push_back(r.report.normalized_energy);
                conv.push_back(static_cast<double>(r.report.converged_generation));
            }
            if (power.empty()) continue;
            auto push = [&](const char* metric, const std::vector<double>& xs) {
                if (xs.empty()) return;
                const auto ms = detail::mean_std(xs);
                rows.push_back({value, scheme, metric, ms.mean, ms.std});
            };
            push("total_power_w", power);
            push("ee_bits_per_joule", ee);
            push("energy_per_bit_db", epb);
            push("normalized_energy", norm);
            push("converged_generation", conv);
        }
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const Scenario& base, SweepParam param,
                            const std::vector<SweepRow>& rows) {
    std::istringstream cfg(serialize_scenario(base));
    std::string line;
    while (std::getline(cfg, line)) out << "# " << line << "\n";
    out << "sweep_param,value,scheme,metric,mean,std\n";
    for (const auto& r : rows)
        out << to_string(param) << ',' << detail::format_double(r.value) << ','
            << to_string(r.scheme) << ',' << r.metric << ',' << detail::format_double(r.mean) << ','
            << detail::format_double(r.std) << "\n";
}

} // namespace twmr
