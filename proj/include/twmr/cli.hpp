#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "twmr/assign.hpp"
#include "twmr/bench.hpp"
#include "twmr/channel.hpp"
#include "twmr/config.hpp"
#include "twmr/errors.hpp"
#include "twmr/queuesim.hpp"

namespace twmr {

namespace detail {

inline std::size_t default_thread_count() {
    if (const char* env = std::getenv("TWMR_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    }
    return 1;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open output file '" + path + "'");
    out << text;
}

inline void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
}

} // namespace detail

/// Entry point behind the `twmr` binary. Returns 0 on success, 1 on any
/// validation problem (bad flags, bad config, infeasible scenario), 2 on an
/// internal-consistency failure.
inline int parse_and_dispatch(int argc, const char* const* argv) {
    CLI::App app{"Monte Carlo benchmark for energy-efficient two-way multi-relay OFDM allocation"};
    app.require_subcommand(1);

    std::string config_path, out_path, param_name, grid_text, scheme_text;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool verbose = false;
    std::size_t threads = detail::default_thread_count();
    app.add_flag("-v,--verbose", verbose, "log progress to stderr");

    auto* run = app.add_subcommand("run", "run one scenario and write trial-level CSV");
    run->add_option("--config", config_path, "scenario config file")->required();
    run->add_option("--out", out_path, "output CSV path (default: stdout)");
    run->add_option("--set", overrides, "override config keys, key=value");
    run->add_option("--scheme", scheme_text, "scheme set: mtwf,mwf,ma,mga or all");
    run->add_option("--seed", seed, "override the scenario seed")->each([&](const std::string&) {
        seed_given = true;
    });
    run->add_option("--threads", threads, "worker threads (default: $TWMR_THREADS or 1)");

    auto* sw = app.add_subcommand("sweep", "run a parameter sweep and write long-format CSV");
    sw->add_option("--config", config_path, "base scenario config file")->required();
    sw->add_option("--param", param_name, "rate|rate_ratio_direction|rate_ratio_service|plc|relays|service_count|ga_generations|rate_iterations")
        ->required();
    sw->add_option("--grid", grid_text, "comma-separated grid values")->required();
    sw->add_option("--out", out_path, "output CSV path (default: stdout)");
    sw->add_option("--set", overrides, "override config keys, key=value");
    sw->add_option("--scheme", scheme_text, "scheme set: mtwf,mwf,ma,mga or all");
    sw->add_option("--seed", seed, "override the scenario seed")->each([&](const std::string&) {
        seed_given = true;
    });
    sw->add_option("--threads", threads, "worker threads (default: $TWMR_THREADS or 1)");

    std::uint64_t horizon = 1000000;
    std::size_t n_seeds = 10;
    std::uint64_t queue_seed = 1;
    auto* vq = app.add_subcommand(
        "validate-queue", "compare bursty and equivalent homogeneous queues against the closed form");
    vq->add_option("--horizon", horizon, "packets per simulation (default 1e6)");
    vq->add_option("--seeds", n_seeds, "seeds per parameter set (default 10)");
    vq->add_option("--seed", queue_seed, "base seed (default 1)");
    vq->add_option("--out", out_path, "output CSV path (default: stdout)");

    std::size_t oc_n = 8, oc_s = 2, oc_m = 4, oc_trials = 50;
    double oc_plc = 2.0, oc_rate = 0.0;
    std::uint64_t oc_seed = 1;
    auto* oc = app.add_subcommand("oracle-check",
                                  "compare ESGA assignments against exhaustive enumeration");
    oc->add_option("--n", oc_n, "subcarriers (default 8)");
    oc->add_option("--s", oc_s, "services (default 2)");
    oc->add_option("--m", oc_m, "relays (default 4)");
    oc->add_option("--plc", oc_plc, "channel difference exponent (default 2)");
    oc->add_option("--rate", oc_rate, "per-service per-direction demand, bits/s (default 2W/S)");
    oc->add_option("--trials", oc_trials, "instances to check (default 50)");
    oc->add_option("--seed", oc_seed, "base seed (default 1)");
    oc->add_option("--out", out_path, "per-trial CSV path (optional)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (seed_given) overrides.push_back("seed=" + std::to_string(seed));
        if (!scheme_text.empty()) overrides.push_back("schemes=" + scheme_text);

        if (run->parsed()) {
            const Scenario s = load_scenario(config_path, overrides);
            if (verbose)
                std::cerr << "run: scenario " << scenario_hash(s) << ", " << s.trials
                          << " trials, " << s.schemes.size() << " schemes, " << threads
                          << " thread(s)\n";
            const auto results = run_scenario(s, threads);
            detail::emit(out_path, trial_csv_string(s, results));
            if (verbose) std::cerr << "run: wrote " << results.size() << " scheme-trials\n";
            return 0;
        }

        if (sw->parsed()) {
            const Scenario base = load_scenario(config_path, overrides);
            const SweepParam param = sweep_param_from_string(param_name);
            std::vector<double> grid;
            std::istringstream gs(grid_text);
            std::string tok;
            while (std::getline(gs, tok, ','))
                if (!tok.empty()) grid.push_back(detail::parse_double("--grid", tok));
            if (verbose)
                std::cerr << "sweep: " << to_string(param) << " over " << grid.size()
                          << " grid points, " << base.trials << " trials each, " << threads
                          << " thread(s)\n";
            const auto rows = sweep(base, param, grid, threads);
            std::ostringstream text;
            write_sweep_csv(text, base, param, rows);
            detail::emit(out_path, text.str());
            return 0;
        }

        if (vq->parsed()) {
            std::vector<QueueValidationRow> rows;
            for (const auto& c : default_queue_validation_cases())
                rows.push_back(run_queue_validation(c, horizon, n_seeds, queue_seed));
            for (const auto& c : fast_modulation_queue_cases())
                rows.push_back(run_queue_validation(c, horizon, n_seeds, queue_seed));
            std::ostringstream text;
            write_queue_validation_csv(text, rows);
            detail::emit(out_path, text.str());
            return 0;
        }

        if (oc->parsed()) {
            if (oc_n < oc_s) throw validation_error("infeasible: fewer subcarriers than services");
            const double bandwidth = static_cast<double>(oc_n); // w = 1 Hz per subcarrier
            const double rate = oc_rate > 0 ? oc_rate : 2.0 * bandwidth / static_cast<double>(oc_s);
            std::vector<ServiceDemand> demands(oc_s, ServiceDemand{rate, rate});

            std::ostringstream csv;
            csv << "trial,esga_approx_power,oracle_approx_power,matched\n";
            std::size_t matched = 0;
            for (std::size_t t = 0; t < oc_trials; ++t) {
                const std::uint64_t trial_seed = derive_seed(oc_seed, "trial", t);
                const auto chan = generate_channel(oc_n, oc_m, oc_plc, 1.0, bandwidth,
                                                   derive_seed(trial_seed, "chan"));
                const LinkConfig link = make_link(select_relays(chan), chan);
                const OracleResult oracle = exhaustive_oracle(link, demands);
                GaConfig cfg;
                cfg.seed = derive_seed(trial_seed, "ga");
                const EsgaOutput ga = esga_optimize(link, demands, cfg);
                const bool hit =
                    ga.stats.best_approx_power <= oracle.approx_power * (1.0 + 1e-9);
                matched += hit ? 1 : 0;
                char buf[160];
                std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d\n", t,
                              ga.stats.best_approx_power, oracle.approx_power, hit ? 1 : 0);
                csv << buf;
            }
            if (!out_path.empty()) detail::write_text_file(out_path, csv.str());
            std::cout << "oracle-check: ESGA matched the exhaustive optimum in " << matched << "/"
                      << oc_trials << " trials ("
                      << 100.0 * static_cast<double>(matched) / static_cast<double>(oc_trials)
                      << "%)\n";
            return 0;
        }
    } catch (const consistency_error& e) {
        std::cerr << "internal consistency failure: " << e.what() << "\n";
        return 2;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace twmr
