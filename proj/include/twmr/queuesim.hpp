#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <limits>
#include <ostream>
#include <vector>

#include "twmr/errors.hpp"
#include "twmr/rng.hpp"
#include "twmr/traffic.hpp"

namespace twmr {

/// Steady-state averages of one simulated queue. Everything is measured after
/// the first 10% of packets are discarded as warm-up; `packets_served` counts
/// only the measured packets.
struct QueueTrace {
    std::uint64_t packets_served = 0;
    double mean_delay = 0.0;        ///< seconds, sojourn time (wait + service)
    double delay_variance = 0.0;    ///< reported, never asserted on
    double mean_delay_stderr = 0.0; ///< batch-means estimate over 20 batches
    double mean_queue_length = 0.0; ///< time-average number in system
    double sim_time = 0.0;          ///< seconds simulated
};

namespace detail {

/// Generic single-server FIFO queue with exponential service, fed by an
/// arrival-time generator. Measurement starts when the warm-up packet departs.
template <typename NextArrival>
QueueTrace run_single_server(NextArrival&& next_arrival, double service_rate,
                             std::uint64_t horizon, Rng& rng) {
    const std::uint64_t warmup = horizon / 10;
    const double inf = std::numeric_limits<double>::infinity();

    std::deque<double> in_system; // arrival times of packets currently in the system
    double next_arr = next_arrival(rng);
    double next_dep = inf;
    double now = 0.0;

    std::uint64_t served = 0;
    double measure_start = 0.0;
    bool measuring = warmup == 0;
    double delay_sum = 0.0, delay_sumsq = 0.0;
    double area = 0.0; // integral of system size over the measurement window

    constexpr int n_batches = 20;
    std::vector<double> batch_sum(n_batches, 0.0);
    std::vector<std::uint64_t> batch_count(n_batches, 0);
    const std::uint64_t measured_total = horizon - warmup;
    const std::uint64_t batch_size = measured_total / n_batches > 0 ? measured_total / n_batches : 1;

    while (served < horizon) {
        if (next_arr <= next_dep) {
            if (measuring) area += static_cast<double>(in_system.size()) * (next_arr - now);
            now = next_arr;
            in_system.push_back(now);
            if (in_system.size() == 1) next_dep = now + rng.exponential(service_rate);
            next_arr = next_arrival(rng);
        } else {
            if (measuring) area += static_cast<double>(in_system.size()) * (next_dep - now);
            now = next_dep;
            const double arrived_at = in_system.front();
            in_system.pop_front();
            ++served;
            if (served > warmup) {
                const double d = now - arrived_at;
                delay_sum += d;
                delay_sumsq += d * d;
                const std::uint64_t k = (served - warmup - 1) / batch_size;
                const std::uint64_t b = k < static_cast<std::uint64_t>(n_batches) ? k : n_batches - 1;
                batch_sum[b] += d;
                ++batch_count[b];
            }
            if (served == warmup) {
                measuring = true;
                measure_start = now;
            }
            next_dep = in_system.empty() ? inf : now + rng.exponential(service_rate);
        }
    }

    QueueTrace trace;
    trace.packets_served = measured_total;
    trace.sim_time = now;
    trace.mean_delay = delay_sum / static_cast<double>(measured_total);
    trace.delay_variance =
        delay_sumsq / static_cast<double>(measured_total) - trace.mean_delay * trace.mean_delay;
    const double window = now - measure_start;
    trace.mean_queue_length = window > 0 ? area / window : 0.0;

    double se = 0.0;
    int used = 0;
    for (int b = 0; b < n_batches; ++b) {
        if (batch_count[b] == 0) continue;
        const double m = batch_sum[b] / static_cast<double>(batch_count[b]);
        se += (m - trace.mean_delay) * (m - trace.mean_delay);
        ++used;
    }
    if (used > 1) trace.mean_delay_stderr = std::sqrt(se / (used - 1) / used);
    return trace;
}

} // namespace detail

/// Event-driven simulation of one direction's on/off bursty arrivals into a
/// single exponential server at `service_rate` packets/s.
inline QueueTrace simulate_bursty_queue(const DirectionTraffic& traffic, double service_rate,
                                        std::uint64_t horizon, std::uint64_t seed) {
    validate_direction(traffic, "simulate_bursty_queue");
    if (horizon < 1) throw validation_error("simulate_bursty_queue: horizon must be >= 1");
    const double lambda_star = equivalent_arrival_rate(
        traffic.in_burst_packet_rate, traffic.mean_burst_duration, traffic.burst_arrival_rate);
    if (lambda_star <= 0.0)
        throw validation_error("simulate_bursty_queue: no traffic (lambda* = 0)");
    if (service_rate <= lambda_star)
        throw instability_error("simulate_bursty_queue: service rate must exceed lambda*");

    struct BurstState {
        double now = 0.0;
        double burst_end = -1.0; // < 0 means currently between bursts
    };
    BurstState st;
    const double burst_rate = traffic.burst_arrival_rate;
    const double end_rate = 1.0 / traffic.mean_burst_duration;
    const double packet_rate = traffic.in_burst_packet_rate;

    auto next_arrival = [st, burst_rate, end_rate, packet_rate](Rng& rng) mutable {
        for (;;) {
            if (st.burst_end < 0.0) {
                st.now += rng.exponential(burst_rate);
                st.burst_end = st.now + rng.exponential(end_rate);
            }
            const double gap = rng.exponential(packet_rate);
            if (st.now + gap < st.burst_end) {
                st.now += gap;
                return st.now;
            }
            st.now = st.burst_end;
            st.burst_end = -1.0;
        }
    };

    Rng rng(seed);
    return detail::run_single_server(next_arrival, service_rate, horizon, rng);
}

/// Homogeneous Poisson arrivals at `arrival_rate` into the same server model.
inline QueueTrace simulate_poisson_queue(double arrival_rate, double service_rate,
                                         std::uint64_t horizon, std::uint64_t seed) {
    if (!(std::isfinite(arrival_rate)) || arrival_rate <= 0.0)
        throw validation_error("simulate_poisson_queue: arrival rate must be positive");
    if (horizon < 1) throw validation_error("simulate_poisson_queue: horizon must be >= 1");
    if (service_rate <= arrival_rate)
        throw instability_error("simulate_poisson_queue: service rate must exceed arrival rate");

    double now = 0.0;
    auto next_arrival = [now, arrival_rate](Rng& rng) mutable {
        now += rng.exponential(arrival_rate);
        return now;
    };
    Rng rng(seed);
    return detail::run_single_server(next_arrival, service_rate, horizon, rng);
}

/// One bursty-vs-homogeneous comparison point.
struct QueueValidationCase {
    DirectionTraffic traffic; ///< on/off arrival parameters (packet_length unused)
    double service_rate;      ///< packets/s
    double burstiness;        ///< lambda / lambda*, for labeling
};

/// Parameter sets spanning burstiness ratios 1 (degenerate always-on burst)
/// through 8, all with lambda* = 5 packets/s and comfortably stable servers.
inline std::vector<QueueValidationCase> default_queue_validation_cases() {
    auto make = [](double ratio, double burst_duration, double mu) {
        QueueValidationCase c{};
        c.traffic.mean_packet_length = 1.0;
        c.traffic.in_burst_packet_rate = 5.0 * ratio;
        c.traffic.mean_burst_duration = burst_duration;
        // off period 1/Lambda = T (ratio - 1) keeps lambda* at exactly 5
        c.traffic.burst_arrival_rate = ratio > 1.0 ? 1.0 / (burst_duration * (ratio - 1.0)) : 1e6;
        c.service_rate = mu;
        c.burstiness = ratio;
        return c;
    };
    return {
        make(1.0, 1e6, 15.0), // always-on: homogeneous case in disguise
        make(1.5, 2.0, 15.0),
        make(2.0, 2.0, 15.0),
        make(2.0, 2.0, 10.0),
        make(4.0, 1.0, 15.0),
        make(8.0, 1.0, 20.0),
    };
}

/// Control group: the same burstiness ratios with on/off cycles much shorter
/// than one service time. In this regime the modulation averages out and the
/// homogeneous-lambda* replacement genuinely predicts the mean delay, which
/// bounds how much of any observed discrepancy is simulator error.
inline std::vector<QueueValidationCase> fast_modulation_queue_cases() {
    auto make = [](double ratio, double burst_duration, double mu) {
        QueueValidationCase c{};
        c.traffic.mean_packet_length = 1.0;
        c.traffic.in_burst_packet_rate = 5.0 * ratio;
        c.traffic.mean_burst_duration = burst_duration;
        c.traffic.burst_arrival_rate = 1.0 / (burst_duration * (ratio - 1.0));
        c.service_rate = mu;
        c.burstiness = ratio;
        return c;
    };
    return {
        make(2.0, 0.002, 15.0),
        make(8.0, 0.0005, 20.0),
    };
}

struct QueueValidationRow {
    QueueValidationCase config;
    double lambda_star = 0.0;
    std::uint64_t horizon = 0;
    std::size_t seeds = 0;
    double delay_bursty = 0.0;  ///< mean over seeds
    double delay_poisson = 0.0; ///< mean over seeds
    double delay_closed_form = 0.0;
    double relerr_bursty_mm1 = 0.0;
    double relerr_poisson_mm1 = 0.0;
    double relerr_bursty_poisson = 0.0;
    double max_seed_relerr_bursty_mm1 = 0.0; ///< worst single seed vs closed form
    double max_seed_relerr_poisson_mm1 = 0.0;
    double max_seed_relerr_bursty_poisson = 0.0;
    double delay_var_bursty = 0.0;
    double delay_var_poisson = 0.0;
    double qlen_bursty = 0.0;
    double qlen_poisson = 0.0;
};

/// Run one comparison point across seeds. Relative errors are reported both
/// for seed-averaged delays and for the worst individual seed.
inline QueueValidationRow run_queue_validation(const QueueValidationCase& c, std::uint64_t horizon,
                                               std::size_t n_seeds, std::uint64_t base_seed) {
    QueueValidationRow row;
    row.config = c;
    row.horizon = horizon;
    row.seeds = n_seeds;
    row.lambda_star =
        equivalent_arrival_rate(c.traffic.in_burst_packet_rate, c.traffic.mean_burst_duration,
                                c.traffic.burst_arrival_rate);
    row.delay_closed_form = 1.0 / (c.service_rate - row.lambda_star);
    for (std::size_t i = 0; i < n_seeds; ++i) {
        const std::uint64_t sb = derive_seed(base_seed, "bursty", i);
        const std::uint64_t sp = derive_seed(base_seed, "poisson", i);
        const QueueTrace bursty = simulate_bursty_queue(c.traffic, c.service_rate, horizon, sb);
        const QueueTrace poisson =
            simulate_poisson_queue(row.lambda_star, c.service_rate, horizon, sp);
        row.delay_bursty += bursty.mean_delay;
        row.delay_poisson += poisson.mean_delay;
        row.delay_var_bursty += bursty.delay_variance;
        row.delay_var_poisson += poisson.delay_variance;
        row.qlen_bursty += bursty.mean_queue_length;
        row.qlen_poisson += poisson.mean_queue_length;
        auto rel = [](double a, double b) { return std::fabs(a - b) / b; };
        row.max_seed_relerr_bursty_mm1 =
            std::max(row.max_seed_relerr_bursty_mm1, rel(bursty.mean_delay, row.delay_closed_form));
        row.max_seed_relerr_poisson_mm1 = std::max(row.max_seed_relerr_poisson_mm1,
                                                   rel(poisson.mean_delay, row.delay_closed_form));
        row.max_seed_relerr_bursty_poisson = std::max(
            row.max_seed_relerr_bursty_poisson, rel(bursty.mean_delay, poisson.mean_delay));
    }
    const auto k = static_cast<double>(n_seeds);
    row.delay_bursty /= k;
    row.delay_poisson /= k;
    row.delay_var_bursty /= k;
    row.delay_var_poisson /= k;
    row.qlen_bursty /= k;
    row.qlen_poisson /= k;
    row.relerr_bursty_mm1 =
        std::fabs(row.delay_bursty - row.delay_closed_form) / row.delay_closed_form;
    row.relerr_poisson_mm1 =
        std::fabs(row.delay_poisson - row.delay_closed_form) / row.delay_closed_form;
    row.relerr_bursty_poisson = std::fabs(row.delay_bursty - row.delay_poisson) / row.delay_poisson;
    return row;
}

inline void write_queue_validation_csv(std::ostream& out,
                                       const std::vector<QueueValidationRow>& rows) {
    out << "burstiness,packet_rate,burst_duration_s,burst_rate,lambda_star,mu,horizon,seeds,"
           "delay_bursty,delay_poisson,delay_mm1,relerr_bursty_mm1,relerr_poisson_mm1,"
           "relerr_bursty_poisson,delay_var_bursty,delay_var_poisson,qlen_bursty,qlen_poisson\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "%g,%g,%g,%g,%.17g,%g,%llu,%zu,%.17g,%.17g,%.17g,%.6g,%.6g,%.6g,%.17g,%.17g,"
                      "%.17g,%.17g\n",
                      r.config.burstiness, r.config.traffic.in_burst_packet_rate,
                      r.config.traffic.mean_burst_duration, r.config.traffic.burst_arrival_rate,
                      r.lambda_star, r.config.service_rate,
                      static_cast<unsigned long long>(r.horizon), r.seeds, r.delay_bursty,
                      r.delay_poisson, r.delay_closed_form, r.relerr_bursty_mm1,
                      r.relerr_poisson_mm1, r.relerr_bursty_poisson, r.delay_var_bursty,
                      r.delay_var_poisson, r.qlen_bursty, r.qlen_poisson);
        out << buf;
    }
}

} // namespace twmr
