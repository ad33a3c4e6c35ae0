#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "twmr/errors.hpp"

namespace twmr {

/// Canonical units throughout the library: bits, seconds, Hz, watts.
/// All rates are bits/second unless a name says packets.

/// One direction of a bursty traffic source: bursts start as a Poisson
/// process, last an exponentially distributed duration, and carry Poisson
/// packet arrivals while active.
struct DirectionTraffic {
    double burst_arrival_rate = 0.0;  ///< bursts/second (Lambda)
    double mean_burst_duration = 0.0; ///< seconds (T)
    double in_burst_packet_rate = 0.0; ///< packets/second while a burst is on (lambda)
    double mean_packet_length = 0.0;  ///< bits (L)

    friend bool operator==(const DirectionTraffic&, const DirectionTraffic&) = default;
};

struct BurstyServiceSpec {
    std::size_t service_id = 0;
    double max_delay = 0.0; ///< seconds, shared by both directions
    DirectionTraffic down;  ///< base station -> user
    DirectionTraffic up;    ///< user -> base station

    friend bool operator==(const BurstyServiceSpec&, const BurstyServiceSpec&) = default;
};

/// Per-service sum-rate constraints implied by the max-delay QoS.
struct RateRequirement {
    std::size_t service_id = 0;
    double rate_down = 0.0;            ///< bits/s
    double rate_up = 0.0;              ///< bits/s
    double equivalent_rate_down = 0.0; ///< packets/s (lambda* downlink)
    double equivalent_rate_up = 0.0;   ///< packets/s (lambda* uplink)
};

inline void validate_direction(const DirectionTraffic& d, const std::string& where) {
    auto bad = [&](const char* field) {
        throw validation_error(where + ": " + field + " out of domain");
    };
    if (!(std::isfinite(d.burst_arrival_rate) && d.burst_arrival_rate > 0)) bad("burst_arrival_rate");
    if (!(std::isfinite(d.mean_burst_duration) && d.mean_burst_duration > 0)) bad("mean_burst_duration");
    if (!(std::isfinite(d.in_burst_packet_rate) && d.in_burst_packet_rate >= 0)) bad("in_burst_packet_rate");
    if (!(std::isfinite(d.mean_packet_length) && d.mean_packet_length > 0)) bad("mean_packet_length");
}

inline void validate_service(const BurstyServiceSpec& s) {
    const std::string where = "service " + std::to_string(s.service_id);
    if (!(std::isfinite(s.max_delay) && s.max_delay > 0))
        throw validation_error(where + ": max_delay out of domain");
    validate_direction(s.down, where + " downlink");
    validate_direction(s.up, where + " uplink");
}

/// Homogeneous Poisson rate equivalent (in mean delay) to the on/off bursty
/// arrival process: lambda* = lambda T / (T + 1/Lambda).
inline double equivalent_arrival_rate(double packet_rate, double mean_burst_duration,
                                      double burst_arrival_rate) {
    if (!(std::isfinite(mean_burst_duration) && mean_burst_duration > 0))
        throw validation_error("equivalent_arrival_rate: mean_burst_duration out of domain");
    if (!(std::isfinite(burst_arrival_rate) && burst_arrival_rate > 0))
        throw validation_error("equivalent_arrival_rate: burst_arrival_rate out of domain");
    if (!(std::isfinite(packet_rate) && packet_rate >= 0))
        throw validation_error("equivalent_arrival_rate: packet_rate out of domain");
    return packet_rate * mean_burst_duration / (mean_burst_duration + 1.0 / burst_arrival_rate);
}

/// Sum-rate constraints in both directions: R = L/D + lambda* L. Meeting this
/// rate with an M/M/1 service process pins mean delay at exactly D.
inline RateRequirement sum_rate_constraint(const BurstyServiceSpec& spec) {
    validate_service(spec);
    RateRequirement req;
    req.service_id = spec.service_id;
    req.equivalent_rate_down = equivalent_arrival_rate(
        spec.down.in_burst_packet_rate, spec.down.mean_burst_duration, spec.down.burst_arrival_rate);
    req.equivalent_rate_up = equivalent_arrival_rate(
        spec.up.in_burst_packet_rate, spec.up.mean_burst_duration, spec.up.burst_arrival_rate);
    req.rate_down = spec.down.mean_packet_length / spec.max_delay +
                    req.equivalent_rate_down * spec.down.mean_packet_length;
    req.rate_up = spec.up.mean_packet_length / spec.max_delay +
                  req.equivalent_rate_up * spec.up.mean_packet_length;
    return req;
}

/// Steady-state M/M/1 mean sojourn time 1/(mu - lambda*) with mu = total_rate/L.
/// Rejects configurations closer than 1e-9 packets/s to the stability boundary,
/// where the formula is numerically meaningless.
inline double mm1_delay(double total_rate, double mean_packet_length, double equivalent_rate) {
    if (!(std::isfinite(total_rate) && total_rate >= 0) ||
        !(std::isfinite(mean_packet_length) && mean_packet_length > 0) ||
        !(std::isfinite(equivalent_rate) && equivalent_rate >= 0))
        throw validation_error("mm1_delay: argument out of domain");
    const double service_rate = total_rate / mean_packet_length;
    if (service_rate - equivalent_rate < 1e-9)
        throw instability_error("mm1_delay: service rate does not exceed arrival rate (queue diverges)");
    return 1.0 / (service_rate - equivalent_rate);
}

} // namespace twmr
