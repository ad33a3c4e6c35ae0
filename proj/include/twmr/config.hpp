#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "twmr/assign.hpp"
#include "twmr/channel.hpp"
#include "twmr/errors.hpp"
#include "twmr/traffic.hpp"

namespace twmr {

enum class Scheme { mtwf, mwf, ma, mga };

constexpr Scheme kAllSchemes[] = {Scheme::mtwf, Scheme::mwf, Scheme::ma, Scheme::mga};

inline std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::mtwf: return "mtwf";
        case Scheme::mwf: return "mwf";
        case Scheme::ma: return "ma";
        case Scheme::mga: return "mga";
    }
    return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
    for (Scheme k : kAllSchemes)
        if (to_string(k) == s) return k;
    throw validation_error("unknown scheme '" + s + "' (expected mtwf, mwf, ma, mga or all)");
}

/// One Monte Carlo experiment: system dimensions, channel model, traffic, and
/// the GA settings shared by every scheme that searches assignments.
struct Scenario {
    std::size_t n_subcarriers = 16;
    std::size_t n_relays = 6;
    double bandwidth = 16.0;  ///< Hz (W); per-subcarrier w = W / N
    double noise_power = 1.0; ///< watts (sigma^2)
    double plc = 2.0;         ///< channel difference exponent
    std::size_t trials = 1;
    std::uint64_t seed = 1;
    std::vector<Scheme> schemes = {Scheme::mtwf, Scheme::mwf, Scheme::ma};
    BaseDist base_dist = BaseDist::exponential;
    double circuit_power = 0.0;       ///< constant watts added to every report, default off
    GaConfig ga;                      ///< seed field is ignored (derived per trial)
    std::size_t mga_generations = 0;  ///< 0 = same as ga.generations

    struct ServiceConfig {
        bool direct = true;
        double rate_down = 0.0; ///< bits/s, direct mode
        double rate_up = 0.0;
        BurstyServiceSpec bursty; ///< bursty mode (direct == false)

        friend bool operator==(const ServiceConfig&, const ServiceConfig&) = default;
    };
    std::vector<ServiceConfig> services;

    std::size_t n_services() const { return services.size(); }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Per-service sum-rate demands, converting bursty specs through the
/// equivalent-queue analysis.
inline std::vector<ServiceDemand> resolve_demands(const Scenario& s) {
    std::vector<ServiceDemand> demands;
    demands.reserve(s.services.size());
    for (std::size_t i = 0; i < s.services.size(); ++i) {
        const auto& svc = s.services[i];
        if (svc.direct) {
            demands.push_back({svc.rate_down, svc.rate_up});
        } else {
            const RateRequirement req = sum_rate_constraint(svc.bursty);
            demands.push_back({req.rate_down, req.rate_up});
        }
    }
    return demands;
}

inline void validate_scenario(const Scenario& s) {
    if (s.services.empty()) throw validation_error("scenario: no services configured");
    if (s.n_subcarriers < s.services.size())
        throw validation_error("infeasible: fewer subcarriers than services");
    if (s.n_relays < 1) throw validation_error("scenario: need at least one relay");
    if (s.trials < 1) throw validation_error("scenario: trials must be >= 1");
    if (!(s.bandwidth > 0)) throw validation_error("scenario: bandwidth_hz must be positive");
    if (!(s.noise_power > 0)) throw validation_error("scenario: noise_power must be positive");
    if (!(std::isfinite(s.plc) && s.plc >= 0)) throw validation_error("scenario: plc must be >= 0");
    if (!(s.circuit_power >= 0)) throw validation_error("scenario: circuit_power_w must be >= 0");
    if (s.schemes.empty()) throw validation_error("scenario: scheme set is empty");
    validate_ga_config(s.ga);
    for (const auto& svc : s.services) {
        if (svc.direct) {
            if (!(svc.rate_down >= 0) || !(svc.rate_up >= 0) || !std::isfinite(svc.rate_down) ||
                !std::isfinite(svc.rate_up))
                throw validation_error("scenario: direct service rates must be finite and >= 0");
        } else {
            validate_service(svc.bursty);
        }
    }
}

namespace detail {

/// Shortest decimal form that parses back to exactly the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw validation_error("config: key '" + key + "' has non-numeric value '" + v + "'");
    }
    if (pos != v.size())
        throw validation_error("config: key '" + key + "' has trailing junk in value '" + v + "'");
    return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw validation_error("config: key '" + key + "' must be a nonnegative integer, got '" + v + "'");
    return std::stoull(v);
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

/// Parse the flat key = value config grammar: one `key = value` per line,
/// blank lines and `#` comments ignored. Later assignments to the same key
/// override earlier ones (which is how CLI overrides are applied).
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw validation_error("config line " + std::to_string(lineno) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

/// Build a Scenario from parsed keys. Unknown keys are hard errors.
inline Scenario scenario_from_keys(const std::map<std::string, std::string>& kv) {
    Scenario s;
    std::map<std::size_t, Scenario::ServiceConfig> services;
    std::map<std::size_t, bool> service_is_direct;

    auto direction_field = [](DirectionTraffic& d, const std::string& field, double v) {
        if (field == "burst_rate") d.burst_arrival_rate = v;
        else if (field == "burst_duration_s") d.mean_burst_duration = v;
        else if (field == "packet_rate") d.in_burst_packet_rate = v;
        else if (field == "packet_length_bits") d.mean_packet_length = v;
        else throw validation_error("config: unknown traffic field '" + field + "'");
    };

    for (const auto& [key, value] : kv) {
        if (key == "n_subcarriers") s.n_subcarriers = detail::parse_uint(key, value);
        else if (key == "n_relays") s.n_relays = detail::parse_uint(key, value);
        else if (key == "bandwidth_hz") s.bandwidth = detail::parse_double(key, value);
        else if (key == "noise_power") s.noise_power = detail::parse_double(key, value);
        else if (key == "plc") s.plc = detail::parse_double(key, value);
        else if (key == "trials") s.trials = detail::parse_uint(key, value);
        else if (key == "seed") s.seed = detail::parse_uint(key, value);
        else if (key == "circuit_power_w") s.circuit_power = detail::parse_double(key, value);
        else if (key == "channel.base_dist") s.base_dist = base_dist_from_string(value);
        else if (key == "ga.popsize") s.ga.popsize = detail::parse_uint(key, value);
        else if (key == "ga.generations") s.ga.generations = detail::parse_uint(key, value);
        else if (key == "ga.crossover_prob") s.ga.crossover_prob = detail::parse_double(key, value);
        else if (key == "ga.mutation_prob") s.ga.mutation_prob = detail::parse_double(key, value);
        else if (key == "ga.elitism") s.ga.elitism = detail::parse_uint(key, value);
        else if (key == "mga.generations") s.mga_generations = detail::parse_uint(key, value);
        else if (key == "schemes") {
            s.schemes.clear();
            std::istringstream ss(value);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                tok = detail::trim(tok);
                if (tok.empty()) continue;
                if (tok == "all") {
                    s.schemes.assign(std::begin(kAllSchemes), std::end(kAllSchemes));
                } else {
                    s.schemes.push_back(scheme_from_string(tok));
                }
            }
        } else if (key.rfind("service.", 0) == 0) {
            const std::string rest = key.substr(8);
            const auto dot = rest.find('.');
            if (dot == std::string::npos)
                throw validation_error("config: malformed service key '" + key + "'");
            const std::size_t idx = detail::parse_uint(key, rest.substr(0, dot));
            const std::string field = rest.substr(dot + 1);
            auto& svc = services[idx];
            if (field == "rate_down") {
                svc.rate_down = detail::parse_double(key, value);
                service_is_direct[idx] = true;
            } else if (field == "rate_up") {
                svc.rate_up = detail::parse_double(key, value);
                service_is_direct[idx] = true;
            } else if (field == "max_delay_s") {
                svc.bursty.max_delay = detail::parse_double(key, value);
                svc.direct = false;
            } else if (field.rfind("down.", 0) == 0) {
                direction_field(svc.bursty.down, field.substr(5), detail::parse_double(key, value));
                svc.direct = false;
            } else if (field.rfind("up.", 0) == 0) {
                direction_field(svc.bursty.up, field.substr(3), detail::parse_double(key, value));
                svc.direct = false;
            } else {
                throw validation_error("config: unknown service field '" + field + "' in '" + key + "'");
            }
        } else {
            throw validation_error("config: unknown key '" + key + "'");
        }
    }

    for (const auto& [idx, svc] : services) {
        const bool direct = service_is_direct.count(idx) > 0;
        if (direct && !svc.direct)
            throw validation_error("config: service " + std::to_string(idx) +
                                   " mixes direct rates with bursty fields");
        if (idx != s.services.size())
            throw validation_error("config: service indices must be contiguous from 0 (missing " +
                                   std::to_string(s.services.size()) + ")");
        Scenario::ServiceConfig out = svc;
        out.direct = direct;
        if (direct)
            out.bursty = BurstyServiceSpec{}; // keep equality clean for direct services
        else
            out.bursty.service_id = idx;
        s.services.push_back(out);
    }
    validate_scenario(s);
    return s;
}

inline Scenario parse_scenario(const std::string& text) {
    return scenario_from_keys(parse_config_text(text));
}

inline Scenario load_scenario(const std::string& path,
                              const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto kv = parse_config_text(buffer.str());
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw validation_error("override '" + ov + "' must look like key=value");
        kv[detail::trim(ov.substr(0, eq))] = detail::trim(ov.substr(eq + 1));
    }
    return scenario_from_keys(kv);
}

/// Canonical text form; parses back to an identical Scenario.
inline std::string serialize_scenario(const Scenario& s) {
    std::ostringstream out;
    out << "n_subcarriers = " << s.n_subcarriers << "\n";
    out << "n_relays = " << s.n_relays << "\n";
    out << "bandwidth_hz = " << detail::format_double(s.bandwidth) << "\n";
    out << "noise_power = " << detail::format_double(s.noise_power) << "\n";
    out << "plc = " << detail::format_double(s.plc) << "\n";
    out << "trials = " << s.trials << "\n";
    out << "seed = " << s.seed << "\n";
    out << "schemes = ";
    for (std::size_t i = 0; i < s.schemes.size(); ++i)
        out << (i ? "," : "") << to_string(s.schemes[i]);
    out << "\n";
    out << "channel.base_dist = " << to_string(s.base_dist) << "\n";
    out << "circuit_power_w = " << detail::format_double(s.circuit_power) << "\n";
    out << "ga.popsize = " << s.ga.popsize << "\n";
    out << "ga.generations = " << s.ga.generations << "\n";
    out << "ga.crossover_prob = " << detail::format_double(s.ga.crossover_prob) << "\n";
    out << "ga.mutation_prob = " << detail::format_double(s.ga.mutation_prob) << "\n";
    out << "ga.elitism = " << s.ga.elitism << "\n";
    if (s.mga_generations > 0) out << "mga.generations = " << s.mga_generations << "\n";
    for (std::size_t i = 0; i < s.services.size(); ++i) {
        const auto& svc = s.services[i];
        const std::string p = "service." + std::to_string(i) + ".";
        if (svc.direct) {
            out << p << "rate_down = " << detail::format_double(svc.rate_down) << "\n";
            out << p << "rate_up = " << detail::format_double(svc.rate_up) << "\n";
        } else {
            out << p << "max_delay_s = " << detail::format_double(svc.bursty.max_delay) << "\n";
            auto dir = [&](const char* name, const DirectionTraffic& d) {
                out << p << name << ".burst_rate = " << detail::format_double(d.burst_arrival_rate)
                    << "\n";
                out << p << name
                    << ".burst_duration_s = " << detail::format_double(d.mean_burst_duration) << "\n";
                out << p << name << ".packet_rate = " << detail::format_double(d.in_burst_packet_rate)
                    << "\n";
                out << p << name
                    << ".packet_length_bits = " << detail::format_double(d.mean_packet_length)
                    << "\n";
            };
            dir("down", svc.bursty.down);
            dir("up", svc.bursty.up);
        }
    }
    return out.str();
}

inline std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string scenario_hash(const Scenario& s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(serialize_scenario(s))));
    return buf;
}

} // namespace twmr
