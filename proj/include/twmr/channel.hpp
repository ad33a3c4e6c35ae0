#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "twmr/errors.hpp"
#include "twmr/rng.hpp"

namespace twmr {

enum class BaseDist { exponential, uniform01 };

inline std::string to_string(BaseDist d) {
    return d == BaseDist::exponential ? "exponential" : "uniform01";
}

inline BaseDist base_dist_from_string(const std::string& s) {
    if (s == "exponential") return BaseDist::exponential;
    if (s == "uniform01") return BaseDist::uniform01;
    throw validation_error("channel.base_dist must be 'exponential' or 'uniform01', got '" + s + "'");
}

/// Squared channel gains for every relay/subcarrier pair in both hops, plus
/// the per-subcarrier noise power and system bandwidth.
struct ChannelRealization {
    std::size_t n_subcarriers = 0;
    std::size_t n_relays = 0;
    std::vector<double> h2; ///< [m * N + n], A <-> relay m on subcarrier n
    std::vector<double> g2; ///< [m * N + n], B <-> relay m on subcarrier n
    double noise_power = 1.0; ///< watts per subcarrier (sigma^2)
    double bandwidth = 1.0;   ///< Hz, whole system (W)

    double h2_at(std::size_t m, std::size_t n) const { return h2[m * n_subcarriers + n]; }
    double g2_at(std::size_t m, std::size_t n) const { return g2[m * n_subcarriers + n]; }
    double subcarrier_bandwidth() const { return bandwidth / static_cast<double>(n_subcarriers); }
};

constexpr double kGainFloor = 1e-6;

/// Per-(relay, subcarrier) draws under the channel-difference model: a base
/// random gain raised to the `plc` exponent, floored at 1e-6. With plc = 0
/// every squared gain is exactly 1.
///
/// Each cell's draw depends only on (seed, m, n), so enlarging the relay set
/// with the same seed extends a realization without disturbing existing cells;
/// relay-count sweeps then use common random numbers.
inline ChannelRealization generate_channel(std::size_t n_subcarriers, std::size_t n_relays,
                                           double plc, double noise_power, double bandwidth,
                                           std::uint64_t seed,
                                           BaseDist base_dist = BaseDist::exponential) {
    if (n_subcarriers < 1 || n_relays < 1)
        throw validation_error("generate_channel: need at least one subcarrier and one relay");
    if (!(std::isfinite(plc) && plc >= 0)) throw validation_error("generate_channel: plc must be >= 0");
    if (!(noise_power > 0) || !(bandwidth > 0))
        throw validation_error("generate_channel: noise_power and bandwidth must be positive");

    ChannelRealization chan;
    chan.n_subcarriers = n_subcarriers;
    chan.n_relays = n_relays;
    chan.noise_power = noise_power;
    chan.bandwidth = bandwidth;
    chan.h2.resize(n_relays * n_subcarriers);
    chan.g2.resize(n_relays * n_subcarriers);

    auto base_draw = [base_dist](double u) {
        return base_dist == BaseDist::exponential ? -std::log1p(-u) : u;
    };
    for (std::size_t m = 0; m < n_relays; ++m) {
        for (std::size_t n = 0; n < n_subcarriers; ++n) {
            std::uint64_t cell = derive_seed(seed, "cell", (m << 32) ^ n);
            const double uh = static_cast<double>(splitmix64(cell) >> 11) * 0x1.0p-53;
            const double ug = static_cast<double>(splitmix64(cell) >> 11) * 0x1.0p-53;
            const double h = std::pow(base_draw(uh), plc);
            const double g = std::pow(base_draw(ug), plc);
            chan.h2[m * n_subcarriers + n] = h > kGainFloor ? h : kGainFloor;
            chan.g2[m * n_subcarriers + n] = g > kGainFloor ? g : kGainFloor;
        }
    }
    return chan;
}

/// Regression-fixture dump, columns m,n,h2,g2.
inline void save_channel_csv(const ChannelRealization& chan, std::ostream& out) {
    out << "m,n,h2,g2\n";
    char buf[128];
    for (std::size_t m = 0; m < chan.n_relays; ++m)
        for (std::size_t n = 0; n < chan.n_subcarriers; ++n) {
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", m, n, chan.h2_at(m, n),
                          chan.g2_at(m, n));
            out << buf;
        }
}

inline void save_channel_csv(const ChannelRealization& chan, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw validation_error("save_channel_csv: cannot open " + path);
    save_channel_csv(chan, out);
}

/// Load a dump produced by save_channel_csv; noise power and bandwidth are not
/// part of the file and must be supplied.
inline ChannelRealization load_channel_csv(std::istream& in, double noise_power, double bandwidth) {
    std::string line;
    if (!std::getline(in, line) || line != "m,n,h2,g2")
        throw validation_error("load_channel_csv: missing m,n,h2,g2 header");
    struct Row {
        std::size_t m, n;
        double h2, g2;
    };
    std::vector<Row> rows;
    std::size_t max_m = 0, max_n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Row r{};
        std::istringstream ss(line);
        char c1, c2, c3;
        if (!(ss >> r.m >> c1 >> r.n >> c2 >> r.h2 >> c3 >> r.g2) || c1 != ',' || c2 != ',' || c3 != ',')
            throw validation_error("load_channel_csv: malformed row '" + line + "'");
        max_m = r.m > max_m ? r.m : max_m;
        max_n = r.n > max_n ? r.n : max_n;
        rows.push_back(r);
    }
    if (rows.empty()) throw validation_error("load_channel_csv: no rows");
    ChannelRealization chan;
    chan.n_relays = max_m + 1;
    chan.n_subcarriers = max_n + 1;
    chan.noise_power = noise_power;
    chan.bandwidth = bandwidth;
    chan.h2.assign(chan.n_relays * chan.n_subcarriers, 0.0);
    chan.g2.assign(chan.n_relays * chan.n_subcarriers, 0.0);
    for (const Row& r : rows) {
        chan.h2[r.m * chan.n_subcarriers + r.n] = r.h2;
        chan.g2[r.m * chan.n_subcarriers + r.n] = r.g2;
    }
    for (double v : chan.h2)
        if (!(v > 0)) throw validation_error("load_channel_csv: incomplete or nonpositive h2 grid");
    for (double v : chan.g2)
        if (!(v > 0)) throw validation_error("load_channel_csv: incomplete or nonpositive g2 grid");
    return chan;
}

inline ChannelRealization load_channel_csv(const std::string& path, double noise_power,
                                           double bandwidth) {
    std::ifstream in(path);
    if (!in) throw validation_error("load_channel_csv: cannot open " + path);
    return load_channel_csv(in, noise_power, bandwidth);
}

} // namespace twmr
