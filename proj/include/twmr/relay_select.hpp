#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "twmr/channel.hpp"
#include "twmr/errors.hpp"

namespace twmr {

/// Optimal AF amplification factor for combined rate demand term `mr` on a
/// link with squared gains (h2, g2): sqrt(mr / (h2 g2 (mr+1))).
inline double alpha_star(double mr, double h2, double g2) {
    return std::sqrt(mr / (h2 * g2 * (mr + 1.0)));
}

/// Minimal total power (A + B + relay) that achieves the combined demand `mr`
/// through one relay, at the optimal amplification factor.
inline double pmin_exact(double mr, double h2, double g2, double sigma2) {
    return sigma2 * (mr / h2 + mr / g2 + 2.0 * std::sqrt(mr * (mr + 1.0) / (h2 * g2)));
}

/// Integrated two-way noise-channel coefficient: the per-subcarrier cost
/// weight under high rate demands. Smaller is better.
inline double eta(double h2, double g2, double sigma2) {
    return sigma2 * (1.0 / h2 + 1.0 / g2 + 2.0 / std::sqrt(h2 * g2));
}

/// Total power as a function of the amplification factor (the objective the
/// closed forms above minimize); exposed for grid-search cross-checks.
inline double relay_power_objective(double alpha, double mr, double h2, double g2, double sigma2) {
    return sigma2 * (mr * (1.0 + alpha * g2) * (1.0 + alpha * h2) / (h2 * g2 * alpha) + alpha);
}

/// The chosen relay per subcarrier together with its link quantities.
struct RelayChoice {
    std::vector<std::size_t> relay; ///< selected relay index per subcarrier
    std::vector<double> eta;        ///< integrated noise-channel coefficient per subcarrier
    std::vector<double> h2;         ///< selected squared gain, A side
    std::vector<double> g2;         ///< selected squared gain, B side
};

enum class SelectionCriterion { exact, approximate };

/// Pick the single best relay per subcarrier. The approximate criterion
/// minimizes eta (channel knowledge only); the exact criterion minimizes
/// pmin_exact and needs the per-subcarrier demand `mr`. Ties go to the lowest
/// relay index.
inline RelayChoice select_relays(const ChannelRealization& chan,
                                 SelectionCriterion criterion = SelectionCriterion::approximate,
                                 std::span<const double> mr = {}) {
    const std::size_t n_sub = chan.n_subcarriers;
    if (criterion == SelectionCriterion::exact) {
        if (mr.size() != n_sub)
            throw validation_error("select_relays: exact criterion needs one mr per subcarrier");
        for (double v : mr)
            if (!(v > 0)) throw validation_error("select_relays: exact criterion needs mr > 0");
    }

    RelayChoice choice;
    choice.relay.resize(n_sub);
    choice.eta.resize(n_sub);
    choice.h2.resize(n_sub);
    choice.g2.resize(n_sub);

    for (std::size_t n = 0; n < n_sub; ++n) {
        std::size_t best = 0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < chan.n_relays; ++m) {
            const double h2 = chan.h2_at(m, n);
            const double g2 = chan.g2_at(m, n);
            const double cost = criterion == SelectionCriterion::exact
                                    ? pmin_exact(mr[n], h2, g2, chan.noise_power)
                                    : eta(h2, g2, chan.noise_power);
            if (cost < best_cost) {
                best_cost = cost;
                best = m;
            }
        }
        choice.relay[n] = best;
        choice.h2[n] = chan.h2_at(best, n);
        choice.g2[n] = chan.g2_at(best, n);
        choice.eta[n] = eta(choice.h2[n], choice.g2[n], chan.noise_power);
    }
    return choice;
}

} // namespace twmr
