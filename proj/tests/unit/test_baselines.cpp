#include "doctest.h"

#include <cmath>

#include "twmr/baselines.hpp"
#include "twmr/bench.hpp"
#include "twmr/channel.hpp"

using namespace twmr;

namespace {

LinkConfig random_link(std::uint64_t seed, std::size_t n_sub, std::size_t n_relays, double plc) {
    auto chan = generate_channel(n_sub, n_relays, plc, 1.0, static_cast<double>(n_sub), seed);
    return make_link(select_relays(chan), chan);
}

} // namespace

TEST_CASE("MA splits every demand equally across owned subcarriers") {
    auto link = random_link(1, 2, 2, 2.0);
    auto alloc = ma_allocate(link, std::vector<int>{0, 0}, {{4.0, 4.0}});
    CHECK(alloc.rate_down[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(alloc.rate_down[1] == doctest::Approx(2.0).epsilon(1e-12));

    auto link4 = random_link(2, 4, 2, 2.0);
    auto alloc4 = ma_allocate(link4, std::vector<int>{0, 0, 0, 0}, {{3.0, 3.0}});
    for (double r : alloc4.rate_down) CHECK(r == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("equal channels make MA and MTWF coincide") {
    auto link = random_link(3, 4, 3, 0.0); // plc = 0: all gains 1
    std::vector<int> genes{0, 0, 1, 1};
    std::vector<ServiceDemand> demands = {{4.0, 2.0}, {6.0, 3.0}};
    auto ma = ma_allocate(link, genes, demands);
    WaterfillDecoder wf(link, demands);
    auto mtwf = wf.decode(genes);
    for (std::size_t n = 0; n < 4; ++n) {
        CHECK(ma.rate_down[n] == doctest::Approx(mtwf.rate_down[n]).epsilon(1e-12));
        CHECK(ma.rate_up[n] == doctest::Approx(mtwf.rate_up[n]).epsilon(1e-12));
    }
}

TEST_CASE("MWF with the default cost lists reproduces the two-way fill per direction") {
    auto link = random_link(5, 6, 3, 2.0);
    std::vector<int> genes{0, 1, 0, 1, 0, 1};
    std::vector<ServiceDemand> demands = {{7.0, 2.0}, {3.0, 5.0}};
    auto mwf = mwf_allocate(link, genes, demands);
    WaterfillDecoder wf(link, demands);
    auto mtwf = wf.decode(genes);
    CHECK(mwf.rate_down == mtwf.rate_down);
    CHECK(mwf.rate_up == mtwf.rate_up);

    // single subcarrier per service: no freedom, MA = MWF = MTWF
    auto link2 = random_link(6, 2, 3, 2.0);
    std::vector<int> pair{0, 1};
    std::vector<ServiceDemand> d2 = {{3.0, 1.0}, {2.0, 4.0}};
    auto a = ma_allocate(link2, pair, d2);
    auto b = mwf_allocate(link2, pair, d2);
    WaterfillDecoder wf2(link2, d2);
    auto c = wf2.decode(pair);
    for (std::size_t n = 0; n < 2; ++n) {
        CHECK(a.rate_down[n] == doctest::Approx(b.rate_down[n]).epsilon(1e-12));
        CHECK(b.rate_down[n] == doctest::Approx(c.rate_down[n]).epsilon(1e-12));
    }
}

TEST_CASE("MWF accepts custom per-direction cost lists") {
    auto link = random_link(7, 4, 3, 2.0);
    std::vector<int> genes{0, 0, 0, 0};
    std::vector<ServiceDemand> demands = {{6.0, 6.0}};
    // an alternative downlink cost ranking flips which subcarriers are favored
    std::vector<double> inverted(link.eta.rbegin(), link.eta.rend());
    auto alt = mwf_allocate(link, genes, demands, inverted, link.eta);
    auto def = mwf_allocate(link, genes, demands);
    CHECK(alt.rate_down != def.rate_down); // downlink follows the custom list
    CHECK(alt.rate_up == def.rate_up);     // uplink untouched
    double sum = 0.0;
    for (double r : alt.rate_down) sum += r;
    CHECK(sum == doctest::Approx(6.0).epsilon(1e-9)); // constraint still met
}

TEST_CASE("MTWF is never beaten by MA or MWF on the approximate objective") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto link = random_link(derive_seed(100, "dom", trial), 6, 3, 2.0);
        std::vector<ServiceDemand> demands = {{5.0, 3.0}, {2.0, 4.0}};
        std::vector<int> genes{0, 1, 0, 1, 0, 1};
        WaterfillDecoder wf(link, demands);
        auto mtwf = wf.decode(genes);
        auto ma = ma_allocate(link, genes, demands);
        auto mwf = mwf_allocate(link, genes, demands);
        const double p_mtwf = approx_objective(mtwf, link);
        CHECK(approx_objective(ma, link) >= p_mtwf * (1.0 - 1e-9));
        CHECK(approx_objective(mwf, link) >= p_mtwf * (1.0 - 1e-9));
    }
}

TEST_CASE("MGA decode with shares frozen at the water-filling solution matches MTWF") {
    auto link = random_link(13, 6, 3, 2.0);
    std::vector<ServiceDemand> demands = {{6.0, 4.0}, {5.0, 7.0}};
    std::vector<int> genes{0, 1, 1, 0, 1, 0};
    WaterfillDecoder wf(link, demands);
    auto mtwf = wf.decode(genes);

    MgaChromosome chrom;
    chrom.assign = genes;
    chrom.share_down.resize(6);
    chrom.share_up.resize(6);
    for (std::size_t n = 0; n < 6; ++n) {
        const auto s = static_cast<std::size_t>(genes[n]);
        chrom.share_down[n] = demands[s].down > 0 ? mtwf.rate_down[n] / demands[s].down : 0.0;
        chrom.share_up[n] = demands[s].up > 0 ? mtwf.rate_up[n] / demands[s].up : 0.0;
    }
    auto mga = mga_decode(link, demands, chrom);
    for (std::size_t n = 0; n < 6; ++n) {
        CHECK(mga.rate_down[n] == doctest::Approx(mtwf.rate_down[n]).epsilon(1e-9));
        CHECK(mga.rate_up[n] == doctest::Approx(mtwf.rate_up[n]).epsilon(1e-9));
    }
    CHECK(approx_objective(mga, link) == doctest::Approx(approx_objective(mtwf, link)).epsilon(1e-9));
}

TEST_CASE("MGA histories are monotone under elitism and deterministic by seed") {
    auto link = random_link(17, 6, 3, 2.0);
    std::vector<ServiceDemand> demands = {{4.0, 4.0}, {3.0, 3.0}};
    GaConfig cfg;
    cfg.generations = 50;
    cfg.seed = 23;
    auto res = mga_optimize(link, demands, cfg);
    REQUIRE(res.stats.fitness_history.size() == 51);
    for (std::size_t g = 1; g < res.stats.fitness_history.size(); ++g) {
        CHECK(res.stats.fitness_history[g] >= res.stats.fitness_history[g - 1]);
        CHECK(res.stats.approx_power_history[g] <= res.stats.approx_power_history[g - 1] + 1e-15);
    }
    auto res2 = mga_optimize(link, demands, cfg);
    CHECK(res2.stats.fitness_history == res.stats.fitness_history);
    CHECK(res2.allocation.rate_down == res.allocation.rate_down);

    // sum-rate constraints hold exactly
    auto ver = verify_allocation(res.allocation, link, demands);
    CHECK(ver.max_sum_rate_rel_err <= 1e-9);
}

TEST_CASE("all-equal channels collapse MTWF, MWF and MA to the same allocation") {
    // one full trial at plc = 0 through the bench path
    Scenario s;
    s.n_subcarriers = 8;
    s.n_relays = 3;
    s.bandwidth = 8.0;
    s.plc = 0.0;
    s.trials = 1;
    s.seed = 7;
    s.ga.generations = 30;
    s.schemes = {Scheme::mtwf, Scheme::mwf, Scheme::ma};
    Scenario::ServiceConfig svc;
    svc.direct = true;
    svc.rate_down = svc.rate_up = 6.0;
    s.services = {svc, svc};

    auto results = run_scenario(s);
    REQUIRE(results.size() == 3);
    for (std::size_t i = 1; i < results.size(); ++i) {
        CHECK(results[i].report.total_power ==
              doctest::Approx(results[0].report.total_power).epsilon(1e-9));
        CHECK(results[i].allocation.rate_down == results[0].allocation.rate_down);
        CHECK(results[i].allocation.rate_up == results[0].allocation.rate_up);
    }
}

TEST_CASE("desk-scale dominance: mean power orders MTWF <= MWF <= MA and MTWF <= MGA") {
    Scenario s;
    s.n_subcarriers = 8;
    s.n_relays = 3;
    s.bandwidth = 8.0;
    s.plc = 2.0;
    s.trials = 200;
    s.seed = 31;
    s.ga.generations = 60;
    s.mga_generations = 150;
    s.schemes = {Scheme::mtwf, Scheme::mwf, Scheme::ma, Scheme::mga};
    Scenario::ServiceConfig svc;
    svc.direct = true;
    svc.rate_down = svc.rate_up = 6.0;
    s.services = {svc, svc};

    auto results = run_scenario(s);
    double p_mtwf = 0, p_mwf = 0, p_ma = 0, p_mga = 0;
    for (const auto& r : results) {
        if (r.report.scheme == Scheme::mtwf) p_mtwf += r.report.total_power;
        if (r.report.scheme == Scheme::mwf) p_mwf += r.report.total_power;
        if (r.report.scheme == Scheme::ma) p_ma += r.report.total_power;
        if (r.report.scheme == Scheme::mga) p_mga += r.report.total_power;
    }
    CHECK(p_mtwf <= p_mwf * (1.0 + 1e-12));
    CHECK(p_mwf <= p_ma * (1.0 + 1e-12));
    CHECK(p_mtwf <= p_mga * (1.0 + 1e-12));
}
