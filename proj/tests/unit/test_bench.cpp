#include "doctest.h"

#include <cmath>
#include <sstream>

#include "twmr/bench.hpp"

using namespace twmr;

namespace {

Scenario small_scenario() {
    Scenario s;
    s.n_subcarriers = 6;
    s.n_relays = 2;
    s.bandwidth = 6.0;
    s.plc = 2.0;
    s.trials = 3;
    s.seed = 42;
    s.ga.generations = 25;
    s.schemes = {Scheme::mtwf, Scheme::mwf, Scheme::ma, Scheme::mga};
    s.mga_generations = 40;
    Scenario::ServiceConfig a;
    a.direct = true;
    a.rate_down = 5.0;
    a.rate_up = 3.0;
    Scenario::ServiceConfig b;
    b.direct = true;
    b.rate_down = 2.0;
    b.rate_up = 4.0;
    s.services = {a, b};
    return s;
}

} // namespace

TEST_CASE("scenario config round-trips through serialization") {
    Scenario s = small_scenario();
    const std::string text = serialize_scenario(s);
    Scenario back = parse_scenario(text);
    CHECK(back == s);

    // bursty services round-trip too
    Scenario bursty = s;
    Scenario::ServiceConfig svc;
    svc.direct = false;
    svc.bursty.service_id = 0;
    svc.bursty.max_delay = 0.1;
    svc.bursty.down = {0.5, 2.0, 10.0, 1000.0};
    svc.bursty.up = {0.25, 1.0, 4.0, 500.0};
    Scenario::ServiceConfig svc1 = svc;
    svc1.bursty.service_id = 1;
    bursty.services = {svc, svc1};
    Scenario bursty_back = parse_scenario(serialize_scenario(bursty));
    CHECK(bursty_back == bursty);
}

TEST_CASE("config parser rejects unknown keys, bad values and malformed services") {
    CHECK_THROWS_AS(parse_scenario("definitely_not_a_key = 3\n"), validation_error);
    CHECK_THROWS_AS(parse_scenario("n_subcarriers = banana\n"), validation_error);
    CHECK_THROWS_AS(parse_scenario("n_subcarriers\n"), validation_error);
    CHECK_THROWS_AS(parse_scenario("schemes = mtwf,nope\n"), validation_error);
    // mixing direct and bursty fields on one service
    CHECK_THROWS_AS(parse_scenario("n_subcarriers = 4\n"
                                   "service.0.rate_down = 1\n"
                                   "service.0.rate_up = 1\n"
                                   "service.0.max_delay_s = 0.1\n"),
                    validation_error);
    // non-contiguous service indices
    CHECK_THROWS_AS(parse_scenario("n_subcarriers = 4\n"
                                   "service.1.rate_down = 1\n"
                                   "service.1.rate_up = 1\n"),
                    validation_error);
    // no services at all
    CHECK_THROWS_AS(parse_scenario("n_subcarriers = 4\n"), validation_error);
}

TEST_CASE("infeasible scenario: fewer subcarriers than services") {
    std::string text = "n_subcarriers = 2\n";
    for (int i = 0; i < 3; ++i)
        text += "service." + std::to_string(i) + ".rate_down = 1\nservice." + std::to_string(i) +
                ".rate_up = 1\n";
    CHECK_THROWS_WITH_AS(parse_scenario(text), "infeasible: fewer subcarriers than services",
                         validation_error);
}

TEST_CASE("bursty services resolve through the queue analysis") {
    Scenario s = small_scenario();
    Scenario::ServiceConfig svc;
    svc.direct = false;
    svc.bursty.max_delay = 0.1;
    svc.bursty.down = {0.5, 2.0, 10.0, 1000.0}; // lambda* = 5 -> R = 15000
    svc.bursty.up = {0.5, 2.0, 10.0, 1000.0};
    s.services = {svc};
    auto demands = resolve_demands(s);
    CHECK(demands[0].down == doctest::Approx(15000.0).epsilon(1e-12));
    CHECK(demands[0].up == doctest::Approx(15000.0).epsilon(1e-12));
}

TEST_CASE("identical seeds give byte-identical CSV, independent of threads") {
    Scenario s = small_scenario();
    auto r1 = run_scenario(s, 1);
    auto r2 = run_scenario(s, 1);
    const std::string csv1 = trial_csv_string(s, r1);
    const std::string csv2 = trial_csv_string(s, r2);
    CHECK(csv1 == csv2);

    auto r3 = run_scenario(s, 3);
    CHECK(trial_csv_string(s, r3) == csv1);

    Scenario other = s;
    other.seed = 43;
    auto r4 = run_scenario(other, 1);
    CHECK(trial_csv_string(other, r4) != csv1);
}

TEST_CASE("metric identities hold on every report row") {
    Scenario s = small_scenario();
    auto results = run_scenario(s);
    const auto demands = resolve_demands(s);
    double total_rate = 0.0;
    for (const auto& d : demands) total_rate += d.down + d.up;
    for (const auto& r : results) {
        CHECK(r.report.ee * r.report.total_power == doctest::Approx(total_rate).epsilon(1e-9));
        CHECK(r.report.energy_per_bit_db ==
              doctest::Approx(10.0 * std::log10(r.report.total_power / total_rate)).epsilon(1e-9));
        if (r.report.scheme == Scheme::ma)
            CHECK(r.report.normalized_energy == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.verification.max_sum_rate_rel_err <= 1e-9);
        CHECK(r.verification.max_rate_roundtrip_err <= 1e-9);
        CHECK(r.verification.min_power >= 0.0);
    }
}

TEST_CASE("normalized energy is blank without MA and circuit power shifts totals") {
    Scenario s = small_scenario();
    s.schemes = {Scheme::mtwf};
    auto results = run_scenario(s);
    for (const auto& r : results) CHECK(std::isnan(r.report.normalized_energy));

    Scenario with_circuit = small_scenario();
    with_circuit.schemes = {Scheme::mtwf};
    with_circuit.circuit_power = 2.5;
    auto shifted = run_scenario(with_circuit);
    for (std::size_t i = 0; i < results.size(); ++i)
        CHECK(shifted[i].report.total_power ==
              doctest::Approx(results[i].report.total_power + 2.5).epsilon(1e-12));
}

TEST_CASE("single service: MTWF and MWF report identical energy efficiency") {
    Scenario s = small_scenario();
    s.schemes = {Scheme::mtwf, Scheme::mwf};
    Scenario::ServiceConfig svc;
    svc.direct = true;
    svc.rate_down = svc.rate_up = 6.0;
    s.services = {svc};
    auto results = run_scenario(s);
    REQUIRE(results.size() == 2 * s.trials);
    for (std::size_t t = 0; t < s.trials; ++t)
        CHECK(results[2 * t].report.ee == doctest::Approx(results[2 * t + 1].report.ee).epsilon(1e-12));
}

TEST_CASE("CSV header comment re-parses to the same scenario") {
    Scenario s = small_scenario();
    auto results = run_scenario(s);
    const std::string csv = trial_csv_string(s, results);
    std::istringstream in(csv);
    std::string line, config_text;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) config_text += line.substr(2) + "\n";
        else break;
    }
    CHECK(parse_scenario(config_text) == s);
    // the first non-comment line is the column header
    CHECK(line == "scenario_hash,trial,scheme,total_power_w,ee_bits_per_joule,energy_per_bit_db,"
                  "normalized_energy,converged_generation");
}

TEST_CASE("CSV carries per-trial rows and aggregate rows per scheme") {
    Scenario s = small_scenario();
    auto results = run_scenario(s);
    const std::string csv = trial_csv_string(s, results);
    std::istringstream in(csv);
    std::string line;
    std::size_t trial_rows = 0, mean_rows = 0, std_rows = 0;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0 || line.rfind("scenario_hash", 0) == 0) continue;
        if (line.find(",mean,") != std::string::npos) ++mean_rows;
        else if (line.find(",std,") != std::string::npos) ++std_rows;
        else if (!line.empty()) ++trial_rows;
    }
    CHECK(trial_rows == s.trials * s.schemes.size());
    CHECK(mean_rows == s.schemes.size());
    CHECK(std_rows == s.schemes.size());
}

TEST_CASE("plc sweep: common random numbers and the plc=0 collapse") {
    Scenario base = small_scenario();
    base.schemes = {Scheme::mtwf, Scheme::mwf, Scheme::ma};
    base.trials = 4;
    auto rows = sweep(base, SweepParam::plc, {0.0, 2.0});
    double norm_at_zero_mtwf = -1.0, norm_at_zero_mwf = -1.0;
    for (const auto& r : rows) {
        if (r.value == 0.0 && r.metric == "normalized_energy") {
            if (r.scheme == Scheme::mtwf) norm_at_zero_mtwf = r.mean;
            if (r.scheme == Scheme::mwf) norm_at_zero_mwf = r.mean;
        }
    }
    CHECK(norm_at_zero_mtwf == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(norm_at_zero_mwf == doctest::Approx(1.0).epsilon(1e-9));

    std::ostringstream out;
    write_sweep_csv(out, base, SweepParam::plc, rows);
    CHECK(out.str().find("sweep_param,value,scheme,metric,mean,std") != std::string::npos);
    CHECK(out.str().find("plc,0,") != std::string::npos);
}

TEST_CASE("sweep value application validates and transforms scenarios") {
    Scenario base = small_scenario();
    CHECK(apply_sweep_value(base, SweepParam::relays, 5).n_relays == 5);
    CHECK(apply_sweep_value(base, SweepParam::plc, 1.5).plc == 1.5);
    CHECK(apply_sweep_value(base, SweepParam::ga_generations, 99).ga.generations == 99);
    CHECK(apply_sweep_value(base, SweepParam::rate_iterations, 123).mga_generations == 123);

    auto rated = apply_sweep_value(base, SweepParam::rate, 7.0);
    for (const auto& svc : rated.services) {
        CHECK(svc.rate_down == 7.0);
        CHECK(svc.rate_up == 7.0);
    }

    auto ratio = apply_sweep_value(base, SweepParam::rate_ratio_direction, 0.25);
    // totals preserved per service: (5+3) and (2+4)
    CHECK(ratio.services[0].rate_down == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ratio.services[0].rate_up == doctest::Approx(6.0).epsilon(1e-12));
    CHECK_THROWS_AS(apply_sweep_value(base, SweepParam::rate_ratio_direction, 0.0),
                    validation_error);

    auto svc_ratio = apply_sweep_value(base, SweepParam::rate_ratio_service, 0.5);
    CHECK(svc_ratio.services[0].rate_down == doctest::Approx(3.5).epsilon(1e-12));

    auto counted = apply_sweep_value(base, SweepParam::service_count, 3);
    CHECK(counted.services.size() == 3);
    CHECK(counted.services[0].rate_down == doctest::Approx(7.0 / 3.0).epsilon(1e-12));

    CHECK_THROWS_AS(sweep(base, SweepParam::plc, {}), validation_error);
}

TEST_CASE("GA generation sweeps are monotone thanks to shared stream prefixes") {
    Scenario base = small_scenario();
    base.trials = 3;
    base.schemes = {Scheme::mtwf, Scheme::mga};
    auto rows = sweep(base, SweepParam::ga_generations, {10, 40, 160});
    double prev_mtwf = 1e300, prev_mga = 1e300;
    for (double g : {10.0, 40.0, 160.0}) {
        for (const auto& r : rows) {
            if (r.value != g || r.metric != "total_power_w") continue;
            if (r.scheme == Scheme::mtwf) {
                CHECK(r.mean <= prev_mtwf * (1.0 + 1e-12));
                prev_mtwf = r.mean;
            } else if (r.scheme == Scheme::mga) {
                CHECK(r.mean <= prev_mga * (1.0 + 1e-12));
                prev_mga = r.mean;
            }
        }
    }
}
