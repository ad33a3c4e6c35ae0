#include "doctest.h"

#include <sstream>

#include "twmr/channel.hpp"

using namespace twmr;

TEST_CASE("plc = 0 collapses every squared gain to exactly 1") {
    auto chan = generate_channel(16, 6, 0.0, 1.0, 16.0, 99);
    for (double v : chan.h2) CHECK(v == 1.0);
    for (double v : chan.g2) CHECK(v == 1.0);
}

TEST_CASE("generation is deterministic given the seed") {
    auto a = generate_channel(8, 4, 2.0, 1.0, 8.0, 12345);
    auto b = generate_channel(8, 4, 2.0, 1.0, 8.0, 12345);
    CHECK(a.h2 == b.h2);
    CHECK(a.g2 == b.g2);
    auto c = generate_channel(8, 4, 2.0, 1.0, 8.0, 12346);
    CHECK(a.h2 != c.h2);
}

TEST_CASE("same seed with more relays extends the realization in place") {
    auto small = generate_channel(8, 3, 2.0, 1.0, 8.0, 777);
    auto big = generate_channel(8, 5, 2.0, 1.0, 8.0, 777);
    for (std::size_t m = 0; m < 3; ++m)
        for (std::size_t n = 0; n < 8; ++n) {
            CHECK(small.h2_at(m, n) == big.h2_at(m, n));
            CHECK(small.g2_at(m, n) == big.g2_at(m, n));
        }
}

TEST_CASE("exponent law: gains at plc=2 are the squares of gains at plc=1") {
    auto one = generate_channel(8, 4, 1.0, 1.0, 8.0, 2024);
    auto two = generate_channel(8, 4, 2.0, 1.0, 8.0, 2024);
    for (std::size_t i = 0; i < one.h2.size(); ++i) {
        REQUIRE(one.h2[i] > kGainFloor); // clamping would break the law; seed avoids it
        REQUIRE(one.g2[i] > kGainFloor);
        CHECK(two.h2[i] == doctest::Approx(one.h2[i] * one.h2[i]).epsilon(1e-12));
        CHECK(two.g2[i] == doctest::Approx(one.g2[i] * one.g2[i]).epsilon(1e-12));
    }
}

TEST_CASE("gains never fall below the clamp floor") {
    // a huge exponent drives most draws below the floor
    auto chan = generate_channel(16, 4, 200.0, 1.0, 16.0, 5);
    bool any_clamped = false;
    for (double v : chan.h2) {
        CHECK(v >= kGainFloor);
        if (v == kGainFloor) any_clamped = true;
    }
    CHECK(any_clamped);
}

TEST_CASE("uniform base distribution keeps gains at or below 1") {
    auto chan = generate_channel(8, 3, 1.0, 1.0, 8.0, 31, BaseDist::uniform01);
    for (double v : chan.h2) {
        CHECK(v <= 1.0);
        CHECK(v >= kGainFloor);
    }
}

TEST_CASE("channel CSV dump round-trips exactly") {
    auto chan = generate_channel(5, 3, 2.0, 1.5, 5.0, 321);
    std::ostringstream out;
    save_channel_csv(chan, out);
    std::istringstream in(out.str());
    auto loaded = load_channel_csv(in, 1.5, 5.0);
    CHECK(loaded.n_relays == chan.n_relays);
    CHECK(loaded.n_subcarriers == chan.n_subcarriers);
    CHECK(loaded.h2 == chan.h2);
    CHECK(loaded.g2 == chan.g2);
}

TEST_CASE("channel CSV loader rejects malformed input") {
    std::istringstream missing_header("0,0,1.0,1.0\n");
    CHECK_THROWS_AS(load_channel_csv(missing_header, 1.0, 1.0), validation_error);
    std::istringstream incomplete("m,n,h2,g2\n0,1,1.0,1.0\n");
    CHECK_THROWS_AS(load_channel_csv(incomplete, 1.0, 1.0), validation_error);
    std::istringstream empty("m,n,h2,g2\n");
    CHECK_THROWS_AS(load_channel_csv(empty, 1.0, 1.0), validation_error);
}

TEST_CASE("generator validates its arguments") {
    CHECK_THROWS_AS(generate_channel(0, 4, 1.0, 1.0, 1.0, 1), validation_error);
    CHECK_THROWS_AS(generate_channel(4, 0, 1.0, 1.0, 1.0, 1), validation_error);
    CHECK_THROWS_AS(generate_channel(4, 2, -1.0, 1.0, 1.0, 1), validation_error);
    CHECK_THROWS_AS(generate_channel(4, 2, 1.0, 0.0, 1.0, 1), validation_error);
}
