#include <catch2/catch_amalgamated.hpp>

#include "thermorelay/relay.hpp"

using namespace thermorelay;

TEST_CASE("relay initialization follows the boundary convention") {
    CHECK(relay_init(0.0, 0.0, 1.0).output == +1);   // g0 = alpha -> +1
    CHECK(relay_init(1.0, 0.0, 1.0).output == -1);   // g0 = beta -> -1
    CHECK(relay_init(0.5, 0.0, 1.0).output == +1);   // strictly below beta
    CHECK(relay_init(2.0, 0.0, 1.0).output == -1);
    CHECK_FALSE(relay_init(0.0, 0.0, 1.0).last_switch_time.has_value());
}

TEST_CASE("relay rejects inverted thresholds") {
    CHECK_THROWS_AS(relay_init(0.0, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(relay_init(0.0, 2.0, 1.0), ConfigError);
}

TEST_CASE("threshold hits force the output and record switch moments") {
    RelayState st = relay_init(0.5, 0.0, 1.0);
    st.output = -1;

    const RelayState up = relay_cross(st, ThresholdHit::AtAlpha, 3.0);
    CHECK(up.output == +1);
    REQUIRE(up.last_switch_time.has_value());
    CHECK(*up.last_switch_time == 3.0);

    // Same-side hit: no switch, no recorded moment.
    const RelayState same = relay_cross(up, ThresholdHit::AtAlpha, 4.0);
    CHECK(same.output == +1);
    CHECK(*same.last_switch_time == 3.0);

    const RelayState down = relay_cross(same, ThresholdHit::AtBeta, 5.0);
    CHECK(down.output == -1);
    CHECK(*down.last_switch_time == 5.0);
}

TEST_CASE("relay rejects non-monotone event times") {
    RelayState st = relay_init(0.5, 0.0, 1.0);
    st = relay_cross(st, ThresholdHit::AtBeta, 2.0);
    CHECK_THROWS_AS(relay_cross(st, ThresholdHit::AtAlpha, 1.0), std::logic_error);
}

TEST_CASE("replaying a crossing sequence is deterministic") {
    auto play = [] {
        RelayState st = relay_init(0.2, 0.0, 1.0);
        st = relay_cross(st, ThresholdHit::AtBeta, 1.5);
        st = relay_cross(st, ThresholdHit::AtAlpha, 2.75);
        st = relay_cross(st, ThresholdHit::AtBeta, 4.125);
        return st;
    };
    const RelayState a = play();
    const RelayState b = play();
    CHECK(a.output == b.output);
    CHECK(*a.last_switch_time == *b.last_switch_time);
}
