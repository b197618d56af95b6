#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "relkd/schedule.hpp"

using namespace relkd;

TEST_CASE("ramp boundary values") {
    RampSchedule s{30, 60, 0.8};
    CHECK(ramp_weight(s, 1) == 0.0);
    CHECK(ramp_weight(s, 29) == 0.0);
    CHECK(ramp_weight(s, 30) == doctest::Approx(0.0));
    CHECK(ramp_weight(s, 45) == doctest::Approx(0.4));  // midpoint: lambda/2
    CHECK(ramp_weight(s, 60) == 0.8);
    CHECK(ramp_weight(s, 400) == 0.8);
}

TEST_CASE("ramp is monotone non-decreasing over [1,400]") {
    RampSchedule s{30, 60, 0.5};
    double prev = -1.0;
    for (int t = 1; t <= 400; ++t) {
        const double w = ramp_weight(s, t);
        CHECK(w >= prev);
        prev = w;
    }
}

TEST_CASE("invalid schedules are rejected") {
    CHECK_THROWS(ramp_weight(RampSchedule{0, 10, 0.5}, 1));
    CHECK_THROWS(ramp_weight(RampSchedule{10, 10, 0.5}, 1));
    CHECK_THROWS(ramp_weight(RampSchedule{10, 20, -0.5}, 1));
}

TEST_CASE("total loss assembly") {
    RampSchedule c{30, 60, 0.5};
    RampSchedule k{60, 90, 1.0};
    // before both starts: target only
    CHECK(total_loss(2.0, 5.0, 7.0, 10, c, k) == 2.0);
    // after both ends with unit weights
    RampSchedule c1{30, 60, 1.0};
    CHECK(total_loss(2.0, 5.0, 7.0, 100, c1, k) == doctest::Approx(14.0));
    // midpoint of the coarse ramp
    const double expected = 2.0 + 0.25 * 5.0 + ramp_weight(k, 45) * 7.0;
    CHECK(total_loss(2.0, 5.0, 7.0, 45, c, k) == doctest::Approx(expected));
}
