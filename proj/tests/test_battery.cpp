#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sevsim/battery.hpp"

using namespace sevsim;
using Catch::Matchers::WithinAbs;

namespace {
// independent fine-grained integrator for the CV segment (dt = 1e-3 min)
double fine_charge_minutes(double initial, double target, const BatteryConfig& b) {
    double spm = b.cc_rate_mi_per_min / b.range_miles;
    double minutes = 0.0;
    double soc = initial;
    if (soc < b.soc_tip) {
        double cc_to = std::min(target, b.soc_tip);
        minutes += (cc_to - soc) / spm;
        soc = cc_to;
    }
    const double dt = 1e-3;
    while (soc < target) {
        soc += dt * spm * cc_cv_current(std::min(soc, 1.0), b);
        minutes += dt;
    }
    return minutes;
}
} // namespace

TEST_CASE("cc-cv current profile") {
    BatteryConfig b;
    REQUIRE(cc_cv_current(0.0, b) == 1.0);
    REQUIRE(cc_cv_current(0.80, b) == 1.0);                     // tip inclusive
    REQUIRE_THAT(cc_cv_current(0.9, b), WithinAbs(0.5, 1e-12)); // halfway up the taper
    REQUIRE_THAT(cc_cv_current(1.0, b), WithinAbs(0.0, 1e-12));
    REQUIRE_THROWS_AS(cc_cv_current(-0.1, b), std::invalid_argument);
    REQUIRE_THROWS_AS(cc_cv_current(1.1, b), std::invalid_argument);
}

TEST_CASE("spoofed soc reporting lowers the requested current") {
    BatteryConfig b;
    REQUIRE(spoofed_current(0.55, 0.20, b) == 1.0); // reported 0.75, still CC
    REQUIRE_THAT(spoofed_current(0.70, 0.25, b), WithinAbs(0.25, 1e-12)); // reported 0.95
    REQUIRE_THAT(spoofed_current(0.90, 0.50, b), WithinAbs(0.0, 1e-12));  // report caps at 1.0
    REQUIRE(spoofed_current(0.3, 0.0, b) == cc_cv_current(0.3, b));
    REQUIRE_THROWS_AS(spoofed_current(0.5, -0.1, b), std::invalid_argument);
}

TEST_CASE("constant-current durations round up to whole minutes") {
    BatteryConfig b; // 5.13 mi/min on 220 mi of range
    REQUIRE(charge_duration(0.20, 0.78, b) == 25); // 24.87 analytic
    REQUIRE(charge_duration(0.60, 0.80, b) == 9);  // 8.58 analytic
    REQUIRE(charge_duration(0.40, 0.40, b) == 0);
    REQUIRE_THROWS_AS(charge_duration(0.5, 0.3, b), std::invalid_argument);
    REQUIRE_THROWS_AS(charge_duration(0.5, 1.0, b), std::invalid_argument); // CV never reaches 1
    REQUIRE_THROWS_AS(charge_duration(-0.1, 0.5, b), std::invalid_argument);
}

TEST_CASE("cv taper matches a fine-step integration") {
    BatteryConfig b;
    for (auto [lo, hi] : {std::pair{0.75, 0.95}, {0.3, 0.9}, {0.82, 0.93}}) {
        double fine = fine_charge_minutes(lo, hi, b);
        int engine = charge_duration(lo, hi, b);
        REQUIRE(std::abs(engine - fine) <= 1.0);
        REQUIRE(engine >= static_cast<int>(fine)); // never rounds below the true time
    }
}

TEST_CASE("depletion is linear in distance and floors at zero") {
    BatteryConfig b;
    REQUIRE_THAT(deplete(0.5, 110.0, b), WithinAbs(0.0, 1e-12)); // exactly half the range
    REQUIRE_THAT(deplete(1.0, 55.0, b), WithinAbs(0.75, 1e-12));
    REQUIRE(deplete(0.1, 500.0, b) == 0.0);
    REQUIRE(deplete(0.4, 0.0, b) == 0.4);
    REQUIRE_THROWS_AS(deplete(0.5, -1.0, b), std::invalid_argument);
}

TEST_CASE("charge targets stay within [current soc, tip]") {
    BatteryConfig b;
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        double t = draw_charge_target(0.5, b, rng);
        REQUIRE(t >= 0.5);
        REQUIRE(t <= b.soc_tip);
    }
    // current soc above the mean: clamp keeps the target reachable
    for (int i = 0; i < 100; ++i) REQUIRE(draw_charge_target(0.79, b, rng) >= 0.79);
}
