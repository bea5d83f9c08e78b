#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "sevsim/mobility.hpp"

using namespace sevsim;
using Catch::Matchers::WithinAbs;

namespace {
std::vector<Zone> flat_zones(int n) {
    std::vector<Zone> z(n);
    for (int i = 0; i < n; ++i) z[i].id = i;
    return z;
}

// Reference matcher, written independently of the production code: requests
// in (request_tick, id) order each claim the minimum-time free SEV within the
// radius, ties to the lower SEV id.
std::vector<Assignment> reference_match(std::vector<TripRequest> reqs,
                                        std::vector<MatchCandidate> sevs,
                                        const TravelTimeProvider& travel, int radius) {
    std::sort(reqs.begin(), reqs.end(), [](const TripRequest& a, const TripRequest& b) {
        return a.request_tick != b.request_tick ? a.request_tick < b.request_tick : a.id < b.id;
    });
    std::vector<bool> used(sevs.size(), false);
    std::vector<Assignment> out;
    for (const auto& r : reqs) {
        double best = std::numeric_limits<double>::infinity();
        int pick = -1;
        for (std::size_t i = 0; i < sevs.size(); ++i) {
            if (used[i]) continue;
            double t = travel.minutes(sevs[i].zone, r.origin_zone);
            if (t > radius) continue;
            if (t < best || (t == best && (pick < 0 || sevs[i].sev_id < sevs[pick].sev_id))) {
                best = t;
                pick = static_cast<int>(i);
            }
        }
        if (pick >= 0) {
            used[pick] = true;
            out.push_back({r.id, sevs[pick].sev_id});
        }
    }
    return out;
}
} // namespace

TEST_CASE("fares in integer cents") {
    MobilityConfig m; // 0.631 per mile, 0.287 per minute
    REQUIRE(fare_cents(2.5, 10.0, m) == 445);
    REQUIRE(fare_cents(15.0, 19.0, m) == 1492);
    REQUIRE(fare_cents(0.0, 0.0, m) == 0);
    REQUIRE_THROWS_AS(fare_cents(-1.0, 5.0, m), std::invalid_argument);
    REQUIRE_THROWS_AS(fare_cents(1.0, -5.0, m), std::invalid_argument);
}

TEST_CASE("dispatch priority rules") {
    auto zones = flat_zones(4);
    // minutes[from][to]; SEVs sit in zones, requests originate in zones
    std::vector<std::vector<double>> t{
        {0, 3, 9, 9}, {3, 0, 9, 9}, {9, 9, 0, 9}, {9, 9, 9, 0}};
    auto travel = TravelTimeProvider::matrix(zones, t);

    SECTION("earlier request claims the shared nearest SEV") {
        TripRequest a{0, 5, 1, 2, 1.0, TripStatus::open};
        TripRequest b{1, 4, 1, 2, 1.0, TripStatus::open};
        std::vector<const TripRequest*> reqs{&a, &b};
        std::vector<MatchCandidate> sevs{{7, 1}};
        auto out = greedy_match(reqs, sevs, travel, 10);
        REQUIRE(out.size() == 1);
        REQUIRE(out[0].request_id == 1); // b asked first
        REQUIRE(out[0].sev_id == 7);
    }

    SECTION("same tick: lower request id first; distance tie: lower sev id") {
        TripRequest a{2, 5, 0, 2, 1.0, TripStatus::open};
        TripRequest b{1, 5, 0, 2, 1.0, TripStatus::open};
        std::vector<const TripRequest*> reqs{&a, &b};
        std::vector<MatchCandidate> sevs{{9, 1}, {4, 1}}; // equidistant, ids out of order
        auto out = greedy_match(reqs, sevs, travel, 10);
        REQUIRE(out.size() == 2);
        REQUIRE(out[0].request_id == 1);
        REQUIRE(out[0].sev_id == 4);
        REQUIRE(out[1].request_id == 2);
        REQUIRE(out[1].sev_id == 9);
    }

    SECTION("out-of-radius requests stay open") {
        TripRequest a{0, 1, 3, 2, 1.0, TripStatus::open};
        std::vector<const TripRequest*> reqs{&a};
        std::vector<MatchCandidate> sevs{{0, 0}}; // 9 minutes away
        REQUIRE(greedy_match(reqs, sevs, travel, 8).empty());
        REQUIRE(greedy_match(reqs, sevs, travel, 9).size() == 1); // boundary is inclusive
    }
}

TEST_CASE("dispatch agrees with the reference matcher on random instances") {
    Rng rng(2024);
    for (int inst = 0; inst < 200; ++inst) {
        int n_zones = 2 + static_cast<int>(rng.below(9));
        auto zones = flat_zones(n_zones);
        std::vector<std::vector<double>> t(n_zones, std::vector<double>(n_zones, 0.0));
        for (int i = 0; i < n_zones; ++i)
            for (int j = 0; j < n_zones; ++j)
                if (i != j) t[i][j] = static_cast<double>(rng.below(15));
        auto travel = TravelTimeProvider::matrix(zones, t);

        int n_req = 1 + static_cast<int>(rng.below(10));
        int n_sev = 1 + static_cast<int>(rng.below(10));
        std::vector<TripRequest> reqs(n_req);
        for (int i = 0; i < n_req; ++i) {
            reqs[i].id = i;
            reqs[i].request_tick = static_cast<int>(rng.below(4)); // force tick collisions
            reqs[i].origin_zone = static_cast<int>(rng.below(n_zones));
        }
        std::vector<MatchCandidate> sevs(n_sev);
        for (int i = 0; i < n_sev; ++i)
            sevs[i] = {static_cast<int>(rng.below(100)), static_cast<int>(rng.below(n_zones))};
        int radius = 2 + static_cast<int>(rng.below(12));

        std::vector<const TripRequest*> req_ptrs;
        for (const auto& r : reqs) req_ptrs.push_back(&r);
        auto got = greedy_match(req_ptrs, sevs, travel, radius);
        auto want = reference_match(reqs, sevs, travel, radius);

        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            REQUIRE(got[i].request_id == want[i].request_id);
            REQUIRE(got[i].sev_id == want[i].sev_id);
        }
    }
}

TEST_CASE("charger choice weighs queue load against travel time") {
    auto zones = flat_zones(4);
    std::vector<std::vector<double>> t{
        {0, 1, 1, 1}, {1, 0, 1, 1}, {1, 1, 0, 1}, {1, 1, 1, 0}};
    auto travel = TravelTimeProvider::matrix(zones, t);

    SECTION("closed-form two- and three-way splits") {
        std::vector<EvseOption> two{{0, 1, 0, 25.0}, {1, 2, 1, std::log(3.0)}};
        auto p = softmax(choose_evse_logits(0, two, travel));
        REQUIRE_THAT(p[0], WithinAbs(0.75, 1e-12));
        REQUIRE_THAT(p[1], WithinAbs(0.25, 1e-12));

        two[1].mean_service_min = std::log(9.0);
        p = softmax(choose_evse_logits(0, two, travel));
        REQUIRE_THAT(p[0], WithinAbs(0.9, 1e-12));
        REQUIRE_THAT(p[1], WithinAbs(0.1, 1e-12));

        std::vector<EvseOption> three{
            {0, 1, 0, 25.0}, {1, 2, 1, std::log(2.0)}, {2, 3, 1, std::log(2.0)}};
        p = softmax(choose_evse_logits(0, three, travel));
        REQUIRE_THAT(p[0], WithinAbs(0.50, 1e-12));
        REQUIRE_THAT(p[1], WithinAbs(0.25, 1e-12));
        REQUIRE_THAT(p[2], WithinAbs(0.25, 1e-12));
    }

    SECTION("sampled choice matches the computed split") {
        std::vector<EvseOption> two{{0, 1, 0, 25.0}, {1, 2, 1, std::log(3.0)}};
        Rng rng(77);
        int picks0 = 0;
        const int n = 10000;
        for (int i = 0; i < n; ++i)
            if (choose_evse(0, two, travel, rng) == 0) ++picks0;
        REQUIRE_THAT(picks0 / static_cast<double>(n), WithinAbs(0.75, 0.02));
    }

    SECTION("no eligible port is an error, not a silent default") {
        Rng rng(1);
        REQUIRE_THROWS_AS(choose_evse(0, {}, travel, rng), std::runtime_error);
    }
}

TEST_CASE("supply-demand tracker forgets outside its window") {
    SupplyDemandTracker tr(3, 3);
    REQUIRE(tr.n_zones() == 3);

    tr.begin_tick(0);
    tr.record_order(0);
    tr.record_order(0);
    tr.observe_idle(1);
    tr.begin_tick(1);
    tr.record_order(0);
    tr.begin_tick(2);
    REQUIRE(tr.orders(0) == 3);
    REQUIRE(tr.idle(1) == 1);
    REQUIRE(tr.orders(2) == 0);

    tr.begin_tick(3); // ring wraps: tick-0 slot expires
    REQUIRE(tr.orders(0) == 1);
    REQUIRE(tr.idle(1) == 0);
}

TEST_CASE("reposition logits: demand gap per travel minute, self-zone floored") {
    auto zones = flat_zones(3);
    std::vector<std::vector<double>> t{{0, 2, 4}, {2, 0, 4}, {4, 4, 0}};
    auto travel = TravelTimeProvider::matrix(zones, t);

    SupplyDemandTracker tr(3, 10);
    tr.begin_tick(0);
    for (int i = 0; i < 3; ++i) tr.record_order(0);
    tr.observe_idle(0);
    tr.observe_idle(1);
    tr.observe_idle(1);
    for (int i = 0; i < 4; ++i) tr.record_order(2);

    auto logits = choose_reposition_logits(0, tr, travel);
    REQUIRE(logits.size() == 3);
    REQUIRE_THAT(logits[0], WithinAbs(2.0, 1e-12));  // gap +2 over floored 1 minute
    REQUIRE_THAT(logits[1], WithinAbs(-1.0, 1e-12)); // oversupplied zone repels
    REQUIRE_THAT(logits[2], WithinAbs(1.0, 1e-12));
}
