#include <catch2/catch_amalgamated.hpp>

#include "sevsim/epidemic.hpp"

using namespace sevsim;
using Catch::Matchers::WithinAbs;

namespace {
std::vector<EvsePort> make_ports(int n, PortState state) {
    std::vector<EvsePort> ports(n);
    for (int i = 0; i < n; ++i) {
        ports[i].id = i;
        ports[i].state = state;
    }
    return ports;
}
} // namespace

TEST_CASE("delay draws are non-negative with the configured mean") {
    AttackConfig a; // mu 10, sigma 0.1*mu = 1
    Rng rng(21);
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        int d = delay_draw(a, rng);
        REQUIRE(d >= 0);
        sum += d;
    }
    REQUIRE_THAT(sum / n, WithinAbs(10.0, 0.1));

    AttackConfig clamped;
    clamped.mu_delay_min = 0.0;
    clamped.sigma_delay_min = 5.0;
    for (int i = 0; i < 1000; ++i) REQUIRE(delay_draw(clamped, rng) >= 0);
}

TEST_CASE("sigma defaults to a tenth of mu unless set") {
    AttackConfig a;
    a.mu_delay_min = 15.0;
    REQUIRE_THAT(a.sigma(), WithinAbs(1.5, 1e-12));
    a.sigma_delay_min = 2.5;
    REQUIRE_THAT(a.sigma(), WithinAbs(2.5, 1e-12));
}

TEST_CASE("delay injection touches only infectious ports") {
    AttackConfig a;
    Rng rng(2);
    REQUIRE(inject_delay(30, PortState::S, a, rng) == 30);
    REQUIRE(inject_delay(30, PortState::R, a, rng) == 30);
    int inflated = inject_delay(30, PortState::I, a, rng);
    REQUIRE(inflated >= 30);
    REQUIRE_THROWS_AS(inject_delay(-1, PortState::I, a, rng), std::invalid_argument);
}

TEST_CASE("infection pressure matches beta") {
    AttackConfig a; // beta 0.1
    auto ports = make_ports(1000, PortState::S);
    Rng rng(5);
    auto out = step_epidemic(ports, 0, a, {}, rng);
    // Binomial(1000, 0.1): sd 9.5, so [60, 140] is a generous band
    REQUIRE(out.infections >= 60);
    REQUIRE(out.infections <= 140);
    REQUIRE(out.visits == 0);
    REQUIRE(static_cast<long long>(out.transitions.size()) == out.infections);
    long long n_i = 0;
    for (const auto& p : ports) n_i += p.state == PortState::I ? 1 : 0;
    REQUIRE(n_i == out.infections);
}

TEST_CASE("false alarms cost a visit but never transition the port") {
    AttackConfig a;
    a.beta = 0.0;
    auto ports = make_ports(3, PortState::S);
    Rng rng(1);
    auto out = step_epidemic(ports, 100, a, {{0, true}, {1, false}}, rng);
    REQUIRE(out.false_alarms == 1);
    REQUIRE(out.visits == 1);
    REQUIRE(out.confirmed == 0);
    REQUIRE(out.transitions.empty());
    for (const auto& p : ports) REQUIRE(p.state == PortState::S);
    REQUIRE(ports[0].repair_visits == 1);
    REQUIRE(ports[1].repair_visits == 0);
}

TEST_CASE("validated flags remove infectious ports") {
    AttackConfig a;
    a.beta = 0.0;
    auto ports = make_ports(2, PortState::I);
    ports[0].serving = 7;
    Rng rng(1);
    auto out = step_epidemic(ports, 500, a, {{0, true}}, rng);
    REQUIRE(out.confirmed == 1);
    REQUIRE(out.visits == 1);
    REQUIRE(ports[0].state == PortState::R);
    REQUIRE(ports[0].t_removed == 500);
    REQUIRE(ports[0].serving == -1);
    REQUIRE(ports[1].state == PortState::I); // unflagged port untouched
    REQUIRE(out.transitions.size() == 1);
    REQUIRE(out.transitions[0].from == PortState::I);
    REQUIRE(out.transitions[0].to == PortState::R);
}

TEST_CASE("repaired ports return to susceptible after the outage window") {
    AttackConfig a; // repair_duration 180
    auto ports = make_ports(1, PortState::R);
    ports[0].t_removed = 1000;
    Rng rng(1);

    auto early = step_epidemic(ports, 1000 + 150, a, {}, rng);
    REQUIRE(early.recoveries == 0);
    REQUIRE(ports[0].state == PortState::R);

    auto done = step_epidemic(ports, 1000 + 180, a, {}, rng);
    REQUIRE(done.recoveries == 1);
    REQUIRE(ports[0].state == PortState::S);
    REQUIRE(ports[0].t_removed == -1);
}

TEST_CASE("flags referencing unknown ports are rejected") {
    AttackConfig a;
    auto ports = make_ports(2, PortState::S);
    Rng rng(1);
    REQUIRE_THROWS_AS(step_epidemic(ports, 0, a, {{5, true}}, rng), std::out_of_range);
}

TEST_CASE("repair accounting is exact in cents") {
    AttackConfig a; // 1.78 per visit
    EpidemicStats stats;
    repair_accounting(stats, 100, a);
    REQUIRE(stats.repair_visits == 100);
    REQUIRE(stats.repair_cost_cents == 17800);
    repair_accounting(stats, 3, a);
    REQUIRE(stats.repair_cost_cents == 17800 + 534);
    REQUIRE_THROWS_AS(repair_accounting(stats, -1, a), std::invalid_argument);

    EpidemicStats empty;
    REQUIRE(empty.realized_recovery_rate() == 0.0);
    empty.infectious_port_epochs = 50;
    empty.confirmed_detections = 10;
    REQUIRE_THAT(empty.realized_recovery_rate(), WithinAbs(0.2, 1e-12));
}
