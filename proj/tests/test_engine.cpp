#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "sevsim/engine.hpp"
#include "sevsim/output.hpp"

using namespace sevsim;
using Catch::Matchers::WithinAbs;

namespace {
ScenarioConfig fast_cfg() {
    ScenarioConfig c;
    c.world.n_zones = 20;
    c.world.n_ports = 4;
    c.world.fleet_size = 16;
    c.world.demand_per_min = 1.0;
    c.engine.horizon_weeks = 0.3;  // ~2.1 days
    c.engine.warmup_weeks = 0.1;   // attack launches ~mid-day 1
    return c;
}

ScenarioConfig clean_cfg() {
    ScenarioConfig c = fast_cfg();
    c.attack.initial_state = "all_susceptible";
    c.attack.beta = 0.0;
    return c;
}

// one attacked and one attack-free run on the same seed and world, shared
// across test cases (runs are pure functions of (config, seed))
const RunResult& attacked_run() {
    static RunResult r = run_scenario(fast_cfg(), 42);
    return r;
}

const RunResult& clean_run() {
    static RunResult r = run_scenario(clean_cfg(), 42);
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
} // namespace

TEST_CASE("config rejects out-of-domain values") {
    ScenarioConfig c = fast_cfg();
    c.battery.soc_tip = 1.2;
    REQUIRE_THROWS_AS(c.validate(), ConfigError);

    c = fast_cfg();
    c.attack.mu_delay_min = -3.0;
    REQUIRE_THROWS_AS(c.validate(), ConfigError);

    c = fast_cfg();
    c.detector.kind = "kld";
    c.detector.alpha = 99.0;
    REQUIRE_THROWS_AS(c.validate(), ConfigError);

    c = fast_cfg();
    c.engine.warmup_weeks = c.engine.horizon_weeks;
    REQUIRE_THROWS_AS(c.validate(), ConfigError);

    c = fast_cfg();
    REQUIRE_THROWS_AS(c.apply_scale("galactic"), ConfigError);
    REQUIRE_NOTHROW(fast_cfg().validate());
}

TEST_CASE("zero demand produces a quiet, valid run") {
    ScenarioConfig c = fast_cfg();
    c.world.demand_per_min = 0.0;
    auto r = run_scenario(c, 11);
    REQUIRE(r.summary.trips_total == 0);
    REQUIRE(r.summary.trips_fulfilled == 0);
    REQUIRE(r.summary.revenue_total_cents == 0);
    REQUIRE(r.trip_outcomes.empty());
    for (const auto& f : r.frames) REQUIRE(f.fulfillment_rate == 1.0);
}

TEST_CASE("identical config and seed reproduce the run byte for byte") {
    auto a = run_scenario(fast_cfg(), 7);
    auto b = run_scenario(fast_cfg(), 7);
    REQUIRE(summary_json(a.summary).dump(2) == summary_json(b.summary).dump(2));

    std::string pa = "/tmp/sevsim_det_a_" + std::to_string(getpid()) + ".csv";
    std::string pb = "/tmp/sevsim_det_b_" + std::to_string(getpid()) + ".csv";
    write_sessions_csv(a, pa);
    write_sessions_csv(b, pb);
    REQUIRE(slurp(pa) == slurp(pb));
    std::remove(pa.c_str());
    std::remove(pb.c_str());

    // a different seed is a genuinely different realization
    auto c = run_scenario(fast_cfg(), 8);
    REQUIRE(summary_json(a.summary).dump() != summary_json(c.summary).dump());
}

TEST_CASE("every frame accounts for the whole fleet") {
    const auto& r = attacked_run();
    int fleet = fast_cfg().world.fleet_size;
    REQUIRE_FALSE(r.frames.empty());
    for (const auto& f : r.frames) {
        int total = f.n_idle + f.n_cruising + f.n_dispatching + f.n_occupied + f.n_to_charger +
                    f.n_queued + f.n_charging + f.n_stranded;
        REQUIRE(total == fleet);
    }
}

TEST_CASE("session log invariants under attack and in its absence") {
    const auto& att = attacked_run();
    REQUIRE(att.summary.launch_tick == fast_cfg().warmup_ticks());
    REQUIRE(att.summary.sessions_total == static_cast<long long>(att.sessions.size()));
    REQUIRE(att.summary.sessions_delayed > 0);
    long long delayed = 0;
    for (const auto& s : att.sessions) {
        REQUIRE(s.actual_duration >= s.true_duration);
        REQUIRE(s.end_tick >= s.start_tick);
        REQUIRE(s.start_tick >= s.enqueue_tick);
        if (s.delayed) {
            ++delayed;
            REQUIRE(s.actual_duration > s.true_duration);
            // infection starts at launch; nothing earlier can be tampered with
            REQUIRE(s.end_tick > att.summary.launch_tick);
        }
    }
    REQUIRE(delayed == att.summary.sessions_delayed);
    REQUIRE(att.summary.mean_actual_duration_final_min >=
            att.summary.mean_true_duration_final_min);

    const auto& cln = clean_run();
    REQUIRE(cln.summary.sessions_delayed == 0);
    for (const auto& s : cln.sessions) REQUIRE(s.actual_duration == s.true_duration);
}

TEST_CASE("epoch ledger: port states conserve, repair costs are exact multiples") {
    const auto& att = attacked_run();
    int n_ports = fast_cfg().world.n_ports;
    REQUIRE_FALSE(att.epochs.empty());
    for (const auto& e : att.epochs) {
        REQUIRE(e.epoch_tick >= att.summary.launch_tick);
        REQUIRE(e.n_s + e.n_i + e.n_r == n_ports);
        REQUIRE(e.repair_cost_cents_cum == e.repair_visits_cum * 178);
        // no detector in this run: infections never clear
        REQUIRE(e.n_i == n_ports);
        REQUIRE(e.repair_visits_cum == 0);
    }

    const auto& cln = clean_run();
    for (const auto& e : cln.epochs) {
        REQUIRE(e.n_s + e.n_i + e.n_r == n_ports);
        REQUIRE(e.n_i == 0); // nothing seeded, nothing spreads
    }
}

TEST_CASE("revenue is exactly the sum of its receipts") {
    const auto& r = attacked_run();
    long long by_sev = 0;
    for (long long v : r.sev_revenue_cents) by_sev += v;
    long long by_trip = 0, fulfilled = 0;
    for (const auto& o : r.trip_outcomes) {
        if (o.dropoff_tick >= 0) {
            by_trip += o.fare_cents;
            ++fulfilled;
        }
    }
    REQUIRE(by_sev == r.summary.revenue_total_cents);
    REQUIRE(by_trip == r.summary.revenue_total_cents);
    REQUIRE(fulfilled == r.summary.trips_fulfilled);
    REQUIRE(r.summary.trips_total == static_cast<long long>(r.trips_final.size()));
    REQUIRE(r.summary.trips_fulfilled + r.summary.trips_expired <= r.summary.trips_total);
    REQUIRE(r.summary.revenue_final_window_cents <= r.summary.revenue_total_cents);
    REQUIRE(r.frames.back().revenue_cents_cum == r.summary.revenue_total_cents);
}

TEST_CASE("attack-free twin prices the attack") {
    const auto& att = attacked_run();
    const auto& cln = clean_run();
    auto loss = pair_baseline(att.summary, cln.summary);
    REQUIRE(loss.abs_cents ==
            cln.summary.revenue_final_window_cents - att.summary.revenue_final_window_cents);

    RunSummary other_seed = cln.summary;
    other_seed.seed += 1;
    REQUIRE_THROWS_AS(pair_baseline(att.summary, other_seed), std::invalid_argument);

    RunSummary other_window = cln.summary;
    other_window.final_window_ticks += 1;
    REQUIRE_THROWS_AS(pair_baseline(att.summary, other_window), std::invalid_argument);
}

TEST_CASE("detector loop wiring: epochs score ports and tally confusion") {
    ScenarioConfig c = fast_cfg();
    c.engine.warmup_weeks = 0.15;
    c.detector.kind = "kmeans";
    c.detector.min_train = 5; // small world: fewer warm-up sessions than at scale
    auto r = run_scenario(c, 13);

    REQUIRE_FALSE(r.model_json.empty());
    REQUIRE_FALSE(r.detections.empty());
    REQUIRE(r.summary.tally.total() == static_cast<long long>(r.detections.size()));
    for (const auto& d : r.detections) {
        REQUIRE(d.epoch_tick >= r.summary.launch_tick);
        REQUIRE(d.batch_size >= c.detector.batch_min);
        REQUIRE(d.kind == DetectorKind::kmeans);
    }
    // flagged infectious ports go through repair: visits and costs accrue
    if (r.summary.epidemic.repair_visits > 0) {
        REQUIRE(r.summary.epidemic.repair_cost_cents == r.summary.epidemic.repair_visits * 178);
        bool saw_recovered = false;
        for (const auto& e : r.epochs) saw_recovered = saw_recovered || e.n_r > 0;
        REQUIRE(saw_recovered);
    }
}
