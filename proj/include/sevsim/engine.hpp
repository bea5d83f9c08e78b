#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "sevsim/battery.hpp"
#include "sevsim/config.hpp"
#include "sevsim/detector.hpp"
#include "sevsim/epidemic.hpp"
#include "sevsim/mobility.hpp"
#include "sevsim/rng.hpp"
#include "sevsim/world.hpp"

namespace sevsim {

enum class SevStatus { idle, cruising, dispatching, occupied, to_charger, queued, charging, stranded };

inline const char* to_string(SevStatus s) {
    switch (s) {
        case SevStatus::idle: return "idle";
        case SevStatus::cruising: return "cruising";
        case SevStatus::dispatching: return "dispatching";
        case SevStatus::occupied: return "occupied";
        case SevStatus::to_charger: return "to_charger";
        case SevStatus::queued: return "queued";
        case SevStatus::charging: return "charging";
        case SevStatus::stranded: return "stranded";
    }
    return "?";
}

struct SevAgent {
    int id = 0;
    double soc = 1.0;
    int zone = 0;
    SevStatus status = SevStatus::idle;
    int busy_until = 0;
    int leg_start = 0;
    int leg_ticks = 0;
    double leg_distance = 0.0; // miles charged against the battery on arrival
    int move_target_zone = -1;
    int trip = -1;  // request id while dispatching/occupied
    int port = -1;  // port id while to_charger/queued/charging
    int enqueue_tick = -1;
    int session = -1; // index into RunResult::sessions while charging
    double session_target = 0.0;
    long long revenue_cents = 0;
    int last_reposition = 0;
};

struct SessionRecord {
    int port_id = 0;
    int sev_id = 0;
    int enqueue_tick = 0;
    int start_tick = 0;
    int true_duration = 0;
    int actual_duration = 0;
    double initial_soc = 0.0;
    PortState port_state_at_start = PortState::S;
    int end_tick = 0;
    bool delayed = false;
};

struct DetectionRecord {
    int epoch_tick = 0;
    DetectorKind kind = DetectorKind::none;
    int port_id = 0;
    bool flag = false;
    bool truth = false;
    int batch_size = 0;
};

struct EpochRecord {
    int epoch_tick = 0;
    int n_s = 0, n_i = 0, n_r = 0;
    long long repair_visits_cum = 0;
    long long repair_cost_cents_cum = 0;
};

struct TripOutcome {
    int sev_id = -1;
    int assign_tick = -1;
    int pickup_tick = -1;
    int dropoff_tick = -1;
    long long fare_cents = 0;
};

struct MetricsFrame {
    int tick = 0;
    double fulfillment_rate = 1.0; // trailing hour, 1.0 when no requests resolved
    double sev_occupancy = 0.0;    // occupied / fleet
    double evse_occupancy = 0.0;   // serving / non-removed ports
    double mean_queue_wait = 0.0;  // sessions started this tick
    double mean_charge_min = 0.0;  // observed duration of sessions started this tick
    int sessions_started = 0;
    long long revenue_cents_cum = 0;
    int stranded_cum = 0;
    int open_requests = 0;
    int n_infectious = 0;
    int n_idle = 0, n_cruising = 0, n_dispatching = 0, n_occupied = 0;
    int n_to_charger = 0, n_queued = 0, n_charging = 0, n_stranded = 0;
};

struct RunSummary {
    std::uint64_t seed = 0;
    std::uint64_t world_fingerprint = 0;
    std::string build_stamp;
    std::string detector_kind = "none";
    double detector_alpha = 0.0;
    double mu_delay_min = 0.0;
    int horizon_ticks = 0;
    int warmup_ticks = 0;
    int launch_tick = 0;
    int final_window_ticks = 0;

    long long revenue_total_cents = 0;
    long long revenue_final_window_cents = 0;
    double revenue_per_driver_final_usd = 0.0;

    long long trips_total = 0;
    long long trips_fulfilled = 0;
    long long trips_expired = 0;
    long long fulfilled_final_window = 0;
    long long expired_final_window = 0;

    long long sessions_total = 0;
    long long sessions_delayed = 0;
    double mean_queue_wait_final_min = 0.0;
    double mean_true_duration_final_min = 0.0;
    double mean_actual_duration_final_min = 0.0;

    int stranded_total = 0;

    EpidemicStats epidemic;
    double mean_s_share = 0.0, mean_i_share = 0.0, mean_r_share = 0.0;

    ConfusionTally tally;
    DetectionMetrics detection;
    // episode view: one positive per infection episode (caught or never caught),
    // one false positive per false-alarm visit
    long long episodes_detected = 0;
    long long episodes_missed = 0;
    DetectionMetrics episode_metrics;
    bool detector_em_warning = false;
};

struct RunResult {
    RunSummary summary;
    std::vector<MetricsFrame> frames;
    std::vector<SessionRecord> sessions;
    std::vector<EpochRecord> epochs;
    std::vector<DetectionRecord> detections;
    std::vector<PortTransition> transitions;
    std::vector<TripOutcome> trip_outcomes;
    std::vector<TripRequest> trips_final; // request log with final status
    std::vector<long long> sev_revenue_cents;
    std::string model_json; // trained detector parameters, empty without a detector
};

// Deterministic single-threaded minute-tick simulation of the fleet, the
// charging network, the port epidemic and the detector loop.
class Engine {
public:
    Engine(const ScenarioConfig& cfg, const World& world, std::uint64_t seed)
        : cfg_(cfg), world_(world), seed_(seed),
          mobility_rng_(Rng::stream(seed, "mobility")),
          attack_rng_(Rng::stream(seed, "attack")),
          detect_rng_(Rng::stream(seed, "detect")),
          tracker_(static_cast<int>(world.zones.size()), cfg.mobility.demand_window_min) {
        cfg_.validate();
        if (world_.zones.empty()) throw std::invalid_argument("engine: world has no zones");
        if (world_.ports.empty()) throw std::invalid_argument("engine: world has no ports");
    }

    RunResult run() {
        init();
        const int horizon = cfg_.horizon_ticks();
        const int launch = cfg_.warmup_ticks();
        for (int t = 0; t < horizon; ++t) {
            tracker_.begin_tick(t);
            fulfilled_window_[t % 60] = 0; // this tick reuses the slot of tick t-60
            expired_window_[t % 60] = 0;
            if (t == launch) launch_attack(t);
            arrive_requests(t);
            expire_requests(t);
            match_requests(t);
            advance_sevs(t);
            charging_decisions(t);
            port_service(t);
            reposition(t);
            if (t > launch) epoch_block(t, launch);
            observe_idle(t);
            record_frame(t);
        }
        finalize(horizon, launch);
        return std::move(result_);
    }

private:
    struct PortRuntime {
        EvsePort port;
        int busy_until = 0;     // end of the in-flight session, if any
        int active_session = -1;
        std::vector<std::pair<int, FeatureVec>> history; // (end_tick, features)
        std::size_t history_lo = 0;
        long long completions = 0;
        long long completions_at_last_score = -1;
    };

    // ---- setup ----

    void init() {
        result_ = RunResult{};
        fleet_.clear();
        fleet_.resize(cfg_.world.fleet_size);
        int nz = static_cast<int>(world_.zones.size());
        for (int i = 0; i < cfg_.world.fleet_size; ++i) {
            SevAgent& s = fleet_[i];
            s.id = i;
            s.zone = static_cast<int>(mobility_rng_.below(nz));
            s.soc = mobility_rng_.uniform(cfg_.engine.init_soc_lo, cfg_.engine.init_soc_hi);
        }
        ports_.clear();
        ports_.resize(world_.ports.size());
        for (std::size_t i = 0; i < world_.ports.size(); ++i) {
            ports_[i].port.id = world_.ports[i].id;
            ports_[i].port.zone = world_.ports[i].zone;
        }
        trips_ = world_.trips;
        result_.trip_outcomes.assign(trips_.size(), TripOutcome{});
        next_trip_ = 0;
        open_.clear();
        fulfilled_window_.assign(60, 0);
        expired_window_.assign(60, 0);
        fulfilled_events_.clear();
        expired_events_.clear();
        started_this_tick_.clear();
        revenue_cents_ = 0;
        stranded_ = 0;
        pending_flags_.clear();
        detector_.reset();
        tracker_ = SupplyDemandTracker(static_cast<int>(world_.zones.size()),
                                       cfg_.mobility.demand_window_min);
    }

    // ---- per-tick phases ----

    void arrive_requests(int t) {
        while (next_trip_ < trips_.size() && trips_[next_trip_].request_tick == t) {
            open_.push_back(static_cast<int>(next_trip_));
            ++next_trip_;
        }
        // requests dated before t (unsorted input would be a bug upstream)
        assert(next_trip_ >= trips_.size() || trips_[next_trip_].request_tick > t);
    }

    void expire_requests(int t) {
        std::vector<int> keep;
        keep.reserve(open_.size());
        for (int idx : open_) {
            TripRequest& r = trips_[idx];
            if (t - r.request_tick >= cfg_.mobility.max_wait_min) {
                r.status = TripStatus::expired;
                count_expired(t);
            } else {
                keep.push_back(idx);
            }
        }
        open_.swap(keep);
    }

    void match_requests(int t) {
        if (open_.empty()) return;
        std::vector<const TripRequest*> reqs;
        reqs.reserve(open_.size());
        for (int idx : open_) reqs.push_back(&trips_[idx]);
        std::vector<MatchCandidate> avail;
        for (const SevAgent& s : fleet_) {
            bool free = s.status == SevStatus::idle || s.status == SevStatus::cruising;
            if (free && s.soc > cfg_.mobility.charge_trigger_soc)
                avail.push_back(MatchCandidate{s.id, s.zone});
        }
        if (avail.empty()) return;
        auto assignments = greedy_match(reqs, avail, world_.travel, cfg_.mobility.dispatch_radius_min);
        for (const Assignment& a : assignments) {
            TripRequest& r = trips_[a.request_id];
            SevAgent& s = fleet_[a.sev_id];
            if (s.status == SevStatus::cruising) abandon_cruise(s, t);
            r.status = TripStatus::assigned;
            result_.trip_outcomes[r.id].sev_id = s.id;
            result_.trip_outcomes[r.id].assign_tick = t;
            s.status = SevStatus::dispatching;
            s.trip = r.id;
            begin_move(s, t, r.origin_zone);
            open_.erase(std::find(open_.begin(), open_.end(), a.request_id));
        }
    }

    void advance_sevs(int t) {
        for (SevAgent& s : fleet_) {
            // a transition may schedule another zero-length leg in the same tick
            for (int hops = 0; hops < 8; ++hops) {
                if (s.busy_until > t) break;
                if (s.status == SevStatus::dispatching) {
                    if (!finish_move(s, t)) { strand_dispatch(s, t); break; }
                    on_pickup(s, t);
                } else if (s.status == SevStatus::occupied) {
                    bool ok = finish_move(s, t);
                    on_dropoff(s, t);
                    if (!ok) { strand(s, t); break; }
                } else if (s.status == SevStatus::cruising) {
                    bool ok = finish_move(s, t);
                    s.status = SevStatus::idle;
                    if (!ok) { strand(s, t); break; }
                    break;
                } else if (s.status == SevStatus::to_charger) {
                    bool ok = finish_move(s, t);
                    if (!ok) { s.port = -1; strand(s, t); break; }
                    enqueue_at_port(s, t);
                    break;
                } else if (s.status == SevStatus::charging) {
                    finish_session(s, t);
                } else if (s.status == SevStatus::stranded) {
                    recover_stranded(s, t);
                    break;
                } else {
                    break; // idle, queued
                }
            }
        }
    }

    void charging_decisions(int t) {
        // queue abandonment first: waiting too long prompts a new choice
        for (PortRuntime& pr : ports_) {
            auto& q = pr.port.queue;
            for (std::size_t i = 0; i < q.size();) {
                SevAgent& s = fleet_[q[i]];
                if (t - s.enqueue_tick >= cfg_.mobility.queue_abandon_min) {
                    q.erase(q.begin() + static_cast<std::ptrdiff_t>(i));
                    s.status = SevStatus::idle;
                    s.port = -1;
                    send_to_charger(s, t);
                } else {
                    ++i;
                }
            }
        }
        for (SevAgent& s : fleet_) {
            if (s.status == SevStatus::idle && s.soc <= cfg_.mobility.charge_trigger_soc)
                send_to_charger(s, t);
        }
    }

    void port_service(int t) {
        for (PortRuntime& pr : ports_) {
            EvsePort& p = pr.port;
            while (p.state != PortState::R && p.serving < 0 && pr.busy_until <= t && !p.queue.empty()) {
                int sev_id = p.queue.front();
                p.queue.pop_front();
                start_session(fleet_[sev_id], pr, t);
            }
        }
    }

    void reposition(int t) {
        for (SevAgent& s : fleet_) {
            if (s.status != SevStatus::idle) continue;
            if (s.soc <= cfg_.mobility.charge_trigger_soc) continue;
            if (t - s.last_reposition < cfg_.mobility.reposition_interval_min) continue;
            int target = choose_reposition(s.zone, tracker_, world_.travel, mobility_rng_);
            s.last_reposition = t;
            if (target == s.zone) continue;
            s.status = SevStatus::cruising;
            begin_move(s, t, target);
        }
    }

    void epoch_block(int t, int launch) {
        bool ad_due = detector_ && (t - launch) % cfg_.detector.ad_epoch_min == 0;
        bool step_due = (t - launch) % cfg_.attack.infection_epoch_min == 0;
        if (ad_due) score_ports(t);
        if (!step_due) return;

        for (const PortRuntime& pr : ports_)
            if (pr.port.state == PortState::I) ++result_.summary.epidemic.infectious_port_epochs;

        std::vector<EvsePort> snapshot;
        snapshot.reserve(ports_.size());
        for (PortRuntime& pr : ports_) snapshot.push_back(pr.port);
        EpidemicStepOutcome out = step_epidemic(snapshot, t, cfg_.attack, pending_flags_, attack_rng_);
        for (std::size_t i = 0; i < ports_.size(); ++i) ports_[i].port = snapshot[i];
        pending_flags_.clear();

        for (const PortTransition& tr : out.transitions) {
            result_.transitions.push_back(tr);
            if (tr.from == PortState::I && tr.to == PortState::R) evacuate_queue(ports_[tr.port], t);
            if (tr.from == PortState::S && tr.to == PortState::I) extend_inflight(ports_[tr.port], t);
            if (tr.from == PortState::R && tr.to == PortState::S) reset_port_log(ports_[tr.port]);
        }
        result_.summary.epidemic.confirmed_detections += out.confirmed;
        result_.summary.epidemic.false_alarms += out.false_alarms;
        repair_accounting(result_.summary.epidemic, out.visits, cfg_.attack);
        record_epoch(t);
    }

    void observe_idle(int) {
        for (const SevAgent& s : fleet_)
            if (s.status == SevStatus::idle) tracker_.observe_idle(s.zone);
    }

    // ---- movement ----

    void begin_move(SevAgent& s, int t, int target_zone) {
        s.leg_start = t;
        s.leg_ticks = world_.travel.ticks(s.zone, target_zone);
        s.leg_distance = world_.travel.distance_miles(s.zone, target_zone);
        s.move_target_zone = target_zone;
        s.busy_until = t + s.leg_ticks;
    }

    // applies arrival: depletes the leg, moves the zone. false = battery ran dry.
    bool finish_move(SevAgent& s, int) {
        double need = s.leg_distance / cfg_.battery.range_miles;
        bool ok = s.soc + 1e-12 >= need;
        s.soc = std::max(0.0, s.soc - need);
        if (s.move_target_zone >= 0) s.zone = s.move_target_zone;
        s.move_target_zone = -1;
        s.leg_distance = 0.0;
        return ok;
    }

    void abandon_cruise(SevAgent& s, int t) {
        // pro-rata energy for the partial leg; position stays at the leg origin
        if (s.leg_ticks > 0) {
            double frac = std::min(1.0, static_cast<double>(t - s.leg_start) / s.leg_ticks);
            s.soc = std::max(0.0, s.soc - frac * s.leg_distance / cfg_.battery.range_miles);
        }
        s.move_target_zone = -1;
        s.leg_distance = 0.0;
        s.status = SevStatus::idle;
        s.busy_until = t;
    }

    // ---- trips ----

    void on_pickup(SevAgent& s, int t) {
        TripRequest& r = trips_[s.trip];
        result_.trip_outcomes[r.id].pickup_tick = t;
        tracker_.record_order(r.origin_zone);
        s.status = SevStatus::occupied;
        // in-vehicle motion follows zone travel time; fare and battery use the trip's miles
        s.leg_start = t;
        s.leg_ticks = world_.travel.ticks(r.origin_zone, r.dest_zone);
        s.leg_distance = r.distance_miles;
        s.move_target_zone = r.dest_zone;
        s.busy_until = t + s.leg_ticks;
    }

    void on_dropoff(SevAgent& s, int t) {
        TripRequest& r = trips_[s.trip];
        r.status = TripStatus::fulfilled;
        long long fare = fare_cents(r.distance_miles,
                                    world_.travel.minutes(r.origin_zone, r.dest_zone), cfg_.mobility);
        s.revenue_cents += fare;
        revenue_cents_ += fare;
        result_.trip_outcomes[r.id].dropoff_tick = t;
        result_.trip_outcomes[r.id].fare_cents = fare;
        count_fulfilled(t);
        s.trip = -1;
        s.status = SevStatus::idle;
        s.busy_until = t;
    }

    void strand_dispatch(SevAgent& s, int t) {
        TripRequest& r = trips_[s.trip];
        r.status = TripStatus::expired;
        count_expired(t);
        s.trip = -1;
        strand(s, t);
    }

    void strand(SevAgent& s, int t) {
        s.status = SevStatus::stranded;
        s.soc = 0.0;
        s.busy_until = t + cfg_.engine.stranded_park_min;
        ++stranded_;
    }

    void recover_stranded(SevAgent& s, int t) {
        int best = -1;
        double best_t = 0.0;
        for (const PortRuntime& pr : ports_) {
            if (pr.port.state == PortState::R) continue;
            double tt = world_.travel.minutes(s.zone, pr.port.zone);
            if (best < 0 || tt < best_t) {
                best = pr.port.id;
                best_t = tt;
            }
        }
        if (best < 0) { // every port removed: wait another parking period
            s.busy_until = t + cfg_.engine.stranded_park_min;
            return;
        }
        s.soc = cfg_.engine.stranded_recover_soc;
        s.zone = ports_[best].port.zone;
        s.status = SevStatus::queued;
        s.port = best;
        s.enqueue_tick = t;
        ports_[best].port.queue.push_back(s.id);
    }

    // ---- charging ----

    void send_to_charger(SevAgent& s, int t) {
        std::vector<EvseOption> options;
        options.reserve(ports_.size());
        for (const PortRuntime& pr : ports_) {
            if (pr.port.state == PortState::R) continue;
            EvseOption o;
            o.port_id = pr.port.id;
            o.zone = pr.port.zone;
            o.queue_len = static_cast<int>(pr.port.queue.size()) + (pr.port.serving >= 0 ? 1 : 0);
            o.mean_service_min = mean_service_min(pr, t);
            options.push_back(o);
        }
        if (options.empty()) return; // fleet-wide outage: stay idle, retry next tick
        int port_id = choose_evse(s.zone, options, world_.travel, mobility_rng_);
        s.status = SevStatus::to_charger;
        s.port = port_id;
        begin_move(s, t, ports_[port_id].port.zone);
        if (s.busy_until <= t) { // same-zone charger
            if (!finish_move(s, t)) {
                s.port = -1;
                strand(s, t);
                return;
            }
            enqueue_at_port(s, t);
        }
    }

    double mean_service_min(const PortRuntime& pr, int t) const {
        double sum = 0.0;
        int n = 0;
        for (std::size_t i = pr.history_lo; i < pr.history.size(); ++i) {
            if (pr.history[i].first > t - cfg_.detector.batch_window_min) {
                sum += pr.history[i].second[0];
                ++n;
            }
        }
        return n > 0 ? sum / n : cfg_.mobility.queue_cold_start_min;
    }

    void enqueue_at_port(SevAgent& s, int t) {
        PortRuntime& pr = ports_[s.port];
        if (pr.port.state == PortState::R) {
            // removed while we were driving: choose again
            s.status = SevStatus::idle;
            s.port = -1;
            send_to_charger(s, t);
            return;
        }
        s.status = SevStatus::queued;
        s.enqueue_tick = t;
        pr.port.queue.push_back(s.id);
    }

    void start_session(SevAgent& s, PortRuntime& pr, int t) {
        double target = draw_charge_target(s.soc, cfg_.battery, mobility_rng_);
        int true_dur = charge_duration(s.soc, target, cfg_.battery);
        int actual = inject_delay(true_dur, pr.port.state, cfg_.attack, attack_rng_);

        SessionRecord rec;
        rec.port_id = pr.port.id;
        rec.sev_id = s.id;
        rec.enqueue_tick = s.enqueue_tick;
        rec.start_tick = t;
        rec.true_duration = true_dur;
        rec.actual_duration = actual;
        rec.initial_soc = s.soc;
        rec.port_state_at_start = pr.port.state;
        rec.end_tick = t + actual;
        rec.delayed = pr.port.state == PortState::I;
        result_.sessions.push_back(rec);

        int idx = static_cast<int>(result_.sessions.size()) - 1;
        s.status = SevStatus::charging;
        s.session = idx;
        s.session_target = target;
        s.busy_until = t + actual;
        pr.port.serving = s.id;
        pr.busy_until = t + actual;
        pr.active_session = idx;
        started_this_tick_.push_back(idx);
        if (actual == 0) finish_session(s, t);
    }

    void finish_session(SevAgent& s, int t) {
        SessionRecord& rec = result_.sessions[s.session];
        PortRuntime& pr = ports_[rec.port_id];
        s.soc = s.session_target;
        s.status = SevStatus::idle;
        s.port = -1;
        s.session = -1;
        s.busy_until = t;
        if (pr.port.serving == s.id) pr.port.serving = -1;
        if (pr.active_session >= 0 && result_.sessions[pr.active_session].sev_id == s.id)
            pr.active_session = -1;
        FeatureVec f{static_cast<double>(rec.actual_duration),
                     static_cast<double>(rec.start_tick % 1440), rec.initial_soc};
        pr.history.emplace_back(rec.end_tick, f);
        ++pr.completions;
    }

    // ---- attack and detection ----

    void launch_attack(int t) {
        if (cfg_.detector.kind != "none") train_detector(t);
        if (cfg_.attack.initial_state == "all_infectious") {
            for (PortRuntime& pr : ports_) {
                if (pr.port.state != PortState::S) continue;
                pr.port.state = PortState::I;
                pr.port.t_infected = t;
                result_.transitions.push_back({t, pr.port.id, PortState::S, PortState::I});
                extend_inflight(pr, t);
            }
        }
        result_.summary.launch_tick = t;
    }

    void train_detector(int t) {
        // skip the cold-start day when there is enough later history; the
        // fleet's initial state distorts first-day session profiles
        int lo = t >= 2880 ? 1440 : 0;
        std::vector<FeatureVec> train_data;
        std::vector<std::vector<FeatureVec>> per_port(ports_.size());
        for (const SessionRecord& rec : result_.sessions) {
            if (rec.end_tick > lo && rec.end_tick <= t) {
                FeatureVec f{static_cast<double>(rec.actual_duration),
                             static_cast<double>(rec.start_tick % 1440), rec.initial_soc};
                train_data.push_back(f);
                per_port[static_cast<std::size_t>(rec.port_id)].push_back(f);
            }
        }
        detector_.emplace(Detector::train(cfg_.detector, train_data, detect_rng_));
        for (std::size_t p = 0; p < per_port.size(); ++p)
            detector_->calibrate_port(static_cast<int>(p), per_port[p]);
        result_.summary.detector_em_warning = !detector_->em_converged();
        result_.model_json = detector_->model_json().dump(2);
    }

    void score_ports(int t) {
        for (PortRuntime& pr : ports_) {
            if (pr.port.state == PortState::R) continue;
            if (pr.completions == pr.completions_at_last_score) continue; // no fresh evidence
            std::vector<FeatureVec> batch;
            for (std::size_t i = pr.history_lo; i < pr.history.size(); ++i) {
                if (pr.history[i].first > t - cfg_.detector.batch_window_min)
                    batch.push_back(pr.history[i].second);
            }
            if (static_cast<int>(batch.size()) < cfg_.detector.batch_min) continue;
            bool flag = detector_->detect_port(batch, pr.port.id);
            bool truth = pr.port.state == PortState::I;
            result_.detections.push_back(DetectionRecord{t, detector_->kind(), pr.port.id, flag,
                                                         truth, static_cast<int>(batch.size())});
            result_.summary.tally.add(truth, flag);
            pending_flags_.emplace_back(pr.port.id, flag);
            pr.completions_at_last_score = pr.completions;
            // lazy prune of aged-out history
            while (pr.history_lo < pr.history.size() &&
                   pr.history[pr.history_lo].first <= t - cfg_.detector.batch_window_min)
                ++pr.history_lo;
        }
    }

    void evacuate_queue(PortRuntime& pr, int t) {
        std::deque<int> q;
        q.swap(pr.port.queue);
        for (int sev_id : q) {
            SevAgent& s = fleet_[sev_id];
            s.status = SevStatus::idle;
            s.port = -1;
            send_to_charger(s, t);
        }
    }

    // A repaired station comes back re-imaged with an empty charging log, so
    // detection after recovery starts from current-era sessions only.
    void reset_port_log(PortRuntime& pr) {
        pr.history.clear();
        pr.history_lo = 0;
        pr.completions_at_last_score = pr.completions;
    }

    void extend_inflight(PortRuntime& pr, int t) {
        if (pr.active_session < 0 || pr.busy_until <= t) return;
        // the malware now controls an in-progress session: stretch the remainder
        int extra = delay_draw(cfg_.attack, attack_rng_);
        SessionRecord& rec = result_.sessions[pr.active_session];
        rec.actual_duration += extra;
        rec.end_tick += extra;
        rec.delayed = rec.delayed || extra > 0 || cfg_.attack.mu_delay_min > 0.0;
        pr.busy_until += extra;
        fleet_[rec.sev_id].busy_until += extra;
    }

    // ---- metrics ----

    void count_fulfilled(int t) { ++fulfilled_window_[t % 60]; fulfilled_events_.push_back(t); }
    void count_expired(int t) { ++expired_window_[t % 60]; expired_events_.push_back(t); }

    void record_epoch(int t) {
        EpochRecord e;
        e.epoch_tick = t;
        for (const PortRuntime& pr : ports_) {
            switch (pr.port.state) {
                case PortState::S: ++e.n_s; break;
                case PortState::I: ++e.n_i; break;
                case PortState::R: ++e.n_r; break;
            }
        }
        e.repair_visits_cum = result_.summary.epidemic.repair_visits;
        e.repair_cost_cents_cum = result_.summary.epidemic.repair_cost_cents;
        result_.epochs.push_back(e);
    }

    void record_frame(int t) {
        MetricsFrame f;
        f.tick = t;
        // trailing-hour window totals (ring slots hold one tick each)
        long long fw = 0, ew = 0;
        for (int v : fulfilled_window_) fw += v;
        for (int v : expired_window_) ew += v;
        f.fulfillment_rate = (fw + ew) > 0 ? static_cast<double>(fw) / static_cast<double>(fw + ew) : 1.0;
        int serving = 0, alive = 0;
        for (const PortRuntime& pr : ports_) {
            if (pr.port.state != PortState::R) {
                ++alive;
                if (pr.port.serving >= 0) ++serving;
            }
            if (pr.port.state == PortState::I) ++f.n_infectious;
        }
        f.evse_occupancy = alive > 0 ? static_cast<double>(serving) / alive : 0.0;
        for (const SevAgent& s : fleet_) {
            switch (s.status) {
                case SevStatus::idle: ++f.n_idle; break;
                case SevStatus::cruising: ++f.n_cruising; break;
                case SevStatus::dispatching: ++f.n_dispatching; break;
                case SevStatus::occupied: ++f.n_occupied; break;
                case SevStatus::to_charger: ++f.n_to_charger; break;
                case SevStatus::queued: ++f.n_queued; break;
                case SevStatus::charging: ++f.n_charging; break;
                case SevStatus::stranded: ++f.n_stranded; break;
            }
        }
        f.sev_occupancy = static_cast<double>(f.n_occupied) / static_cast<double>(fleet_.size());
        f.sessions_started = static_cast<int>(started_this_tick_.size());
        if (!started_this_tick_.empty()) {
            double qw = 0.0, cd = 0.0;
            for (int idx : started_this_tick_) {
                const SessionRecord& rec = result_.sessions[idx];
                qw += rec.start_tick - rec.enqueue_tick;
                cd += rec.actual_duration;
            }
            f.mean_queue_wait = qw / f.sessions_started;
            f.mean_charge_min = cd / f.sessions_started;
        }
        started_this_tick_.clear();
        f.revenue_cents_cum = revenue_cents_;
        f.stranded_cum = stranded_;
        f.open_requests = static_cast<int>(open_.size());
        result_.frames.push_back(f);
    }

    void finalize(int horizon, int launch) {
        RunSummary& s = result_.summary;
        s.seed = seed_;
        s.world_fingerprint = world_.fingerprint();
#ifdef SEVSIM_GIT_DESC
        s.build_stamp = SEVSIM_GIT_DESC;
#else
        s.build_stamp = "untracked";
#endif
        s.detector_kind = cfg_.detector.kind;
        s.detector_alpha = cfg_.detector.kind == "none" ? 0.0 : cfg_.detector.effective_alpha();
        s.mu_delay_min = cfg_.attack.mu_delay_min;
        s.horizon_ticks = horizon;
        s.warmup_ticks = launch;
        s.final_window_ticks = std::min(10080, horizon - launch);
        int window_start = horizon - s.final_window_ticks;

        // any request not yet resolved at the horizon counts as expired
        for (TripRequest& r : trips_) {
            if (r.status == TripStatus::open || r.status == TripStatus::assigned)
                r.status = TripStatus::expired;
        }
        s.trips_total = static_cast<long long>(trips_.size());
        for (const TripRequest& r : trips_) {
            if (r.status == TripStatus::fulfilled) ++s.trips_fulfilled;
            else ++s.trips_expired;
        }
        for (int t : fulfilled_events_)
            if (t >= window_start) ++s.fulfilled_final_window;
        for (int t : expired_events_)
            if (t >= window_start) ++s.expired_final_window;

        s.revenue_total_cents = revenue_cents_;
        long long win = 0;
        for (std::size_t i = 0; i < trips_.size(); ++i) {
            const TripOutcome& o = result_.trip_outcomes[i];
            if (o.dropoff_tick >= window_start && trips_[i].status == TripStatus::fulfilled)
                win += o.fare_cents;
        }
        s.revenue_final_window_cents = win;
        s.revenue_per_driver_final_usd =
            static_cast<double>(win) / 100.0 / static_cast<double>(fleet_.size());

        s.sessions_total = static_cast<long long>(result_.sessions.size());
        double qsum = 0.0, tsum = 0.0, asum = 0.0;
        long long nfin = 0;
        for (const SessionRecord& rec : result_.sessions) {
            if (rec.delayed) ++s.sessions_delayed;
            if (rec.start_tick >= window_start) {
                qsum += rec.start_tick - rec.enqueue_tick;
                tsum += rec.true_duration;
                asum += rec.actual_duration;
                ++nfin;
            }
        }
        if (nfin > 0) {
            s.mean_queue_wait_final_min = qsum / nfin;
            s.mean_true_duration_final_min = tsum / nfin;
            s.mean_actual_duration_final_min = asum / nfin;
        }
        s.stranded_total = stranded_;

        double ss = 0, si = 0, sr = 0;
        long long ne = 0;
        for (const EpochRecord& e : result_.epochs) {
            if (e.epoch_tick >= window_start) {
                ss += e.n_s;
                si += e.n_i;
                sr += e.n_r;
                ++ne;
            }
        }
        if (ne > 0) {
            double np = static_cast<double>(ports_.size());
            s.mean_s_share = ss / (ne * np);
            s.mean_i_share = si / (ne * np);
            s.mean_r_share = sr / (ne * np);
        }
        s.detection = evaluate(s.tally);

        for (const PortTransition& tr : result_.transitions)
            if (tr.from == PortState::I && tr.to == PortState::R) ++s.episodes_detected;
        for (const PortRuntime& pr : ports_)
            if (pr.port.state == PortState::I) ++s.episodes_missed;
        ConfusionTally ep;
        ep.tp = s.episodes_detected;
        ep.fn = s.episodes_missed;
        ep.fp = s.epidemic.false_alarms;
        s.episode_metrics = evaluate(ep);

        result_.trips_final = trips_;
        result_.sev_revenue_cents.clear();
        for (const SevAgent& a : fleet_) result_.sev_revenue_cents.push_back(a.revenue_cents);
    }

    ScenarioConfig cfg_;
    const World& world_;
    std::uint64_t seed_;
    Rng mobility_rng_, attack_rng_, detect_rng_;
    SupplyDemandTracker tracker_;

    std::vector<SevAgent> fleet_;
    std::vector<PortRuntime> ports_;
    std::vector<TripRequest> trips_;
    std::size_t next_trip_ = 0;
    std::vector<int> open_;
    std::optional<Detector> detector_;
    std::vector<std::pair<int, bool>> pending_flags_;

    std::vector<int> fulfilled_window_, expired_window_;
    std::vector<int> fulfilled_events_, expired_events_;
    std::vector<int> started_this_tick_;
    long long revenue_cents_ = 0;
    int stranded_ = 0;
    RunResult result_;
};

// Convenience wrapper: build the world for (cfg, seed) and run.
inline RunResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
    World w = build_world(cfg, seed);
    Engine e(cfg, w, seed);
    return e.run();
}

struct PairedLoss {
    long long abs_cents = 0;
    double pct = 0.0;
    double per_driver_usd = 0.0;
};

// Weekly revenue loss of a scenario against its attack-free twin. Both runs
// must share the seed, the world and the horizon.
inline PairedLoss pair_baseline(const RunSummary& scenario, const RunSummary& baseline) {
    if (scenario.seed != baseline.seed)
        throw std::invalid_argument("pair_baseline: mismatched seeds");
    if (scenario.world_fingerprint != baseline.world_fingerprint)
        throw std::invalid_argument("pair_baseline: runs use different worlds");
    if (scenario.horizon_ticks != baseline.horizon_ticks ||
        scenario.final_window_ticks != baseline.final_window_ticks)
        throw std::invalid_argument("pair_baseline: mismatched horizons");
    PairedLoss l;
    l.abs_cents = baseline.revenue_final_window_cents - scenario.revenue_final_window_cents;
    if (baseline.revenue_final_window_cents > 0)
        l.pct = 100.0 * static_cast<double>(l.abs_cents) /
                static_cast<double>(baseline.revenue_final_window_cents);
    l.per_driver_usd = baseline.revenue_per_driver_final_usd - scenario.revenue_per_driver_final_usd;
    return l;
}

} // namespace sevsim
