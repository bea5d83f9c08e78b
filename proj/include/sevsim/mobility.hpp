#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sevsim/config.hpp"
#include "sevsim/rng.hpp"
#include "sevsim/stats.hpp"
#include "sevsim/world.hpp"

namespace sevsim {

// Trip payment in integer cents: per-mile plus per-minute, rounded half-up.
inline long long fare_cents(double distance_miles, double duration_min, const MobilityConfig& m) {
    if (distance_miles < 0.0 || duration_min < 0.0)
        throw std::invalid_argument("fare: negative distance or duration");
    double dollars = m.fare_per_mile * distance_miles + m.fare_per_min * duration_min;
    return std::llround(dollars * 100.0 + 1e-9);
}

struct MatchCandidate {
    int sev_id = 0;
    int zone = 0;
};

struct Assignment {
    int request_id = 0;
    int sev_id = 0;
};

// Sequential nearest-dispatch: requests in (request_tick, id) order each take
// the closest still-free SEV within the dispatch radius; ties break to the
// lower SEV id. Requests that reach no SEV stay open.
inline std::vector<Assignment> greedy_match(const std::vector<const TripRequest*>& open_requests,
                                            const std::vector<MatchCandidate>& available,
                                            const TravelTimeProvider& travel, int radius_min) {
    std::vector<const TripRequest*> reqs = open_requests;
    std::stable_sort(reqs.begin(), reqs.end(), [](const TripRequest* a, const TripRequest* b) {
        if (a->request_tick != b->request_tick) return a->request_tick < b->request_tick;
        return a->id < b->id;
    });
    std::vector<char> taken(available.size(), 0);
    std::vector<Assignment> out;
    for (const TripRequest* r : reqs) {
        double best_t = static_cast<double>(radius_min);
        int best_i = -1;
        for (std::size_t i = 0; i < available.size(); ++i) {
            if (taken[i]) continue;
            double t = travel.minutes(available[i].zone, r->origin_zone);
            if (t > best_t + 1e-12) continue;
            if (best_i < 0 || t < best_t - 1e-12 ||
                (std::fabs(t - best_t) <= 1e-12 && available[i].sev_id < available[best_i].sev_id)) {
                best_t = t;
                best_i = static_cast<int>(i);
            }
        }
        if (best_i >= 0) {
            taken[best_i] = 1;
            out.push_back({r->id, available[best_i].sev_id});
        }
    }
    return out;
}

struct EvseOption {
    int port_id = 0;
    int zone = 0;
    int queue_len = 0;          // waiting plus in-service
    double mean_service_min = 25.0;
};

// Charger-choice logits: exp(-q_j * t_ij) soft-max, where q_j estimates the
// expected queueing minutes at j.
inline std::vector<double> choose_evse_logits(int sev_zone, const std::vector<EvseOption>& options,
                                              const TravelTimeProvider& travel) {
    if (options.empty())
        throw std::runtime_error("choose_evse: no eligible charging port (fleet-wide outage)");
    std::vector<double> logits;
    logits.reserve(options.size());
    for (const auto& o : options) {
        double q = static_cast<double>(o.queue_len) * o.mean_service_min;
        double t = travel.minutes(sev_zone, o.zone);
        logits.push_back(-q * t);
    }
    return logits;
}

inline int choose_evse(int sev_zone, const std::vector<EvseOption>& options,
                       const TravelTimeProvider& travel, Rng& rng) {
    auto logits = choose_evse_logits(sev_zone, options, travel);
    return options[softmax_sample(logits, rng)].port_id;
}

// Rolling per-zone supply/demand over the trailing window: order pickups are
// events, idle SEVs are observed once per tick they sit in a zone.
class SupplyDemandTracker {
public:
    SupplyDemandTracker(int n_zones, int window_min)
        : window_(std::max(1, window_min)),
          orders_(window_, std::vector<int>(n_zones, 0)),
          idle_(window_, std::vector<int>(n_zones, 0)),
          order_sum_(n_zones, 0),
          idle_sum_(n_zones, 0) {}

    // rotate the ring to a new tick; drops the slot leaving the window
    void begin_tick(int tick) {
        int slot = tick % window_;
        for (std::size_t z = 0; z < order_sum_.size(); ++z) {
            order_sum_[z] -= orders_[slot][z];
            idle_sum_[z] -= idle_[slot][z];
            orders_[slot][z] = 0;
            idle_[slot][z] = 0;
        }
        slot_ = slot;
    }

    void record_order(int zone) {
        ++orders_[slot_][zone];
        ++order_sum_[zone];
    }

    void observe_idle(int zone) {
        ++idle_[slot_][zone];
        ++idle_sum_[zone];
    }

    int orders(int zone) const { return order_sum_[zone]; }
    int idle(int zone) const { return idle_sum_[zone]; }
    int n_zones() const { return static_cast<int>(order_sum_.size()); }

private:
    int window_;
    int slot_ = 0;
    std::vector<std::vector<int>> orders_, idle_;
    std::vector<int> order_sum_, idle_sum_;
};

// Reposition logits over every zone: (orders - idle) / travel minutes, with
// the self-zone travel time floored to one minute.
inline std::vector<double> choose_reposition_logits(int sev_zone, const SupplyDemandTracker& tracker,
                                                    const TravelTimeProvider& travel) {
    std::vector<double> logits;
    logits.reserve(tracker.n_zones());
    for (int z = 0; z < tracker.n_zones(); ++z) {
        double t = std::max(1.0, travel.minutes(sev_zone, z));
        double gap = static_cast<double>(tracker.orders(z) - tracker.idle(z));
        logits.push_back(gap / t);
    }
    return logits;
}

inline int choose_reposition(int sev_zone, const SupplyDemandTracker& tracker,
                             const TravelTimeProvider& travel, Rng& rng) {
    auto logits = choose_reposition_logits(sev_zone, tracker, travel);
    return static_cast<int>(softmax_sample(logits, rng));
}

} // namespace sevsim
