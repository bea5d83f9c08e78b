#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "sevsim/config.hpp"
#include "sevsim/rng.hpp"

namespace sevsim {

enum class PortState { S, I, R };

inline char to_char(PortState s) {
    switch (s) {
        case PortState::S: return 'S';
        case PortState::I: return 'I';
        case PortState::R: return 'R';
    }
    return '?';
}

struct EvsePort {
    int id = 0;
    int zone = 0;
    PortState state = PortState::S;
    int t_infected = -1; // last infection tick (kept after recovery)
    int t_removed = -1;  // set iff state == R
    std::deque<int> queue; // waiting SEV ids, FIFO
    int serving = -1;      // SEV id in service, -1 when none (always -1 while R)
    long long repair_visits = 0;
};

struct PortTransition {
    int tick = 0;
    int port = 0;
    PortState from = PortState::S;
    PortState to = PortState::S;
};

struct EpidemicStats {
    long long repair_visits = 0;
    long long repair_cost_cents = 0;
    long long confirmed_detections = 0;
    long long false_alarms = 0;
    long long infectious_port_epochs = 0;

    double realized_recovery_rate() const {
        if (infectious_port_epochs == 0) return 0.0;
        return static_cast<double>(confirmed_detections) / static_cast<double>(infectious_port_epochs);
    }
};

struct EpidemicStepOutcome {
    std::vector<PortTransition> transitions;
    long long visits = 0;         // technician dispatches this epoch (confirmed + false alarms)
    long long confirmed = 0;      // validated alarms, ports moved I -> R
    long long false_alarms = 0;   // alarms on susceptible ports; visit cost, no transition
    long long infections = 0;     // S -> I this epoch
    long long recoveries = 0;     // R -> S this epoch
};

// one rounded non-negative Gaussian delay draw, whole minutes
inline int delay_draw(const AttackConfig& a, Rng& rng) {
    double extra = rng.normal(a.mu_delay_min, a.sigma());
    if (extra < 0.0) extra = 0.0;
    return static_cast<int>(std::lround(extra));
}

// Observable duration of a session starting at a port in the given state.
// Infectious ports stretch the session; the delayed duration never falls
// below the true one.
inline int inject_delay(int true_minutes, PortState state, const AttackConfig& a, Rng& rng) {
    if (true_minutes < 0) throw std::invalid_argument("inject_delay: negative duration");
    if (state != PortState::I) return true_minutes;
    return true_minutes + delay_draw(a, rng);
}

// One infection epoch over all ports, driven by the entry-state snapshot:
//   R: returns to S once the repair window has elapsed.
//   S: a flag is a false alarm (visit, no transition); independently the port
//      may be infected with probability beta.
//   I: a flag is validated and removes the port, recording t_removed.
// Draws and transitions run in ascending port id so the stream is stable.
inline EpidemicStepOutcome step_epidemic(std::vector<EvsePort>& ports, int tick,
                                         const AttackConfig& a,
                                         const std::vector<std::pair<int, bool>>& flags,
                                         Rng& rng) {
    std::vector<char> flagged(ports.size(), 0);
    for (const auto& [port_id, flag] : flags) {
        if (port_id < 0 || port_id >= static_cast<int>(ports.size()))
            throw std::out_of_range("step_epidemic: detection references unknown port id");
        if (flag) flagged[port_id] = 1;
    }

    EpidemicStepOutcome out;
    for (auto& p : ports) {
        PortState entry = p.state;
        switch (entry) {
            case PortState::R:
                if (tick - p.t_removed >= a.repair_duration_min) {
                    p.state = PortState::S;
                    p.t_removed = -1;
                    out.transitions.push_back({tick, p.id, PortState::R, PortState::S});
                    ++out.recoveries;
                }
                break;
            case PortState::S:
                if (flagged[p.id]) {
                    ++out.false_alarms;
                    ++out.visits;
                    ++p.repair_visits;
                }
                if (rng.bernoulli(a.beta)) {
                    p.state = PortState::I;
                    p.t_infected = tick;
                    out.transitions.push_back({tick, p.id, PortState::S, PortState::I});
                    ++out.infections;
                }
                break;
            case PortState::I:
                if (flagged[p.id]) {
                    p.state = PortState::R;
                    p.t_removed = tick;
                    p.serving = -1; // no service while removed; an in-flight session finishes on its own schedule
                    ++out.confirmed;
                    ++out.visits;
                    ++p.repair_visits;
                    out.transitions.push_back({tick, p.id, PortState::I, PortState::R});
                }
                break;
        }
    }
    return out;
}

inline void repair_accounting(EpidemicStats& stats, long long visits, const AttackConfig& a) {
    if (visits < 0) throw std::invalid_argument("repair_accounting: negative visit count");
    stats.repair_visits += visits;
    stats.repair_cost_cents += visits * a.repair_cost_cents();
}

} // namespace sevsim
