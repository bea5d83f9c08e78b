#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sevsim/config.hpp"
#include "sevsim/rng.hpp"

namespace sevsim {

// CC-CV charging abstraction on state of charge in [0,1]. Current is
// normalized: 1.0 means the full constant-current rate, which converts to
// cc_rate_mi_per_min of added range per minute.

// Normalized charge current requested by the BMS at a given (reported) SoC:
// flat below the tip, linear taper to zero above it.
inline double cc_cv_current(double soc, const BatteryConfig& b) {
    if (soc < 0.0 || soc > 1.0) throw std::invalid_argument("cc_cv_current: soc out of [0,1]");
    if (soc <= b.soc_tip) return 1.0;
    return (1.0 - soc) / (1.0 - b.soc_tip);
}

// Current under a spoofed SoC report: the BMS sees true_soc + offset (capped
// at 1) and requests correspondingly less current.
inline double spoofed_current(double true_soc, double offset, const BatteryConfig& b) {
    if (true_soc < 0.0 || true_soc > 1.0) throw std::invalid_argument("spoofed_current: soc out of [0,1]");
    if (offset < 0.0) throw std::invalid_argument("spoofed_current: negative offset");
    double reported = std::min(1.0, true_soc + offset);
    return cc_cv_current(reported, b);
}

// Minutes to charge initial -> target, rounded up to whole ticks. The CC
// segment is exact; any segment above the tip integrates the taper with
// 0.1-minute steps. target must be < 1 (the taper only approaches full).
inline int charge_duration(double initial_soc, double target_soc, const BatteryConfig& b) {
    if (initial_soc < 0.0 || initial_soc > 1.0)
        throw std::invalid_argument("charge_duration: initial soc out of [0,1]");
    if (target_soc < initial_soc)
        throw std::invalid_argument("charge_duration: target below initial soc");
    if (target_soc >= 1.0 && target_soc > b.soc_tip)
        throw std::invalid_argument("charge_duration: target 1.0 unreachable under CV taper");
    if (target_soc == initial_soc) return 0;

    double soc_per_min = b.cc_rate_mi_per_min / b.range_miles;
    double minutes = 0.0;
    double soc = initial_soc;
    if (soc < b.soc_tip) {
        double cc_to = std::min(target_soc, b.soc_tip);
        minutes += (cc_to - soc) / soc_per_min;
        soc = cc_to;
    }
    if (target_soc > b.soc_tip) {
        const double dt = 0.1;
        long guard = 0;
        while (soc < target_soc) {
            soc += dt * soc_per_min * cc_cv_current(std::min(soc, 1.0), b);
            minutes += dt;
            if (++guard > 100000000L)
                throw std::runtime_error("charge_duration: CV integration did not converge");
        }
    }
    return static_cast<int>(std::ceil(minutes - 1e-9));
}

// SoC after driving a distance; floors at zero (the engine flags stranding).
inline double deplete(double soc, double distance_miles, const BatteryConfig& b) {
    if (soc < 0.0 || soc > 1.0) throw std::invalid_argument("deplete: soc out of [0,1]");
    if (distance_miles < 0.0) throw std::invalid_argument("deplete: negative distance");
    return std::max(0.0, soc - distance_miles / b.range_miles);
}

// Per-session charge target: Normal(mean, std) clamped to [current soc, tip].
inline double draw_charge_target(double current_soc, const BatteryConfig& b, Rng& rng) {
    double t = rng.normal(b.target_soc_mean, b.target_soc_std);
    t = std::min(t, b.soc_tip);
    return std::max(t, current_soc);
}

} // namespace sevsim
