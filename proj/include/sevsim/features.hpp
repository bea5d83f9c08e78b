#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "sevsim/stats.hpp"

namespace sevsim {

// One charging-session observation as the EVSE operator logs it:
// observed duration (min), session start time of day (min), initial SoC.
inline constexpr int kFeatureDims = 3;
using FeatureVec = std::array<double, kFeatureDims>;

// Per-dimension standardization fitted on training data. Degenerate
// dimensions (zero spread) keep std 1 so transforms stay finite.
struct FeatureScaler {
    FeatureVec mean{0.0, 0.0, 0.0};
    FeatureVec stddev{1.0, 1.0, 1.0};

    static FeatureScaler fit(const std::vector<FeatureVec>& data) {
        if (data.empty()) throw std::invalid_argument("FeatureScaler: empty training set");
        FeatureScaler s;
        for (int d = 0; d < kFeatureDims; ++d) {
            std::vector<double> col;
            col.reserve(data.size());
            for (const auto& v : data) col.push_back(v[d]);
            MeanStd ms = mean_std(col);
            s.mean[d] = ms.mean;
            s.stddev[d] = ms.stddev > 1e-12 ? ms.stddev : 1.0;
        }
        return s;
    }

    FeatureVec transform(const FeatureVec& v) const {
        FeatureVec out;
        for (int d = 0; d < kFeatureDims; ++d) out[d] = (v[d] - mean[d]) / stddev[d];
        return out;
    }

    std::vector<FeatureVec> transform(const std::vector<FeatureVec>& vs) const {
        std::vector<FeatureVec> out;
        out.reserve(vs.size());
        for (const auto& v : vs) out.push_back(transform(v));
        return out;
    }
};

} // namespace sevsim
