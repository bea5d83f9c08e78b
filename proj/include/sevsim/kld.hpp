#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sevsim/features.hpp"

namespace sevsim {

// Kullback-Leibler divergence D(p || q) = sum p_i ln(p_i / q_i) in nats.
// Both inputs get 1e-6 additive smoothing and renormalization, so empty bins
// never divide by zero. Inputs must be same-length non-negative vectors.
inline double kld(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size() || p.empty())
        throw std::invalid_argument("kld: distributions must have equal, nonzero length");
    const double eps = 1e-6;
    double ps = 0.0, qs = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("kld: negative mass");
        ps += p[i] + eps;
        qs += q[i] + eps;
    }
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double pi = (p[i] + eps) / ps;
        double qi = (q[i] + eps) / qs;
        d += pi * std::log(pi / qi);
    }
    return d;
}

// Per-dimension marginal histograms with bin edges frozen from the training
// range; out-of-range values clamp into the edge bins.
class MarginalHistograms {
public:
    static MarginalHistograms fit(const std::vector<FeatureVec>& train, int bins) {
        if (train.empty()) throw std::invalid_argument("MarginalHistograms: empty training set");
        if (bins < 2) throw std::invalid_argument("MarginalHistograms: need at least 2 bins");
        MarginalHistograms h;
        h.bins_ = bins;
        for (int d = 0; d < kFeatureDims; ++d) {
            double lo = train[0][d], hi = train[0][d];
            for (const auto& v : train) {
                lo = std::min(lo, v[d]);
                hi = std::max(hi, v[d]);
            }
            if (hi <= lo) hi = lo + 1.0; // degenerate dimension: single occupied bin
            h.lo_[d] = lo;
            h.hi_[d] = hi;
        }
        h.reference_ = h.histograms(train);
        h.ref_count_ = train.size();
        for (int d = 0; d < kFeatureDims; ++d) {
            int occupied = 0;
            for (double c : h.reference_[d])
                if (c > 0.0) ++occupied;
            h.occupied_[d] = occupied;
        }
        // pseudo-count the reference so a stray batch sample in a bin the
        // training set happened to miss reads as mildly surprising, not as a
        // near-infinite likelihood ratio
        for (auto& hist : h.reference_)
            for (double& c : hist) c += 0.5;
        return h;
    }

    // raw counts per dimension
    std::vector<std::vector<double>> histograms(const std::vector<FeatureVec>& data) const {
        std::vector<std::vector<double>> out(kFeatureDims, std::vector<double>(bins_, 0.0));
        for (const auto& v : data)
            for (int d = 0; d < kFeatureDims; ++d) out[d][bin_of(d, v[d])] += 1.0;
        return out;
    }

    // D(data || reference) summed over the three marginals
    double divergence_from_reference(const std::vector<FeatureVec>& data) const {
        auto h = histograms(data);
        double total = 0.0;
        for (int d = 0; d < kFeatureDims; ++d) total += kld(h[d], reference_[d]);
        return total;
    }

    // Null degrees of freedom of the summed G statistic: occupied training
    // bins minus one, per dimension.
    double dof() const {
        double df = 0.0;
        for (int d = 0; d < kFeatureDims; ++d) df += std::max(0, occupied_[d] - 1);
        return std::max(1.0, df);
    }

    // same frozen bin edges, reference recomputed from other data — for
    // localizing the null to one station's own history
    MarginalHistograms rebinned(const std::vector<FeatureVec>& data) const {
        if (data.empty()) throw std::invalid_argument("MarginalHistograms: empty rebin set");
        MarginalHistograms h = *this;
        h.reference_ = h.histograms(data);
        h.ref_count_ = data.size();
        for (int d = 0; d < kFeatureDims; ++d) {
            int occupied = 0;
            for (double c : h.reference_[d])
                if (c > 0.0) ++occupied;
            h.occupied_[d] = occupied;
        }
        for (auto& hist : h.reference_)
            for (double& c : hist) c += 0.5;
        return h;
    }

    int bins() const { return bins_; }
    std::size_t ref_count() const { return ref_count_; }
    const std::vector<std::vector<double>>& reference() const { return reference_; }

private:
    int bin_of(int dim, double v) const {
        double t = (v - lo_[dim]) / (hi_[dim] - lo_[dim]);
        int b = static_cast<int>(t * bins_);
        if (b < 0) b = 0;
        if (b >= bins_) b = bins_ - 1;
        return b;
    }

    int bins_ = 10;
    FeatureVec lo_{0, 0, 0};
    FeatureVec hi_{1, 1, 1};
    std::array<int, kFeatureDims> occupied_{0, 0, 0};
    std::size_t ref_count_ = 0;
    std::vector<std::vector<double>> reference_;
};

// Batch drift score on the G-test scale. With an exact reference,
// 2n D(batch||ref) is approximately chi-square(df) under clean batches. The
// reference here is itself estimated from m samples, which inflates both the
// clean mean and spread by (1 + n/m); the score divides that back out, so z
// stays centered near zero and the sensitivity threshold reads in sigmas.
inline double kld_batch_z(const MarginalHistograms& model, const std::vector<FeatureVec>& batch) {
    if (batch.empty()) throw std::invalid_argument("kld_batch_z: empty batch");
    double d = model.divergence_from_reference(batch);
    double n = static_cast<double>(batch.size());
    double df = model.dof();
    double rho = model.ref_count() > 0 ? n / static_cast<double>(model.ref_count()) : 0.0;
    return (2.0 * n * d - df * (1.0 + rho)) / (std::sqrt(2.0 * df) * (1.0 + rho));
}

} // namespace sevsim
