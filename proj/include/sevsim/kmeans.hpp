#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sevsim/features.hpp"
#include "sevsim/rng.hpp"

namespace sevsim {

// Lloyd's k-means with k-means++ seeding on standardized features. An empty
// cluster is reseeded to the point farthest from its centroid.
class KMeansModel {
public:
    static KMeansModel train(const std::vector<FeatureVec>& data, int k, int max_iters, Rng& rng) {
        if (data.empty()) throw std::invalid_argument("KMeans: empty training set");
        if (k <= 0) throw std::invalid_argument("KMeans: k must be positive");
        KMeansModel m;
        int kk = std::min<int>(k, static_cast<int>(data.size()));
        m.centroids_ = seed_plusplus(data, kk, rng);

        std::vector<int> assign(data.size(), 0);
        for (int iter = 0; iter < max_iters; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < data.size(); ++i) {
                int c = m.nearest(data[i]).first;
                if (c != assign[i]) {
                    assign[i] = c;
                    changed = true;
                }
            }
            std::vector<FeatureVec> sums(kk, FeatureVec{0, 0, 0});
            std::vector<int> counts(kk, 0);
            for (std::size_t i = 0; i < data.size(); ++i) {
                for (int d = 0; d < kFeatureDims; ++d) sums[assign[i]][d] += data[i][d];
                ++counts[assign[i]];
            }
            for (int c = 0; c < kk; ++c) {
                if (counts[c] == 0) {
                    // reseed to the globally farthest point
                    double best = -1.0;
                    std::size_t far = 0;
                    for (std::size_t i = 0; i < data.size(); ++i) {
                        double dist = m.nearest(data[i]).second;
                        if (dist > best) {
                            best = dist;
                            far = i;
                        }
                    }
                    m.centroids_[c] = data[far];
                    changed = true;
                } else {
                    for (int d = 0; d < kFeatureDims; ++d)
                        m.centroids_[c][d] = sums[c][d] / static_cast<double>(counts[c]);
                }
            }
            if (!changed && iter > 0) break;
        }
        return m;
    }

    // (cluster index, euclidean distance) of the nearest centroid
    std::pair<int, double> nearest(const FeatureVec& x) const {
        int best = 0;
        double bd = std::numeric_limits<double>::max();
        for (std::size_t c = 0; c < centroids_.size(); ++c) {
            double d2 = 0.0;
            for (int d = 0; d < kFeatureDims; ++d) {
                double t = x[d] - centroids_[c][d];
                d2 += t * t;
            }
            if (d2 < bd) {
                bd = d2;
                best = static_cast<int>(c);
            }
        }
        return {best, std::sqrt(bd)};
    }

    double distance(const FeatureVec& x) const { return nearest(x).second; }

    const std::vector<FeatureVec>& centroids() const { return centroids_; }

private:
    static std::vector<FeatureVec> seed_plusplus(const std::vector<FeatureVec>& data, int k, Rng& rng) {
        std::vector<FeatureVec> centers;
        centers.push_back(data[rng.below(data.size())]);
        std::vector<double> d2(data.size());
        while (static_cast<int>(centers.size()) < k) {
            double total = 0.0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                double best = std::numeric_limits<double>::max();
                for (const auto& c : centers) {
                    double dd = 0.0;
                    for (int d = 0; d < kFeatureDims; ++d) {
                        double t = data[i][d] - c[d];
                        dd += t * t;
                    }
                    best = std::min(best, dd);
                }
                d2[i] = best;
                total += best;
            }
            if (total <= 0.0) {
                centers.push_back(data[rng.below(data.size())]);
                continue;
            }
            double u = rng.uniform01() * total;
            double acc = 0.0;
            std::size_t pick = data.size() - 1;
            for (std::size_t i = 0; i < data.size(); ++i) {
                acc += d2[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
            centers.push_back(data[pick]);
        }
        return centers;
    }

    std::vector<FeatureVec> centroids_;
};

} // namespace sevsim
