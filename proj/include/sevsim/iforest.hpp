#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "sevsim/features.hpp"
#include "sevsim/rng.hpp"
#include "sevsim/stats.hpp"

namespace sevsim {

// Isolation forest over feature triples. Scores follow the classic
// construction: s(x) = 2^(-E[h(x)] / c(subsample)), where c(m) is the average
// unsuccessful-search path length of a BST with m nodes. High score = easy to
// isolate = anomalous.
class IsolationForest {
public:
    struct Node {
        int feature = -1;      // -1 on leaves
        double split = 0.0;
        int size = 0;          // samples that landed here (leaves)
        std::unique_ptr<Node> lo, hi;
    };

    static IsolationForest train(const std::vector<FeatureVec>& data, int n_trees, int subsample,
                                 Rng& rng) {
        if (data.empty()) throw std::invalid_argument("IsolationForest: empty training set");
        if (n_trees <= 0 || subsample <= 0) throw std::invalid_argument("IsolationForest: bad parameters");
        IsolationForest f;
        f.sample_size_ = std::min<std::size_t>(subsample, data.size());
        f.c_norm_ = average_path_length(f.sample_size_);
        int height_limit = static_cast<int>(std::ceil(std::log2(std::max<std::size_t>(2, f.sample_size_))));

        std::vector<std::size_t> idx(data.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (int t = 0; t < n_trees; ++t) {
            // subsample without replacement (partial Fisher-Yates)
            for (std::size_t i = 0; i < f.sample_size_; ++i) {
                std::size_t j = i + rng.below(idx.size() - i);
                std::swap(idx[i], idx[j]);
            }
            std::vector<const FeatureVec*> pts;
            pts.reserve(f.sample_size_);
            for (std::size_t i = 0; i < f.sample_size_; ++i) pts.push_back(&data[idx[i]]);
            f.trees_.push_back(build(pts, 0, height_limit, rng));
        }
        return f;
    }

    // mean path length across trees, truncated-leaf corrected
    double mean_path(const FeatureVec& x) const {
        double total = 0.0;
        for (const auto& t : trees_) total += path_length(t.get(), x, 0);
        return total / static_cast<double>(trees_.size());
    }

    double score(const FeatureVec& x) const {
        return std::pow(2.0, -mean_path(x) / c_norm_);
    }

    std::vector<double> scores(const std::vector<FeatureVec>& xs) const {
        std::vector<double> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back(score(x));
        return out;
    }

    double c_norm() const { return c_norm_; }
    std::size_t sample_size() const { return sample_size_; }
    std::size_t n_trees() const { return trees_.size(); }

private:
    static std::unique_ptr<Node> build(std::vector<const FeatureVec*>& pts, int depth, int limit,
                                       Rng& rng) {
        auto node = std::make_unique<Node>();
        if (depth >= limit || pts.size() <= 1) {
            node->size = static_cast<int>(pts.size());
            return node;
        }
        // pick a feature with spread; bail to a leaf if every dimension is constant
        int feature = -1;
        double lo = 0.0, hi = 0.0;
        std::vector<int> dims = {0, 1, 2};
        for (std::size_t k = 0; k < dims.size(); ++k) {
            std::size_t j = k + rng.below(dims.size() - k);
            std::swap(dims[k], dims[j]);
            int d = dims[k];
            auto [mn, mx] = std::minmax_element(pts.begin(), pts.end(),
                                                [d](const FeatureVec* a, const FeatureVec* b) {
                                                    return (*a)[d] < (*b)[d];
                                                });
            if ((**mx)[d] > (**mn)[d]) {
                feature = d;
                lo = (**mn)[d];
                hi = (**mx)[d];
                break;
            }
        }
        if (feature < 0) {
            node->size = static_cast<int>(pts.size());
            return node;
        }
        double split = rng.uniform(lo, hi);
        std::vector<const FeatureVec*> left, right;
        for (const auto* p : pts) {
            if ((*p)[feature] < split)
                left.push_back(p);
            else
                right.push_back(p);
        }
        if (left.empty() || right.empty()) {
            node->size = static_cast<int>(pts.size());
            return node;
        }
        node->feature = feature;
        node->split = split;
        node->lo = build(left, depth + 1, limit, rng);
        node->hi = build(right, depth + 1, limit, rng);
        return node;
    }

    static double path_length(const Node* n, const FeatureVec& x, int depth) {
        if (n->feature < 0)
            return static_cast<double>(depth) + average_path_length(static_cast<std::size_t>(std::max(n->size, 0)));
        if (x[n->feature] < n->split) return path_length(n->lo.get(), x, depth + 1);
        return path_length(n->hi.get(), x, depth + 1);
    }

    std::vector<std::unique_ptr<Node>> trees_;
    std::size_t sample_size_ = 0;
    double c_norm_ = 1.0;
};

} // namespace sevsim
