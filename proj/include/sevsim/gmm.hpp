#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sevsim/features.hpp"
#include "sevsim/rng.hpp"

namespace sevsim {

using Cov3 = std::array<std::array<double, 3>, 3>;

namespace detail {

inline double det3(const Cov3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Cov3 inv3(const Cov3& m, double det) {
    Cov3 r;
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return r;
}

} // namespace detail

// Gaussian mixture fitted by EM with full covariances. Covariance diagonals
// carry a small ridge every M-step; if EM hits the iteration cap the
// best-likelihood iterate is kept and `converged` reports false.
class GmmModel {
public:
    struct Component {
        double weight = 0.0;
        FeatureVec mean{0, 0, 0};
        Cov3 cov{};
        // cached for density evaluation
        Cov3 inv{};
        double norm = 0.0; // (2pi)^{-3/2} det^{-1/2}
    };

    // ll_trace, when given, receives the data log-likelihood at the start of
    // every EM iteration (the sequence EM drives upward)
    static GmmModel train(const std::vector<FeatureVec>& data, int k, int max_iters, double reg,
                          Rng& rng, std::vector<double>* ll_trace = nullptr) {
        if (data.empty()) throw std::invalid_argument("GMM: empty training set");
        if (k <= 0) throw std::invalid_argument("GMM: components must be positive");
        const std::size_t n = data.size();
        const int kk = std::min<int>(k, static_cast<int>(n));

        GmmModel m;
        m.comps_.resize(kk);
        // init: distinct random points as means, shared global covariance
        Cov3 global{};
        FeatureVec gmean{0, 0, 0};
        for (const auto& x : data)
            for (int d = 0; d < 3; ++d) gmean[d] += x[d] / static_cast<double>(n);
        for (const auto& x : data)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    global[a][b] += (x[a] - gmean[a]) * (x[b] - gmean[b]) / static_cast<double>(n);
        for (int c = 0; c < kk; ++c) {
            m.comps_[c].weight = 1.0 / kk;
            m.comps_[c].mean = data[rng.below(n)];
            m.comps_[c].cov = global;
        }
        m.regularize(reg);

        std::vector<std::vector<double>> resp(n, std::vector<double>(kk, 0.0));
        double best_ll = -std::numeric_limits<double>::infinity();
        GmmModel best = m;
        double prev_ll = -std::numeric_limits<double>::infinity();
        m.converged_ = false;
        for (int iter = 0; iter < max_iters; ++iter) {
            // E step
            double ll = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double total = 0.0;
                for (int c = 0; c < kk; ++c) {
                    resp[i][c] = m.comps_[c].weight * m.component_density(c, data[i]);
                    total += resp[i][c];
                }
                if (total <= 0.0 || !std::isfinite(total)) {
                    total = 1e-300;
                    for (int c = 0; c < kk; ++c) resp[i][c] = 1.0 / kk;
                } else {
                    for (int c = 0; c < kk; ++c) resp[i][c] /= total;
                }
                ll += std::log(total);
            }
            if (ll_trace) ll_trace->push_back(ll);
            if (ll > best_ll) {
                best_ll = ll;
                best = m;
            }
            if (std::isfinite(prev_ll) && std::fabs(ll - prev_ll) < 1e-8 * (1.0 + std::fabs(ll))) {
                m.converged_ = true;
                break;
            }
            prev_ll = ll;
            // M step
            for (int c = 0; c < kk; ++c) {
                double nc = 0.0;
                for (std::size_t i = 0; i < n; ++i) nc += resp[i][c];
                if (nc < 1e-10) {
                    m.comps_[c].mean = data[rng.below(n)];
                    m.comps_[c].cov = global;
                    m.comps_[c].weight = 1.0 / n;
                    continue;
                }
                m.comps_[c].weight = nc / static_cast<double>(n);
                FeatureVec mu{0, 0, 0};
                for (std::size_t i = 0; i < n; ++i)
                    for (int d = 0; d < 3; ++d) mu[d] += resp[i][c] * data[i][d] / nc;
                Cov3 cov{};
                for (std::size_t i = 0; i < n; ++i)
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b)
                            cov[a][b] += resp[i][c] * (data[i][a] - mu[a]) * (data[i][b] - mu[b]) / nc;
                m.comps_[c].mean = mu;
                m.comps_[c].cov = cov;
            }
            m.regularize(reg);
        }
        if (!m.converged_) {
            best.converged_ = false;
            best.regularize(0.0); // refresh caches only
            return best;
        }
        return m;
    }

    // mixture probability density at a point
    double density(const FeatureVec& x) const {
        double p = 0.0;
        for (std::size_t c = 0; c < comps_.size(); ++c)
            p += comps_[c].weight * component_density(static_cast<int>(c), x);
        return p;
    }

    double log_likelihood(const std::vector<FeatureVec>& data) const {
        double ll = 0.0;
        for (const auto& x : data) ll += std::log(std::max(density(x), 1e-300));
        return ll;
    }

    bool converged() const { return converged_; }
    const std::vector<Component>& components() const { return comps_; }

    // direct construction, used by tests and model audits
    static GmmModel from_components(std::vector<Component> comps) {
        GmmModel m;
        m.comps_ = std::move(comps);
        m.converged_ = true;
        m.regularize(0.0);
        return m;
    }

private:
    double component_density(int c, const FeatureVec& x) const {
        const Component& k = comps_[c];
        double q = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) q += (x[a] - k.mean[a]) * k.inv[a][b] * (x[b] - k.mean[b]);
        return k.norm * std::exp(-0.5 * q);
    }

    void regularize(double reg) {
        for (auto& k : comps_) {
            for (int d = 0; d < 3; ++d) k.cov[d][d] += reg;
            double det = detail::det3(k.cov);
            double extra = reg > 0.0 ? reg : 1e-6;
            while (det <= 0.0 || !std::isfinite(det)) {
                for (int d = 0; d < 3; ++d) k.cov[d][d] += extra;
                extra *= 10.0;
                det = detail::det3(k.cov);
            }
            k.inv = detail::inv3(k.cov, det);
            k.norm = std::pow(2.0 * M_PI, -1.5) / std::sqrt(det);
        }
    }

    std::vector<Component> comps_;
    bool converged_ = false;
};

} // namespace sevsim
