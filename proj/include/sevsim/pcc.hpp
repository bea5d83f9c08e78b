#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sevsim/features.hpp"
#include "sevsim/gmm.hpp" // Cov3
#include "sevsim/stats.hpp"

namespace sevsim {

namespace detail {

// Jacobi eigendecomposition of a symmetric 3x3 matrix. Returns eigenvalues
// (descending) and matching unit eigenvectors as rows of `vecs`.
inline void eig3_sym(Cov3 a, std::array<double, 3>& vals, Cov3& vecs) {
    Cov3 v{};
    for (int i = 0; i < 3; ++i) v[i][i] = 1.0;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::fabs(a[0][1]) + std::fabs(a[0][2]) + std::fabs(a[1][2]);
        if (off < 1e-14) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::fabs(a[p][q]) < 1e-300) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    std::array<int, 3> order{0, 1, 2};
    std::array<double, 3> d{a[0][0], a[1][1], a[2][2]};
    std::sort(order.begin(), order.end(), [&d](int x, int y) { return d[x] > d[y]; });
    for (int i = 0; i < 3; ++i) {
        vals[i] = d[order[i]];
        for (int k = 0; k < 3; ++k) vecs[i][k] = v[k][order[i]];
    }
}

} // namespace detail

// Principal-component classifier. Fits the eigenstructure of the training
// covariance; a sample is anomalous when its variance-normalized projection
// onto the major components (top ones covering the configured variance
// share) or onto the minor components (eigenvalue below the cutoff) exceeds
// the chi-square quantile at significance `sig`.
class PccModel {
public:
    static PccModel train(const std::vector<FeatureVec>& data, double major_var_share,
                          double minor_eig_cut, double sig) {
        if (data.size() < 2) throw std::invalid_argument("PCC: need at least 2 training samples");
        if (!(sig > 0.0 && sig < 1.0)) throw std::invalid_argument("PCC: sig must be in (0,1)");
        PccModel m;
        const double n = static_cast<double>(data.size());
        for (const auto& x : data)
            for (int d = 0; d < 3; ++d) m.mean_[d] += x[d] / n;
        Cov3 cov{};
        for (const auto& x : data)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    cov[a][b] += (x[a] - m.mean_[a]) * (x[b] - m.mean_[b]) / n;
        detail::eig3_sym(cov, m.eigvals_, m.eigvecs_);
        for (double& l : m.eigvals_) l = std::max(l, 1e-12);

        double total = m.eigvals_[0] + m.eigvals_[1] + m.eigvals_[2];
        double cum = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (cum / total < major_var_share) {
                m.major_.push_back(i);
                cum += m.eigvals_[i];
            }
        }
        for (int i = 0; i < 3; ++i)
            if (m.eigvals_[i] < minor_eig_cut) m.minor_.push_back(i);

        m.major_thr_ = chi2_quantile(1.0 - sig, static_cast<double>(m.major_.size()));
        m.minor_thr_ = m.minor_.empty()
                           ? 0.0
                           : chi2_quantile(1.0 - sig, static_cast<double>(m.minor_.size()));
        return m;
    }

    // sum over the index set of y_j^2 / lambda_j
    double score(const FeatureVec& x, const std::vector<int>& set) const {
        double s = 0.0;
        for (int j : set) {
            double y = 0.0;
            for (int d = 0; d < 3; ++d) y += eigvecs_[j][d] * (x[d] - mean_[d]);
            s += y * y / eigvals_[j];
        }
        return s;
    }

    double major_score(const FeatureVec& x) const { return score(x, major_); }
    double minor_score(const FeatureVec& x) const { return score(x, minor_); }

    bool anomalous(const FeatureVec& x) const {
        if (major_score(x) > major_thr_) return true;
        if (!minor_.empty() && minor_score(x) > minor_thr_) return true;
        return false;
    }

    const std::array<double, 3>& eigenvalues() const { return eigvals_; }
    const Cov3& eigenvectors() const { return eigvecs_; }
    const std::vector<int>& major_set() const { return major_; }
    const std::vector<int>& minor_set() const { return minor_; }
    double major_threshold() const { return major_thr_; }
    double minor_threshold() const { return minor_thr_; }

private:
    FeatureVec mean_{0, 0, 0};
    std::array<double, 3> eigvals_{1, 1, 1};
    Cov3 eigvecs_{};
    std::vector<int> major_, minor_;
    double major_thr_ = 0.0;
    double minor_thr_ = 0.0;
};

} // namespace sevsim
