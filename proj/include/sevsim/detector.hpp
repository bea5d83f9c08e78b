#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sevsim/config.hpp"
#include "sevsim/features.hpp"
#include "sevsim/gmm.hpp"
#include "sevsim/iforest.hpp"
#include "sevsim/kld.hpp"
#include "sevsim/kmeans.hpp"
#include "sevsim/pcc.hpp"
#include "sevsim/rng.hpp"
#include "sevsim/stats.hpp"

namespace sevsim {

enum class DetectorKind { none, iforest, kld, kmeans, gmm, pcc };

inline DetectorKind detector_kind_from(const std::string& s) {
    if (s == "none") return DetectorKind::none;
    if (s == "iforest") return DetectorKind::iforest;
    if (s == "kld") return DetectorKind::kld;
    if (s == "kmeans") return DetectorKind::kmeans;
    if (s == "gmm") return DetectorKind::gmm;
    if (s == "pcc") return DetectorKind::pcc;
    throw std::invalid_argument("unknown detector kind '" + s + "'");
}

inline const char* to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::none: return "none";
        case DetectorKind::iforest: return "iforest";
        case DetectorKind::kld: return "kld";
        case DetectorKind::kmeans: return "kmeans";
        case DetectorKind::gmm: return "gmm";
        case DetectorKind::pcc: return "pcc";
    }
    return "?";
}

struct ConfusionTally {
    long long tp = 0, fp = 0, fn = 0, tn = 0;

    void add(bool truth_infectious, bool flagged) {
        if (truth_infectious && flagged) ++tp;
        else if (!truth_infectious && flagged) ++fp;
        else if (truth_infectious && !flagged) ++fn;
        else ++tn;
    }

    long long total() const { return tp + fp + fn + tn; }
};

struct DetectionMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline DetectionMetrics evaluate(const ConfusionTally& t) {
    DetectionMetrics m;
    long long n = t.total();
    if (n > 0) m.accuracy = static_cast<double>(t.tp + t.tn) / static_cast<double>(n);
    if (t.tp + t.fp > 0) m.precision = static_cast<double>(t.tp) / static_cast<double>(t.tp + t.fp);
    if (t.tp + t.fn > 0) m.recall = static_cast<double>(t.tp) / static_cast<double>(t.tp + t.fn);
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

// A trained anomaly detector over charging-session features. Training input
// is the attack-free warm-up log; per-port decisions run on the port's
// rolling batch. Decisions are pure functions of (model, batch).
class Detector {
public:
    static Detector train(const DetectorConfig& cfg, const std::vector<FeatureVec>& train_data,
                          Rng& rng) {
        DetectorKind kind = detector_kind_from(cfg.kind);
        if (kind == DetectorKind::none) throw std::invalid_argument("Detector: kind is none");
        if (static_cast<int>(train_data.size()) < cfg.min_train)
            throw std::invalid_argument("Detector: training set smaller than " +
                                        std::to_string(cfg.min_train) + " sessions");
        Detector d;
        d.kind_ = kind;
        d.cfg_ = cfg;
        d.alpha_ = cfg.effective_alpha();
        d.train_size_ = train_data.size();

        switch (kind) {
            case DetectorKind::iforest: {
                // calibrate the cutoff on data the forest never saw; scoring
                // the fitting sample itself biases the threshold low and
                // inflates the clean flag rate well past alpha
                std::vector<FeatureVec> fit_part, held_part;
                calibration_split(train_data, rng, fit_part, held_part);
                d.forest_.emplace(IsolationForest::train(fit_part, cfg.n_trees, cfg.subsample, rng));
                std::vector<double> s = d.forest_->scores(held_part);
                d.if_threshold_ = quantile(s, 1.0 - d.alpha_);
                break;
            }
            case DetectorKind::kld:
                d.hist_.emplace(MarginalHistograms::fit(train_data, cfg.bins_per_dim));
                break;
            case DetectorKind::kmeans: {
                d.scaler_ = FeatureScaler::fit(train_data);
                auto z = d.scaler_.transform(train_data);
                d.kmeans_.emplace(KMeansModel::train(z, cfg.kmeans_k, cfg.kmeans_iters, rng));
                break;
            }
            case DetectorKind::gmm: {
                d.scaler_ = FeatureScaler::fit(train_data);
                std::vector<FeatureVec> fit_part, held_part;
                calibration_split(train_data, rng, fit_part, held_part);
                auto z = d.scaler_.transform(fit_part);
                d.gmm_.emplace(GmmModel::train(z, cfg.gmm_components, cfg.gmm_iters, cfg.gmm_reg, rng));
                d.em_converged_ = d.gmm_->converged();
                // density cut: the significance quantile of held-out densities,
                // unbiased by the fit's own optimism
                std::vector<double> dens;
                dens.reserve(held_part.size());
                for (const auto& x : d.scaler_.transform(held_part)) dens.push_back(d.gmm_->density(x));
                d.gmm_cut_ = quantile(dens, cfg.gmm_density_cut);
                break;
            }
            case DetectorKind::pcc: {
                d.scaler_ = FeatureScaler::fit(train_data);
                auto z = d.scaler_.transform(train_data);
                d.pcc_.emplace(PccModel::train(z, cfg.pcc_major_var, cfg.pcc_minor_eig, cfg.pcc_sig));
                break;
            }
            default:
                break;
        }
        return d;
    }

    // fraction of batch samples individually anomalous (not used by the kld
    // rule, which scores the batch as a whole)
    double anomalous_fraction(const std::vector<FeatureVec>& batch) const {
        if (batch.empty()) throw std::invalid_argument("Detector: empty batch");
        std::size_t hits = 0;
        switch (kind_) {
            case DetectorKind::iforest:
                for (const auto& x : batch)
                    if (forest_->score(x) > if_threshold_) ++hits;
                break;
            case DetectorKind::kmeans:
                for (const auto& x : batch)
                    if (kmeans_->distance(scaler_.transform(x)) > cfg_.kmeans_dist) ++hits;
                break;
            case DetectorKind::gmm:
                for (const auto& x : batch)
                    if (gmm_->density(scaler_.transform(x)) < gmm_cut_) ++hits;
                break;
            case DetectorKind::pcc:
                for (const auto& x : batch)
                    if (pcc_->anomalous(scaler_.transform(x))) ++hits;
                break;
            default:
                throw std::logic_error("Detector: anomalous_fraction unsupported for this kind");
        }
        return static_cast<double>(hits) / static_cast<double>(batch.size());
    }

    // single-sample outlier test where the kind defines one (iforest scores)
    bool sample_anomalous(const FeatureVec& x) const {
        switch (kind_) {
            case DetectorKind::iforest: return forest_->score(x) > if_threshold_;
            case DetectorKind::kmeans: return kmeans_->distance(scaler_.transform(x)) > cfg_.kmeans_dist;
            case DetectorKind::gmm: return gmm_->density(scaler_.transform(x)) < gmm_cut_;
            case DetectorKind::pcc: return pcc_->anomalous(scaler_.transform(x));
            default: throw std::logic_error("Detector: sample_anomalous unsupported for this kind");
        }
    }

    // Station-local calibration. The fitted model stays global, but the
    // decision cutoff is re-anchored on the station's own attack-free
    // history: stations serve distinct catchments, and a pooled null
    // over-flags the ones whose normal profile sits in the pooled tail.
    void calibrate_port(int port_id, const std::vector<FeatureVec>& history) {
        if (history.size() < kMinSplit) return;
        switch (kind_) {
            case DetectorKind::iforest: {
                // stricter of the global and station-local nulls: the local
                // quantile adapts to a station whose normal profile reads
                // anomalous globally, the global one backstops small-sample
                // noise in the local estimate
                auto s = forest_->scores(history);
                port_thresholds_[port_id] = std::max(quantile(s, 1.0 - alpha_), if_threshold_);
                break;
            }
            case DetectorKind::kld:
                port_hists_.emplace(port_id, hist_->rebinned(history));
                break;
            case DetectorKind::gmm: {
                std::vector<double> dens;
                dens.reserve(history.size());
                for (const auto& x : scaler_.transform(history)) dens.push_back(gmm_->density(x));
                port_cuts_[port_id] = quantile(dens, cfg_.gmm_density_cut);
                break;
            }
            default:
                break; // kmeans and pcc decide on global geometry alone
        }
    }

    std::size_t ports_calibrated() const {
        return port_thresholds_.size() + port_hists_.size() + port_cuts_.size();
    }

    // Port-level decision on the rolling batch. Returns false on batches
    // smaller than the configured minimum: insufficient evidence.
    bool detect_port(const std::vector<FeatureVec>& batch) const { return detect_port(batch, -1); }

    bool detect_port(const std::vector<FeatureVec>& batch, int port_id) const {
        if (static_cast<int>(batch.size()) < cfg_.batch_min) return false;
        double n = static_cast<double>(batch.size());
        switch (kind_) {
            case DetectorKind::iforest: {
                double thr = if_threshold_;
                if (auto it = port_thresholds_.find(port_id); it != port_thresholds_.end())
                    thr = it->second;
                std::size_t hits = 0;
                for (const auto& x : batch)
                    if (forest_->score(x) > thr) ++hits;
                // batch fraction above the per-sample rate alpha by a one-sided
                // binomial significance margin, so clean batches rarely trip it
                double margin = 1.645 * std::sqrt(alpha_ * (1.0 - alpha_) / n);
                return static_cast<double>(hits) / n > alpha_ + margin;
            }
            case DetectorKind::kld: {
                const MarginalHistograms* h = &*hist_;
                if (auto it = port_hists_.find(port_id); it != port_hists_.end()) h = &it->second;
                return kld_batch_z(*h, batch) > alpha_;
            }
            case DetectorKind::gmm: {
                double cut = gmm_cut_;
                if (auto it = port_cuts_.find(port_id); it != port_cuts_.end()) cut = it->second;
                std::size_t hits = 0;
                for (const auto& x : batch)
                    if (gmm_->density(scaler_.transform(x)) < cut) ++hits;
                return static_cast<double>(hits) / n > alpha_;
            }
            case DetectorKind::kmeans:
            case DetectorKind::pcc:
                return anomalous_fraction(batch) > alpha_;
            default:
                throw std::logic_error("Detector: detect_port on kind none");
        }
    }

    DetectorKind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    bool em_converged() const { return em_converged_; }
    double iforest_threshold() const { return if_threshold_; }
    double gmm_density_cut() const { return gmm_cut_; }
    const FeatureScaler& scaler() const { return scaler_; }
    const IsolationForest& forest() const { return *forest_; }
    const MarginalHistograms& histograms() const { return *hist_; }
    const KMeansModel& kmeans_model() const { return *kmeans_; }
    const GmmModel& gmm_model() const { return *gmm_; }
    const PccModel& pcc_model() const { return *pcc_; }

    // audit summary of whatever was fitted
    nlohmann::json model_json() const {
        nlohmann::json j;
        j["kind"] = to_string(kind_);
        j["alpha"] = alpha_;
        j["train_size"] = train_size_;
        j["ports_calibrated"] = ports_calibrated();
        switch (kind_) {
            case DetectorKind::iforest:
                j["n_trees"] = forest_->n_trees();
                j["subsample"] = forest_->sample_size();
                j["path_norm"] = forest_->c_norm();
                j["score_threshold"] = if_threshold_;
                break;
            case DetectorKind::kld: {
                j["bins_per_dim"] = hist_->bins();
                j["dof"] = hist_->dof();
                j["reference"] = hist_->reference();
                break;
            }
            case DetectorKind::kmeans: {
                j["distance_cut"] = cfg_.kmeans_dist;
                auto& cs = j["centroids"] = nlohmann::json::array();
                for (const auto& c : kmeans_->centroids()) cs.push_back({c[0], c[1], c[2]});
                break;
            }
            case DetectorKind::gmm: {
                j["density_cut"] = gmm_cut_;
                j["em_converged"] = em_converged_;
                auto& cs = j["components"] = nlohmann::json::array();
                for (const auto& c : gmm_->components()) {
                    nlohmann::json cj;
                    cj["weight"] = c.weight;
                    cj["mean"] = {c.mean[0], c.mean[1], c.mean[2]};
                    cj["cov"] = c.cov;
                    cs.push_back(cj);
                }
                break;
            }
            case DetectorKind::pcc: {
                j["eigenvalues"] = pcc_->eigenvalues();
                j["major_components"] = pcc_->major_set();
                j["minor_components"] = pcc_->minor_set();
                j["major_threshold"] = pcc_->major_threshold();
                j["minor_threshold"] = pcc_->minor_threshold();
                break;
            }
            default:
                break;
        }
        if (kind_ == DetectorKind::kmeans || kind_ == DetectorKind::gmm || kind_ == DetectorKind::pcc) {
            j["scaler_mean"] = scaler_.mean;
            j["scaler_std"] = scaler_.stddev;
        }
        return j;
    }

private:
    static constexpr std::size_t kMinSplit = 20;

    // deterministic 70/30 shuffle-split for cutoff calibration; sets too
    // small to split keep everything on both sides
    static void calibration_split(const std::vector<FeatureVec>& data, Rng& rng,
                                  std::vector<FeatureVec>& fit_part,
                                  std::vector<FeatureVec>& held_part) {
        if (data.size() < kMinSplit) {
            fit_part = data;
            held_part = data;
            return;
        }
        std::vector<std::size_t> idx(data.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
            std::size_t j = i + rng.below(idx.size() - i);
            std::swap(idx[i], idx[j]);
        }
        std::size_t n_fit = (data.size() * 7) / 10;
        fit_part.reserve(n_fit);
        held_part.reserve(data.size() - n_fit);
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_fit ? fit_part : held_part).push_back(data[idx[i]]);
    }

    DetectorKind kind_ = DetectorKind::none;
    DetectorConfig cfg_;
    double alpha_ = 0.0;
    std::size_t train_size_ = 0;
    FeatureScaler scaler_;
    std::optional<IsolationForest> forest_;
    double if_threshold_ = 1.0;
    std::optional<MarginalHistograms> hist_;
    std::optional<KMeansModel> kmeans_;
    std::optional<GmmModel> gmm_;
    double gmm_cut_ = 0.0;
    std::optional<PccModel> pcc_;
    bool em_converged_ = true;
    std::unordered_map<int, double> port_thresholds_;
    std::unordered_map<int, MarginalHistograms> port_hists_;
    std::unordered_map<int, double> port_cuts_;
};

} // namespace sevsim
