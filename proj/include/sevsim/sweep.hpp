#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "sevsim/engine.hpp"
#include "sevsim/output.hpp"

namespace sevsim {

struct SweepJob {
    std::string name; // also the run directory name
    ScenarioConfig cfg;
    std::uint64_t seed = 0;
};

// The standard evaluation grid for one seed: an attack-free baseline, then
// each delay level with no defense and with every detector at its default
// sensitivity. 19 runs per seed.
inline std::vector<SweepJob> evaluation_grid(const ScenarioConfig& base,
                                        const std::vector<std::uint64_t>& seeds) {
    static const double kDelays[] = {5.0, 10.0, 15.0};
    static const char* kDetectors[] = {"iforest", "kld", "kmeans", "gmm", "pcc"};
    std::vector<SweepJob> jobs;
    for (std::uint64_t seed : seeds) {
        std::string suffix = "_s" + std::to_string(seed);
        {
            SweepJob j{"baseline" + suffix, base, seed};
            j.cfg.attack.mu_delay_min = 0.0;
            j.cfg.detector.kind = "none";
            jobs.push_back(std::move(j));
        }
        for (double mu : kDelays) {
            std::string mu_tag = "mu" + std::to_string(static_cast<int>(mu));
            {
                SweepJob j{mu_tag + "_noad" + suffix, base, seed};
                j.cfg.attack.mu_delay_min = mu;
                j.cfg.detector.kind = "none";
                jobs.push_back(std::move(j));
            }
            for (const char* det : kDetectors) {
                SweepJob j{mu_tag + "_" + det + suffix, base, seed};
                j.cfg.attack.mu_delay_min = mu;
                j.cfg.detector.kind = det;
                j.cfg.detector.alpha = -1.0; // per-detector default
                jobs.push_back(std::move(j));
            }
        }
    }
    return jobs;
}

// Sensitivity sweep: one detector, every pinned alpha, fixed delay.
inline std::vector<SweepJob> alpha_grid(const ScenarioConfig& base, const std::string& detector,
                                        const std::vector<std::uint64_t>& seeds) {
    std::vector<SweepJob> jobs;
    for (std::uint64_t seed : seeds) {
        for (double a : DetectorConfig::alpha_sweep(detector)) {
            SweepJob j;
            j.name = detector + "_a" + fmt_double(a, 2) + "_s" + std::to_string(seed);
            j.cfg = base;
            j.cfg.detector.kind = detector;
            j.cfg.detector.alpha = a;
            j.seed = seed;
            jobs.push_back(std::move(j));
        }
    }
    return jobs;
}

struct SweepOutcome {
    std::vector<RunSummary> summaries; // parallel to the job list
};

// Runs every job, each writing its own run directory under out_dir. Jobs are
// independent; results land in job order, so output bytes do not depend on
// the thread count.
inline SweepOutcome run_sweep(const std::vector<SweepJob>& jobs,
                              const std::filesystem::path& out_dir, int n_threads) {
    if (n_threads < 1) n_threads = 1;
    if (n_threads > static_cast<int>(jobs.size())) n_threads = static_cast<int>(jobs.size());
    std::filesystem::create_directories(out_dir);

    SweepOutcome out;
    out.summaries.resize(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                RunResult r = run_scenario(jobs[i].cfg, jobs[i].seed);
                write_run_dir(r, jobs[i].cfg, out_dir / jobs[i].name);
                out.summaries[i] = r.summary;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);
    return out;
}

// Cross-run table: one row per job, with revenue loss against the matching
// attack-free baseline of the same seed where one exists in the sweep.
inline void write_comparison_csv(const std::vector<SweepJob>& jobs, const SweepOutcome& out,
                                 const std::string& path) {
    CsvWriter w(path,
                "scenario,seed,mu_delay_min,detector,alpha,revenue_final_usd,"
                "loss_vs_baseline_usd,loss_pct,per_driver_loss_usd,repair_visits,repair_cost_usd,"
                "confirmed_detections,false_alarms,recovery_rate,mean_i_share,accuracy,precision,"
                "recall,f1,fulfilled_final,expired_final,mean_queue_wait_min,"
                "mean_actual_duration_min,stranded");
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const RunSummary& s = out.summaries[i];
        const RunSummary* base = nullptr;
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            const RunSummary& b = out.summaries[k];
            if (b.seed == s.seed && b.mu_delay_min == 0.0 && b.detector_kind == "none" && k != i) {
                base = &b;
                break;
            }
        }
        std::string loss_usd = "", loss_pct = "", loss_driver = "";
        if (base) {
            PairedLoss l = pair_baseline(s, *base);
            loss_usd = fmt_cents(l.abs_cents);
            loss_pct = fmt_double(l.pct, 4);
            loss_driver = fmt_double(l.per_driver_usd, 4);
        }
        w.row(jobs[i].name + "," + std::to_string(s.seed) + "," + fmt_double(s.mu_delay_min, 2) +
              "," + s.detector_kind + "," + fmt_double(s.detector_alpha, 4) + "," +
              fmt_cents(s.revenue_final_window_cents) + "," + loss_usd + "," + loss_pct + "," +
              loss_driver + "," + std::to_string(s.epidemic.repair_visits) + "," +
              fmt_cents(s.epidemic.repair_cost_cents) + "," +
              std::to_string(s.epidemic.confirmed_detections) + "," +
              std::to_string(s.epidemic.false_alarms) + "," +
              fmt_double(s.epidemic.realized_recovery_rate(), 6) + "," +
              fmt_double(s.mean_i_share, 6) + "," + fmt_double(s.detection.accuracy, 6) + "," +
              fmt_double(s.detection.precision, 6) + "," + fmt_double(s.detection.recall, 6) +
              "," + fmt_double(s.detection.f1, 6) + "," + std::to_string(s.fulfilled_final_window) +
              "," + std::to_string(s.expired_final_window) + "," +
              fmt_double(s.mean_queue_wait_final_min, 4) + "," +
              fmt_double(s.mean_actual_duration_final_min, 4) + "," +
              std::to_string(s.stranded_total));
    }
}

// Confusion counts pooled over seeds for each (detector, delay, alpha) cell.
inline void write_detector_summary_csv(const std::vector<SweepJob>& jobs, const SweepOutcome& out,
                                       const std::string& path) {
    struct Cell {
        std::string detector;
        double alpha = 0.0, mu = 0.0;
        ConfusionTally tally;
        int runs = 0;
    };
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const RunSummary& s = out.summaries[i];
        if (s.detector_kind == "none") continue;
        Cell* c = nullptr;
        for (Cell& k : cells)
            if (k.detector == s.detector_kind && k.alpha == s.detector_alpha && k.mu == s.mu_delay_min)
                c = &k;
        if (!c) {
            cells.push_back(Cell{s.detector_kind, s.detector_alpha, s.mu_delay_min, {}, 0});
            c = &cells.back();
        }
        c->tally.tp += s.tally.tp;
        c->tally.fp += s.tally.fp;
        c->tally.tn += s.tally.tn;
        c->tally.fn += s.tally.fn;
        ++c->runs;
    }
    CsvWriter w(path, "detector,alpha,mu_delay_min,runs,tp,fp,tn,fn,accuracy,precision,recall,f1");
    for (const Cell& c : cells) {
        DetectionMetrics m = evaluate(c.tally);
        w.row(c.detector + "," + fmt_double(c.alpha, 4) + "," + fmt_double(c.mu, 2) + "," +
              std::to_string(c.runs) + "," + std::to_string(c.tally.tp) + "," +
              std::to_string(c.tally.fp) + "," + std::to_string(c.tally.tn) + "," +
              std::to_string(c.tally.fn) + "," + fmt_double(m.accuracy, 6) + "," +
              fmt_double(m.precision, 6) + "," + fmt_double(m.recall, 6) + "," +
              fmt_double(m.f1, 6));
    }
}

} // namespace sevsim
