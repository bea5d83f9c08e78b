// Command-line front end: single runs, evaluation sweeps, world generation,
// config validation and sweep reporting.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sevsim/sevsim.hpp"

namespace {

constexpr int kExitBadConfig = 2;
constexpr int kExitMissingInput = 3;

struct CommonOpts {
    std::string config_file;
    std::string scale = "desk";
    std::uint64_t seed = 1;
    double delay_min = -1.0;
    std::string detector;
    double alpha = -1.0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_file, "flat key = value config file");
    cmd->add_option("--scale", o.scale, "preset: desk (small, fast) or full (city scale)")
        ->check(CLI::IsMember({"desk", "full"}));
    cmd->add_option("--seed", o.seed, "base RNG seed");
    cmd->add_option("--delay-min", o.delay_min, "mean injected delay in minutes (0 disables)");
    cmd->add_option("--detector", o.detector,
                    "detector: none, iforest, kld, kmeans, gmm or pcc")
        ->check(CLI::IsMember({"none", "iforest", "kld", "kmeans", "gmm", "pcc"}));
    cmd->add_option("--alpha", o.alpha, "detector sensitivity (default: per-detector)");
}

// precedence: scale preset, then config file, then explicit flags
sevsim::ScenarioConfig make_config(const CommonOpts& o) {
    sevsim::ScenarioConfig cfg;
    cfg.apply_scale(o.scale);
    if (!o.config_file.empty()) sevsim::load_config_file(cfg, o.config_file);
    if (o.delay_min >= 0.0) cfg.attack.mu_delay_min = o.delay_min;
    if (!o.detector.empty()) cfg.detector.kind = o.detector;
    if (o.alpha >= 0.0) cfg.detector.alpha = o.alpha;
    cfg.validate();
    return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        seeds.push_back(std::stoull(tok));
    }
    if (seeds.empty()) throw sevsim::ConfigError("no seeds given");
    return seeds;
}

void print_run_summary(const sevsim::RunSummary& s) {
    std::printf("ticks            %d (launch at %d)\n", s.horizon_ticks, s.launch_tick);
    std::printf("trips            %lld total, %lld fulfilled, %lld expired\n",
                s.trips_total, s.trips_fulfilled, s.trips_expired);
    std::printf("sessions         %lld (%lld delayed)\n", s.sessions_total, s.sessions_delayed);
    std::printf("revenue (final)  $%s over %d ticks, $%.2f per driver\n",
                sevsim::fmt_cents(s.revenue_final_window_cents).c_str(), s.final_window_ticks,
                s.revenue_per_driver_final_usd);
    std::printf("queue wait       %.2f min mean (final window)\n", s.mean_queue_wait_final_min);
    std::printf("charge duration  %.2f min true, %.2f min observed (final window)\n",
                s.mean_true_duration_final_min, s.mean_actual_duration_final_min);
    std::printf("ports S/I/R      %.3f / %.3f / %.3f (final window mean share)\n",
                s.mean_s_share, s.mean_i_share, s.mean_r_share);
    std::printf("repairs          %lld visits, $%s\n", s.epidemic.repair_visits,
                sevsim::fmt_cents(s.epidemic.repair_cost_cents).c_str());
    if (s.detector_kind != "none") {
        std::printf("detector         %s alpha=%.3f\n", s.detector_kind.c_str(), s.detector_alpha);
        std::printf("confusion        tp=%lld fp=%lld tn=%lld fn=%lld\n", s.tally.tp, s.tally.fp,
                    s.tally.tn, s.tally.fn);
        std::printf("scores           acc=%.4f prec=%.4f rec=%.4f f1=%.4f\n", s.detection.accuracy,
                    s.detection.precision, s.detection.recall, s.detection.f1);
        if (s.detector_em_warning)
            std::printf("warning          EM did not converge; best iterate in use\n");
    }
    std::printf("stranded         %d\n", s.stranded_total);
}

int cmd_run(const CommonOpts& o, const std::string& out_dir) {
    sevsim::ScenarioConfig cfg = make_config(o);
    sevsim::RunResult r = sevsim::run_scenario(cfg, o.seed);
    std::filesystem::path dir =
        out_dir.empty() ? std::filesystem::path("out") / ("run_s" + std::to_string(o.seed))
                        : std::filesystem::path(out_dir);
    sevsim::write_run_dir(r, cfg, dir);
    std::printf("run: seed=%llu detector=%s mu=%.1f -> %s\n",
                static_cast<unsigned long long>(o.seed), cfg.detector.kind.c_str(),
                cfg.attack.mu_delay_min, dir.string().c_str());
    print_run_summary(r.summary);
    return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& out_dir, const std::string& seeds_csv,
              int threads, bool eval_grid, const std::string& alpha_detector) {
    sevsim::ScenarioConfig base = make_config(o);
    std::vector<std::uint64_t> seeds = parse_seeds(seeds_csv);
    std::vector<sevsim::SweepJob> jobs;
    if (!alpha_detector.empty()) {
        if (o.delay_min >= 0.0) base.attack.mu_delay_min = o.delay_min;
        jobs = sevsim::alpha_grid(base, alpha_detector, seeds);
    } else {
        (void)eval_grid; // the evaluation grid is the default and only grid
        jobs = sevsim::evaluation_grid(base, seeds);
    }
    std::filesystem::path dir = out_dir.empty() ? "out/sweep" : out_dir;
    std::printf("sweep: %zu runs on %d threads -> %s\n", jobs.size(), threads,
                dir.string().c_str());
    sevsim::SweepOutcome out = sevsim::run_sweep(jobs, dir, threads);
    sevsim::write_comparison_csv(jobs, out, (dir / "comparison.csv").string());
    sevsim::write_detector_summary_csv(jobs, out, (dir / "detector_summary.csv").string());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const sevsim::RunSummary& s = out.summaries[i];
        std::printf("  %-24s $%10s  f1=%.3f\n", jobs[i].name.c_str(),
                    sevsim::fmt_cents(s.revenue_final_window_cents).c_str(), s.detection.f1);
    }
    std::printf("wrote %s and detector_summary.csv\n", (dir / "comparison.csv").string().c_str());
    return 0;
}

int cmd_gen_world(const CommonOpts& o, const std::string& out_dir, bool with_matrix) {
    sevsim::ScenarioConfig cfg = make_config(o);
    sevsim::World w = sevsim::build_world(cfg, o.seed);
    std::filesystem::path dir = out_dir.empty() ? "out/world" : out_dir;
    std::filesystem::create_directories(dir);
    sevsim::save_zones((dir / "zones.csv").string(), w.zones);
    sevsim::save_ports((dir / "ports.csv").string(), w.ports);
    sevsim::save_trips((dir / "trips.csv").string(), w.trips);
    if (with_matrix) {
        int nz = static_cast<int>(w.zones.size());
        std::vector<std::vector<double>> m(nz, std::vector<double>(nz, 0.0));
        for (int i = 0; i < nz; ++i)
            for (int j = 0; j < nz; ++j) m[i][j] = w.travel.minutes(i, j);
        sevsim::save_matrix((dir / "travel_minutes.csv").string(), m);
    }
    std::printf("world: %zu zones, %zu ports, %zu trips -> %s\n", w.zones.size(), w.ports.size(),
                w.trips.size(), dir.string().c_str());
    return 0;
}

int cmd_validate(const CommonOpts& o) {
    sevsim::ScenarioConfig cfg = make_config(o);
    std::fputs(sevsim::config_snapshot(cfg).c_str(), stdout);
    std::printf("# config ok\n");
    return 0;
}

int cmd_report(const std::string& in_dir) {
    std::filesystem::path path = std::filesystem::path(in_dir) / "comparison.csv";
    std::ifstream in(path);
    if (!in) throw sevsim::CsvError(path.string() + ": cannot open file");
    std::string line;
    std::getline(in, line); // header
    struct Agg {
        int n = 0;
        double revenue = 0.0, loss = 0.0, f1 = 0.0, recall = 0.0, i_share = 0.0;
    };
    std::map<std::string, Agg> cells; // scenario name without the seed suffix
    while (std::getline(in, line)) {
        std::vector<std::string> f = sevsim::csv_split(line);
        if (f.size() < 24) continue;
        std::string name = f[0];
        std::size_t cut = name.rfind("_s");
        if (cut != std::string::npos) name = name.substr(0, cut);
        Agg& a = cells[name];
        ++a.n;
        a.revenue += std::stod(f[5]);
        a.loss += f[6].empty() ? 0.0 : std::stod(f[6]);
        a.f1 += std::stod(f[18]);
        a.recall += std::stod(f[17]);
        a.i_share += std::stod(f[14]);
    }
    std::printf("%-18s %5s %12s %12s %8s %8s %8s\n", "scenario", "runs", "revenue$", "loss$",
                "f1", "recall", "i_share");
    for (const auto& [name, a] : cells) {
        std::printf("%-18s %5d %12.2f %12.2f %8.4f %8.4f %8.4f\n", name.c_str(), a.n,
                    a.revenue / a.n, a.loss / a.n, a.f1 / a.n, a.recall / a.n, a.i_share / a.n);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"shared electric vehicle fleet simulator with charging-delay attacks"};
    app.require_subcommand(1);

    CommonOpts run_opts, sweep_opts, world_opts, val_opts;
    std::string run_out, sweep_out, world_out, report_in;
    std::string seeds_csv = "1,2,3";
    std::string alpha_detector;
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    bool eval_grid_flag = false, with_matrix = false;

    CLI::App* run = app.add_subcommand("run", "simulate one scenario and write a run directory");
    add_common(run, run_opts);
    run->add_option("--out", run_out, "output directory (default out/run_s<seed>)");

    CLI::App* sweep = app.add_subcommand("sweep", "run a scenario grid across seeds");
    add_common(sweep, sweep_opts);
    sweep->add_option("--out", sweep_out, "output directory (default out/sweep)");
    sweep->add_option("--seeds", seeds_csv, "comma-separated seeds (default 1,2,3)");
    sweep->add_option("--threads", threads, "worker threads");
    sweep->add_flag("--eval-grid", eval_grid_flag,
                    "baseline + {5,10,15} min delays x {none + all detectors} (default)");
    sweep->add_option("--alpha-sweep", alpha_detector,
                      "sweep one detector over its pinned sensitivity grid instead");

    CLI::App* world = app.add_subcommand("gen-world", "generate and save a synthetic world");
    add_common(world, world_opts);
    world->add_option("--out", world_out, "output directory (default out/world)");
    world->add_flag("--matrix", with_matrix, "also write the full travel-time matrix");

    CLI::App* val = app.add_subcommand("validate-config", "parse, validate and echo the config");
    add_common(val, val_opts);

    CLI::App* rep = app.add_subcommand("report", "aggregate a sweep's comparison.csv");
    rep->add_option("--in", report_in, "sweep output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_opts, run_out);
        if (sweep->parsed())
            return cmd_sweep(sweep_opts, sweep_out, seeds_csv, threads, eval_grid_flag,
                             alpha_detector);
        if (world->parsed()) return cmd_gen_world(world_opts, world_out, with_matrix);
        if (val->parsed()) return cmd_validate(val_opts);
        if (rep->parsed()) return cmd_report(report_in);
    } catch (const sevsim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitBadConfig;
    } catch (const sevsim::CsvError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitMissingInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
