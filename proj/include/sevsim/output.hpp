#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "sevsim/csv.hpp"
#include "sevsim/detector.hpp"
#include "sevsim/engine.hpp"

namespace sevsim {

inline nlohmann::json summary_json(const RunSummary& s) {
    nlohmann::json j;
    j["seed"] = s.seed;
    j["world_fingerprint"] = s.world_fingerprint;
    j["build_stamp"] = s.build_stamp;
    j["detector"] = s.detector_kind;
    j["detector_alpha"] = s.detector_alpha;
    j["detector_em_warning"] = s.detector_em_warning;
    j["mu_delay_min"] = s.mu_delay_min;
    j["horizon_ticks"] = s.horizon_ticks;
    j["warmup_ticks"] = s.warmup_ticks;
    j["launch_tick"] = s.launch_tick;
    j["final_window_ticks"] = s.final_window_ticks;
    j["revenue_total_usd"] = fmt_cents(s.revenue_total_cents);
    j["revenue_final_window_usd"] = fmt_cents(s.revenue_final_window_cents);
    j["revenue_per_driver_final_usd"] = s.revenue_per_driver_final_usd;
    j["trips_total"] = s.trips_total;
    j["trips_fulfilled"] = s.trips_fulfilled;
    j["trips_expired"] = s.trips_expired;
    j["fulfilled_final_window"] = s.fulfilled_final_window;
    j["expired_final_window"] = s.expired_final_window;
    j["sessions_total"] = s.sessions_total;
    j["sessions_delayed"] = s.sessions_delayed;
    j["mean_queue_wait_final_min"] = s.mean_queue_wait_final_min;
    j["mean_true_duration_final_min"] = s.mean_true_duration_final_min;
    j["mean_actual_duration_final_min"] = s.mean_actual_duration_final_min;
    j["stranded_total"] = s.stranded_total;
    j["repair_visits"] = s.epidemic.repair_visits;
    j["repair_cost_usd"] = fmt_cents(s.epidemic.repair_cost_cents);
    j["confirmed_detections"] = s.epidemic.confirmed_detections;
    j["false_alarms"] = s.epidemic.false_alarms;
    j["infectious_port_epochs"] = s.epidemic.infectious_port_epochs;
    j["realized_recovery_rate"] = s.epidemic.realized_recovery_rate();
    j["mean_s_share"] = s.mean_s_share;
    j["mean_i_share"] = s.mean_i_share;
    j["mean_r_share"] = s.mean_r_share;
    j["tp"] = s.tally.tp;
    j["fp"] = s.tally.fp;
    j["tn"] = s.tally.tn;
    j["fn"] = s.tally.fn;
    j["accuracy"] = s.detection.accuracy;
    j["precision"] = s.detection.precision;
    j["recall"] = s.detection.recall;
    j["f1"] = s.detection.f1;
    j["episodes_detected"] = s.episodes_detected;
    j["episodes_missed"] = s.episodes_missed;
    j["episode_precision"] = s.episode_metrics.precision;
    j["episode_recall"] = s.episode_metrics.recall;
    j["episode_f1"] = s.episode_metrics.f1;
    return j;
}

inline void write_metrics_csv(const RunResult& r, const std::string& path) {
    CsvWriter w(path,
                "tick,fulfillment_rate,sev_occupancy,evse_occupancy,mean_queue_wait_min,"
                "mean_charge_min,sessions_started,revenue_usd_cum,stranded_cum,open_requests,"
                "n_infectious,n_idle,n_cruising,n_dispatching,n_occupied,n_to_charger,n_queued,"
                "n_charging,n_stranded");
    for (const MetricsFrame& f : r.frames) {
        w.row(std::to_string(f.tick) + "," + fmt_double(f.fulfillment_rate, 6) + "," +
              fmt_double(f.sev_occupancy, 6) + "," + fmt_double(f.evse_occupancy, 6) + "," +
              fmt_double(f.mean_queue_wait, 4) + "," + fmt_double(f.mean_charge_min, 4) + "," +
              std::to_string(f.sessions_started) + "," + fmt_cents(f.revenue_cents_cum) + "," +
              std::to_string(f.stranded_cum) + "," + std::to_string(f.open_requests) + "," +
              std::to_string(f.n_infectious) + "," + std::to_string(f.n_idle) + "," +
              std::to_string(f.n_cruising) + "," + std::to_string(f.n_dispatching) + "," +
              std::to_string(f.n_occupied) + "," + std::to_string(f.n_to_charger) + "," +
              std::to_string(f.n_queued) + "," + std::to_string(f.n_charging) + "," +
              std::to_string(f.n_stranded));
    }
}

inline void write_sessions_csv(const RunResult& r, const std::string& path) {
    CsvWriter w(path, "port_id,sev_id,enqueue_tick,start_tick,true_duration,actual_duration,"
                      "initial_soc,port_state");
    for (const SessionRecord& s : r.sessions) {
        w.row(std::to_string(s.port_id) + "," + std::to_string(s.sev_id) + "," +
              std::to_string(s.enqueue_tick) + "," + std::to_string(s.start_tick) + "," +
              std::to_string(s.true_duration) + "," + std::to_string(s.actual_duration) + "," +
              fmt_double(s.initial_soc, 6) + "," + to_char(s.port_state_at_start));
    }
}

inline void write_epidemic_csv(const RunResult& r, const std::string& path) {
    CsvWriter w(path, "epoch_tick,n_S,n_I,n_R,repair_visits,repair_cost_usd");
    for (const EpochRecord& e : r.epochs) {
        w.row(std::to_string(e.epoch_tick) + "," + std::to_string(e.n_s) + "," +
              std::to_string(e.n_i) + "," + std::to_string(e.n_r) + "," +
              std::to_string(e.repair_visits_cum) + "," + fmt_cents(e.repair_cost_cents_cum));
    }
}

inline void write_detections_csv(const RunResult& r, const std::string& path) {
    CsvWriter w(path, "epoch_tick,detector,port_id,flag,truth,batch_size");
    for (const DetectionRecord& d : r.detections) {
        w.row(std::to_string(d.epoch_tick) + "," + to_string(d.kind) + "," +
              std::to_string(d.port_id) + "," + (d.flag ? "1," : "0,") + (d.truth ? "1," : "0,") +
              std::to_string(d.batch_size));
    }
}

inline void write_transitions_csv(const RunResult& r, const std::string& path) {
    CsvWriter w(path, "tick,port_id,from,to");
    for (const PortTransition& t : r.transitions) {
        w.row(std::to_string(t.tick) + "," + std::to_string(t.port) + "," + to_char(t.from) + "," +
              to_char(t.to));
    }
}

inline void write_trip_outcomes_csv(const RunResult& r, const std::string& path) {
    CsvWriter w(path, "id,request_min,origin_zone,dest_zone,distance_miles,status,sev_id,"
                      "assign_tick,pickup_tick,dropoff_tick,fare_usd");
    for (std::size_t i = 0; i < r.trips_final.size(); ++i) {
        const TripRequest& t = r.trips_final[i];
        const TripOutcome& o = r.trip_outcomes[i];
        w.row(std::to_string(t.id) + "," + std::to_string(t.request_tick) + "," +
              std::to_string(t.origin_zone) + "," + std::to_string(t.dest_zone) + "," +
              fmt_double(t.distance_miles, 4) + "," + to_string(t.status) + "," +
              std::to_string(o.sev_id) + "," + std::to_string(o.assign_tick) + "," +
              std::to_string(o.pickup_tick) + "," + std::to_string(o.dropoff_tick) + "," +
              fmt_cents(o.fare_cents));
    }
}

// Writes the full artifact set for one run into dir (created if absent).
inline void write_run_dir(const RunResult& r, const ScenarioConfig& cfg,
                          const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "config.txt", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir / "config.txt").string());
        out << config_snapshot(cfg);
        out << "seed = " << r.summary.seed << "\n";
        out << "build = " << r.summary.build_stamp << "\n";
    }
    {
        std::ofstream out(dir / "summary.json", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
        out << summary_json(r.summary).dump(2) << "\n";
    }
    if (!r.model_json.empty()) {
        std::ofstream out(dir / "model.json", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir / "model.json").string());
        out << r.model_json << "\n";
    }
    write_metrics_csv(r, (dir / "metrics.csv").string());
    write_sessions_csv(r, (dir / "sessions.csv").string());
    write_epidemic_csv(r, (dir / "epidemic.csv").string());
    write_detections_csv(r, (dir / "detections.csv").string());
    write_transitions_csv(r, (dir / "transitions.csv").string());
    write_trip_outcomes_csv(r, (dir / "trips.csv").string());
}

} // namespace sevsim
