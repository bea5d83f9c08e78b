#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sevsim/csv.hpp"

namespace sevsim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BatteryConfig {
    double capacity_kwh = 50.0;
    double range_miles = 220.0;
    double cc_rate_mi_per_min = 5.13;
    double soc_tip = 0.80;
    double target_soc_mean = 0.78;
    double target_soc_std = 0.02;
};

struct AttackConfig {
    double mu_delay_min = 10.0;
    double sigma_delay_min = -1.0; // -1: defaults to 0.1 * mu
    double beta = 0.1;
    int infection_epoch_min = 30;
    int repair_duration_min = 180;
    double repair_cost_usd = 1.78;
    std::string initial_state = "all_infectious"; // or all_susceptible

    double sigma() const { return sigma_delay_min < 0.0 ? 0.1 * mu_delay_min : sigma_delay_min; }
    long long repair_cost_cents() const { return std::llround(repair_cost_usd * 100.0); }
};

struct DetectorConfig {
    std::string kind = "none"; // none|iforest|kld|kmeans|gmm|pcc
    double alpha = -1.0;       // -1: per-kind default
    int ad_epoch_min = 30;
    int batch_window_min = 1440;
    int batch_min = 3;
    int min_train = 50;
    // isolation forest
    int n_trees = 100;
    int subsample = 256;
    // kld
    int bins_per_dim = 10;
    // kmeans
    int kmeans_k = 8;
    int kmeans_iters = 50;
    double kmeans_dist = 2.5;
    // gmm
    int gmm_components = 3;
    int gmm_iters = 200;
    double gmm_reg = 1e-6;
    double gmm_density_cut = 0.01;
    // pcc
    double pcc_major_var = 0.5;
    double pcc_minor_eig = 0.2;
    double pcc_sig = 0.005;

    static double default_alpha(const std::string& kind) {
        if (kind == "iforest") return 0.10;
        if (kind == "kld") return 2.0;
        if (kind == "kmeans") return 0.40;
        if (kind == "gmm") return 0.25;
        if (kind == "pcc") return 0.40;
        return 0.0;
    }

    static void alpha_range(const std::string& kind, double& lo, double& hi) {
        if (kind == "iforest") { lo = 0.05; hi = 0.15; }
        else if (kind == "kld") { lo = 1.0; hi = 5.0; }
        else if (kind == "kmeans") { lo = 0.2; hi = 0.6; }
        else if (kind == "gmm") { lo = 0.05; hi = 0.55; }
        else if (kind == "pcc") { lo = 0.3; hi = 0.8; }
        else { lo = 0.0; hi = 0.0; }
    }

    static std::vector<double> alpha_sweep(const std::string& kind) {
        if (kind == "iforest") return {0.05, 0.075, 0.10, 0.125, 0.15};
        if (kind == "kld") return {1, 2, 3, 4, 5};
        if (kind == "kmeans") return {0.2, 0.3, 0.4, 0.5, 0.6};
        if (kind == "gmm") return {0.05, 0.15, 0.25, 0.35, 0.45, 0.55};
        if (kind == "pcc") return {0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
        return {};
    }

    double effective_alpha() const { return alpha < 0.0 ? default_alpha(kind) : alpha; }
};

struct WorldConfig {
    int n_zones = 60;
    int n_ports = 20;
    int fleet_size = 100;
    double zone_spacing_miles = 0.6;
    double demand_per_min = 4.0;
    double speed_mph = 12.0;
    double trip_sample_fraction = 1.0;
    std::string zones_csv;  // empty: synthesize
    std::string ports_csv;
    std::string trips_csv;
    std::string matrix_csv; // empty: euclidean travel times
};

struct MobilityConfig {
    int dispatch_radius_min = 20;
    int max_wait_min = 10;
    double charge_trigger_soc = 0.20;
    int queue_abandon_min = 30;
    int reposition_interval_min = 15;
    int demand_window_min = 15;
    double queue_cold_start_min = 25.0;
    double fare_per_mile = 0.631;
    double fare_per_min = 0.287;
};

struct EngineConfig {
    double horizon_weeks = 1.0;
    double warmup_weeks = 1.0 / 7.0;
    int stranded_park_min = 60;
    double stranded_recover_soc = 0.05;
    double init_soc_lo = 0.5;
    double init_soc_hi = 0.9;
};

struct ScenarioConfig {
    BatteryConfig battery;
    AttackConfig attack;
    DetectorConfig detector;
    WorldConfig world;
    MobilityConfig mobility;
    EngineConfig engine;

    int horizon_ticks() const { return static_cast<int>(std::lround(engine.horizon_weeks * 10080.0)); }
    int warmup_ticks() const { return static_cast<int>(std::lround(engine.warmup_weeks * 10080.0)); }

    void apply_scale(const std::string& scale) {
        if (scale == "desk") {
            // small world tuned so the fleet's driving hours, not port
            // capacity, are the binding resource: queueing delay then shows
            // the attack clearly while repair outages absorb into headroom
            world.n_zones = 60;
            world.n_ports = 12;
            world.fleet_size = 110;
            world.demand_per_min = 6.5;
            mobility.queue_abandon_min = 90;
            engine.horizon_weeks = 1.0;
            engine.warmup_weeks = 3.0 / 7.0;
        } else if (scale == "full") {
            world.n_zones = 1347;
            world.n_ports = 215;
            world.fleet_size = 1400;
            world.demand_per_min = 3.2;
            engine.horizon_weeks = 4.0;
            engine.warmup_weeks = 1.0;
        } else {
            throw ConfigError("unknown scale '" + scale + "' (expected desk or full)");
        }
    }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
        };
        positive(battery.capacity_kwh, "battery.capacity_kwh");
        positive(battery.range_miles, "battery.range_miles");
        positive(battery.cc_rate_mi_per_min, "battery.cc_rate_mi_per_min");
        if (!(battery.soc_tip > 0.0 && battery.soc_tip < 1.0))
            throw ConfigError("battery.soc_tip must be in (0,1)");
        if (!(battery.target_soc_mean > 0.0 && battery.target_soc_mean <= battery.soc_tip))
            throw ConfigError("battery.target_soc_mean must be in (0, soc_tip]");
        if (battery.target_soc_std < 0.0) throw ConfigError("battery.target_soc_std must be >= 0");
        if (attack.mu_delay_min < 0.0) throw ConfigError("attack.mu_delay_min must be >= 0");
        if (!(attack.beta >= 0.0 && attack.beta <= 1.0)) throw ConfigError("attack.beta must be in [0,1]");
        if (attack.infection_epoch_min <= 0) throw ConfigError("attack.infection_epoch_min must be positive");
        if (attack.repair_duration_min <= 0) throw ConfigError("attack.repair_duration_min must be positive");
        if (attack.repair_cost_usd < 0.0) throw ConfigError("attack.repair_cost_usd must be >= 0");
        if (attack.initial_state != "all_infectious" && attack.initial_state != "all_susceptible")
            throw ConfigError("attack.initial_state must be all_infectious or all_susceptible");
        static const char* kinds[] = {"none", "iforest", "kld", "kmeans", "gmm", "pcc"};
        bool known = false;
        for (const char* k : kinds) known = known || detector.kind == k;
        if (!known) throw ConfigError("detector.kind '" + detector.kind + "' unknown");
        if (detector.kind != "none" && detector.alpha >= 0.0) {
            double lo, hi;
            DetectorConfig::alpha_range(detector.kind, lo, hi);
            if (detector.alpha < lo - 1e-12 || detector.alpha > hi + 1e-12)
                throw ConfigError("detector.alpha out of sweep range for " + detector.kind);
        }
        if (detector.ad_epoch_min <= 0) throw ConfigError("detector.ad_epoch_min must be positive");
        if (detector.batch_min < 1) throw ConfigError("detector.batch_min must be >= 1");
        if (world.n_zones <= 0 || world.n_ports <= 0 || world.fleet_size <= 0)
            throw ConfigError("world sizes must be positive");
        if (world.n_ports > world.n_zones && world.zones_csv.empty())
            throw ConfigError("world.n_ports exceeds world.n_zones");
        if (!(world.trip_sample_fraction > 0.0 && world.trip_sample_fraction <= 1.0))
            throw ConfigError("world.trip_sample_fraction must be in (0,1]");
        positive(world.speed_mph, "world.speed_mph");
        if (mobility.dispatch_radius_min <= 0) throw ConfigError("mobility.dispatch_radius_min must be positive");
        if (mobility.max_wait_min <= 0) throw ConfigError("mobility.max_wait_min must be positive");
        if (!(mobility.charge_trigger_soc > 0.0 && mobility.charge_trigger_soc < 1.0))
            throw ConfigError("mobility.charge_trigger_soc must be in (0,1)");
        if (!(engine.horizon_weeks > 0.0)) throw ConfigError("engine.horizon_weeks must be positive");
        if (!(engine.warmup_weeks >= 0.0 && engine.warmup_weeks < engine.horizon_weeks))
            throw ConfigError("engine.warmup_weeks must be in [0, horizon_weeks)");
    }
};

namespace detail {

struct KeyBinding {
    std::function<void(ScenarioConfig&, const std::string&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

inline double parse_num(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': malformed numeric value '" + v + "'");
    }
}

inline std::string fmt_num(double v) {
    if (v == std::floor(v) && std::fabs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline const std::map<std::string, KeyBinding>& key_table() {
    static const std::map<std::string, KeyBinding> table = [] {
        std::map<std::string, KeyBinding> t;
        auto dbl = [&t](const std::string& key, auto ref) {
            t[key] = KeyBinding{
                [key, ref](ScenarioConfig& c, const std::string& v) { ref(c) = parse_num(key, v); },
                [ref](const ScenarioConfig& c) { return fmt_num(ref(const_cast<ScenarioConfig&>(c))); }};
        };
        auto inum = [&t](const std::string& key, auto ref) {
            t[key] = KeyBinding{
                [key, ref](ScenarioConfig& c, const std::string& v) {
                    double d = parse_num(key, v);
                    if (d != std::floor(d)) throw ConfigError("key '" + key + "': expected integer");
                    ref(c) = static_cast<int>(d);
                },
                [ref](const ScenarioConfig& c) {
                    return std::to_string(ref(const_cast<ScenarioConfig&>(c)));
                }};
        };
        auto str = [&t](const std::string& key, auto ref) {
            t[key] = KeyBinding{
                [ref](ScenarioConfig& c, const std::string& v) { ref(c) = v; },
                [ref](const ScenarioConfig& c) { return ref(const_cast<ScenarioConfig&>(c)); }};
        };

        dbl("battery.capacity_kwh", [](ScenarioConfig& c) -> double& { return c.battery.capacity_kwh; });
        dbl("battery.range_miles", [](ScenarioConfig& c) -> double& { return c.battery.range_miles; });
        dbl("battery.cc_rate_mi_per_min", [](ScenarioConfig& c) -> double& { return c.battery.cc_rate_mi_per_min; });
        dbl("battery.soc_tip", [](ScenarioConfig& c) -> double& { return c.battery.soc_tip; });
        dbl("battery.target_soc_mean", [](ScenarioConfig& c) -> double& { return c.battery.target_soc_mean; });
        dbl("battery.target_soc_std", [](ScenarioConfig& c) -> double& { return c.battery.target_soc_std; });

        dbl("attack.mu_delay_min", [](ScenarioConfig& c) -> double& { return c.attack.mu_delay_min; });
        dbl("attack.sigma_delay_min", [](ScenarioConfig& c) -> double& { return c.attack.sigma_delay_min; });
        dbl("attack.beta", [](ScenarioConfig& c) -> double& { return c.attack.beta; });
        inum("attack.infection_epoch_min", [](ScenarioConfig& c) -> int& { return c.attack.infection_epoch_min; });
        inum("attack.repair_duration_min", [](ScenarioConfig& c) -> int& { return c.attack.repair_duration_min; });
        dbl("attack.repair_cost_usd", [](ScenarioConfig& c) -> double& { return c.attack.repair_cost_usd; });
        str("attack.initial_state", [](ScenarioConfig& c) -> std::string& { return c.attack.initial_state; });

        str("detector.kind", [](ScenarioConfig& c) -> std::string& { return c.detector.kind; });
        dbl("detector.alpha", [](ScenarioConfig& c) -> double& { return c.detector.alpha; });
        inum("detector.ad_epoch_min", [](ScenarioConfig& c) -> int& { return c.detector.ad_epoch_min; });
        inum("detector.batch_window_min", [](ScenarioConfig& c) -> int& { return c.detector.batch_window_min; });
        inum("detector.batch_min", [](ScenarioConfig& c) -> int& { return c.detector.batch_min; });
        inum("detector.min_train", [](ScenarioConfig& c) -> int& { return c.detector.min_train; });
        inum("detector.n_trees", [](ScenarioConfig& c) -> int& { return c.detector.n_trees; });
        inum("detector.subsample", [](ScenarioConfig& c) -> int& { return c.detector.subsample; });
        inum("detector.bins_per_dim", [](ScenarioConfig& c) -> int& { return c.detector.bins_per_dim; });
        inum("detector.kmeans_k", [](ScenarioConfig& c) -> int& { return c.detector.kmeans_k; });
        inum("detector.kmeans_iters", [](ScenarioConfig& c) -> int& { return c.detector.kmeans_iters; });
        dbl("detector.kmeans_dist", [](ScenarioConfig& c) -> double& { return c.detector.kmeans_dist; });
        inum("detector.gmm_components", [](ScenarioConfig& c) -> int& { return c.detector.gmm_components; });
        inum("detector.gmm_iters", [](ScenarioConfig& c) -> int& { return c.detector.gmm_iters; });
        dbl("detector.gmm_reg", [](ScenarioConfig& c) -> double& { return c.detector.gmm_reg; });
        dbl("detector.gmm_density_cut", [](ScenarioConfig& c) -> double& { return c.detector.gmm_density_cut; });
        dbl("detector.pcc_major_var", [](ScenarioConfig& c) -> double& { return c.detector.pcc_major_var; });
        dbl("detector.pcc_minor_eig", [](ScenarioConfig& c) -> double& { return c.detector.pcc_minor_eig; });
        dbl("detector.pcc_sig", [](ScenarioConfig& c) -> double& { return c.detector.pcc_sig; });

        inum("world.n_zones", [](ScenarioConfig& c) -> int& { return c.world.n_zones; });
        inum("world.n_ports", [](ScenarioConfig& c) -> int& { return c.world.n_ports; });
        inum("world.fleet_size", [](ScenarioConfig& c) -> int& { return c.world.fleet_size; });
        dbl("world.zone_spacing_miles", [](ScenarioConfig& c) -> double& { return c.world.zone_spacing_miles; });
        dbl("world.demand_per_min", [](ScenarioConfig& c) -> double& { return c.world.demand_per_min; });
        dbl("world.speed_mph", [](ScenarioConfig& c) -> double& { return c.world.speed_mph; });
        dbl("world.trip_sample_fraction", [](ScenarioConfig& c) -> double& { return c.world.trip_sample_fraction; });
        str("world.zones_csv", [](ScenarioConfig& c) -> std::string& { return c.world.zones_csv; });
        str("world.ports_csv", [](ScenarioConfig& c) -> std::string& { return c.world.ports_csv; });
        str("world.trips_csv", [](ScenarioConfig& c) -> std::string& { return c.world.trips_csv; });
        str("world.matrix_csv", [](ScenarioConfig& c) -> std::string& { return c.world.matrix_csv; });

        inum("mobility.dispatch_radius_min", [](ScenarioConfig& c) -> int& { return c.mobility.dispatch_radius_min; });
        inum("mobility.max_wait_min", [](ScenarioConfig& c) -> int& { return c.mobility.max_wait_min; });
        dbl("mobility.charge_trigger_soc", [](ScenarioConfig& c) -> double& { return c.mobility.charge_trigger_soc; });
        inum("mobility.queue_abandon_min", [](ScenarioConfig& c) -> int& { return c.mobility.queue_abandon_min; });
        inum("mobility.reposition_interval_min", [](ScenarioConfig& c) -> int& { return c.mobility.reposition_interval_min; });
        inum("mobility.demand_window_min", [](ScenarioConfig& c) -> int& { return c.mobility.demand_window_min; });
        dbl("mobility.queue_cold_start_min", [](ScenarioConfig& c) -> double& { return c.mobility.queue_cold_start_min; });
        dbl("mobility.fare_per_mile", [](ScenarioConfig& c) -> double& { return c.mobility.fare_per_mile; });
        dbl("mobility.fare_per_min", [](ScenarioConfig& c) -> double& { return c.mobility.fare_per_min; });

        dbl("engine.horizon_weeks", [](ScenarioConfig& c) -> double& { return c.engine.horizon_weeks; });
        dbl("engine.warmup_weeks", [](ScenarioConfig& c) -> double& { return c.engine.warmup_weeks; });
        inum("engine.stranded_park_min", [](ScenarioConfig& c) -> int& { return c.engine.stranded_park_min; });
        dbl("engine.stranded_recover_soc", [](ScenarioConfig& c) -> double& { return c.engine.stranded_recover_soc; });
        dbl("engine.init_soc_lo", [](ScenarioConfig& c) -> double& { return c.engine.init_soc_lo; });
        dbl("engine.init_soc_hi", [](ScenarioConfig& c) -> double& { return c.engine.init_soc_hi; });
        return t;
    }();
    return table;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace detail

inline void config_set(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = detail::key_table();
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.set(cfg, value);
}

// Flat "key = value" file; '#' starts a comment; blank lines ignored.
inline void load_config_file(ScenarioConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(path + ": cannot open file");
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(ln) + ": expected 'key = value'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        try {
            config_set(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(ln) + ": " + e.what());
        }
    }
}

// Deterministic full snapshot, parseable by load_config_file.
inline std::string config_snapshot(const ScenarioConfig& cfg) {
    std::ostringstream out;
    for (const auto& [key, binding] : detail::key_table())
        out << key << " = " << binding.get(cfg) << "\n";
    return out.str();
}

} // namespace sevsim
