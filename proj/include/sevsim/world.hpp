#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "sevsim/config.hpp"
#include "sevsim/csv.hpp"
#include "sevsim/rng.hpp"

namespace sevsim {

struct Zone {
    int id = 0;
    double x_miles = 0.0;
    double y_miles = 0.0;
};

enum class TripStatus { open, assigned, fulfilled, expired };

inline const char* to_string(TripStatus s) {
    switch (s) {
        case TripStatus::open: return "open";
        case TripStatus::assigned: return "assigned";
        case TripStatus::fulfilled: return "fulfilled";
        case TripStatus::expired: return "expired";
    }
    return "?";
}

struct TripRequest {
    int id = 0;
    int request_tick = 0;
    int origin_zone = 0;
    int dest_zone = 0;
    double distance_miles = 0.0;
    TripStatus status = TripStatus::open;
};

struct PortSite {
    int id = 0;
    int zone = 0;
};

// Travel times in minutes between zone centroids. Synthetic mode rounds the
// euclidean time up to whole minutes (zero on the diagonal); matrix mode
// returns the stored entry verbatim.
class TravelTimeProvider {
public:
    static TravelTimeProvider synthetic(std::vector<Zone> zones, double speed_mph) {
        if (!(speed_mph > 0.0)) throw std::invalid_argument("travel time: speed must be positive");
        TravelTimeProvider p;
        p.zones_ = std::move(zones);
        p.speed_mph_ = speed_mph;
        return p;
    }

    static TravelTimeProvider matrix(std::vector<Zone> zones, std::vector<std::vector<double>> minutes) {
        TravelTimeProvider p;
        if (minutes.size() != zones.size())
            throw std::invalid_argument("travel time matrix: row count does not match zone count");
        for (const auto& row : minutes)
            if (row.size() != zones.size())
                throw std::invalid_argument("travel time matrix: matrix must be square");
        p.zones_ = std::move(zones);
        p.matrix_ = std::move(minutes);
        return p;
    }

    double minutes(int from, int to) const {
        check_zone(from);
        check_zone(to);
        if (!matrix_.empty()) return matrix_[from][to];
        if (from == to) return 0.0;
        double d = distance_miles(from, to);
        return std::ceil(d * 60.0 / speed_mph_ - 1e-9);
    }

    // whole ticks the engine schedules on
    int ticks(int from, int to) const {
        return static_cast<int>(std::ceil(minutes(from, to) - 1e-9));
    }

    double distance_miles(int from, int to) const {
        check_zone(from);
        check_zone(to);
        double dx = zones_[from].x_miles - zones_[to].x_miles;
        double dy = zones_[from].y_miles - zones_[to].y_miles;
        return std::sqrt(dx * dx + dy * dy);
    }

    const std::vector<Zone>& zones() const { return zones_; }
    int n_zones() const { return static_cast<int>(zones_.size()); }

private:
    void check_zone(int z) const {
        if (z < 0 || z >= n_zones()) throw std::out_of_range("travel time: unknown zone id");
    }

    std::vector<Zone> zones_;
    std::vector<std::vector<double>> matrix_;
    double speed_mph_ = 12.0;
};

struct World {
    std::vector<Zone> zones;
    std::vector<PortSite> ports;
    std::vector<TripRequest> trips;
    TravelTimeProvider travel;

    // stable identity used to check that paired runs really share a world
    std::uint64_t fingerprint() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        mix(zones.size());
        for (const auto& z : zones) {
            mix(static_cast<std::uint64_t>(z.id));
            mix(static_cast<std::uint64_t>(std::llround(z.x_miles * 1e6)));
            mix(static_cast<std::uint64_t>(std::llround(z.y_miles * 1e6)));
        }
        mix(ports.size());
        for (const auto& p : ports) mix(static_cast<std::uint64_t>(p.zone));
        mix(trips.size());
        for (const auto& t : trips) {
            mix(static_cast<std::uint64_t>(t.request_tick));
            mix(static_cast<std::uint64_t>(t.origin_zone));
            mix(static_cast<std::uint64_t>(t.dest_zone));
            mix(static_cast<std::uint64_t>(std::llround(t.distance_miles * 1e6)));
        }
        return h;
    }
};

// ---- CSV schemas ----

inline std::vector<Zone> load_zones(const std::string& path) {
    CsvReader r(path, "zone_id,x_miles,y_miles");
    std::vector<Zone> zones;
    std::vector<std::string> f;
    while (r.next(f)) {
        if (f.size() != 3) r.fail("expected 3 fields");
        Zone z;
        z.id = static_cast<int>(r.parse_long(f[0], "zone_id"));
        z.x_miles = r.parse_double(f[1], "x_miles");
        z.y_miles = r.parse_double(f[2], "y_miles");
        if (z.id != static_cast<int>(zones.size())) r.fail("zone ids must be contiguous from 0");
        zones.push_back(z);
    }
    if (zones.empty()) throw CsvError(path + ": no zones");
    return zones;
}

inline void save_zones(const std::string& path, const std::vector<Zone>& zones) {
    CsvWriter w(path, "zone_id,x_miles,y_miles");
    for (const auto& z : zones)
        w.row(std::to_string(z.id) + "," + fmt_double(z.x_miles, 6) + "," + fmt_double(z.y_miles, 6));
}

inline std::vector<PortSite> load_ports(const std::string& path, int n_zones) {
    CsvReader r(path, "port_id,zone_id");
    std::vector<PortSite> ports;
    std::vector<std::string> f;
    while (r.next(f)) {
        if (f.size() != 2) r.fail("expected 2 fields");
        PortSite p;
        p.id = static_cast<int>(r.parse_long(f[0], "port_id"));
        p.zone = static_cast<int>(r.parse_long(f[1], "zone_id"));
        if (p.id != static_cast<int>(ports.size())) r.fail("port ids must be contiguous from 0");
        if (p.zone < 0 || p.zone >= n_zones) r.fail("zone_id " + f[1] + " out of range");
        ports.push_back(p);
    }
    if (ports.empty()) throw CsvError(path + ": no ports");
    return ports;
}

inline void save_ports(const std::string& path, const std::vector<PortSite>& ports) {
    CsvWriter w(path, "port_id,zone_id");
    for (const auto& p : ports) w.row(std::to_string(p.id) + "," + std::to_string(p.zone));
}

// Trip demand log. Each row is independently retained with probability
// sample_fraction; survivors are sorted by request time and reassigned
// contiguous ids.
inline std::vector<TripRequest> load_trips(const std::string& path, double sample_fraction,
                                           int n_zones, Rng& rng) {
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
        throw std::invalid_argument("load_trips: sample_fraction must be in (0,1]");
    CsvReader r(path, "id,request_min,origin_zone,dest_zone,distance_miles");
    std::vector<TripRequest> trips;
    std::vector<std::string> f;
    while (r.next(f)) {
        if (f.size() != 5) r.fail("expected 5 fields");
        TripRequest t;
        t.id = static_cast<int>(r.parse_long(f[0], "id"));
        t.request_tick = static_cast<int>(r.parse_long(f[1], "request_min"));
        t.origin_zone = static_cast<int>(r.parse_long(f[2], "origin_zone"));
        t.dest_zone = static_cast<int>(r.parse_long(f[3], "dest_zone"));
        t.distance_miles = r.parse_double(f[4], "distance_miles");
        if (t.request_tick < 0) r.fail("negative request_min");
        if (t.origin_zone < 0 || t.origin_zone >= n_zones) r.fail("unknown origin_zone " + f[2]);
        if (t.dest_zone < 0 || t.dest_zone >= n_zones) r.fail("unknown dest_zone " + f[3]);
        if (!(t.distance_miles > 0.0)) r.fail("distance_miles must be > 0");
        bool keep = sample_fraction >= 1.0 || rng.uniform01() < sample_fraction;
        if (keep) trips.push_back(t);
    }
    std::stable_sort(trips.begin(), trips.end(),
                     [](const TripRequest& a, const TripRequest& b) { return a.request_tick < b.request_tick; });
    for (std::size_t i = 0; i < trips.size(); ++i) trips[i].id = static_cast<int>(i);
    return trips;
}

inline void save_trips(const std::string& path, const std::vector<TripRequest>& trips) {
    CsvWriter w(path, "id,request_min,origin_zone,dest_zone,distance_miles");
    for (const auto& t : trips)
        w.row(std::to_string(t.id) + "," + std::to_string(t.request_tick) + "," +
              std::to_string(t.origin_zone) + "," + std::to_string(t.dest_zone) + "," +
              fmt_double(t.distance_miles, 4));
}

inline std::vector<std::vector<double>> load_matrix(const std::string& path, int n_zones) {
    std::ifstream in(path);
    if (!in) throw CsvError(path + ": cannot open file");
    std::vector<std::vector<double>> m;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty() || line == "\r") continue;
        auto fields = csv_split(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& s : fields) {
            try {
                std::size_t pos = 0;
                double v = std::stod(s, &pos);
                if (pos != s.size()) throw std::invalid_argument(s);
                if (v < 0.0) throw std::invalid_argument(s);
                row.push_back(v);
            } catch (const std::exception&) {
                throw CsvError(path + ":" + std::to_string(ln) + ": malformed or missing entry '" + s + "'");
            }
        }
        if (static_cast<int>(row.size()) != n_zones)
            throw CsvError(path + ":" + std::to_string(ln) + ": expected " + std::to_string(n_zones) + " entries");
        m.push_back(std::move(row));
    }
    if (static_cast<int>(m.size()) != n_zones)
        throw CsvError(path + ": expected " + std::to_string(n_zones) + " rows");
    return m;
}

inline void save_matrix(const std::string& path, const std::vector<std::vector<double>>& m) {
    std::ofstream out(path);
    if (!out) throw CsvError(path + ": cannot open for writing");
    for (const auto& row : m) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << fmt_double(row[i], 3);
        }
        out << "\n";
    }
}

// ---- synthetic world ----

// Two-peak daily demand multiplier (mean 1 over the day): a morning peak near
// 08:00 and a broader evening peak near 18:00 on a low overnight base.
inline double demand_multiplier(int minute_of_day) {
    double t = static_cast<double>(minute_of_day % 1440);
    auto bump = [t](double center_min, double width_min) {
        double d = t - center_min;
        // wrap across midnight
        if (d > 720.0) d -= 1440.0;
        if (d < -720.0) d += 1440.0;
        return std::exp(-0.5 * (d / width_min) * (d / width_min));
    };
    double shape = 0.35 + 1.55 * bump(8.0 * 60.0, 90.0) + 1.35 * bump(18.0 * 60.0, 120.0);
    // normalizing constant: mean of the shape over one day (computed once)
    static const double mean_shape = [] {
        double s = 0.0;
        for (int m = 0; m < 1440; ++m) {
            double tt = static_cast<double>(m);
            auto b = [tt](double c, double w) {
                double d = tt - c;
                if (d > 720.0) d -= 1440.0;
                if (d < -720.0) d += 1440.0;
                return std::exp(-0.5 * (d / w) * (d / w));
            };
            s += 0.35 + 1.55 * b(480.0, 90.0) + 1.35 * b(1080.0, 120.0);
        }
        return s / 1440.0;
    }();
    return shape / mean_shape;
}

// Hexagonal-lattice zones, ports on a uniform sample of distinct zones,
// Poisson trip arrivals thinned by the two-peak daily profile.
inline World generate_synthetic_world(const WorldConfig& wc, int horizon_ticks, Rng& rng) {
    if (wc.n_zones <= 0) throw std::invalid_argument("synthetic world: n_zones must be positive");
    if (wc.n_ports <= 0) throw std::invalid_argument("synthetic world: n_ports must be positive");
    if (wc.n_ports > wc.n_zones)
        throw std::invalid_argument("synthetic world: n_ports exceeds n_zones");
    if (wc.demand_per_min < 0.0) throw std::invalid_argument("synthetic world: negative demand");

    World w;
    int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(wc.n_zones))));
    double s = wc.zone_spacing_miles;
    for (int i = 0; i < wc.n_zones; ++i) {
        int row = i / cols;
        int col = i % cols;
        Zone z;
        z.id = i;
        z.x_miles = (static_cast<double>(col) + 0.5 * (row & 1)) * s;
        z.y_miles = static_cast<double>(row) * s * 0.8660254037844386;
        w.zones.push_back(z);
    }

    // ports on distinct zones, partial Fisher-Yates
    std::vector<int> zone_ids(wc.n_zones);
    std::iota(zone_ids.begin(), zone_ids.end(), 0);
    for (int i = 0; i < wc.n_ports; ++i) {
        std::size_t j = i + rng.below(static_cast<std::uint64_t>(wc.n_zones - i));
        std::swap(zone_ids[i], zone_ids[j]);
        w.ports.push_back(PortSite{i, zone_ids[i]});
    }

    w.travel = TravelTimeProvider::synthetic(w.zones, wc.speed_mph);

    for (int tick = 0; tick < horizon_ticks; ++tick) {
        double lambda = wc.demand_per_min * demand_multiplier(tick % 1440);
        int n = rng.poisson(lambda);
        for (int k = 0; k < n; ++k) {
            TripRequest t;
            t.id = static_cast<int>(w.trips.size());
            t.request_tick = tick;
            t.origin_zone = static_cast<int>(rng.below(wc.n_zones));
            t.dest_zone = static_cast<int>(rng.below(wc.n_zones));
            if (t.origin_zone == t.dest_zone) {
                t.distance_miles = rng.uniform(0.3, 1.0);
            } else {
                double detour = rng.uniform(1.15, 1.45);
                t.distance_miles = w.travel.distance_miles(t.origin_zone, t.dest_zone) * detour;
            }
            w.trips.push_back(t);
        }
    }
    return w;
}

// Assemble the world a scenario runs on: synthetic unless CSV inputs are given.
inline World build_world(const ScenarioConfig& cfg, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "demand");
    if (cfg.world.zones_csv.empty())
        return generate_synthetic_world(cfg.world, cfg.horizon_ticks(), rng);

    World w;
    w.zones = load_zones(cfg.world.zones_csv);
    int nz = static_cast<int>(w.zones.size());
    if (cfg.world.ports_csv.empty()) throw ConfigError("world.ports_csv required with world.zones_csv");
    if (cfg.world.trips_csv.empty()) throw ConfigError("world.trips_csv required with world.zones_csv");
    w.ports = load_ports(cfg.world.ports_csv, nz);
    w.trips = load_trips(cfg.world.trips_csv, cfg.world.trip_sample_fraction, nz, rng);
    if (!cfg.world.matrix_csv.empty())
        w.travel = TravelTimeProvider::matrix(w.zones, load_matrix(cfg.world.matrix_csv, nz));
    else
        w.travel = TravelTimeProvider::synthetic(w.zones, cfg.world.speed_mph);
    return w;
}

} // namespace sevsim
