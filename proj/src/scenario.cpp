#include "daplan/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "daplan/link.hpp"

namespace daplan {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& v, const std::string& where) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d))
            throw std::invalid_argument("");
        return d;
    } catch (const std::exception&) {
        throw ParseError(where + ": expected a number, got '" + v + "'");
    }
}

int parse_int(const std::string& v, const std::string& where) {
    try {
        size_t pos = 0;
        const int i = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return i;
    } catch (const std::exception&) {
        throw ParseError(where + ": expected an integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& where) {
    const std::string l = lower(trim(v));
    if (l == "1" || l == "true" || l == "yes" || l == "on") return true;
    if (l == "0" || l == "false" || l == "no" || l == "off") return false;
    throw ParseError(where + ": expected a boolean, got '" + v + "'");
}

std::string fmt_double(double d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

TrafficCategory parse_category(const std::string& v,
                               const std::string& where) {
    const std::string l = lower(trim(v));
    if (l == "mc" || l == "mission-critical")
        return TrafficCategory::MissionCritical;
    if (l == "nc" || l == "non-critical") return TrafficCategory::NonCritical;
    throw ParseError(where + ": unknown traffic category '" + v + "'");
}

ArrivalModel parse_arrival(const std::string& v, const std::string& where) {
    const std::string l = lower(trim(v));
    if (l == "deterministic" || l == "periodic")
        return ArrivalModel::Deterministic;
    if (l == "poisson") return ArrivalModel::Poisson;
    throw ParseError(where + ": unknown arrival model '" + v + "'");
}

}  // namespace

std::vector<TrafficClass> PlannerConfig::default_traffic() {
    using enum TrafficCategory;
    using enum ArrivalModel;
    return {
        {"meter-read", NonCritical, 250, 900.0, 5.0, Deterministic},
        {"on-demand-req", NonCritical, 50, 432000.0, 30.0, Poisson},
        {"on-demand-resp", NonCritical, 250, 432000.0, 30.0, Poisson},
        {"power-quality", MissionCritical, 100, 300.0, 1.0, Deterministic},
        {"remote-control", MissionCritical, 100, 86400.0, 1.0, Poisson},
        {"alert", MissionCritical, 50, 604800.0, 3.0, Poisson},
    };
}

PlannerConfig parse_config_text(const std::string& text,
                                const std::string& origin) {
    PlannerConfig cfg;
    cfg.traffic = PlannerConfig::default_traffic();

    using Setter = std::function<void(PlannerConfig&, const std::string&,
                                      const std::string&)>;
    static const std::map<std::string, Setter> setters = {
        {"radio.tx_power_dbm",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.radio.tx_power_dbm = parse_double(v, w);
         }},
        {"radio.noise_psd_dbm_hz",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.radio.noise_psd_dbm_hz = parse_double(v, w);
         }},
        {"radio.noise_factor_db",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.radio.noise_factor_db = parse_double(v, w);
         }},
        {"radio.bandwidth_hz",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.radio.bandwidth_hz = parse_double(v, w);
         }},
        {"radio.interference_margin_db",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.radio.interference_margin_db = parse_double(v, w);
         }},
        {"radio.fading_margin_db",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.radio.fading_margin_db = parse_double(v, w);
         }},
        {"radio.penetration_loss_db",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.radio.penetration_loss_db = parse_double(v, w);
         }},
        {"radio.carrier_freq_hz",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.radio.carrier_freq_hz = parse_double(v, w);
         }},
        {"radio.mcs",
         [](PlannerConfig& c, const std::string& v, const std::string&) {
             c.radio.mcs = trim(v);
         }},
        {"mac.frame_duration_s",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.mac.frame_duration_s = parse_double(v, w);
         }},
        {"mac.cfp_slots",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.mac.cfp_slots = parse_int(v, w);
         }},
        {"mac.cap_slots",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.mac.cap_slots = parse_int(v, w);
         }},
        {"mac.max_retries",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.mac.max_retries = parse_int(v, w);
         }},
        {"mac.max_backoff_stage",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.mac.max_backoff_stage = parse_int(v, w);
         }},
        {"mac.backoff_windows",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.mac.backoff_windows.clear();
             for (const auto& tok : split(v, ','))
                 c.mac.backoff_windows.push_back(parse_int(trim(tok), w));
         }},
        {"mac.dap_capacity_pps",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.mac.dap_capacity_pps = parse_double(v, w);
         }},
        {"required_reliability",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.required_reliability = parse_double(v, w);
         }},
        {"path_loss_model",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             const std::string l = lower(trim(v));
             if (l == "erceg-b")
                 c.path_loss = PathLossModel::ErcegB;
             else if (l == "log-distance")
                 c.path_loss = PathLossModel::LogDistance;
             else
                 throw ParseError(w + ": unknown path loss model '" + v + "'");
         }},
        {"log_distance_exponent",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.log_distance_exponent = parse_double(v, w);
         }},
        {"coding_gain_db",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.coding_gain_db = parse_double(v, w);
         }},
        {"sm_height_m",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.sm_height_m = parse_double(v, w);
         }},
        {"pole_height_m",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.pole_height_m = parse_double(v, w);
         }},
        {"edge_per_max",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.edge_per_max = parse_double(v, w);
         }},
        {"sm_range_m",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.sm_range_m = parse_double(v, w);
         }},
        {"pole_range_m",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.pole_range_m = parse_double(v, w);
         }},
        {"latlon_input",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.latlon_input = parse_bool(v, w);
         }},
        {"per_curve_file",
         [](PlannerConfig& c, const std::string& v, const std::string&) {
             c.per_curve_file = trim(v);
         }},
        {"slot_capacity_bytes",
         [](PlannerConfig& c, const std::string& v, const std::string& w) {
             c.slot_capacity_bytes = parse_int(v, w);
         }},
    };

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string where = origin + ":" + std::to_string(lineno) +
                                  ": " + key;

        if (key.rfind("traffic.", 0) == 0) {
            const auto parts = split(key, '.');
            if (parts.size() == 2 && parts[1] == "count") {
                const int n = parse_int(value, where);
                if (n < 1) throw ParseError(where + ": must be >= 1");
                cfg.traffic.resize(static_cast<size_t>(n));
                continue;
            }
            if (parts.size() != 3)
                throw ParseError(where + ": unknown config key");
            const int idx = parse_int(parts[1], where);
            if (idx < 0 || idx >= static_cast<int>(cfg.traffic.size()))
                throw ParseError(where + ": traffic index out of range");
            TrafficClass& tc = cfg.traffic[static_cast<size_t>(idx)];
            const std::string& field = parts[2];
            if (field == "name")
                tc.name = trim(value);
            else if (field == "category")
                tc.category = parse_category(value, where);
            else if (field == "packet_bytes")
                tc.packet_bytes = parse_int(value, where);
            else if (field == "interval_s")
                tc.arrival_interval_s = parse_double(value, where);
            else if (field == "latency_s")
                tc.latency_req_s = parse_double(value, where);
            else if (field == "arrival")
                tc.arrival = parse_arrival(value, where);
            else
                throw ParseError(where + ": unknown config key");
            continue;
        }

        const auto it = setters.find(key);
        if (it == setters.end())
            throw ParseError(where + ": unknown config key");
        it->second(cfg, value, where);
    }

    if (cfg.required_reliability <= 0.0 || cfg.required_reliability >= 1.0)
        throw ParseError(origin + ": required_reliability outside (0,1)");
    if (cfg.mac.cfp_slots < 1 || cfg.mac.cap_slots < 1)
        throw ParseError(origin + ": slot counts must be positive");
    if (cfg.mac.max_retries < 1)
        throw ParseError(origin + ": mac.max_retries must be >= 1");
    if (cfg.mac.max_backoff_stage < 0)
        throw ParseError(origin + ": mac.max_backoff_stage must be >= 0");
    if (static_cast<int>(cfg.mac.backoff_windows.size()) !=
        cfg.mac.max_backoff_stage + 1)
        throw ParseError(origin +
                         ": mac.backoff_windows needs max_backoff_stage+1 "
                         "entries");
    for (int w : cfg.mac.backoff_windows)
        if (w < 1) throw ParseError(origin + ": backoff windows must be >= 1");
    if (cfg.mac.frame_duration_s <= 0.0)
        throw ParseError(origin + ": mac.frame_duration_s must be positive");
    if (cfg.edge_per_max <= 0.0 || cfg.edge_per_max >= 1.0)
        throw ParseError(origin + ": edge_per_max outside (0,1)");
    for (const auto& tc : cfg.traffic) {
        if (tc.packet_bytes < 1 || tc.arrival_interval_s <= 0.0 ||
            tc.latency_req_s <= 0.0)
            throw ParseError(origin + ": invalid traffic class '" + tc.name +
                             "'");
    }
    return cfg;
}

PlannerConfig load_config(const std::string& config_file) {
    std::ifstream in(config_file);
    if (!in) throw ParseError("cannot open config file: " + config_file);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), config_file);
}

std::string config_to_text(const PlannerConfig& cfg) {
    std::ostringstream out;
    out << "coding_gain_db = " << fmt_double(cfg.coding_gain_db) << "\n";
    out << "edge_per_max = " << fmt_double(cfg.edge_per_max) << "\n";
    out << "latlon_input = " << (cfg.latlon_input ? "true" : "false") << "\n";
    out << "log_distance_exponent = "
        << fmt_double(cfg.log_distance_exponent) << "\n";
    out << "mac.backoff_windows = ";
    for (size_t i = 0; i < cfg.mac.backoff_windows.size(); ++i)
        out << (i ? "," : "") << cfg.mac.backoff_windows[i];
    out << "\n";
    out << "mac.cap_slots = " << cfg.mac.cap_slots << "\n";
    out << "mac.cfp_slots = " << cfg.mac.cfp_slots << "\n";
    out << "mac.dap_capacity_pps = " << fmt_double(cfg.mac.dap_capacity_pps)
        << "\n";
    out << "mac.frame_duration_s = " << fmt_double(cfg.mac.frame_duration_s)
        << "\n";
    out << "mac.max_backoff_stage = " << cfg.mac.max_backoff_stage << "\n";
    out << "mac.max_retries = " << cfg.mac.max_retries << "\n";
    out << "path_loss_model = "
        << (cfg.path_loss == PathLossModel::ErcegB ? "erceg-b"
                                                   : "log-distance")
        << "\n";
    if (!cfg.per_curve_file.empty())
        out << "per_curve_file = " << cfg.per_curve_file << "\n";
    out << "pole_height_m = " << fmt_double(cfg.pole_height_m) << "\n";
    if (cfg.pole_range_m)
        out << "pole_range_m = " << fmt_double(*cfg.pole_range_m) << "\n";
    out << "radio.bandwidth_hz = " << fmt_double(cfg.radio.bandwidth_hz)
        << "\n";
    out << "radio.carrier_freq_hz = "
        << fmt_double(cfg.radio.carrier_freq_hz) << "\n";
    out << "radio.fading_margin_db = "
        << fmt_double(cfg.radio.fading_margin_db) << "\n";
    out << "radio.interference_margin_db = "
        << fmt_double(cfg.radio.interference_margin_db) << "\n";
    out << "radio.mcs = " << cfg.radio.mcs << "\n";
    out << "radio.noise_factor_db = "
        << fmt_double(cfg.radio.noise_factor_db) << "\n";
    out << "radio.noise_psd_dbm_hz = "
        << fmt_double(cfg.radio.noise_psd_dbm_hz) << "\n";
    out << "radio.penetration_loss_db = "
        << fmt_double(cfg.radio.penetration_loss_db) << "\n";
    out << "radio.tx_power_dbm = " << fmt_double(cfg.radio.tx_power_dbm)
        << "\n";
    out << "required_reliability = "
        << fmt_double(cfg.required_reliability) << "\n";
    out << "slot_capacity_bytes = " << cfg.slot_capacity_bytes << "\n";
    out << "sm_height_m = " << fmt_double(cfg.sm_height_m) << "\n";
    if (cfg.sm_range_m)
        out << "sm_range_m = " << fmt_double(*cfg.sm_range_m) << "\n";
    out << "traffic.count = " << cfg.traffic.size() << "\n";
    for (size_t i = 0; i < cfg.traffic.size(); ++i) {
        const TrafficClass& tc = cfg.traffic[i];
        const std::string p = "traffic." + std::to_string(i) + ".";
        out << p << "arrival = "
            << (tc.arrival == ArrivalModel::Poisson ? "poisson"
                                                    : "deterministic")
            << "\n";
        out << p << "category = "
            << (tc.category == TrafficCategory::MissionCritical ? "mc" : "nc")
            << "\n";
        out << p << "interval_s = " << fmt_double(tc.arrival_interval_s)
            << "\n";
        out << p << "latency_s = " << fmt_double(tc.latency_req_s) << "\n";
        out << p << "name = " << tc.name << "\n";
        out << p << "packet_bytes = " << tc.packet_bytes << "\n";
    }
    return out.str();
}

uint64_t config_hash(const PlannerConfig& cfg) {
    // FNV-1a over the canonical text form.
    const std::string text = config_to_text(cfg);
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<const Node*> Scenario::smart_meters() const {
    std::vector<const Node*> out;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::SmartMeter) out.push_back(&n);
    return out;
}

std::vector<const Node*> Scenario::poles() const {
    std::vector<const Node*> out;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::Pole) out.push_back(&n);
    return out;
}

const Node* Scenario::find(int id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

double Scenario::category_rate_pps(TrafficCategory c) const {
    double rate = 0.0;
    for (const auto& tc : config.traffic)
        if (tc.category == c) rate += 1.0 / tc.arrival_interval_s;
    return rate;
}

double Scenario::category_latency_s(TrafficCategory c) const {
    double latency = std::numeric_limits<double>::infinity();
    for (const auto& tc : config.traffic)
        if (tc.category == c) latency = std::min(latency, tc.latency_req_s);
    return latency;
}

int Scenario::max_packet_bytes() const {
    int bytes = 0;
    for (const auto& tc : config.traffic)
        bytes = std::max(bytes, tc.packet_bytes);
    return bytes;
}

void Scenario::validate() const {
    std::set<int> ids;
    for (const auto& n : nodes) {
        if (!ids.insert(n.id).second)
            throw ParseError("duplicate node id " + std::to_string(n.id));
        if (!std::isfinite(n.pos.x) || !std::isfinite(n.pos.y))
            throw ParseError("node " + std::to_string(n.id) +
                             " has non-finite coordinates");
        if (n.height_m <= 0.0)
            throw ParseError("node " + std::to_string(n.id) +
                             " has non-positive height");
    }
    if (sm_range_m <= 0.0 || pole_range_m <= 0.0)
        throw ParseError("radio ranges not resolved; call finalize_scenario");
    if (config.traffic.empty())
        throw ParseError("no traffic classes configured");
    // The delay tables are sized from each category's tightest deadline,
    // so a scenario needs at least one class on each side.
    bool any_mc = false, any_nc = false;
    for (const auto& tc : config.traffic)
        (tc.category == TrafficCategory::MissionCritical ? any_mc : any_nc) =
            true;
    if (!any_mc || !any_nc)
        throw ParseError(
            "traffic must include both a mission-critical and a non-critical "
            "class");
    bool any_sm = false, any_pole = false;
    for (const auto& n : nodes) {
        (n.kind == NodeKind::Pole ? any_pole : any_sm) = true;
    }
    if (any_sm && !any_pole)
        throw ParseError("scenario has smart meters but no poles");
}

void finalize_scenario(Scenario& s) {
    const PlannerConfig& cfg = s.config;
    const PerCurve curve = cfg.per_curve_file.empty()
                               ? PerCurve::analytic(cfg.coding_gain_db)
                               : PerCurve::from_csv(cfg.per_curve_file);
    const int bytes = s.max_packet_bytes();
    s.sm_range_m = cfg.sm_range_m.value_or(
        max_range(cfg, curve, cfg.sm_height_m, cfg.sm_height_m, false, bytes,
                  cfg.edge_per_max));
    s.pole_range_m = cfg.pole_range_m.value_or(
        max_range(cfg, curve, cfg.pole_height_m, cfg.sm_height_m, false,
                  bytes, cfg.edge_per_max));
    if (s.sm_range_m <= 0.0 || s.pole_range_m <= 0.0)
        throw InfeasibleRadioBudget(
            "no distance satisfies PER <= " + std::to_string(cfg.edge_per_max) +
            " under the configured radio parameters");
    s.validate();
}

Scenario load_scenario(const std::string& node_file,
                       const std::string& config_file) {
    Scenario s;
    s.config = config_file.empty() ? parse_config_text("", "<defaults>")
                                   : load_config(config_file);

    std::ifstream in(node_file);
    if (!in) throw ParseError("cannot open scenario file: " + node_file);

    std::string line;
    int lineno = 0;
    bool header_seen = false;
    struct RawRow {
        int id;
        NodeKind kind;
        double x, y;
        std::optional<double> height;
        bool indoor;
    };
    std::vector<RawRow> rows;

    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = node_file + ":" + std::to_string(lineno);
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto cols = split(line, ',');
        if (!header_seen) {
            if (cols.size() != 6 || lower(trim(cols[0])) != "id" ||
                lower(trim(cols[1])) != "kind" ||
                lower(trim(cols[2])) != "x" || lower(trim(cols[3])) != "y" ||
                lower(trim(cols[4])) != "height" ||
                lower(trim(cols[5])) != "indoor")
                throw ParseError(where +
                                 ": expected header 'id,kind,x,y,height,"
                                 "indoor'");
            header_seen = true;
            continue;
        }
        if (cols.size() != 6)
            throw ParseError(where + ": expected 6 columns, got " +
                             std::to_string(cols.size()));
        RawRow r;
        r.id = parse_int(trim(cols[0]), where + ": id");
        const std::string kind = lower(trim(cols[1]));
        if (kind == "sm")
            r.kind = NodeKind::SmartMeter;
        else if (kind == "pole")
            r.kind = NodeKind::Pole;
        else
            throw ParseError(where + ": unknown kind '" + trim(cols[1]) +
                             "' (want sm or pole)");
        r.x = parse_double(trim(cols[2]), where + ": x");
        r.y = parse_double(trim(cols[3]), where + ": y");
        const std::string h = trim(cols[4]);
        if (!h.empty()) r.height = parse_double(h, where + ": height");
        const std::string ind = trim(cols[5]);
        r.indoor = ind.empty() ? false : parse_bool(ind, where + ": indoor");
        rows.push_back(r);
    }
    if (!header_seen)
        throw ParseError(node_file + ": empty scenario file");

    std::optional<Projection> proj;
    if (s.config.latlon_input) {
        // x carries longitude, y latitude; project about the centroid.
        double lat = 0.0, lon = 0.0;
        for (const auto& r : rows) {
            lat += r.y;
            lon += r.x;
        }
        lat /= static_cast<double>(rows.size());
        lon /= static_cast<double>(rows.size());
        proj.emplace(lat, lon);
        s.from_latlon = true;
        s.origin_lat = lat;
        s.origin_lon = lon;
    }

    for (const auto& r : rows) {
        Node n;
        n.id = r.id;
        n.kind = r.kind;
        n.pos = proj ? proj->to_planar(r.y, r.x) : Point{r.x, r.y};
        n.height_m = r.height.value_or(r.kind == NodeKind::Pole
                                           ? s.config.pole_height_m
                                           : s.config.sm_height_m);
        n.indoor = r.indoor && r.kind == NodeKind::SmartMeter;
        s.nodes.push_back(n);
    }

    finalize_scenario(s);
    return s;
}

std::string scenario_to_csv(const Scenario& s) {
    std::ostringstream out;
    out << "id,kind,x,y,height,indoor\n";
    std::optional<Projection> proj;
    if (s.from_latlon) proj.emplace(s.origin_lat, s.origin_lon);
    for (const auto& n : s.nodes) {
        double x = n.pos.x, y = n.pos.y;
        if (proj) {
            const Point geo = proj->to_geodetic(n.pos);
            x = geo.y;  // lon
            y = geo.x;  // lat
        }
        out << n.id << ',' << to_string(n.kind) << ',' << fmt_double(x) << ','
            << fmt_double(y) << ',' << fmt_double(n.height_m) << ','
            << (n.indoor ? 1 : 0) << "\n";
    }
    return out.str();
}

void write_scenario(const Scenario& s, const std::string& node_file,
                    const std::string& config_file) {
    {
        std::ofstream out(node_file);
        if (!out)
            throw std::runtime_error("cannot write " + node_file);
        out << scenario_to_csv(s);
    }
    {
        std::ofstream out(config_file);
        if (!out)
            throw std::runtime_error("cannot write " + config_file);
        out << config_to_text(s.config);
    }
}

Scenario generate_synthetic(int n_sm, int n_poles, double area_km2,
                            DensityProfile profile, std::uint64_t seed) {
    if (n_sm < 1 || n_poles < 1 || area_km2 <= 0.0)
        throw std::invalid_argument("generate_synthetic: bad dimensions");

    std::mt19937_64 rng(seed);
    const double side = std::sqrt(area_km2 * 1e6);

    int n_roads;
    double scatter;  // lateral spread of meters around their road
    switch (profile) {
        case DensityProfile::Rural:
            n_roads = 2;
            scatter = 80.0;
            break;
        case DensityProfile::Suburban:
            n_roads = 4;
            scatter = 40.0;
            break;
        case DensityProfile::Urban:
        default:
            n_roads = 6;
            scatter = 25.0;
            break;
    }
    n_roads = std::max(1, std::min(n_roads, 1 + n_poles / 4));

    // Each road is a jittered polyline spanning the area, alternating
    // horizontal and vertical orientation.
    struct Segment {
        Point a, b;
        double len;
    };
    std::vector<Segment> segments;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int r = 0; r < n_roads; ++r) {
        const bool horizontal = (r % 2) == 0;
        const double level = side * (0.15 + 0.7 * unit(rng));
        const int n_pts = 5;
        Point prev{};
        for (int i = 0; i < n_pts; ++i) {
            const double t = side * static_cast<double>(i) /
                             static_cast<double>(n_pts - 1);
            const double wiggle = scatter * (unit(rng) - 0.5);
            Point p = horizontal ? Point{t, level + wiggle}
                                 : Point{level + wiggle, t};
            if (i > 0)
                segments.push_back({prev, p, distance(prev, p)});
            prev = p;
        }
    }
    double total_len = 0.0;
    for (const auto& seg : segments) total_len += seg.len;

    auto road_point = [&](double along) {
        for (const auto& seg : segments) {
            if (along <= seg.len) {
                const double t = along / seg.len;
                return Point{seg.a.x + t * (seg.b.x - seg.a.x),
                             seg.a.y + t * (seg.b.y - seg.a.y)};
            }
            along -= seg.len;
        }
        return segments.back().b;
    };

    Scenario s;
    s.config.traffic = PlannerConfig::default_traffic();

    // Smart meters cluster around the roads.
    std::normal_distribution<double> lateral(0.0, scatter);
    for (int i = 0; i < n_sm; ++i) {
        const Point base = road_point(total_len * unit(rng));
        Point p{base.x + lateral(rng), base.y + lateral(rng)};
        p.x = std::clamp(p.x, 0.0, side);
        p.y = std::clamp(p.y, 0.0, side);
        s.nodes.push_back({i, NodeKind::SmartMeter, p,
                           s.config.sm_height_m, false});
    }

    // Poles sit evenly along the roads with a little jitter.
    for (int i = 0; i < n_poles; ++i) {
        const double along =
            total_len * (static_cast<double>(i) + 0.5 + 0.2 * unit(rng)) /
            static_cast<double>(n_poles);
        const Point p = road_point(std::min(along, total_len));
        s.nodes.push_back({n_sm + i, NodeKind::Pole, p,
                           s.config.pole_height_m, false});
    }

    finalize_scenario(s);
    return s;
}

const char* to_string(NodeKind k) {
    return k == NodeKind::Pole ? "pole" : "sm";
}

const char* to_string(TrafficCategory c) {
    return c == TrafficCategory::MissionCritical ? "mc" : "nc";
}

const char* to_string(DensityProfile p) {
    switch (p) {
        case DensityProfile::Rural: return "rural";
        case DensityProfile::Suburban: return "suburban";
        case DensityProfile::Urban: return "urban";
    }
    return "?";
}

}  // namespace daplan
