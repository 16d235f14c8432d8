#include "daplan/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "daplan/geometry.hpp"

namespace daplan {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("short write to " + path);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string output_header(uint64_t seed, uint64_t config_hash) {
    return std::string("daplan ") + kToolVersion +
           " seed=" + std::to_string(seed) + " config=" + hex64(config_hash);
}

void write_solution_json(const std::string& path, const Scenario& s,
                         const PlacementSolution& sol, uint64_t seed) {
    ordered_json j;
    j["_header"] = output_header(seed, config_hash(s.config));
    j["version"] = kToolVersion;
    j["seed"] = seed;
    j["config_hash"] = hex64(config_hash(s.config));
    j["rho"] = s.rho();

    int n_sm = 0, n_pole = 0;
    for (const Node& nd : s.nodes)
        (nd.kind == NodeKind::SmartMeter ? n_sm : n_pole) += 1;
    ordered_json counts;
    counts["sms"] = n_sm;
    counts["poles"] = n_pole;
    counts["daps"] = sol.dap_nodes.size();
    counts["unconnected"] = sol.forest.unconnected.size();
    counts["detached"] = sol.detached.size();
    j["counts"] = counts;
    j["config"] = config_to_text(s.config);

    ordered_json daps = ordered_json::array();
    for (int d : sol.dap_nodes) daps.push_back(s.nodes[static_cast<size_t>(d)].id);
    j["daps"] = daps;

    ordered_json routes = ordered_json::array();
    for (size_t i = 0; i < s.nodes.size(); ++i) {
        if (!sol.forest.routed(static_cast<int>(i)) ||
            s.nodes[i].kind != NodeKind::SmartMeter)
            continue;
        ordered_json r;
        r["id"] = s.nodes[i].id;
        r["parent"] =
            s.nodes[static_cast<size_t>(sol.forest.parent[i])].id;
        r["dap"] = s.nodes[static_cast<size_t>(sol.forest.dap[i])].id;
        r["depth"] = sol.forest.depth[i];
        r["cost"] = sol.forest.route_cost[i];
        r["r_mc"] = sol.audit.mc[i].path_r;
        r["r_nc"] = sol.audit.nc[i].path_r;
        routes.push_back(std::move(r));
    }
    j["routes"] = routes;

    ordered_json unconnected = ordered_json::array();
    for (int i : sol.forest.unconnected)
        unconnected.push_back(s.nodes[static_cast<size_t>(i)].id);
    j["unconnected"] = unconnected;
    ordered_json detached = ordered_json::array();
    for (int i : sol.detached)
        detached.push_back(s.nodes[static_cast<size_t>(i)].id);
    j["detached"] = detached;

    ordered_json iters = ordered_json::array();
    for (const IterationRecord& it : sol.iterations) {
        ordered_json row;
        row["iteration"] = it.iteration;
        row["daps"] = it.dap_count;
        row["failing"] = it.failing;
        row["unconnected"] = it.unconnected;
        row["added"] = it.added;
        iters.push_back(std::move(row));
    }
    j["iterations"] = iters;
    j["convergence_ratio"] = sol.convergence_ratio;
    j["analysis_converged"] = sol.audit.converged;
    write_file(path, j.dump() + "\n");
}

LoadedSolution load_solution_json(const std::string& path, const Scenario& s) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(slurp(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    std::unordered_map<int, int> index_of;
    for (size_t i = 0; i < s.nodes.size(); ++i)
        index_of[s.nodes[i].id] = static_cast<int>(i);
    auto lookup = [&](int id) {
        const auto it = index_of.find(id);
        if (it == index_of.end())
            throw ParseError(path + ": node id " + std::to_string(id) +
                             " not present in the scenario");
        return it->second;
    };

    LoadedSolution out;
    out.forest.resize(s.nodes.size());
    try {
        for (const auto& d : j.at("daps"))
            out.dap_nodes.push_back(lookup(d.get<int>()));
        std::sort(out.dap_nodes.begin(), out.dap_nodes.end());
        out.forest.dap_nodes = out.dap_nodes;
        for (const auto& r : j.at("routes")) {
            const int i = lookup(r.at("id").get<int>());
            out.forest.parent[static_cast<size_t>(i)] =
                lookup(r.at("parent").get<int>());
            out.forest.dap[static_cast<size_t>(i)] =
                lookup(r.at("dap").get<int>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    out.forest.recompute_derived(s);
    return out;
}

void write_geojson(const std::string& path, const Scenario& s,
                   const PlacementSolution& sol, uint64_t seed) {
    const Projection proj(s.origin_lat, s.origin_lon);
    auto coord = [&](const Point& p) {
        if (s.from_latlon) {
            const Point g = proj.to_geodetic(p);  // {lat, lon}
            return ordered_json::array({g.y, g.x});
        }
        return ordered_json::array({p.x, p.y});
    };

    std::vector<char> selected(s.nodes.size(), 0);
    for (int d : sol.dap_nodes) selected[static_cast<size_t>(d)] = 1;

    ordered_json features = ordered_json::array();
    for (size_t i = 0; i < s.nodes.size(); ++i) {
        const Node& nd = s.nodes[i];
        ordered_json f;
        f["type"] = "Feature";
        ordered_json geom;
        geom["type"] = "Point";
        geom["coordinates"] = coord(nd.pos);
        f["geometry"] = geom;
        ordered_json props;
        props["id"] = nd.id;
        props["kind"] = to_string(nd.kind);
        if (nd.kind == NodeKind::SmartMeter) {
            const bool routed = sol.forest.routed(static_cast<int>(i));
            props["routed"] = routed;
            if (routed) {
                props["dap"] =
                    s.nodes[static_cast<size_t>(sol.forest.dap[i])].id;
                props["hops"] = sol.forest.depth[i];
            }
        } else {
            props["dap"] = static_cast<bool>(selected[i]);
        }
        f["properties"] = props;
        features.push_back(std::move(f));
    }
    for (size_t i = 0; i < s.nodes.size(); ++i) {
        if (!sol.forest.routed(static_cast<int>(i)) ||
            s.nodes[i].kind != NodeKind::SmartMeter)
            continue;
        const size_t up = static_cast<size_t>(sol.forest.parent[i]);
        ordered_json f;
        f["type"] = "Feature";
        ordered_json geom;
        geom["type"] = "LineString";
        geom["coordinates"] =
            ordered_json::array({coord(s.nodes[i].pos), coord(s.nodes[up].pos)});
        f["geometry"] = geom;
        ordered_json props;
        props["from"] = s.nodes[i].id;
        props["to"] = s.nodes[up].id;
        f["properties"] = props;
        features.push_back(std::move(f));
    }

    ordered_json j;
    j["_header"] = output_header(seed, config_hash(s.config));
    j["type"] = "FeatureCollection";
    j["features"] = features;
    write_file(path, j.dump() + "\n");
}

void write_hops_cdf(const std::string& path, const Scenario& s,
                    const RoutingForest& forest, uint64_t seed) {
    std::map<int, int> count;
    int total = 0;
    for (size_t i = 0; i < s.nodes.size(); ++i)
        if (forest.routed(static_cast<int>(i)) &&
            s.nodes[i].kind == NodeKind::SmartMeter) {
            ++count[forest.depth[i]];
            ++total;
        }
    std::string out =
        "# " + output_header(seed, config_hash(s.config)) + "\nhops,cdf\n";
    int cum = 0;
    for (const auto& [hops, c] : count) {
        cum += c;
        out += std::to_string(hops) + "," +
               fmt(static_cast<double>(cum) / total) + "\n";
    }
    write_file(path, out);
}

void write_connections_cdf(const std::string& path, const Scenario& s,
                           const RoutingForest& forest, uint64_t seed) {
    std::map<size_t, int> count;
    for (const auto& members : forest.clusters) ++count[members.size()];
    std::string out = "# " + output_header(seed, config_hash(s.config)) +
                      "\nconnections,cdf\n";
    int cum = 0;
    const double total = static_cast<double>(forest.clusters.size());
    for (const auto& [conn, c] : count) {
        cum += c;
        out += std::to_string(conn) + "," + fmt(cum / total) + "\n";
    }
    write_file(path, out);
}

void write_queue_delay_cdf(const std::string& path, const Scenario& s,
                           const RoutingForest& forest,
                           const AuditResult& audit, uint64_t seed) {
    const double slot_s = s.mac().slot_duration_s();
    std::vector<double> mc, nc;
    for (size_t i = 0; i < s.nodes.size(); ++i) {
        if (!forest.routed(static_cast<int>(i)) ||
            s.nodes[i].kind != NodeKind::SmartMeter)
            continue;
        mc.push_back(audit.mc[i].tq_slots * slot_s);
        nc.push_back(audit.nc[i].tq_slots * slot_s);
    }
    std::sort(mc.begin(), mc.end());
    std::sort(nc.begin(), nc.end());
    std::vector<double> grid;
    grid.reserve(mc.size() + nc.size());
    grid.insert(grid.end(), mc.begin(), mc.end());
    grid.insert(grid.end(), nc.begin(), nc.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::string out = "# " + output_header(seed, config_hash(s.config)) +
                      "\ndelay_s,cdf_mc,cdf_nc\n";
    const double total = static_cast<double>(mc.size());
    // Values closer than the print precision collapse onto one row; the
    // last of a run carries the largest cdf, keeping the column ascending.
    std::vector<std::string> keys, rows;
    for (double v : grid) {
        const auto le = [v](const std::vector<double>& xs) {
            return static_cast<double>(
                std::upper_bound(xs.begin(), xs.end(), v) - xs.begin());
        };
        std::string key = fmt(v);
        std::string row =
            key + "," + fmt(le(mc) / total) + "," + fmt(le(nc) / total) + "\n";
        if (!keys.empty() && keys.back() == key) {
            rows.back() = std::move(row);
        } else {
            keys.push_back(std::move(key));
            rows.push_back(std::move(row));
        }
    }
    for (const std::string& row : rows) out += row;
    write_file(path, out);
}

void write_summary(const std::string& path, const Scenario& s,
                   const PlacementSolution& sol, uint64_t seed) {
    int n_sm = 0, n_pole = 0;
    for (const Node& nd : s.nodes)
        (nd.kind == NodeKind::SmartMeter ? n_sm : n_pole) += 1;
    int routed = 0, max_hops = 0;
    long long hop_sum = 0;
    double min_mc = 1.0, min_nc = 1.0;
    for (size_t i = 0; i < s.nodes.size(); ++i) {
        if (!sol.forest.routed(static_cast<int>(i)) ||
            s.nodes[i].kind != NodeKind::SmartMeter)
            continue;
        ++routed;
        max_hops = std::max(max_hops, sol.forest.depth[i]);
        hop_sum += sol.forest.depth[i];
        min_mc = std::min(min_mc, sol.audit.mc[i].path_r);
        min_nc = std::min(min_nc, sol.audit.nc[i].path_r);
    }

    std::string out = "# " + output_header(seed, config_hash(s.config)) + "\n";
    out += "scenario: " + std::to_string(n_sm) + " SMs, " +
           std::to_string(n_pole) + " poles\n";
    out += "daps: " + std::to_string(sol.dap_nodes.size()) + "\n";
    out += "routed: " + std::to_string(routed) + "\n";
    out += "unconnected: " + std::to_string(sol.forest.unconnected.size()) +
           " (detached for reliability: " + std::to_string(sol.detached.size()) +
           ")\n";
    out += "max_hops: " + std::to_string(max_hops) + "\n";
    out += "mean_hops: " +
           (routed > 0 ? fmt(static_cast<double>(hop_sum) / routed)
                       : std::string("0")) +
           "\n";
    out += "min_reliability_mc: " + fmt(routed > 0 ? min_mc : 1.0) + "\n";
    out += "min_reliability_nc: " + fmt(routed > 0 ? min_nc : 1.0) + "\n";
    out += "analysis_converged: " +
           std::string(sol.audit.converged ? "yes" : "no") +
           " residual=" + fmt(sol.audit.residual) + "\n";
    out += "iterations:\n";
    for (const IterationRecord& it : sol.iterations)
        out += "  iter=" + std::to_string(it.iteration) +
               " daps=" + std::to_string(it.dap_count) +
               " failing=" + std::to_string(it.failing) +
               " unconnected=" + std::to_string(it.unconnected) +
               " added=" + std::to_string(it.added) + "\n";
    out += "convergence_ratio: " + fmt(sol.convergence_ratio) + "\n";
    write_file(path, out);
}

void write_samples_csv(const std::string& path, const Scenario& s,
                       const std::vector<DelaySample>& samples, uint64_t seed) {
    std::string out = "# " + output_header(seed, config_hash(s.config)) +
                      "\npacket_id,src,class,gen_t,del_t,hops,lost\n";
    for (const DelaySample& d : samples) {
        out += std::to_string(d.packet_id) + "," +
               std::to_string(s.nodes[static_cast<size_t>(d.src)].id) + "," +
               s.config.traffic[static_cast<size_t>(d.traffic_class)].name +
               "," + fmt(d.gen_t) + "," + fmt(d.del_t) + "," +
               std::to_string(d.hops) + "," + (d.lost ? "1" : "0") + "\n";
    }
    write_file(path, out);
}

void write_validation_csv(const std::string& path, const Scenario& s,
                          const ValidationReport& rep, uint64_t seed) {
    std::string out =
        "# " + output_header(seed, config_hash(s.config)) +
        "\nnode,category,analytic_r,empirical_r,gap,samples,flagged\n";
    for (const ValidationRow& r : rep.rows) {
        out += std::to_string(s.nodes[static_cast<size_t>(r.node)].id) + "," +
               to_string(r.category) + "," + fmt(r.analytic_r) + "," +
               fmt(r.empirical_r) + "," + fmt(r.gap) + "," +
               std::to_string(r.samples) + "," + (r.flagged ? "1" : "0") + "\n";
    }
    write_file(path, out);
}

std::string validation_text(const Scenario& s, const ValidationReport& rep) {
    (void)s;
    std::string out;
    const char* names[2] = {"mc", "nc"};
    for (int c = 0; c < 2; ++c)
        out += std::string(names[c]) +
               ": analytic=" + fmt(rep.class_analytic[c]) +
               " empirical=" + fmt(rep.class_empirical[c]) +
               " gap=" + fmt(rep.class_gap[c]) + "\n";
    out += "rows: " + std::to_string(rep.rows.size()) +
           " flagged: " + std::to_string(rep.flagged) +
           " max_row_gap: " + fmt(rep.max_row_gap) + "\n";
    return out;
}

}  // namespace daplan
