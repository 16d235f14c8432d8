#include "daplan/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

#include "daplan/kdtree.hpp"
#include "daplan/link.hpp"
#include "daplan/parallel.hpp"

namespace daplan {

namespace {

PerCurve make_curve(const PlannerConfig& cfg) {
    return cfg.per_curve_file.empty() ? PerCurve::analytic(cfg.coding_gain_db)
                                      : PerCurve::from_csv(cfg.per_curve_file);
}

}  // namespace

double total_generation_rate_pps(const Scenario& s) {
    double rate = 0.0;
    for (const auto& tc : s.config.traffic) rate += 1.0 / tc.arrival_interval_s;
    return rate;
}

CoverageSets build_coverage(const Scenario& s, int threads) {
    const size_t n = s.nodes.size();
    CoverageSets cov;
    cov.sm_adj.assign(n, {});
    cov.pole_seeds.assign(n, {});
    cov.pole_cover.assign(n, {});

    std::vector<SpatialIndex::Entry> sm_entries;
    std::vector<int> sm_idx, pole_idx;
    for (size_t i = 0; i < n; ++i) {
        if (s.nodes[i].kind == NodeKind::SmartMeter) {
            sm_entries.push_back({static_cast<int>(i), s.nodes[i].pos});
            sm_idx.push_back(static_cast<int>(i));
        } else {
            pole_idx.push_back(static_cast<int>(i));
        }
    }
    const SpatialIndex sm_index(sm_entries);

    parallel_for(sm_idx.size(), threads, [&](size_t k) {
        const int i = sm_idx[k];
        cov.sm_adj[static_cast<size_t>(i)] = sm_index.range_query(
            s.nodes[static_cast<size_t>(i)].pos, s.sm_range_m, i);
    });
    parallel_for(pole_idx.size(), threads, [&](size_t k) {
        const int p = pole_idx[k];
        cov.pole_seeds[static_cast<size_t>(p)] = sm_index.range_query(
            s.nodes[static_cast<size_t>(p)].pos, s.pole_range_m);
    });

    // Multi-hop cover: BFS from the seed SMs through SM-SM links.
    parallel_for(pole_idx.size(), threads, [&](size_t k) {
        const int p = pole_idx[k];
        std::vector<char> seen(n, 0);
        std::vector<int>& cover = cov.pole_cover[static_cast<size_t>(p)];
        std::queue<int> frontier;
        for (int i : cov.pole_seeds[static_cast<size_t>(p)]) {
            seen[static_cast<size_t>(i)] = 1;
            cover.push_back(i);
            frontier.push(i);
        }
        while (!frontier.empty()) {
            const int i = frontier.front();
            frontier.pop();
            for (int j : cov.sm_adj[static_cast<size_t>(i)]) {
                if (seen[static_cast<size_t>(j)]) continue;
                seen[static_cast<size_t>(j)] = 1;
                cover.push_back(j);
                frontier.push(j);
            }
        }
        std::sort(cover.begin(), cover.end());
    });
    return cov;
}

std::vector<int> phase1_greedy(const Scenario& s, const CoverageSets& cov,
                               const std::vector<char>& target,
                               const std::vector<int>& existing_daps) {
    const size_t n = s.nodes.size();
    std::vector<char> uncovered = target;
    size_t remaining = 0;
    for (size_t i = 0; i < n; ++i)
        if (uncovered[i]) ++remaining;

    std::vector<char> taken(n, 0);
    for (int d : existing_daps) taken[static_cast<size_t>(d)] = 1;

    auto fresh_count = [&](int p) {
        int c = 0;
        for (int i : cov.pole_cover[static_cast<size_t>(p)])
            c += uncovered[static_cast<size_t>(i)];
        return c;
    };

    // Lazy greedy: stale counts only shrink, so a popped entry whose count
    // is still current is the true maximum. Ties go to the lower pole id.
    struct Entry {
        int count;
        int id;
        int idx;
    };
    auto worse = [](const Entry& a, const Entry& b) {
        if (a.count != b.count) return a.count < b.count;
        return a.id > b.id;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
    for (size_t i = 0; i < n; ++i) {
        if (s.nodes[i].kind != NodeKind::Pole || taken[i]) continue;
        const int c = fresh_count(static_cast<int>(i));
        if (c > 0) heap.push({c, s.nodes[i].id, static_cast<int>(i)});
    }

    std::vector<int> selected;
    while (remaining > 0 && !heap.empty()) {
        Entry top = heap.top();
        heap.pop();
        const int c = fresh_count(top.idx);
        if (c == 0) continue;
        if (c != top.count) {
            top.count = c;
            heap.push(top);
            continue;
        }
        selected.push_back(top.idx);
        for (int i : cov.pole_cover[static_cast<size_t>(top.idx)]) {
            if (uncovered[static_cast<size_t>(i)]) {
                uncovered[static_cast<size_t>(i)] = 0;
                --remaining;
            }
        }
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

RoutingForest phase2_routes(const Scenario& s, const std::vector<int>& daps) {
    const size_t n = s.nodes.size();
    const PerCurve curve = make_curve(s.config);
    RoutingForest forest;
    forest.resize(n);
    forest.dap_nodes = daps;
    std::sort(forest.dap_nodes.begin(), forest.dap_nodes.end());

    // Edge costs within range. SM-SM edges are symmetric; DAP seed edges
    // start the labels.
    std::vector<SpatialIndex::Entry> sm_entries;
    for (size_t i = 0; i < n; ++i)
        if (s.nodes[i].kind == NodeKind::SmartMeter)
            sm_entries.push_back({static_cast<int>(i), s.nodes[i].pos});
    const SpatialIndex sm_index(sm_entries);

    // Short hops can have a PER that underflows to exactly zero, which would
    // make dense neighbourhoods a zero-weight mesh and let the search return
    // arbitrarily deep trees. A tiny per-hop floor keeps costs strictly
    // positive so equal-PER routes resolve to the fewest hops; it is far
    // below any PER that matters for a real routing decision.
    constexpr double kMinHopCost = 1e-12;
    auto edge_cost = [&](int a, int b) {
        const double c =
            link_budget(s.config, curve, s.nodes[static_cast<size_t>(a)],
                        s.nodes[static_cast<size_t>(b)])
                .cost;
        return std::max(c, kMinHopCost);
    };

    struct Label {
        double cost;
        int dap_id;    // tie-break on the pole's public id
        int node_id;
        int node;      // indices
        int dap_rank;  // position in forest.dap_nodes
        int parent;
        int gateway;   // the SM adjacent to the DAP on this route
        double gateway_sigma;
    };
    auto later = [](const Label& a, const Label& b) {
        if (a.cost != b.cost) return a.cost > b.cost;
        if (a.dap_id != b.dap_id) return a.dap_id > b.dap_id;
        return a.node_id > b.node_id;
    };
    std::priority_queue<Label, std::vector<Label>, decltype(later)> heap(later);

    // Best known cost per (node, dap) pair keeps the label count bounded.
    std::unordered_map<uint64_t, double> best;
    auto key = [](int node, int dap_rank) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(node)) << 32) |
               static_cast<uint32_t>(dap_rank);
    };

    const double lambda0 = total_generation_rate_pps(s);
    const double capacity = s.mac().dap_capacity_pps;
    std::vector<double> load(forest.dap_nodes.size(), 0.0);

    for (size_t r = 0; r < forest.dap_nodes.size(); ++r) {
        const int d = forest.dap_nodes[r];
        const auto seeds = sm_index.range_query(
            s.nodes[static_cast<size_t>(d)].pos, s.pole_range_m);
        for (int i : seeds) {
            const double c = edge_cost(d, i);
            if (!std::isfinite(c)) continue;
            const double eps =
                link_budget(s.config, curve, s.nodes[static_cast<size_t>(i)],
                            s.nodes[static_cast<size_t>(d)])
                    .per;
            Label lab{c,
                      s.nodes[static_cast<size_t>(d)].id,
                      s.nodes[static_cast<size_t>(i)].id,
                      i,
                      static_cast<int>(r),
                      d,
                      i,
                      1.0 / (1.0 - eps)};
            const auto k = key(i, static_cast<int>(r));
            const auto it = best.find(k);
            if (it == best.end() || c < it->second) {
                best[k] = c;
                heap.push(lab);
            }
        }
    }

    std::vector<char> assigned(n, 0);
    std::vector<double> gateway_sigma(n, 1.0);
    while (!heap.empty()) {
        const Label lab = heap.top();
        heap.pop();
        if (assigned[static_cast<size_t>(lab.node)]) continue;
        const auto it = best.find(key(lab.node, lab.dap_rank));
        if (it == best.end() || lab.cost > it->second) continue;  // stale

        // Capacity guard: adding this SM must not push the DAP's offered
        // load beyond its service rate.
        const double increment = lab.gateway_sigma * lambda0;
        if (load[static_cast<size_t>(lab.dap_rank)] + increment > capacity)
            continue;

        assigned[static_cast<size_t>(lab.node)] = 1;
        load[static_cast<size_t>(lab.dap_rank)] += increment;
        forest.parent[static_cast<size_t>(lab.node)] = lab.parent;
        forest.dap[static_cast<size_t>(lab.node)] =
            forest.dap_nodes[static_cast<size_t>(lab.dap_rank)];
        forest.route_cost[static_cast<size_t>(lab.node)] = lab.cost;
        gateway_sigma[static_cast<size_t>(lab.node)] = lab.gateway_sigma;

        const auto reach = sm_index.range_query(
            s.nodes[static_cast<size_t>(lab.node)].pos, s.sm_range_m,
            lab.node);
        for (int j : reach) {
            if (assigned[static_cast<size_t>(j)]) continue;
            const double c = edge_cost(lab.node, j);
            if (!std::isfinite(c)) continue;
            const double total = lab.cost + c;
            const auto k = key(j, lab.dap_rank);
            const auto bit = best.find(k);
            if (bit != best.end() && total >= bit->second) continue;
            best[k] = total;
            heap.push({total, lab.dap_id, s.nodes[static_cast<size_t>(j)].id,
                       j, lab.dap_rank, lab.node, lab.gateway,
                       lab.gateway_sigma});
        }
    }

    forest.recompute_derived(s);
    return forest;
}

bool relocate_centroids(const Scenario& s, const CoverageSets& cov,
                        const RoutingForest& forest, std::vector<int>* daps) {
    std::vector<SpatialIndex::Entry> pole_entries;
    for (size_t i = 0; i < s.nodes.size(); ++i)
        if (s.nodes[i].kind == NodeKind::Pole)
            pole_entries.push_back({static_cast<int>(i), s.nodes[i].pos});
    const SpatialIndex pole_index(pole_entries);

    bool moved = false;
    std::vector<int> updated = *daps;
    for (size_t r = 0; r < forest.dap_nodes.size(); ++r) {
        const int cur = forest.dap_nodes[r];
        const auto& members = forest.clusters[r];
        if (members.empty()) continue;
        Point centroid{0.0, 0.0};
        for (int i : members) {
            centroid.x += s.nodes[static_cast<size_t>(i)].pos.x;
            centroid.y += s.nodes[static_cast<size_t>(i)].pos.y;
        }
        centroid.x /= static_cast<double>(members.size());
        centroid.y /= static_cast<double>(members.size());

        const int candidate = pole_index.nearest(centroid);
        if (candidate < 0 || candidate == cur) continue;
        if (std::find(updated.begin(), updated.end(), candidate) !=
            updated.end())
            continue;  // pole already hosts a DAP

        // Acceptance guard: every member must stay reachable.
        const auto& cover = cov.pole_cover[static_cast<size_t>(candidate)];
        const bool all_reachable = std::all_of(
            members.begin(), members.end(), [&](int m) {
                return std::binary_search(cover.begin(), cover.end(), m);
            });
        if (!all_reachable) continue;

        std::replace(updated.begin(), updated.end(), cur, candidate);
        moved = true;
    }
    if (moved) {
        std::sort(updated.begin(), updated.end());
        *daps = updated;
    }
    return moved;
}

namespace {

int failing_count(const Scenario& s, const RoutingForest& forest,
                  const AuditResult& audit) {
    int c = 0;
    for (size_t i = 0; i < s.nodes.size(); ++i)
        if (forest.routed(static_cast<int>(i)) &&
            s.nodes[i].kind == NodeKind::SmartMeter &&
            audit.min_path_r[i] < s.rho())
            ++c;
    return c;
}

}  // namespace

PlacementSolution plan(const Scenario& s, int threads) {
    PlacementSolution sol;
    const size_t n = s.nodes.size();
    const CoverageSets cov = build_coverage(s, threads);

    std::vector<char> all_sms(n, 0);
    size_t n_poles = 0;
    for (size_t i = 0; i < n; ++i) {
        if (s.nodes[i].kind == NodeKind::SmartMeter)
            all_sms[i] = 1;
        else
            ++n_poles;
    }

    std::vector<int> daps = phase1_greedy(s, cov, all_sms, {});
    std::vector<int> prev_parent, prev_dap;

    const int max_iters = static_cast<int>(n_poles) + 1;
    for (int iter = 1; iter <= max_iters; ++iter) {
        sol.forest = phase2_routes(s, daps);            // Step I
        if (relocate_centroids(s, cov, sol.forest, &daps))  // Step II
            sol.forest = phase2_routes(s, daps);
        sol.audit = audit_reliability(s, sol.forest, threads);

        IterationRecord rec;
        rec.iteration = iter;
        rec.dap_count = static_cast<int>(daps.size());
        rec.failing = failing_count(s, sol.forest, sol.audit);
        rec.unconnected = static_cast<int>(sol.forest.unconnected.size());

        if (rec.failing == 0) {
            sol.iterations.push_back(rec);
            break;
        }

        // Step III: cover the failing SMs with additional DAPs.
        std::vector<char> detached(n, 0);
        for (size_t i = 0; i < n; ++i)
            if (sol.forest.routed(static_cast<int>(i)) &&
                s.nodes[i].kind == NodeKind::SmartMeter &&
                sol.audit.min_path_r[i] < s.rho())
                detached[i] = 1;
        const std::vector<int> added = phase1_greedy(s, cov, detached, daps);
        rec.added = static_cast<int>(added.size());
        sol.iterations.push_back(rec);

        const bool same_assignment =
            prev_parent == sol.forest.parent && prev_dap == sol.forest.dap;
        if (added.empty() && same_assignment) break;  // no solution for them
        prev_parent = sol.forest.parent;
        prev_dap = sol.forest.dap;

        daps.insert(daps.end(), added.begin(), added.end());
        std::sort(daps.begin(), daps.end());
    }

    // SMs still missing rho cannot be helped; report them unconnected so
    // the emitted solution satisfies the reliability constraint.
    std::vector<int> hopeless;
    for (size_t i = 0; i < n; ++i)
        if (sol.forest.routed(static_cast<int>(i)) &&
            s.nodes[i].kind == NodeKind::SmartMeter &&
            sol.audit.min_path_r[i] < s.rho())
            hopeless.push_back(static_cast<int>(i));
    if (!hopeless.empty()) {
        for (int i : hopeless) {
            sol.forest.parent[static_cast<size_t>(i)] = -1;
            sol.forest.dap[static_cast<size_t>(i)] = -1;
            sol.forest.route_cost[static_cast<size_t>(i)] = 0.0;
        }
        sol.forest.recompute_derived(s);
        sol.audit = audit_reliability(s, sol.forest, threads);
        sol.detached = hopeless;
    }

    sol.dap_nodes = daps;

    // Geometric decay rate of the failing-SM count across iterations.
    double ratio_prod = 1.0;
    int ratio_n = 0;
    for (size_t i = 1; i < sol.iterations.size(); ++i) {
        if (sol.iterations[i - 1].failing > 0 && sol.iterations[i].failing > 0) {
            ratio_prod *= static_cast<double>(sol.iterations[i].failing) /
                          sol.iterations[i - 1].failing;
            ++ratio_n;
        }
    }
    sol.convergence_ratio =
        ratio_n > 0 ? std::pow(ratio_prod, 1.0 / ratio_n) : 0.0;
    return sol;
}

std::vector<double> dap_loads(const Scenario& s, const RoutingForest& forest) {
    const PerCurve curve = make_curve(s.config);
    const double lambda0 = total_generation_rate_pps(s);
    const int bytes = s.max_packet_bytes();
    std::vector<double> loads(forest.dap_nodes.size(), 0.0);
    for (size_t r = 0; r < forest.dap_nodes.size(); ++r) {
        for (int m : forest.clusters[r]) {
            // Walk up to the SM directly below the DAP.
            int gw = m;
            while (s.nodes[static_cast<size_t>(
                              forest.parent[static_cast<size_t>(gw)])]
                       .kind == NodeKind::SmartMeter)
                gw = forest.parent[static_cast<size_t>(gw)];
            const Node& g = s.nodes[static_cast<size_t>(gw)];
            const Node& d = s.nodes[static_cast<size_t>(
                forest.parent[static_cast<size_t>(gw)])];
            const double pl = path_loss_db(s.config, distance(g.pos, d.pos),
                                           g.height_m, d.height_m);
            const double eps =
                curve.per(sinr_db(s.radio(), pl, g.indoor || d.indoor), bytes);
            loads[r] += lambda0 / (1.0 - eps);
        }
    }
    return loads;
}

std::vector<std::string> check_constraints(const Scenario& s,
                                           const RoutingForest& forest,
                                           const AuditResult& audit,
                                           bool cluster_capacity) {
    std::vector<std::string> bad;
    auto fail = [&](const std::string& msg) { bad.push_back(msg); };
    const size_t n = s.nodes.size();

    try {
        forest.check(s);
    } catch (const std::exception& e) {
        fail(e.what());
        return bad;
    }

    for (int d : forest.dap_nodes)
        if (s.nodes[static_cast<size_t>(d)].kind != NodeKind::Pole)
            fail("selected DAP " +
                 std::to_string(s.nodes[static_cast<size_t>(d)].id) +
                 " is not a pole");

    for (size_t i = 0; i < n; ++i) {
        if (s.nodes[i].kind != NodeKind::SmartMeter) continue;
        const int node_id = s.nodes[i].id;
        if (!forest.routed(static_cast<int>(i))) continue;
        const int up = forest.parent[i];
        const Node& a = s.nodes[i];
        const Node& b = s.nodes[static_cast<size_t>(up)];
        const double d = distance(a.pos, b.pos);
        const bool to_pole = b.kind == NodeKind::Pole;
        const double limit = to_pole ? s.pole_range_m : s.sm_range_m;
        if (d > limit + 1e-9)
            fail("link " + std::to_string(node_id) + " -> " +
                 std::to_string(b.id) + " exceeds radio range");
        if (to_pole && forest.dap[i] != up)
            fail("SM " + std::to_string(node_id) +
                 " attaches to a pole that is not its DAP");
        if (audit.min_path_r[i] < s.rho())
            fail("SM " + std::to_string(node_id) +
                 " misses the reliability target");
    }

    const double capacity = s.mac().dap_capacity_pps;
    if (cluster_capacity) {
        const std::vector<double> loads = dap_loads(s, forest);
        for (size_t r = 0; r < loads.size(); ++r)
            if (loads[r] > capacity + 1e-9)
                fail("DAP " +
                     std::to_string(
                         s.nodes[static_cast<size_t>(forest.dap_nodes[r])].id) +
                     " over capacity");
    } else {
        // Direct-children variant: only SMs linked straight to the DAP count.
        const PerCurve curve = make_curve(s.config);
        const double lambda0 = total_generation_rate_pps(s);
        const int bytes = s.max_packet_bytes();
        for (size_t r = 0; r < forest.dap_nodes.size(); ++r) {
            const size_t d = static_cast<size_t>(forest.dap_nodes[r]);
            double load = 0.0;
            for (int m : forest.clusters[r]) {
                if (forest.parent[static_cast<size_t>(m)] !=
                    forest.dap_nodes[r])
                    continue;
                const Node& g = s.nodes[static_cast<size_t>(m)];
                const double pl =
                    path_loss_db(s.config, distance(g.pos, s.nodes[d].pos),
                                 g.height_m, s.nodes[d].height_m);
                const double eps = curve.per(
                    sinr_db(s.radio(), pl, g.indoor || s.nodes[d].indoor),
                    bytes);
                load += lambda0 * (forest.feeding[static_cast<size_t>(m)] + 1) /
                        (1.0 - eps);
            }
            if (load > capacity + 1e-9)
                fail("DAP " + std::to_string(s.nodes[d].id) +
                     " over direct-link capacity");
        }
    }
    return bad;
}

}  // namespace daplan
