#pragma once

#include <string>
#include <vector>

#include "daplan/audit.hpp"
#include "daplan/forest.hpp"
#include "daplan/scenario.hpp"

namespace daplan {

/// Static reachability structure shared by the greedy selection, the
/// relocation guard and the exact optimizer.
struct CoverageSets {
    // Indexed by scenario node position; entries hold node indices.
    std::vector<std::vector<int>> sm_adj;      // SM-SM links within d_smax
    std::vector<std::vector<int>> pole_seeds;  // SMs within d_pmax of a pole
    std::vector<std::vector<int>> pole_cover;  // multi-hop reachable SMs
};

CoverageSets build_coverage(const Scenario& s, int threads = 0);

/// Greedy pole selection: repeatedly takes the pole whose multi-hop cover
/// contains the most still-uncovered target SMs (ties to the lowest pole
/// id). target[i] marks the SM indices that need covering. Poles already
/// in existing_daps are not candidates. Returns new pole indices.
std::vector<int> phase1_greedy(const Scenario& s, const CoverageSets& cov,
                               const std::vector<char>& target,
                               const std::vector<int>& existing_daps);

/// Cheapest-route forest from the selected DAPs: multi-source Dijkstra over
/// -log(1-per) link costs with per-DAP capacity tracking. An SM pops with
/// the label of a saturated DAP and simply waits for the next-best label.
RoutingForest phase2_routes(const Scenario& s, const std::vector<int>& daps);

/// Moves each DAP to the pole nearest its cluster centroid when every
/// member stays reachable from there. Returns true when any DAP moved;
/// daps is updated in place (count unchanged).
bool relocate_centroids(const Scenario& s, const CoverageSets& cov,
                        const RoutingForest& forest, std::vector<int>* daps);

struct IterationRecord {
    int iteration = 0;
    int dap_count = 0;
    int failing = 0;      // routed SMs below rho when the audit ran
    int unconnected = 0;  // SMs without any route
    int added = 0;        // DAPs added by this iteration
};

struct PlacementSolution {
    std::vector<int> dap_nodes;  // selected pole indices, ascending
    RoutingForest forest;
    AuditResult audit;
    std::vector<IterationRecord> iterations;
    double convergence_ratio = 0.0;  // geometric decay of the failing count
    std::vector<int> detached;       // SMs dropped for missing rho at the end
};

/// Full pipeline: greedy cover, route, relocate, audit, and add DAPs for
/// low-reliability SMs until every routed SM meets rho or no change is
/// possible. SMs that still miss rho at termination are detached and
/// reported unconnected.
PlacementSolution plan(const Scenario& s, int threads = 0);

/// Standalone verifier of the solution's structural constraints: single
/// parent, ancestor consistency, link ranges, reliability >= rho on routed
/// SMs, DAP capacity, selection consistency, and cluster partitioning.
/// Returns human-readable violations; empty means the solution is sound.
/// cluster_capacity switches between the cluster-wide load definition
/// (default) and the direct-children-only variant.
std::vector<std::string> check_constraints(const Scenario& s,
                                           const RoutingForest& forest,
                                           const AuditResult& audit,
                                           bool cluster_capacity = true);

/// Aggregate arrival load offered to each DAP (sigma-weighted, all traffic
/// classes, packets/second), indexed like forest.dap_nodes.
std::vector<double> dap_loads(const Scenario& s, const RoutingForest& forest);

double total_generation_rate_pps(const Scenario& s);

}  // namespace daplan
