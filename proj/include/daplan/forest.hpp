#pragma once

#include <vector>

#include "daplan/scenario.hpp"

namespace daplan {

/// Uplink routing trees rooted at the selected DAP poles. All vectors are
/// parallel to Scenario::nodes and hold node indices (not ids); -1 marks
/// "none". Poles carry -1 parents; a routed SM's parent is either another
/// SM or its DAP pole.
struct RoutingForest {
    std::vector<int> parent;
    std::vector<int> dap;        // terminal DAP pole of each routed SM
    std::vector<int> depth;      // hop count to the DAP; 0 when unrouted
    std::vector<double> route_cost;
    std::vector<int> feeding;    // SMs whose traffic passes through the node
    std::vector<std::vector<int>> children;  // tree children (SM indices)
    std::vector<int> dap_nodes;  // selected pole indices, ascending
    std::vector<std::vector<int>> clusters;  // SM members per dap_nodes entry
    std::vector<int> unconnected;            // SM indices without a route

    void resize(size_t n);
    /// Rebuilds depth, children, feeding, clusters and unconnected from
    /// parent/dap/dap_nodes. Throws on a cycle.
    void recompute_derived(const Scenario& s);
    /// Structural invariants: chains terminate at a selected DAP, depths
    /// are consistent, clusters partition the routed SMs.
    void check(const Scenario& s) const;

    bool routed(int node) const { return dap[static_cast<size_t>(node)] >= 0; }
};

}  // namespace daplan
