#include "daplan/forest.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace daplan {

void RoutingForest::resize(size_t n) {
    parent.assign(n, -1);
    dap.assign(n, -1);
    depth.assign(n, 0);
    route_cost.assign(n, 0.0);
    feeding.assign(n, 0);
    children.assign(n, {});
    dap_nodes.clear();
    clusters.clear();
    unconnected.clear();
}

void RoutingForest::recompute_derived(const Scenario& s) {
    const size_t n = s.nodes.size();
    depth.assign(n, 0);
    feeding.assign(n, 0);
    children.assign(n, {});
    clusters.assign(dap_nodes.size(), {});
    unconnected.clear();

    for (size_t i = 0; i < n; ++i) {
        if (s.nodes[i].kind != NodeKind::SmartMeter) continue;
        if (dap[i] < 0) {
            unconnected.push_back(static_cast<int>(i));
            continue;
        }
        // Walk to the root; the walk length bounds cycle detection.
        int steps = 0;
        int cur = static_cast<int>(i);
        while (s.nodes[static_cast<size_t>(cur)].kind == NodeKind::SmartMeter) {
            const int up = parent[static_cast<size_t>(cur)];
            if (up < 0 || ++steps > static_cast<int>(n))
                throw std::runtime_error(
                    "routing forest: broken or cyclic parent chain at node " +
                    std::to_string(s.nodes[i].id));
            cur = up;
        }
        depth[i] = steps;
    }

    for (size_t i = 0; i < n; ++i) {
        if (dap[i] < 0 || s.nodes[i].kind != NodeKind::SmartMeter) continue;
        const int up = parent[i];
        if (s.nodes[static_cast<size_t>(up)].kind == NodeKind::SmartMeter)
            children[static_cast<size_t>(up)].push_back(static_cast<int>(i));
    }

    // Feeding counts accumulate leaf-to-root: process by descending depth.
    std::vector<int> order;
    order.reserve(n);
    for (size_t i = 0; i < n; ++i)
        if (dap[i] >= 0) order.push_back(static_cast<int>(i));
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return depth[static_cast<size_t>(a)] > depth[static_cast<size_t>(b)];
    });
    for (int i : order) {
        const int up = parent[static_cast<size_t>(i)];
        feeding[static_cast<size_t>(up)] += feeding[static_cast<size_t>(i)] + 1;
    }

    for (size_t i = 0; i < n; ++i) {
        if (dap[i] < 0 || s.nodes[i].kind != NodeKind::SmartMeter) continue;
        const auto it =
            std::find(dap_nodes.begin(), dap_nodes.end(), dap[i]);
        if (it == dap_nodes.end())
            throw std::runtime_error(
                "routing forest: node routed to an unselected pole");
        clusters[static_cast<size_t>(it - dap_nodes.begin())].push_back(
            static_cast<int>(i));
    }
}

void RoutingForest::check(const Scenario& s) const {
    const size_t n = s.nodes.size();
    if (parent.size() != n || dap.size() != n || depth.size() != n)
        throw std::runtime_error("routing forest: size mismatch");

    for (size_t i = 0; i < n; ++i) {
        const Node& node = s.nodes[i];
        if (node.kind == NodeKind::Pole) {
            if (parent[i] != -1)
                throw std::runtime_error("routing forest: pole has a parent");
            continue;
        }
        if (dap[i] < 0) {
            if (std::find(unconnected.begin(), unconnected.end(),
                          static_cast<int>(i)) == unconnected.end())
                throw std::runtime_error(
                    "routing forest: unrouted SM missing from unconnected "
                    "list");
            continue;
        }
        if (std::find(dap_nodes.begin(), dap_nodes.end(), dap[i]) ==
            dap_nodes.end())
            throw std::runtime_error(
                "routing forest: SM routed to unselected DAP");

        int cur = static_cast<int>(i);
        int steps = 0;
        while (s.nodes[static_cast<size_t>(cur)].kind == NodeKind::SmartMeter) {
            const int up = parent[static_cast<size_t>(cur)];
            if (up < 0 || ++steps > static_cast<int>(n))
                throw std::runtime_error(
                    "routing forest: cyclic or dangling chain");
            if (dap[static_cast<size_t>(cur)] != dap[i])
                throw std::runtime_error(
                    "routing forest: chain crosses clusters");
            cur = up;
        }
        if (cur != dap[i])
            throw std::runtime_error(
                "routing forest: chain ends at the wrong pole");
        if (steps != depth[i])
            throw std::runtime_error("routing forest: depth mismatch");
    }

    size_t routed_total = 0;
    for (const auto& cluster : clusters) routed_total += cluster.size();
    size_t sm_total = 0;
    for (const auto& node : s.nodes)
        if (node.kind == NodeKind::SmartMeter) ++sm_total;
    if (routed_total + unconnected.size() != sm_total)
        throw std::runtime_error(
            "routing forest: clusters and unconnected do not partition SMs");
}

}  // namespace daplan
