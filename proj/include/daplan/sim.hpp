#pragma once

#include <cstdint>
#include <vector>

#include "daplan/audit.hpp"
#include "daplan/forest.hpp"
#include "daplan/scenario.hpp"

namespace daplan {

struct DelaySample {
    long long packet_id = 0;
    int src = -1;            // source node index
    int traffic_class = -1;  // index into config.traffic
    double gen_t = 0.0;      // seconds
    double del_t = -1.0;     // seconds; -1 when lost
    int hops = 0;            // successful link traversals
    bool lost = false;
};

struct NodeCategoryStat {
    int node = -1;
    TrafficCategory category = TrafficCategory::NonCritical;
    long long generated = 0;  // packets sourced at this node
    long long resolved = 0;   // delivered or lost
    long long delivered = 0;
    long long within_deadline = 0;  // delay <= category latency bound
    long long serviced = 0;         // head-of-line events at this node
    double mean_queue_wait_s = 0.0;
};

struct SimSummary {
    double duration_s = 0.0;
    uint64_t seed = 0;
    long long generated = 0;
    long long delivered = 0;
    long long lost = 0;
    bool drained = true;  // false when the post-duration drain hit its cap
    std::vector<NodeCategoryStat> stats;  // routed SMs x categories
    double mean_queue_wait_s[2] = {0.0, 0.0};  // indexed by TrafficCategory

    // Empirical Pr(delay <= L) for packets sourced at one node; 1 when the
    // node generated nothing (vacuously met).
    double empirical_reliability(int node, TrafficCategory cat) const;
    // Same, pooled over every source of the category.
    double class_reliability(TrafficCategory cat) const;
};

struct SimResult {
    std::vector<DelaySample> samples;
    SimSummary summary;
};

/// Slot-level event simulation of the planned network: CSMA/CA with two
/// clear-channel checks in the contention period, per-DAP FCFS grants in
/// the contention-free period, i.i.d. link errors, and the configured
/// traffic generators (periodic readings get a random phase, the rest are
/// Poisson). Packets generated during [0, sim_duration_s) are followed to
/// delivery or retry exhaustion. Reproducible for a fixed seed.
SimResult simulate_des(const Scenario& s, const RoutingForest& forest,
                       double sim_duration_s, uint64_t seed,
                       bool keep_samples = true);

struct ValidationRow {
    int node = -1;
    TrafficCategory category = TrafficCategory::NonCritical;
    double analytic_r = 0.0;
    double empirical_r = 0.0;
    double gap = 0.0;  // |analytic - empirical|
    long long samples = 0;
    bool flagged = false;  // gap exceeds 0.05 beyond sampling noise
};

struct ValidationReport {
    std::vector<ValidationRow> rows;  // routed SMs x categories
    // Pooled per category: mean analytic R over sources vs pooled empirical.
    double class_analytic[2] = {1.0, 1.0};
    double class_empirical[2] = {1.0, 1.0};
    double class_gap[2] = {0.0, 0.0};
    double max_row_gap = 0.0;
    int flagged = 0;
};

/// Per-node, per-category comparison of the analytic delivery probability
/// against the simulated one. A row is flagged when its gap exceeds 0.05
/// by more than twice the binomial standard error, so thin rows do not
/// trip the check on noise alone.
ValidationReport validate(const Scenario& s, const RoutingForest& forest,
                          const AuditResult& audit, const SimSummary& sim);

}  // namespace daplan
