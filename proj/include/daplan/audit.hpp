#pragma once

#include <string>
#include <vector>

#include "daplan/forest.hpp"
#include "daplan/link.hpp"
#include "daplan/mac.hpp"
#include "daplan/scenario.hpp"

namespace daplan {

/// Per-node, per-class snapshot of the delay model. Parallel to
/// Scenario::nodes; only routed SMs carry meaningful values.
struct NodeClassAudit {
    double lambda_pps = 0.0;   // aggregate arrival, packets/second
    double lambda_slot = 0.0;  // packets per frame slot
    double mu = 0.0;           // service rate, 1/slots
    double p = 0.0;            // busy probability lambda/mu (clamped to 1)
    double sigma = 1.0;        // expected transmissions per packet
    double tq_slots = 0.0;     // mean queue wait, slots
    int tq_int = 0;            // ceil(tq), as consumed by the budgets
    double alpha = 1.0;        // CSMA only
    double xi = 0.0;           // CSMA only
    double chi = 0.0;          // CSMA only
    int own_budget = 0;        // per-hop slots at the node's own depth
    double hop_r = 0.0;        // single-hop reliability at own_budget
    double path_r = 0.0;       // end-to-end reliability of own traffic
    bool stable = true;        // queue utilization < 1
};

struct AuditResult {
    std::vector<NodeClassAudit> mc, nc;  // parallel to scenario nodes
    std::vector<double> min_path_r;      // per node; 0 for unrouted SMs
    bool converged = false;
    double residual = 0.0;
    int fixed_point_iterations = 0;

    bool meets(int node, double rho) const {
        return min_path_r[static_cast<size_t>(node)] >= rho;
    }
};

/// Evaluates the full analytical pipeline over a frozen forest: bottom-up
/// arrival aggregation, the CSMA busy/collision fixed point, service
/// moments, queue waits, and per-hop/per-path reliabilities for both
/// classes. One outer repetition refreshes the arrival rates after the
/// service rates settle.
AuditResult audit_reliability(const Scenario& s, const RoutingForest& forest,
                              int threads = 0);

/// Per-node diagnostic rows: node,class,lambda,mu,p,alpha,xi,chi,TQ,S,R.
std::string audit_dump_csv(const Scenario& s, const AuditResult& audit);

}  // namespace daplan
