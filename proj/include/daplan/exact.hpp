#pragma once

#include <string>
#include <vector>

#include "daplan/scenario.hpp"

namespace daplan {

struct ExactLimits {
    int max_poles = 20;
    int max_sms = 80;
    double timeout_s = 60.0;
};

struct ExactResult {
    int optimal_count = -1;   // -1 when unknown (timeout) or infeasible
    std::vector<int> subset;  // one optimal pole subset, node indices ascending
    std::string status;       // "optimal", "infeasible", "incomplete"
    long long explored = 0;   // subsets enumerated (including pruned ones)
    double wall_s = 0.0;
};

/// Minimum-cardinality DAP placement by exhaustive subset search in
/// increasing cardinality. A subset is pruned when the union of its poles'
/// multi-hop covers misses any coverable SM; survivors are routed and
/// audited, and the first feasible cardinality is optimal (subject to the
/// same routing policy the planner uses). Throws std::invalid_argument
/// when the instance exceeds the limits.
ExactResult exact_min_daps(const Scenario& s, const ExactLimits& limits = {},
                           int threads = 0);

enum class PbMode { Dp, Enumerate };

/// Ground-truth pmf of the number of successes among independent Bernoulli
/// trials. Dp convolves one factor at a time (any n); Enumerate sums all
/// 2^n outcomes (n <= 25) as a second, independent oracle.
std::vector<double> pb_oracle(const std::vector<double>& p,
                              PbMode mode = PbMode::Dp);

}  // namespace daplan
