#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "daplan/placement.hpp"
#include "daplan/scenario.hpp"
#include "daplan/sim.hpp"

namespace daplan {

inline constexpr const char* kToolVersion = "1.0.0";

/// First line of every emitted file: tool version, run seed, config hash.
/// Text formats get it verbatim behind '#'; JSON formats carry the same
/// string as a leading "_header" field on a single line.
std::string output_header(uint64_t seed, uint64_t config_hash);

void write_solution_json(const std::string& path, const Scenario& s,
                         const PlacementSolution& sol, uint64_t seed);

/// Rebuilds the routing forest and DAP set from a solution file written by
/// write_solution_json. Throws ParseError on malformed input or node ids
/// that do not exist in the scenario.
struct LoadedSolution {
    std::vector<int> dap_nodes;
    RoutingForest forest;
};
LoadedSolution load_solution_json(const std::string& path, const Scenario& s);

void write_geojson(const std::string& path, const Scenario& s,
                   const PlacementSolution& sol, uint64_t seed);

// Plot data. First column ascending; every cdf column is non-decreasing
// within [0,1] and ends at 1 when there is any data.
void write_hops_cdf(const std::string& path, const Scenario& s,
                    const RoutingForest& forest, uint64_t seed);
void write_connections_cdf(const std::string& path, const Scenario& s,
                           const RoutingForest& forest, uint64_t seed);
void write_queue_delay_cdf(const std::string& path, const Scenario& s,
                           const RoutingForest& forest,
                           const AuditResult& audit, uint64_t seed);

void write_summary(const std::string& path, const Scenario& s,
                   const PlacementSolution& sol, uint64_t seed);

void write_samples_csv(const std::string& path, const Scenario& s,
                       const std::vector<DelaySample>& samples, uint64_t seed);

void write_validation_csv(const std::string& path, const Scenario& s,
                          const ValidationReport& rep, uint64_t seed);

std::string validation_text(const Scenario& s, const ValidationReport& rep);

}  // namespace daplan
