#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "daplan/geometry.hpp"

namespace daplan {

enum class NodeKind { SmartMeter, Pole };

struct Node {
    int id = 0;
    NodeKind kind = NodeKind::SmartMeter;
    Point pos;               // planar meters
    double height_m = 2.0;
    bool indoor = false;     // building penetration loss applies
};

enum class TrafficCategory { MissionCritical, NonCritical };
enum class ArrivalModel { Deterministic, Poisson };

struct TrafficClass {
    std::string name;
    TrafficCategory category = TrafficCategory::NonCritical;
    int packet_bytes = 250;
    double arrival_interval_s = 900.0;
    double latency_req_s = 5.0;          // L
    ArrivalModel arrival = ArrivalModel::Poisson;
};

struct RadioParams {
    double tx_power_dbm = 14.771212547196624;   // 30 mW
    double noise_psd_dbm_hz = -174.0;
    double noise_factor_db = 7.0;
    double bandwidth_hz = 281000.0;
    double interference_margin_db = 6.0;
    double fading_margin_db = 12.3;
    double penetration_loss_db = 12.0;          // applied to indoor SMs only
    double carrier_freq_hz = 900e6;
    std::string mcs = "qpsk-3/4";
};

struct MacParams {
    double frame_duration_s = 0.16;   // T_F
    int cfp_slots = 6;                // N_T
    int cap_slots = 10;               // N_C
    int max_retries = 4;              // N_ARQ
    int max_backoff_stage = 4;        // M
    std::vector<int> backoff_windows = {8, 16, 32, 32, 32};  // W_0..W_M
    double dap_capacity_pps = 100.0;  // mu_DAP, packets/second

    int slots_per_frame() const { return cfp_slots + cap_slots; }
    double slot_duration_s() const {
        return frame_duration_s / slots_per_frame();
    }
};

enum class PathLossModel { ErcegB, LogDistance };

/// Planner-wide settings parsed from the flat key/value config file.
struct PlannerConfig {
    RadioParams radio;
    MacParams mac;
    std::vector<TrafficClass> traffic = default_traffic();
    double required_reliability = 0.90;  // rho
    PathLossModel path_loss = PathLossModel::ErcegB;
    double log_distance_exponent = 3.5;
    double coding_gain_db = 4.0;
    double sm_height_m = 2.0;
    double pole_height_m = 10.0;
    double edge_per_max = 0.3;           // PER ceiling defining coverage ranges
    std::optional<double> sm_range_m;    // d_smax override
    std::optional<double> pole_range_m;  // d_pmax override
    bool latlon_input = false;
    std::string per_curve_file;          // optional tabulated Q curve
    int slot_capacity_bytes = 250;

    static std::vector<TrafficClass> default_traffic();
};

struct Scenario {
    std::vector<Node> nodes;
    PlannerConfig config;
    double sm_range_m = 0.0;    // d_smax, resolved
    double pole_range_m = 0.0;  // d_pmax, resolved
    bool from_latlon = false;
    double origin_lat = 0.0;
    double origin_lon = 0.0;

    const RadioParams& radio() const { return config.radio; }
    const MacParams& mac() const { return config.mac; }
    double rho() const { return config.required_reliability; }

    std::vector<const Node*> smart_meters() const;
    std::vector<const Node*> poles() const;
    const Node* find(int id) const;

    // Per-category aggregates used by the delay model: summed generation
    // rate and the tightest latency requirement among the classes.
    double category_rate_pps(TrafficCategory c) const;
    double category_latency_s(TrafficCategory c) const;
    int max_packet_bytes() const;

    void validate() const;  // throws std::runtime_error on invariant breach
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The link budget cannot close even at point-blank range, so no coverage
/// radius exists under the configured edge_per_max.
class InfeasibleRadioBudget : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Empty config_file selects the built-in defaults.
Scenario load_scenario(const std::string& node_file,
                       const std::string& config_file);
PlannerConfig load_config(const std::string& config_file);
PlannerConfig parse_config_text(const std::string& text,
                                const std::string& origin = "<config>");

/// Canonical serialized form of a config (every key, sorted); also the
/// input to config_hash().
std::string config_to_text(const PlannerConfig& cfg);
uint64_t config_hash(const PlannerConfig& cfg);

std::string scenario_to_csv(const Scenario& s);
void write_scenario(const Scenario& s, const std::string& node_file,
                    const std::string& config_file);

enum class DensityProfile { Rural, Suburban, Urban };

Scenario generate_synthetic(int n_sm, int n_poles, double area_km2,
                            DensityProfile profile, std::uint64_t seed);

// Resolves d_smax/d_pmax (link-budget-derived unless overridden) and
// validates invariants. Called by the loaders and the generator.
void finalize_scenario(Scenario& s);

const char* to_string(NodeKind k);
const char* to_string(TrafficCategory c);
const char* to_string(DensityProfile p);

}  // namespace daplan
