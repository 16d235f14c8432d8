#pragma once

#include <string>
#include <vector>

#include "daplan/scenario.hpp"

namespace daplan {

/// Erceg SUI terrain type B path loss in dB. Below the 100 m reference
/// distance the free-space value is used, so the curve stays continuous.
double path_loss_erceg_b(double dist_m, double tx_height_m,
                         double rx_height_m, double freq_hz);

double path_loss_log_distance(double dist_m, double exponent, double freq_hz);

double path_loss_db(const PlannerConfig& cfg, double dist_m,
                    double tx_height_m, double rx_height_m);

/// Receiver SINR in dB for a given path loss, including noise figure,
/// interference margin, fading margin and optional penetration loss.
double sinr_db(const RadioParams& radio, double path_loss_db, bool indoor);

/// Packet error probability as a function of SINR. The analytic curve is
/// QPSK over AWGN with the configured coding gain; alternatively a
/// tabulated curve can be loaded from CSV (sinr_db,per rows).
class PerCurve {
public:
    static PerCurve analytic(double coding_gain_db);
    static PerCurve from_csv(const std::string& path);
    static PerCurve from_points(std::vector<std::pair<double, double>> pts);

    double per(double sinr_db, int packet_bytes) const;
    double bit_error_rate(double sinr_db) const;
    bool tabulated() const { return !points_.empty(); }

private:
    PerCurve() = default;
    double coding_gain_db_ = 0.0;
    // Tabulated mode: (sinr_db, per) sorted by sinr, linearly interpolated,
    // clamped at both ends. Tabulated PER is per-packet already.
    std::vector<std::pair<double, double>> points_;
};

/// Additive link weight: c = -log(1 - per). PER of 1 maps to +infinity.
double link_cost(double per);

struct LinkBudget {
    double dist_m = 0.0;
    double path_loss_db = 0.0;
    double sinr_db = 0.0;
    double per = 0.0;
    double cost = 0.0;
};

LinkBudget link_budget(const PlannerConfig& cfg, const PerCurve& curve,
                       const Node& a, const Node& b);

/// Largest distance whose PER stays at or below per_max, found by bisection
/// to 0.1 m. Returns 0 if even the shortest distance is above the ceiling.
double max_range(const PlannerConfig& cfg, const PerCurve& curve,
                 double tx_height_m, double rx_height_m, bool indoor,
                 int packet_bytes, double per_max);

}  // namespace daplan
