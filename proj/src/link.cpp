#include "daplan/link.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace daplan {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kRefDist = 100.0;

// Gaussian tail Q(x) via the complementary error function.
double q_func(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

}  // namespace

double path_loss_erceg_b(double dist_m, double tx_height_m,
                         double rx_height_m, double freq_hz) {
    const double lambda = kSpeedOfLight / freq_hz;
    const double a_term =
        20.0 * std::log10(4.0 * std::numbers::pi * kRefDist / lambda);
    if (dist_m < kRefDist) {
        // Free space up to the reference distance; meets A at d0.
        const double fs =
            20.0 * std::log10(4.0 * std::numbers::pi * std::max(dist_m, 1.0) /
                              lambda);
        return fs;
    }
    // Terrain type B constants.
    const double hb = std::max(tx_height_m, rx_height_m);
    const double hr = std::min(tx_height_m, rx_height_m);
    const double gamma = 4.0 - 0.0065 * hb + 17.1 / hb;
    double pl = a_term + 10.0 * gamma * std::log10(dist_m / kRefDist);
    // The empirical correction terms are specified above 2 GHz.
    const double f_mhz = freq_hz / 1e6;
    if (f_mhz > 2000.0) pl += 6.0 * std::log10(f_mhz / 2000.0);
    pl += -10.8 * std::log10(hr / 2.0);
    return pl;
}

double path_loss_log_distance(double dist_m, double exponent, double freq_hz) {
    const double lambda = kSpeedOfLight / freq_hz;
    const double a_term =
        20.0 * std::log10(4.0 * std::numbers::pi * kRefDist / lambda);
    const double d = std::max(dist_m, 1.0);
    if (d < kRefDist)
        return 20.0 * std::log10(4.0 * std::numbers::pi * d / lambda);
    return a_term + 10.0 * exponent * std::log10(d / kRefDist);
}

double path_loss_db(const PlannerConfig& cfg, double dist_m,
                    double tx_height_m, double rx_height_m) {
    switch (cfg.path_loss) {
        case PathLossModel::LogDistance:
            return path_loss_log_distance(dist_m, cfg.log_distance_exponent,
                                          cfg.radio.carrier_freq_hz);
        case PathLossModel::ErcegB:
        default:
            return path_loss_erceg_b(dist_m, tx_height_m, rx_height_m,
                                     cfg.radio.carrier_freq_hz);
    }
}

double sinr_db(const RadioParams& radio, double path_loss_db, bool indoor) {
    const double noise_dbm = radio.noise_psd_dbm_hz + radio.noise_factor_db +
                             10.0 * std::log10(radio.bandwidth_hz);
    double s = radio.tx_power_dbm - noise_dbm - radio.interference_margin_db -
               path_loss_db - radio.fading_margin_db;
    if (indoor) s -= radio.penetration_loss_db;
    return s;
}

PerCurve PerCurve::analytic(double coding_gain_db) {
    PerCurve c;
    c.coding_gain_db_ = coding_gain_db;
    return c;
}

PerCurve PerCurve::from_points(std::vector<std::pair<double, double>> pts) {
    if (pts.size() < 2)
        throw ParseError("per curve needs at least two points");
    std::sort(pts.begin(), pts.end());
    for (auto& [s, p] : pts) {
        if (p < 0.0 || p > 1.0)
            throw ParseError("per curve value outside [0,1]");
    }
    PerCurve c;
    c.points_ = std::move(pts);
    return c;
}

PerCurve PerCurve::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open per curve file: " + path);
    std::vector<std::pair<double, double>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double s, p;
        if (!(ss >> s >> p))
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected 'sinr_db,per'");
        pts.emplace_back(s, p);
    }
    return from_points(std::move(pts));
}

double PerCurve::bit_error_rate(double sinr_db) const {
    const double snr_lin = std::pow(10.0, (sinr_db + coding_gain_db_) / 10.0);
    return q_func(std::sqrt(2.0 * snr_lin));
}

double PerCurve::per(double sinr_db, int packet_bytes) const {
    if (!points_.empty()) {
        if (sinr_db <= points_.front().first) return points_.front().second;
        if (sinr_db >= points_.back().first) return points_.back().second;
        auto it = std::lower_bound(
            points_.begin(), points_.end(), sinr_db,
            [](const auto& pt, double v) { return pt.first < v; });
        const auto& [s1, p1] = *it;
        const auto& [s0, p0] = *(it - 1);
        const double t = (sinr_db - s0) / (s1 - s0);
        return p0 + t * (p1 - p0);
    }
    const double ber = bit_error_rate(sinr_db);
    if (ber >= 1.0) return 1.0;
    // 1 - (1-ber)^bits, computed stably for tiny ber.
    const double bits = 8.0 * packet_bytes;
    return -std::expm1(bits * std::log1p(-ber));
}

double link_cost(double per) {
    if (per >= 1.0) return std::numeric_limits<double>::infinity();
    if (per <= 0.0) return 0.0;
    return -std::log1p(-per);
}

LinkBudget link_budget(const PlannerConfig& cfg, const PerCurve& curve,
                       const Node& a, const Node& b) {
    LinkBudget lb;
    lb.dist_m = distance(a.pos, b.pos);
    lb.path_loss_db = path_loss_db(cfg, lb.dist_m, a.height_m, b.height_m);
    // Penetration loss counts once if either endpoint is indoors.
    const bool indoor = a.indoor || b.indoor;
    lb.sinr_db = sinr_db(cfg.radio, lb.path_loss_db, indoor);
    lb.per = curve.per(lb.sinr_db, cfg.slot_capacity_bytes);
    lb.cost = link_cost(lb.per);
    return lb;
}

double max_range(const PlannerConfig& cfg, const PerCurve& curve,
                 double tx_height_m, double rx_height_m, bool indoor,
                 int packet_bytes, double per_max) {
    auto per_at = [&](double d) {
        const double pl = path_loss_db(cfg, d, tx_height_m, rx_height_m);
        return curve.per(sinr_db(cfg.radio, pl, indoor), packet_bytes);
    };
    double lo = 1.0;
    if (per_at(lo) > per_max) return 0.0;
    double hi = 2.0;
    while (per_at(hi) <= per_max && hi < 1e7) hi *= 2.0;
    if (hi >= 1e7) return hi;  // effectively unlimited
    while (hi - lo > 0.1) {
        const double mid = 0.5 * (lo + hi);
        (per_at(mid) <= per_max ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace daplan
