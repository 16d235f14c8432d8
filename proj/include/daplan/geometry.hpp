#pragma once

#include <cmath>

namespace daplan {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

inline double distance_sq(Point a, Point b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

// Equirectangular projection about a reference lat/lon (degrees).
// Adequate for planning areas up to a few tens of km across.
class Projection {
public:
    Projection(double ref_lat_deg, double ref_lon_deg)
        : ref_lat_(ref_lat_deg), ref_lon_(ref_lon_deg),
          cos_lat_(std::cos(ref_lat_deg * kDegToRad)) {}

    Point to_planar(double lat_deg, double lon_deg) const {
        return {kEarthRadius * (lon_deg - ref_lon_) * kDegToRad * cos_lat_,
                kEarthRadius * (lat_deg - ref_lat_) * kDegToRad};
    }

    // Returns {lat_deg, lon_deg}.
    Point to_geodetic(Point planar) const {
        return {ref_lat_ + planar.y / kEarthRadius / kDegToRad,
                ref_lon_ + planar.x / (kEarthRadius * cos_lat_) / kDegToRad};
    }

    double ref_lat() const { return ref_lat_; }
    double ref_lon() const { return ref_lon_; }

    static constexpr double kEarthRadius = 6371000.0;
    static constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

private:
    double ref_lat_;
    double ref_lon_;
    double cos_lat_;
};

}  // namespace daplan
