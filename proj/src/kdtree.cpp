#include "daplan/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace daplan {

SpatialIndex::SpatialIndex(std::vector<Entry> entries)
    : entries_(std::move(entries)) {
    if (entries_.empty()) return;
    nodes_.reserve(entries_.size());
    std::vector<int> order(entries_.size());
    std::iota(order.begin(), order.end(), 0);
    root_ = build(0, static_cast<int>(order.size()), 0, order);
}

int SpatialIndex::build(int lo, int hi, int depth, std::vector<int>& order) {
    if (lo >= hi) return -1;
    const int axis = depth % 2;
    const int mid = lo + (hi - lo) / 2;
    std::nth_element(order.begin() + lo, order.begin() + mid,
                     order.begin() + hi, [&](int a, int b) {
                         const Point& pa = entries_[a].pos;
                         const Point& pb = entries_[b].pos;
                         return axis == 0 ? pa.x < pb.x : pa.y < pb.y;
                     });
    const int node = static_cast<int>(nodes_.size());
    nodes_.push_back({order[mid], -1, -1, axis});
    nodes_[node].left = build(lo, mid, depth + 1, order);
    nodes_[node].right = build(mid + 1, hi, depth + 1, order);
    return node;
}

std::vector<int> SpatialIndex::range_query(Point center, double radius,
                                           int exclude_id) const {
    std::vector<int> out;
    if (root_ >= 0 && radius >= 0.0) {
        range_search(root_, center, radius * radius, exclude_id, out);
        std::sort(out.begin(), out.end());
    }
    return out;
}

void SpatialIndex::range_search(int node, Point center, double r_sq,
                                int exclude_id, std::vector<int>& out) const {
    const KdNode& n = nodes_[node];
    const Entry& e = entries_[n.entry];
    if (e.id != exclude_id && distance_sq(e.pos, center) <= r_sq)
        out.push_back(e.id);
    const double delta =
        n.axis == 0 ? center.x - e.pos.x : center.y - e.pos.y;
    const int near = delta <= 0.0 ? n.left : n.right;
    const int far = delta <= 0.0 ? n.right : n.left;
    if (near >= 0) range_search(near, center, r_sq, exclude_id, out);
    if (far >= 0 && delta * delta <= r_sq)
        range_search(far, center, r_sq, exclude_id, out);
}

int SpatialIndex::nearest(Point p, int exclude_id) const {
    int best = -1;
    double best_sq = std::numeric_limits<double>::infinity();
    if (root_ >= 0) nearest_search(root_, p, exclude_id, best, best_sq);
    return best;
}

void SpatialIndex::nearest_search(int node, Point p, int exclude_id,
                                  int& best, double& best_sq) const {
    const KdNode& n = nodes_[node];
    const Entry& e = entries_[n.entry];
    const double d_sq = distance_sq(e.pos, p);
    if (e.id != exclude_id &&
        (d_sq < best_sq || (d_sq == best_sq && e.id < best))) {
        best = e.id;
        best_sq = d_sq;
    }
    const double delta = n.axis == 0 ? p.x - e.pos.x : p.y - e.pos.y;
    const int near = delta <= 0.0 ? n.left : n.right;
    const int far = delta <= 0.0 ? n.right : n.left;
    if (near >= 0) nearest_search(near, p, exclude_id, best, best_sq);
    if (far >= 0 && delta * delta <= best_sq)
        nearest_search(far, p, exclude_id, best, best_sq);
}

}  // namespace daplan
