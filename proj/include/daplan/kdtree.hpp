#pragma once

#include <vector>

#include "daplan/geometry.hpp"

namespace daplan {

/// Balanced 2-d tree over (id, position) entries. Immutable after
/// construction; concurrent reads are safe.
class SpatialIndex {
public:
    struct Entry {
        int id;
        Point pos;
    };

    SpatialIndex() = default;
    explicit SpatialIndex(std::vector<Entry> entries);

    /// Ids of entries with Euclidean distance <= radius from center,
    /// sorted ascending. exclude_id (if >= 0) is never reported.
    std::vector<int> range_query(Point center, double radius,
                                 int exclude_id = -1) const;

    /// Id of the nearest entry to p, or -1 if the index is empty
    /// (or holds only exclude_id).
    int nearest(Point p, int exclude_id = -1) const;

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    struct KdNode {
        int entry;        // index into entries_
        int left = -1;
        int right = -1;
        int axis = 0;
    };

    int build(int lo, int hi, int depth, std::vector<int>& order);
    void range_search(int node, Point center, double r_sq, int exclude_id,
                      std::vector<int>& out) const;
    void nearest_search(int node, Point p, int exclude_id, int& best,
                        double& best_sq) const;

    std::vector<Entry> entries_;
    std::vector<KdNode> nodes_;
    int root_ = -1;
};

}  // namespace daplan
