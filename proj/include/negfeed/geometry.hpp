#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "negfeed/grid.hpp"

namespace negfeed {

using Point = Eigen::VectorXd;

/// Closed axis-aligned box.
struct Box {
    Point lo;
    Point hi;

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Eigen::Ref<const Eigen::VectorXd>& p) const;
    Box inflated(double margin) const;
    Point center() const { return 0.5 * (lo + hi); }
};

/// Exact slab test: does the closed segment [p, q] touch the closed box?
bool segment_intersects_box(const Eigen::Ref<const Eigen::VectorXd>& p,
                            const Eigen::Ref<const Eigen::VectorXd>& q, const Box& box);

/// Distinct cells of `spec` crossed by the polyline through `points`, sorted
/// ascending. A segment counts for a cell when it overlaps the cell over a
/// non-zero parameter interval; grazing a corner or edge does not count, and
/// a segment lying on a shared face belongs to the upper cell. Every vertex
/// also counts for the cell that contains it. Portions outside the grid are
/// ignored.
std::vector<std::size_t> cells_traversed(const std::vector<Point>& points, const GridSpec& spec);

}  // namespace negfeed
