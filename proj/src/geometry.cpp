#include "negfeed/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace negfeed {

bool Box::contains(const Eigen::Ref<const Eigen::VectorXd>& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

Box Box::inflated(double margin) const {
    return Box{(lo.array() - margin).matrix(), (hi.array() + margin).matrix()};
}

bool segment_intersects_box(const Eigen::Ref<const Eigen::VectorXd>& p,
                            const Eigen::Ref<const Eigen::VectorXd>& q, const Box& box) {
    if (p.size() != box.lo.size() || q.size() != box.lo.size())
        throw std::invalid_argument("segment_intersects_box: dimension mismatch");
    double t0 = 0.0;
    double t1 = 1.0;
    for (Eigen::Index d = 0; d < p.size(); ++d) {
        const double dir = q[d] - p[d];
        if (dir == 0.0) {
            if (p[d] < box.lo[d] || p[d] > box.hi[d]) return false;
            continue;
        }
        double a = (box.lo[d] - p[d]) / dir;
        double b = (box.hi[d] - p[d]) / dir;
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
        if (t0 > t1) return false;
    }
    return true;
}

namespace {

// Parameter interval of [p, q] inside the cell; half-open on faces parallel
// to the segment so that a segment on a shared face lands in one cell only.
bool overlaps_cell(const Eigen::VectorXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& lo,
                   const Eigen::VectorXd& hi) {
    double t0 = 0.0;
    double t1 = 1.0;
    for (Eigen::Index d = 0; d < p.size(); ++d) {
        const double dir = q[d] - p[d];
        if (dir == 0.0) {
            if (p[d] < lo[d] || p[d] >= hi[d]) return false;
            continue;
        }
        double a = (lo[d] - p[d]) / dir;
        double b = (hi[d] - p[d]) / dir;
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
    }
    return t0 < t1;
}

}  // namespace

std::vector<std::size_t> cells_traversed(const std::vector<Point>& points, const GridSpec& spec) {
    const auto dims = static_cast<Eigen::Index>(spec.dims());
    std::vector<std::size_t> out;
    for (const auto& p : points) {
        if (p.size() != dims) throw std::invalid_argument("cells_traversed: dimension mismatch");
        if (auto c = spec.locate(p)) out.push_back(*c);
    }

    std::vector<std::size_t> lo_idx(spec.dims()), hi_idx(spec.dims()), idx(spec.dims());
    Eigen::VectorXd cell_lo(dims), cell_hi(dims);
    for (std::size_t s = 0; s + 1 < points.size(); ++s) {
        const auto& p = points[s];
        const auto& q = points[s + 1];
        bool empty = false;
        for (std::size_t d = 0; d < spec.dims(); ++d) {
            const Axis& ax = spec.axis(d);
            const auto e = static_cast<Eigen::Index>(d);
            const double a = std::max(std::min(p[e], q[e]), ax.lo);
            const double b = std::min(std::max(p[e], q[e]), ax.hi);
            if (a > b) {
                empty = true;
                break;
            }
            lo_idx[d] = *ax.locate(a);
            hi_idx[d] = *ax.locate(b);
        }
        if (empty) continue;
        // Walk the index box covering the segment's bounding box.
        idx = lo_idx;
        bool done = false;
        while (!done) {
            for (std::size_t d = 0; d < spec.dims(); ++d) {
                const Axis& ax = spec.axis(d);
                const auto e = static_cast<Eigen::Index>(d);
                cell_lo[e] = ax.lo + static_cast<double>(idx[d]) * ax.width();
                // The last cell is closed at the grid boundary.
                cell_hi[e] = idx[d] + 1 == ax.cells ? std::nextafter(ax.hi, std::numeric_limits<double>::infinity())
                                                    : ax.lo + static_cast<double>(idx[d] + 1) * ax.width();
            }
            if (overlaps_cell(p, q, cell_lo, cell_hi)) out.push_back(spec.flat_index(idx));
            std::size_t d = spec.dims();
            while (true) {
                if (d == 0) {
                    done = true;
                    break;
                }
                --d;
                if (++idx[d] <= hi_idx[d]) break;
                idx[d] = lo_idx[d];
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace negfeed
