#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "negfeed/demo.hpp"
#include "negfeed/grid.hpp"
#include "negfeed/trajectory.hpp"

namespace negfeed {

/// Binary consensus field over spatial cells. Bit 0 marks a cell that more
/// than `threshold` of the demonstrations pass through; feedback may not
/// alter those cells. Bit 1 cells are open to feedback.
class Mask {
public:
    Mask() = default;
    Mask(GridSpec spec, std::vector<std::uint32_t> counts, std::size_t trajectories, double threshold);

    /// Every cell open to feedback (no consensus protection).
    static Mask all_ones(GridSpec spec);

    const GridSpec& spec() const { return spec_; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }
    const std::vector<std::uint32_t>& counts() const { return counts_; }
    double threshold() const { return threshold_; }
    std::size_t trajectories() const { return trajectories_; }
    bool bit(std::size_t cell) const { return bits_[cell] != 0; }
    std::size_t ones() const;

    /// One bit per cell of `grid`. A mask over `grid.spatial()` is broadcast
    /// across phase slices; a mask over `grid` itself is returned as is.
    /// Throws SpecMismatch otherwise.
    std::vector<std::uint8_t> expand_to(const GridSpec& grid) const;

    /// Bit of the spatial cell containing `position` (1 when outside).
    bool open_at(const Eigen::Ref<const Eigen::VectorXd>& position) const;

    /// Rows of '0'/'1' characters. For 2D the first axis runs down the rows
    /// and the second along them; 3D masks print one such block per index of
    /// the first axis, separated by blank lines.
    std::string to_text() const;

    /// Binary layout: "NFMK", u32 version, axes, f64 threshold, u32
    /// trajectory count, bit-packed cells (LSB first).
    std::vector<std::uint8_t> serialize() const;
    static Mask deserialize(std::span<const std::uint8_t> bytes);
    std::size_t serialized_size() const;

private:
    GridSpec spec_;
    std::vector<std::uint8_t> bits_;
    std::vector<std::uint32_t> counts_;
    double threshold_ = 1.0;
    std::size_t trajectories_ = 0;
};

/// Count, for every spatial cell, the positive demonstrations whose polyline
/// crosses it (once per demonstration) and threshold the counts.
Mask build_mask(const DemoSet& demos, const GridSpec& spatial, double threshold);

/// Drop the first and last ceil(fraction * size) points. Throws
/// EmptySelection when nothing remains.
Trajectory central_trajectory_selector(const Trajectory& traj, double discard_fraction);

}  // namespace negfeed
