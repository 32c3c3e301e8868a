#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "negfeed/demo.hpp"
#include "negfeed/gmm.hpp"
#include "negfeed/grid.hpp"
#include "negfeed/mask.hpp"
#include "negfeed/trajectory.hpp"

namespace negfeed {

/// Every cell 1 / cell count.
GridDistribution uniform(const GridSpec& spec);

/// Cellwise sum of the positive policies, renormalized. Throws SpecMismatch
/// when the policies do not share a lattice.
GridDistribution combine_positive(std::span<const GridDistribution> policies);

/// Ordered avoidance distributions sharing one lattice.
class AvoidanceSet {
public:
    void add(GridDistribution avoid);
    std::size_t count() const { return distributions_.size(); }
    bool empty() const { return distributions_.empty(); }
    const std::vector<GridDistribution>& distributions() const { return distributions_; }

private:
    std::vector<GridDistribution> distributions_;
};

/// Relative floor applied to the complement factor: factors never drop
/// below kComplementFloor * U.
inline constexpr double kComplementFloor = 1e-12;

/// Complement factor per cell: U - scale * avoid, clamped at the floor, where
/// the scale maps the largest avoidance cell to U. Cells with mask bit 0 get
/// exactly U.
std::vector<double> complement_factor(const GridDistribution& avoid, std::span<const std::uint8_t> mask_bits);

/// Product-of-experts suppression of `avoid` inside the open (bit 1) cells of
/// `mask`, renormalized.
GridDistribution poe_apply_negative(const GridDistribution& policy, const GridDistribution& avoid, const Mask& mask);

/// Fold of poe_apply_negative over the set; independent of its order.
GridDistribution poe_apply_sequence(const GridDistribution& policy, const AvoidanceSet& avoids, const Mask& mask);

/// Mixture-of-experts counterpart: (1 - mix) * policy + mix * normalized
/// complement, renormalized. `mix` must lie in (0, 1).
GridDistribution moe_apply_negative(const GridDistribution& policy, const GridDistribution& avoid, const Mask& mask,
                                    double mix);

/// Refit one mixture over every stored demonstration with negative
/// demonstrations weighted by `neg_weight` (<= 0), then rasterize (after
/// widening by `widen`, see widened()). Requires at least one positive
/// demonstration.
GridDistribution neg_weight_refit(const DemoSet& all_demos, const GridSpec& grid, const EmOptions& em,
                                  double neg_weight, const Eigen::VectorXd& widen = {});

enum class SampleMode { stochastic, argmax };

struct SampleOptions {
    SampleMode mode = SampleMode::stochastic;
    /// Largest per-axis cell step between consecutive phase slices.
    int continuity = 2;
    std::uint64_t seed = 0;
    /// Stochastic restarts after a dead end before giving up.
    int max_restarts = 10;
};

/// Draw one path through the phase slices of `policy` (axis 0 = phase).
/// Stochastic mode samples each slice's cells within `continuity` of the
/// previous choice in proportion to their mass; argmax mode returns the most
/// probable such path, breaking ties toward lower cell indices. Throws
/// DeadEnd when no reachable mass remains.
Trajectory sample_trajectory(const GridDistribution& policy, const SampleOptions& options);

}  // namespace negfeed
