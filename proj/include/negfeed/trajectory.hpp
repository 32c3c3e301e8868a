#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "negfeed/demo.hpp"

namespace negfeed {

enum class OutcomeKind { Success, Collision, GoalMiss, Unevaluated };

std::string_view to_string(OutcomeKind kind);

enum class TrajectorySource { demo, rollout };

/// A path at fixed phase steps. Rollouts carry one point per phase cell of
/// the policy grid, at cell centers.
struct Trajectory {
    std::vector<Sample> points;
    TrajectorySource source = TrajectorySource::rollout;
    OutcomeKind outcome = OutcomeKind::Unevaluated;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    std::vector<Point> positions() const;
    Demonstration as_demonstration(Label label, double weight) const;
};

/// CSV rows `phase,x,y[,z],outcome` with a header line.
std::string trajectory_to_csv(const Trajectory& traj);

}  // namespace negfeed
