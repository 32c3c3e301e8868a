#include "negfeed/trajectory.hpp"

#include <cstdio>

namespace negfeed {

std::string_view to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::Success: return "success";
        case OutcomeKind::Collision: return "collision";
        case OutcomeKind::GoalMiss: return "goal_miss";
        case OutcomeKind::Unevaluated: return "unevaluated";
    }
    return "unevaluated";
}

std::vector<Point> Trajectory::positions() const {
    std::vector<Point> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.position);
    return out;
}

Demonstration Trajectory::as_demonstration(Label label, double weight) const {
    Demonstration demo;
    demo.samples = points;
    demo.label = label;
    demo.weight = weight;
    return demo;
}

std::string trajectory_to_csv(const Trajectory& traj) {
    const int dim = traj.empty() ? 2 : static_cast<int>(traj.points.front().position.size());
    std::string out = dim == 3 ? "phase,x,y,z,outcome\n" : "phase,x,y,outcome\n";
    char buf[64];
    for (const auto& p : traj.points) {
        std::snprintf(buf, sizeof buf, "%.17g", p.phase);
        out += buf;
        for (Eigen::Index i = 0; i < p.position.size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", p.position[i]);
            out += buf;
        }
        out += ',';
        out += to_string(traj.outcome);
        out += '\n';
    }
    return out;
}

}  // namespace negfeed
