#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "negfeed/demo.hpp"
#include "negfeed/geometry.hpp"
#include "negfeed/grid.hpp"
#include "negfeed/trajectory.hpp"

namespace negfeed {

/// One hypothesis about how the task is solved: a waypoint polyline from
/// start to goal.
struct Behavior {
    std::string name;
    std::vector<Point> waypoints;
};

struct TaskSpec {
    std::string name;
    int dim = 2;
    Box bounds;
    Point start;
    Point goal;
    double goal_tolerance = 0.0;
    std::vector<Box> obstacles;
    std::vector<Behavior> behaviors;
    /// Default policy lattice: phase cells and per-axis spatial cells.
    std::size_t phase_cells = 30;
    std::vector<std::size_t> spatial_cells;

    std::size_t ambiguity() const { return behaviors.size(); }
    const Behavior& behavior(std::string_view name) const;
    GridSpec spatial_grid() const;
    GridSpec policy_grid() const;
    /// Throws std::invalid_argument when the geometry is inconsistent.
    void validate() const;
};

struct Outcome {
    OutcomeKind kind = OutcomeKind::Unevaluated;
    /// Index of the first segment that hits an obstacle (Collision only).
    std::optional<std::size_t> collision_segment;
    double final_distance = 0.0;

    bool success() const { return kind == OutcomeKind::Success; }
};

TaskSpec make_simple_task();

struct SlalomOptions {
    /// 4 gives the canonical 5 x 4 = 20 behaviors; 5 adds a fifth gap to the
    /// second row for 25.
    int row2_gaps = 4;
};
TaskSpec make_slalom_task(const SlalomOptions& options = {});

TaskSpec make_pickplace3d_task(double gripper_margin = -1.0);

/// Look up a built-in task: "simple", "slalom", "slalom25", "pickplace3d".
TaskSpec make_task(std::string_view name);

/// The behavior's waypoint polyline resampled by arc length to `samples`
/// points and smoothed with a symmetric moving average (endpoints fixed).
std::vector<Point> template_path(const Behavior& behavior, std::size_t samples);

struct SynthOptions {
    std::size_t samples = 100;
    /// Rejection budget per demonstration.
    int max_attempts = 50;
};

/// `n` noisy copies of a behavior template. Noise is i.i.d. Gaussian with
/// standard deviation `noise`, smoothed by a 5-point moving average and
/// tapered to zero at both ends. Every returned demonstration evaluates to
/// Success; throws NoiseTooLarge when the rejection budget runs out.
DemoSet synth_demos(const TaskSpec& task, std::string_view behavior, std::size_t n, double noise, std::uint64_t seed,
                    const SynthOptions& options = {});

/// Default demonstration noise: 2% of the workspace extent.
double default_demo_noise(const TaskSpec& task);

Outcome evaluate_path(const std::vector<Point>& path, const TaskSpec& task);
Outcome evaluate(const Trajectory& traj, const TaskSpec& task);

std::string task_to_json(const TaskSpec& task);
TaskSpec task_from_json(std::string_view text);

}  // namespace negfeed
