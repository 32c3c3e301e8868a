#pragma once

// Canonical task geometry. Benchmarks and regression tests depend on these
// exact values; bump kGeometryVersion whenever any of them changes.

#include <array>
#include <cstddef>

namespace negfeed::geometry_v1 {

inline constexpr int kGeometryVersion = 1;

// Shared defaults.
inline constexpr std::size_t kDemoSamples = 100;
inline constexpr std::size_t kTemplateSmoothingHalfWidth = 4;
inline constexpr std::size_t kNoiseSmoothingHalfWidth = 2;  // 5-point moving average
inline constexpr double kDemoNoiseFraction = 0.02;          // of the workspace extent
inline constexpr double kGoalToleranceCells = 2.0;

// Simple ambiguous task: unit square, travel left to right around one
// central obstacle, over or under.
namespace simple {
inline constexpr std::array<double, 2> kStart{0.1, 0.5};
inline constexpr std::array<double, 2> kGoal{0.9, 0.5};
inline constexpr std::array<double, 2> kObstacleLo{0.4, 0.3};
inline constexpr std::array<double, 2> kObstacleHi{0.6, 0.7};
inline constexpr double kOverY = 0.85;
inline constexpr double kUnderY = 0.15;
inline constexpr double kDetourX0 = 0.3;
inline constexpr double kDetourX1 = 0.7;
inline constexpr std::size_t kPhaseCells = 30;
inline constexpr std::size_t kSpatialCells = 20;
}  // namespace simple

// Slalom: unit square, travel bottom to top through two horizontal obstacle
// rows. Row 1 has five gaps (A-E), row 2 four (A-D) or, optionally, five.
namespace slalom {
inline constexpr std::array<double, 2> kStart{0.5, 0.04};
inline constexpr std::array<double, 2> kGoal{0.5, 0.96};
inline constexpr double kRow1Lo = 0.30;
inline constexpr double kRow1Hi = 0.38;
inline constexpr double kRow2Lo = 0.62;
inline constexpr double kRow2Hi = 0.70;
inline constexpr double kGapWidth = 0.1;
// Waypoint heights: approach row 1, leave row 1, approach row 2, leave row 2.
inline constexpr std::array<double, 4> kWaypointY{0.22, 0.46, 0.54, 0.78};
inline constexpr std::size_t kPhaseCells = 60;
inline constexpr std::size_t kSpatialCells = 40;
}  // namespace slalom

// Three-behavior pick-and-place analogue in the unit cube. The obstacle is a
// box resting on the floor (z = 0) sized about a third of the start-goal
// distance, inflated to account for the gripper width.
namespace pickplace3d {
inline constexpr std::array<double, 3> kStart{0.1, 0.5, 0.1};
inline constexpr std::array<double, 3> kGoal{0.9, 0.5, 0.1};
inline constexpr std::array<double, 3> kObstacleLo{0.365, 0.365, 0.0};
inline constexpr std::array<double, 3> kObstacleHi{0.635, 0.635, 0.27};
inline constexpr double kGripperMargin = 0.03;
inline constexpr double kLeftY = 0.15;
inline constexpr double kRightY = 0.85;
inline constexpr double kOverZ = 0.5;
inline constexpr double kDetourX0 = 0.3;
inline constexpr double kDetourX1 = 0.7;
inline constexpr std::size_t kPhaseCells = 30;
inline constexpr std::size_t kSpatialCells = 16;
}  // namespace pickplace3d

}  // namespace negfeed::geometry_v1
