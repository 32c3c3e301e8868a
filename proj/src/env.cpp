#include "negfeed/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "negfeed/errors.hpp"
#include "negfeed/task_geometry.hpp"

namespace negfeed {

namespace g = geometry_v1;

namespace {

template <std::size_t N>
Point pt(const std::array<double, N>& a) {
    Point p(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) p[static_cast<Eigen::Index>(i)] = a[i];
    return p;
}

Point pt(std::initializer_list<double> v) {
    Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

Box unit_box(int dim) { return Box{Point::Zero(dim), Point::Ones(dim)}; }

void finish(TaskSpec& task) {
    double min_width = std::numeric_limits<double>::infinity();
    const GridSpec spatial = task.spatial_grid();
    for (const auto& ax : spatial.axes()) min_width = std::min(min_width, ax.width());
    task.goal_tolerance = g::kGoalToleranceCells * min_width;
    task.validate();
}

// Symmetric moving average with the half-width truncated near the ends so the
// endpoints stay fixed.
std::vector<Point> smooth(const std::vector<Point>& in, std::size_t half) {
    const std::size_t n = in.size();
    std::vector<Point> out(in);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const std::size_t h = std::min({half, i, n - 1 - i});
        Point acc = Point::Zero(in[i].size());
        for (std::size_t j = i - h; j <= i + h; ++j) acc += in[j];
        out[i] = acc / static_cast<double>(2 * h + 1);
    }
    return out;
}

}  // namespace

const Behavior& TaskSpec::behavior(std::string_view n) const {
    for (const auto& b : behaviors)
        if (b.name == n) return b;
    throw std::invalid_argument("unknown behavior '" + std::string(n) + "' for task " + name);
}

GridSpec TaskSpec::spatial_grid() const {
    if (spatial_cells.size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("TaskSpec: spatial cell counts do not match dimension");
    std::vector<Axis> axes;
    for (int d = 0; d < dim; ++d) axes.push_back(Axis{bounds.lo[d], bounds.hi[d], spatial_cells[static_cast<std::size_t>(d)]});
    return GridSpec(std::move(axes));
}

GridSpec TaskSpec::policy_grid() const { return spatial_grid().with_phase(phase_cells); }

void TaskSpec::validate() const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("TaskSpec: dimension must be 2 or 3");
    if (bounds.lo.size() != dim || bounds.hi.size() != dim || start.size() != dim || goal.size() != dim)
        throw std::invalid_argument("TaskSpec: inconsistent dimensions");
    if (!bounds.contains(start) || !bounds.contains(goal))
        throw std::invalid_argument("TaskSpec: start and goal must lie inside the bounds");
    for (const auto& ob : obstacles) {
        if (ob.lo.size() != dim || ob.hi.size() != dim) throw std::invalid_argument("TaskSpec: obstacle dimension");
        if (ob.contains(start) || ob.contains(goal))
            throw std::invalid_argument("TaskSpec: start and goal must be outside every obstacle");
    }
    if (behaviors.size() < 2) throw std::invalid_argument("TaskSpec: ambiguity must be at least 2");
    for (const auto& b : behaviors) {
        if (b.waypoints.size() < 2) throw std::invalid_argument("TaskSpec: behavior '" + b.name + "' too short");
        for (const auto& w : b.waypoints)
            if (w.size() != dim || !bounds.contains(w))
                throw std::invalid_argument("TaskSpec: behavior '" + b.name + "' leaves the bounds");
        const Outcome o = evaluate_path(b.waypoints, *this);
        if (o.kind == OutcomeKind::Collision)
            throw std::invalid_argument("TaskSpec: behavior '" + b.name + "' collides with an obstacle");
    }
    (void)spatial_grid();
}

TaskSpec make_simple_task() {
    namespace s = g::simple;
    TaskSpec t;
    t.name = "simple";
    t.dim = 2;
    t.bounds = unit_box(2);
    t.start = pt(s::kStart);
    t.goal = pt(s::kGoal);
    t.obstacles.push_back(Box{pt(s::kObstacleLo), pt(s::kObstacleHi)});
    for (auto [name, y] : {std::pair{"over", s::kOverY}, std::pair{"under", s::kUnderY}})
        t.behaviors.push_back(Behavior{name, {t.start, pt({s::kDetourX0, y}), pt({s::kDetourX1, y}), t.goal}});
    t.phase_cells = s::kPhaseCells;
    t.spatial_cells = {s::kSpatialCells, s::kSpatialCells};
    finish(t);
    return t;
}

TaskSpec make_slalom_task(const SlalomOptions& options) {
    namespace s = g::slalom;
    if (options.row2_gaps != 4 && options.row2_gaps != 5)
        throw std::invalid_argument("make_slalom_task: row 2 must have 4 or 5 gaps");
    TaskSpec t;
    t.name = options.row2_gaps == 4 ? "slalom" : "slalom25";
    t.dim = 2;
    t.bounds = unit_box(2);
    t.start = pt(s::kStart);
    t.goal = pt(s::kGoal);

    // A row of `gaps` equal gaps across the unit width with equal obstacles
    // between them; the outer gaps border the workspace walls.
    const auto build_row = [&](int gaps, double y_lo, double y_hi) {
        const double obstacle_w = (1.0 - gaps * s::kGapWidth) / (gaps - 1);
        std::vector<double> centers;
        double x = 0.0;
        for (int i = 0; i < gaps; ++i) {
            centers.push_back(x + 0.5 * s::kGapWidth);
            x += s::kGapWidth;
            if (i + 1 < gaps) {
                t.obstacles.push_back(Box{pt({x, y_lo}), pt({x + obstacle_w, y_hi})});
                x += obstacle_w;
            }
        }
        return centers;
    };
    const auto row1 = build_row(5, s::kRow1Lo, s::kRow1Hi);
    const auto row2 = build_row(options.row2_gaps, s::kRow2Lo, s::kRow2Hi);
    const auto& wy = s::kWaypointY;
    for (std::size_t i = 0; i < row1.size(); ++i) {
        for (std::size_t j = 0; j < row2.size(); ++j) {
            std::string name{static_cast<char>('A' + i), static_cast<char>('A' + j)};
            t.behaviors.push_back(Behavior{name,
                                           {t.start, pt({row1[i], wy[0]}), pt({row1[i], wy[1]}), pt({row2[j], wy[2]}),
                                            pt({row2[j], wy[3]}), t.goal}});
        }
    }
    t.phase_cells = s::kPhaseCells;
    t.spatial_cells = {s::kSpatialCells, s::kSpatialCells};
    finish(t);
    return t;
}

TaskSpec make_pickplace3d_task(double gripper_margin) {
    namespace s = g::pickplace3d;
    const double margin = gripper_margin < 0.0 ? s::kGripperMargin : gripper_margin;
    TaskSpec t;
    t.name = "pickplace3d";
    t.dim = 3;
    t.bounds = unit_box(3);
    t.start = pt(s::kStart);
    t.goal = pt(s::kGoal);
    Box ob = Box{pt(s::kObstacleLo), pt(s::kObstacleHi)}.inflated(margin);
    ob.lo[2] = std::max(ob.lo[2], 0.0);
    t.obstacles.push_back(ob);
    const double z = s::kStart[2];
    t.behaviors.push_back(Behavior{"left", {t.start, pt({s::kDetourX0, s::kLeftY, z}), pt({s::kDetourX1, s::kLeftY, z}), t.goal}});
    t.behaviors.push_back(
        Behavior{"right", {t.start, pt({s::kDetourX0, s::kRightY, z}), pt({s::kDetourX1, s::kRightY, z}), t.goal}});
    t.behaviors.push_back(Behavior{"over", {t.start, pt({s::kDetourX0, 0.5, s::kOverZ}), pt({s::kDetourX1, 0.5, s::kOverZ}), t.goal}});
    t.phase_cells = s::kPhaseCells;
    t.spatial_cells = {s::kSpatialCells, s::kSpatialCells, s::kSpatialCells};
    finish(t);
    return t;
}

TaskSpec make_task(std::string_view name) {
    if (name == "simple") return make_simple_task();
    if (name == "slalom") return make_slalom_task();
    if (name == "slalom25") return make_slalom_task(SlalomOptions{5});
    if (name == "pickplace3d") return make_pickplace3d_task();
    throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

std::vector<Point> template_path(const Behavior& behavior, std::size_t samples) {
    if (samples < 2) throw std::invalid_argument("template_path: need at least 2 samples");
    const auto& w = behavior.waypoints;
    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < w.size(); ++i) cum.push_back(cum.back() + (w[i] - w[i - 1]).norm());
    const double total = cum.back();
    std::vector<Point> out;
    out.reserve(samples);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double s = total * static_cast<double>(i) / static_cast<double>(samples - 1);
        while (seg + 2 < w.size() && cum[seg + 1] < s) ++seg;
        const double len = cum[seg + 1] - cum[seg];
        const double a = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
        out.push_back(w[seg] + a * (w[seg + 1] - w[seg]));
    }
    out.back() = w.back();
    return smooth(out, g::kTemplateSmoothingHalfWidth);
}

double default_demo_noise(const TaskSpec& task) {
    return g::kDemoNoiseFraction * (task.bounds.hi - task.bounds.lo).maxCoeff();
}

DemoSet synth_demos(const TaskSpec& task, std::string_view behavior, std::size_t n, double noise, std::uint64_t seed,
                    const SynthOptions& options) {
    if (!(noise >= 0.0)) throw std::invalid_argument("synth_demos: noise must be non-negative");
    const auto base = template_path(task.behavior(behavior), options.samples);
    const std::size_t len = base.size();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    DemoSet out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        bool accepted = false;
        for (int attempt = 0; attempt < options.max_attempts && !accepted; ++attempt) {
            std::vector<Point> path = base;
            if (noise > 0.0) {
                std::vector<Point> raw(len, Point::Zero(task.dim));
                for (auto& e : raw)
                    for (int d = 0; d < task.dim; ++d) e[d] = noise * normal(rng);
                // Zero the endpoints so smoothing keeps them pinned.
                raw.front().setZero();
                raw.back().setZero();
                const auto corr = smooth(raw, g::kNoiseSmoothingHalfWidth);
                for (std::size_t i = 0; i < len; ++i) {
                    const double phase = static_cast<double>(i) / static_cast<double>(len - 1);
                    path[i] += std::sin(std::numbers::pi * phase) * corr[i];
                    path[i] = path[i].cwiseMax(task.bounds.lo).cwiseMin(task.bounds.hi);
                }
            }
            if (!evaluate_path(path, task).success()) continue;
            Demonstration demo;
            demo.label = Label::positive;
            for (std::size_t i = 0; i < len; ++i)
                demo.samples.push_back(Sample{static_cast<double>(i) / static_cast<double>(len - 1), path[i]});
            out.push_back(std::move(demo));
            accepted = true;
        }
        if (!accepted) throw NoiseTooLarge("synth_demos: no collision-free demonstration within the rejection budget");
    }
    return out;
}

Outcome evaluate_path(const std::vector<Point>& path, const TaskSpec& task) {
    if (path.empty()) throw std::invalid_argument("evaluate: empty path");
    Outcome o;
    const std::size_t segments = path.size() == 1 ? 1 : path.size() - 1;
    for (std::size_t s = 0; s < segments && !o.collision_segment; ++s) {
        const auto& p = path[s];
        const auto& q = path.size() == 1 ? path[0] : path[s + 1];
        for (const auto& ob : task.obstacles) {
            if (segment_intersects_box(p, q, ob)) {
                o.collision_segment = s;
                break;
            }
        }
    }
    o.final_distance = (path.back() - task.goal).norm();
    if (o.collision_segment) {
        o.kind = OutcomeKind::Collision;
    } else if (o.final_distance > task.goal_tolerance) {
        o.kind = OutcomeKind::GoalMiss;
    } else {
        o.kind = OutcomeKind::Success;
    }
    return o;
}

Outcome evaluate(const Trajectory& traj, const TaskSpec& task) { return evaluate_path(traj.positions(), task); }

// --- JSON -----------------------------------------------------------------

namespace {

nlohmann::json vec_json(const Point& p) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
    return a;
}

Point json_vec(const nlohmann::json& a) {
    Point p(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) p[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return p;
}

}  // namespace

std::string task_to_json(const TaskSpec& task) {
    nlohmann::json j;
    j["geometry_version"] = g::kGeometryVersion;
    j["name"] = task.name;
    j["dim"] = task.dim;
    j["bounds"] = {{"lo", vec_json(task.bounds.lo)}, {"hi", vec_json(task.bounds.hi)}};
    j["start"] = vec_json(task.start);
    j["goal"] = vec_json(task.goal);
    j["goal_tolerance"] = task.goal_tolerance;
    j["obstacles"] = nlohmann::json::array();
    for (const auto& ob : task.obstacles) j["obstacles"].push_back({{"lo", vec_json(ob.lo)}, {"hi", vec_json(ob.hi)}});
    j["behaviors"] = nlohmann::json::array();
    for (const auto& b : task.behaviors) {
        nlohmann::json wps = nlohmann::json::array();
        for (const auto& w : b.waypoints) wps.push_back(vec_json(w));
        j["behaviors"].push_back({{"name", b.name}, {"waypoints", wps}});
    }
    j["phase_cells"] = task.phase_cells;
    j["spatial_cells"] = task.spatial_cells;
    return j.dump(2);
}

TaskSpec task_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        TaskSpec t;
        t.name = j.at("name").get<std::string>();
        t.dim = j.at("dim").get<int>();
        t.bounds = Box{json_vec(j.at("bounds").at("lo")), json_vec(j.at("bounds").at("hi"))};
        t.start = json_vec(j.at("start"));
        t.goal = json_vec(j.at("goal"));
        t.goal_tolerance = j.at("goal_tolerance").get<double>();
        for (const auto& ob : j.at("obstacles")) t.obstacles.push_back(Box{json_vec(ob.at("lo")), json_vec(ob.at("hi"))});
        for (const auto& b : j.at("behaviors")) {
            Behavior beh{b.at("name").get<std::string>(), {}};
            for (const auto& w : b.at("waypoints")) beh.waypoints.push_back(json_vec(w));
            t.behaviors.push_back(std::move(beh));
        }
        t.phase_cells = j.at("phase_cells").get<std::size_t>();
        t.spatial_cells = j.at("spatial_cells").get<std::vector<std::size_t>>();
        t.validate();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("task spec: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("task spec: ") + e.what());
    }
}

}  // namespace negfeed
