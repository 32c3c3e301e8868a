#include <set>

#include "doctest.h"
#include "negfeed/env.hpp"
#include "negfeed/errors.hpp"

using namespace negfeed;

namespace {

std::vector<Point> straight(const Point& a, const Point& b, int n) {
    std::vector<Point> out;
    for (int i = 0; i <= n; ++i) out.push_back(a + (static_cast<double>(i) / n) * (b - a));
    return out;
}

}  // namespace

TEST_CASE("built-in tasks have the expected ambiguity") {
    CHECK(make_task("simple").ambiguity() == 2u);
    CHECK(make_task("slalom").ambiguity() == 20u);
    CHECK(make_task("slalom25").ambiguity() == 25u);
    CHECK(make_task("pickplace3d").ambiguity() == 3u);
    CHECK(make_task("pickplace3d").dim == 3);
    CHECK_THROWS_AS(make_task("maze"), std::invalid_argument);
    std::set<std::string> names;
    for (const auto& b : make_task("slalom").behaviors) names.insert(b.name);
    CHECK(names.size() == 20u);
    CHECK(names.count("AA") == 1);
    CHECK(names.count("ED") == 1);
    CHECK(names.count("AE") == 0);
    CHECK(make_task("slalom25").behaviors.back().name == "EE");
}

TEST_CASE("tasks validate and every behavior template succeeds") {
    for (const char* name : {"simple", "slalom", "slalom25", "pickplace3d"}) {
        const TaskSpec t = make_task(name);
        CHECK_NOTHROW(t.validate());
        CHECK(t.policy_grid().dims() == static_cast<std::size_t>(t.dim) + 1);
        CHECK(t.goal_tolerance > 0.0);
        for (const auto& b : t.behaviors) {
            const auto path = template_path(b, 100);
            CHECK(path.size() == 100u);
            CHECK((path.front() - t.start).norm() < 1e-12);
            CHECK((path.back() - t.goal).norm() < 1e-12);
            CHECK(evaluate_path(path, t).success());
        }
        // The direct route is blocked, except through the aligned middle gaps
        // of the five-gap slalom.
        const bool open = std::string(name) == "slalom25";
        CHECK((evaluate_path(straight(t.start, t.goal, 50), t).kind == OutcomeKind::Collision) != open);
    }
}

TEST_CASE("evaluate classifies collisions, misses and successes") {
    const TaskSpec t = make_simple_task();
    const auto blocked = evaluate_path(straight(t.start, t.goal, 10), t);
    CHECK(blocked.kind == OutcomeKind::Collision);
    REQUIRE(blocked.collision_segment.has_value());
    // Obstacle starts at x = 0.4; segment 3 runs from x = 0.34 to 0.42.
    CHECK(*blocked.collision_segment == 3u);
    auto miss = straight(t.start, Eigen::Vector2d(0.3, 0.95), 10);
    const auto missed = evaluate_path(miss, t);
    CHECK(missed.kind == OutcomeKind::GoalMiss);
    CHECK(missed.final_distance == doctest::Approx((Eigen::Vector2d(0.3, 0.95) - t.goal).norm()));
    const auto ok = evaluate_path(template_path(t.behavior("over"), 60), t);
    CHECK(ok.success());
    CHECK(ok.final_distance < 1e-12);
    Trajectory traj;
    for (const auto& p : template_path(t.behavior("under"), 30)) traj.points.push_back(Sample{0.0, p});
    CHECK(evaluate(traj, t).success());
    CHECK_THROWS_AS(evaluate_path({}, t), std::invalid_argument);
}

TEST_CASE("synthesized demonstrations") {
    const TaskSpec t = make_simple_task();
    const auto exact = synth_demos(t, "over", 3, 0.0, 1);
    REQUIRE(exact.size() == 3u);
    const auto base = template_path(t.behavior("over"), 100);
    for (const auto& d : exact) {
        REQUIRE(d.samples.size() == 100u);
        for (std::size_t i = 0; i < 100; ++i) CHECK(d.samples[i].position == base[i]);
    }
    const double noise = default_demo_noise(t);
    CHECK(noise == doctest::Approx(0.02));
    const auto a = synth_demos(t, "under", 5, noise, 7);
    const auto b = synth_demos(t, "under", 5, noise, 7);
    const auto c = synth_demos(t, "under", 5, noise, 8);
    bool differs = false;
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK_NOTHROW(a[k].validate(&t.bounds));
        CHECK(a[k].label == Label::positive);
        CHECK(evaluate_path(a[k].positions(), t).success());
        CHECK((a[k].samples.front().position - t.start).norm() < 1e-12);
        CHECK((a[k].samples.back().position - t.goal).norm() < 1e-12);
        for (std::size_t i = 0; i < 100; ++i) CHECK(a[k].samples[i].position == b[k].samples[i].position);
        differs = differs || a[k].samples[50].position != c[k].samples[50].position;
    }
    CHECK(differs);
    CHECK_THROWS_AS(synth_demos(t, "under", 2, 0.5, 1, SynthOptions{100, 5}), NoiseTooLarge);
    CHECK_THROWS_AS(synth_demos(t, "sideways", 1, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(synth_demos(t, "over", 1, -1.0, 1), std::invalid_argument);
}

TEST_CASE("3D demonstrations stay clear of the inflated obstacle") {
    const TaskSpec t = make_pickplace3d_task();
    for (const auto& b : t.behaviors) {
        const auto demos = synth_demos(t, b.name, 3, default_demo_noise(t), 3);
        for (const auto& d : demos) CHECK(evaluate_path(d.positions(), t).success());
    }
    const TaskSpec wide = make_pickplace3d_task(0.1);
    CHECK(wide.obstacles.front().lo[0] < t.obstacles.front().lo[0]);
}

TEST_CASE("task JSON round trip") {
    for (const char* name : {"simple", "slalom", "pickplace3d"}) {
        const TaskSpec t = make_task(name);
        const TaskSpec back = task_from_json(task_to_json(t));
        CHECK(back.name == t.name);
        CHECK(back.dim == t.dim);
        CHECK(back.goal_tolerance == t.goal_tolerance);
        CHECK(back.behaviors.size() == t.behaviors.size());
        CHECK(back.obstacles.size() == t.obstacles.size());
        CHECK(back.policy_grid() == t.policy_grid());
        CHECK(back.behaviors.back().waypoints.back() == t.behaviors.back().waypoints.back());
    }
    CHECK_THROWS_AS(task_from_json("{}"), FormatError);
    CHECK_THROWS_AS(task_from_json("not json"), FormatError);
}

TEST_CASE("inconsistent geometry is rejected") {
    TaskSpec t = make_simple_task();
    t.start = Eigen::Vector2d(0.5, 0.5);  // inside the obstacle
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    TaskSpec u = make_simple_task();
    u.spatial_cells = {20};
    CHECK_THROWS_AS(u.spatial_grid(), std::invalid_argument);
}
