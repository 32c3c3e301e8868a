#include <algorithm>
#include <random>

#include "doctest.h"
#include "negfeed/errors.hpp"
#include "negfeed/mask.hpp"
#include "support.hpp"

using namespace negfeed;

namespace {

Demonstration polyline(std::initializer_list<std::pair<double, double>> pts) {
    Demonstration d;
    const auto n = pts.size();
    std::size_t i = 0;
    for (auto [x, y] : pts) {
        d.samples.push_back(Sample{static_cast<double>(i) / static_cast<double>(n - 1), Eigen::Vector2d(x, y)});
        ++i;
    }
    return d;
}

Trajectory numbered(std::size_t n) {
    Trajectory t;
    for (std::size_t i = 0; i < n; ++i)
        t.points.push_back(Sample{(static_cast<double>(i) + 0.5) / static_cast<double>(n), Eigen::Vector2d(i, 0)});
    return t;
}

}  // namespace

TEST_CASE("3x3 counts match hand enumeration") {
    GridSpec g = test::lattice({3, 3}, 0.0, 3.0);
    const DemoSet demos{
        polyline({{0.5, 0.5}, {2.5, 0.5}}),               // cells 0, 3, 6
        polyline({{0.5, 0.5}, {0.5, 2.5}}),               // cells 0, 1, 2
        polyline({{0.5, 0.5}, {2.5, 2.5}}),               // cells 0, 4, 8 (corners grazed)
        polyline({{0.5, 0.5}, {2.5, 0.5}, {2.5, 2.5}}),  // cells 0, 3, 6, 7, 8
    };
    const Mask half = build_mask(demos, g, 0.5);
    CHECK(half.counts() == std::vector<std::uint32_t>{4, 1, 1, 2, 1, 0, 2, 1, 2});
    CHECK(half.trajectories() == 4u);
    CHECK(half.bits() == std::vector<std::uint8_t>{0, 1, 1, 1, 1, 1, 1, 1, 1});
    const Mask quarter = build_mask(demos, g, 0.25);
    CHECK(quarter.bits() == std::vector<std::uint8_t>{0, 1, 1, 0, 1, 1, 0, 1, 0});
    CHECK(quarter.to_text() == "011\n011\n010\n");
}

TEST_CASE("a single demonstration closes its own path") {
    GridSpec g = test::lattice({4, 4});
    const Mask m = build_mask({polyline({{0.1, 0.1}, {0.9, 0.1}})}, g, 0.5);
    for (std::size_t c = 0; c < g.size(); ++c) CHECK(m.bit(c) == (c % 4 != 0));
}

TEST_CASE("funnel layout over 30 blocks") {
    // Start and goal funnels shared by both path classes; the classes split
    // above and below an obstacle in the middle columns.
    GridSpec g({Axis{0.0, 6.0, 6}, Axis{0.0, 5.0, 5}});
    CHECK(g.size() == 30u);
    DemoSet demos;
    for (double dy : {-0.1, 0.1}) {
        demos.push_back(polyline({{0.5, 2.5 + dy}, {1.5, 2.5 + dy}, {2.5, 4.5 + dy}, {3.5, 4.5 + dy}, {4.5, 2.5 + dy},
                                  {5.5, 2.5 + dy}}));
        demos.push_back(polyline({{0.5, 2.5 + dy}, {1.5, 2.5 + dy}, {2.5, 0.5 + dy}, {3.5, 0.5 + dy}, {4.5, 2.5 + dy},
                                  {5.5, 2.5 + dy}}));
    }
    const Mask m = build_mask(demos, g, 0.5);
    auto cell = [&](std::size_t x, std::size_t y) { return x * 5 + y; };
    for (std::size_t x : {0u, 1u, 4u, 5u}) CHECK_FALSE(m.bit(cell(x, 2)));
    for (std::size_t x : {2u, 3u}) {
        CHECK(m.bit(cell(x, 4)));
        CHECK(m.bit(cell(x, 0)));
        CHECK(m.counts()[cell(x, 4)] == 2u);
    }
    CHECK(m.open_at(Eigen::Vector2d(2.5, 4.5)));
    CHECK_FALSE(m.open_at(Eigen::Vector2d(0.5, 2.5)));
    CHECK(m.open_at(Eigen::Vector2d(-3.0, 2.5)));
}

TEST_CASE("threshold monotonicity, order independence and shared cells") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridSpec g = test::lattice({6, 5});
    for (int trial = 0; trial < 100; ++trial) {
        DemoSet demos;
        const int n = 1 + trial % 6;
        for (int k = 0; k < n; ++k) {
            Demonstration d;
            d.samples.push_back(Sample{0.0, Eigen::Vector2d(0.05, 0.05)});
            for (int i = 1; i < 5; ++i) d.samples.push_back(Sample{i / 5.0, Eigen::Vector2d(u(rng), u(rng))});
            d.samples.push_back(Sample{1.0, Eigen::Vector2d(0.95, 0.95)});
            demos.push_back(d);
        }
        std::vector<Mask> masks;
        for (double t : {0.1, 0.25, 0.5, 0.75, 0.99, 1.0}) masks.push_back(build_mask(demos, g, t));
        for (std::size_t i = 1; i < masks.size(); ++i)
            for (std::size_t c = 0; c < g.size(); ++c) CHECK(masks[i].bits()[c] >= masks[i - 1].bits()[c]);
        // Start and goal cells are crossed by every demonstration.
        for (std::size_t i = 0; i + 1 < masks.size(); ++i) {
            CHECK_FALSE(masks[i].bit(0));
            CHECK_FALSE(masks[i].bit(g.size() - 1));
        }
        CHECK(masks.back().ones() == g.size());
        DemoSet shuffled = demos;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(build_mask(shuffled, g, 0.5).counts() == masks[2].counts());
    }
}

TEST_CASE("negative demonstrations are ignored and arguments are checked") {
    GridSpec g = test::lattice({3, 3});
    Demonstration neg = polyline({{0.1, 0.1}, {0.9, 0.9}});
    neg.label = Label::negative;
    CHECK_THROWS_AS(build_mask({neg}, g, 0.5), std::invalid_argument);
    const DemoSet demos{polyline({{0.1, 0.1}, {0.9, 0.1}}), neg};
    CHECK(build_mask(demos, g, 0.5).trajectories() == 1u);
    CHECK_THROWS_AS(build_mask(demos, g, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_mask(demos, g, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(Mask(g, std::vector<std::uint32_t>(9, 3), 2, 0.5), std::invalid_argument);
}

TEST_CASE("mask serialization keeps bits and header") {
    std::mt19937_64 rng(2);
    GridSpec g = test::lattice({5, 4, 3});
    const Mask m = test::random_mask(g, rng, 0.4);
    const auto bytes = m.serialize();
    CHECK(bytes.size() == m.serialized_size());
    const Mask back = Mask::deserialize(bytes);
    CHECK(back.spec() == g);
    CHECK(back.bits() == m.bits());
    CHECK(back.threshold() == m.threshold());
    CHECK(back.trajectories() == m.trajectories());
    auto bad = bytes;
    bad.push_back(0);
    CHECK_THROWS_AS(Mask::deserialize(bad), FormatError);
    bad.resize(10);
    CHECK_THROWS_AS(Mask::deserialize(bad), FormatError);
}

TEST_CASE("text export of a 3D mask prints one block per slab") {
    GridSpec g = test::lattice({2, 2, 3});
    std::vector<std::uint32_t> counts(12, 0);
    counts[0] = 1;
    counts[11] = 1;
    const Mask m(g, counts, 1, 0.5);
    CHECK(m.to_text() == "011\n111\n\n111\n110\n");
    CHECK(Mask::all_ones(g).ones() == 12u);
}

TEST_CASE("central selector") {
    const Trajectory t = numbered(60);
    const Trajectory mid = central_trajectory_selector(t, 1.0 / 6.0);
    REQUIRE(mid.size() == 40u);
    CHECK(mid.points.front().position[0] == 10.0);
    CHECK(mid.points.back().position[0] == 49.0);
    CHECK(central_trajectory_selector(t, 0.0).size() == 60u);
    const Trajectory seven = central_trajectory_selector(numbered(7), 1.0 / 6.0);
    REQUIRE(seven.size() == 3u);
    CHECK(seven.points.front().position[0] == 2.0);
    CHECK_THROWS_AS(central_trajectory_selector(numbered(2), 0.3), EmptySelection);
    CHECK_THROWS_AS(central_trajectory_selector(t, 0.5), std::invalid_argument);
}
