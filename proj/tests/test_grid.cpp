#include <cmath>
#include <random>

#include "doctest.h"
#include "negfeed/errors.hpp"
#include "negfeed/grid.hpp"
#include "support.hpp"

using namespace negfeed;

TEST_CASE("axis locate uses half-open cells with a closed upper end") {
    Axis a{0.0, 1.0, 4};
    CHECK(a.locate(0.0) == 0u);
    CHECK(a.locate(0.25) == 1u);
    CHECK(a.locate(0.2499) == 0u);
    CHECK(a.locate(1.0) == 3u);
    CHECK_FALSE(a.locate(-1e-12).has_value());
    CHECK_FALSE(a.locate(1.0 + 1e-12).has_value());
    CHECK_FALSE(a.locate(std::nan("")).has_value());
    CHECK(a.center(2) == doctest::Approx(0.625));
}

TEST_CASE("spec rejects degenerate axes") {
    CHECK_THROWS_AS(GridSpec(std::vector<Axis>{}), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec({Axis{0, 1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec({Axis{1, 1, 3}}), std::invalid_argument);
}

TEST_CASE("flat index and unravel are inverse and row-major") {
    GridSpec g = test::lattice({3, 4, 5});
    CHECK(g.size() == 60u);
    CHECK(g.stride(0) == 20u);
    CHECK(g.stride(2) == 1u);
    std::size_t idx[3];
    for (std::size_t f = 0; f < g.size(); ++f) {
        g.unravel(f, idx);
        CHECK(g.flat_index(idx) == f);
        const Eigen::VectorXd c = g.center(f);
        CHECK(g.locate(c) == f);
    }
    std::size_t i[3] = {1, 2, 3};
    CHECK(g.flat_index(i) == 1 * 20 + 2 * 5 + 3);
}

TEST_CASE("spatial and with_phase split and rebuild a policy lattice") {
    GridSpec s = test::lattice({4, 6}, -1.0, 1.0);
    GridSpec p = s.with_phase(10);
    CHECK(p.dims() == 3u);
    CHECK(p.axis(0) == Axis{0.0, 1.0, 10});
    CHECK(p.spatial() == s);
    CHECK(p.cell_volume() == doctest::Approx(0.1 * 0.5 * (2.0 / 6.0)));
}

TEST_CASE("normalize rescales and rejects bad input") {
    GridSpec g = test::lattice({2, 2});
    auto d = GridDistribution::normalize(g, {1, 1, 2, 4});
    CHECK(d.normalized());
    CHECK(d.sum() == doctest::Approx(1.0));
    CHECK(d[3] == doctest::Approx(0.5));
    CHECK(d.argmax() == 3u);
    CHECK_THROWS_AS(GridDistribution::normalize(g, {0, 0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(GridDistribution::normalize(g, {1, -1, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(GridDistribution::normalize(g, {1, INFINITY, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(GridDistribution(g, {1, 2}, false), std::invalid_argument);
}

TEST_CASE("entropy and slices") {
    GridSpec g = test::lattice({3, 4});
    auto u = GridDistribution::normalize(g, std::vector<double>(12, 1.0));
    CHECK(u.entropy() == doctest::Approx(std::log(12.0)));
    CHECK(u.slice_size() == 4u);
    CHECK(u.slice(2).size() == 4u);
    CHECK(u.slice(2).data() == u.values().data() + 8);
    auto spike = GridDistribution::normalize(g, {0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0});
    CHECK(spike.entropy() == doctest::Approx(0.0));
    CHECK(spike.argmax() == 5u);
}

TEST_CASE("binary round trip is exact and sized as declared") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        GridSpec g = test::lattice({static_cast<std::size_t>(2 + i % 4), 3, static_cast<std::size_t>(2 + i % 3)}, -2.0, 3.5);
        auto d = test::random_distribution(g, rng, 0.2);
        auto bytes = d.serialize();
        CHECK(bytes.size() == d.serialized_size());
        auto back = GridDistribution::deserialize(bytes);
        CHECK(back.spec() == g);
        CHECK(back.normalized());
        for (std::size_t c = 0; c < d.size(); ++c) CHECK(back[c] == d[c]);
    }
}

TEST_CASE("binary layout header is little-endian with a tag") {
    GridSpec g = test::lattice({2, 2});
    auto bytes = GridDistribution::normalize(g, {1, 1, 1, 1}).serialize();
    CHECK(bytes[0] == 'N');
    CHECK(bytes[3] == 'D');
    CHECK(bytes[4] == 1);  // version
    CHECK(bytes[8] == 2);  // dims
}

TEST_CASE("corrupt grids are format errors") {
    GridSpec g = test::lattice({2, 3});
    auto bytes = GridDistribution::normalize(g, std::vector<double>(6, 1.0)).serialize();
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(GridDistribution::deserialize(truncated), FormatError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(GridDistribution::deserialize(trailing), FormatError);
    auto tag = bytes;
    tag[0] = 'X';
    CHECK_THROWS_AS(GridDistribution::deserialize(tag), FormatError);
    auto version = bytes;
    version[4] = 9;
    CHECK_THROWS_AS(GridDistribution::deserialize(version), FormatError);
    auto cells = bytes;
    cells[12 + 16] = 1;  // first axis cell count -> 1
    CHECK_THROWS_AS(GridDistribution::deserialize(cells), FormatError);
}
