#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "negfeed/grid.hpp"
#include "negfeed/mask.hpp"

namespace negfeed::test {

inline GridSpec lattice(std::vector<std::size_t> cells, double lo = 0.0, double hi = 1.0) {
    std::vector<Axis> axes;
    for (auto n : cells) axes.push_back(Axis{lo, hi, n});
    return GridSpec(std::move(axes));
}

/// Random normalized distribution; roughly `zeros` of the cells are exactly 0.
inline GridDistribution random_distribution(const GridSpec& spec, std::mt19937_64& rng, double zeros = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(spec.size());
    for (auto& x : v) x = u(rng) < zeros ? 0.0 : std::exp(4.0 * u(rng));
    v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)] += 1.0;
    return GridDistribution::normalize(spec, std::move(v));
}

inline Mask random_mask(const GridSpec& spec, std::mt19937_64& rng, double closed = 0.3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::uint32_t> counts(spec.size());
    for (auto& c : counts) c = u(rng) < closed ? 2u : 0u;
    return Mask(spec, std::move(counts), 2, 0.5);
}

inline void check_distribution(const GridDistribution& d, double tol = 1e-9) {
    double total = 0.0;
    for (double v : d.values()) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::runtime_error("negative or non-finite cell");
        total += v;
    }
    if (std::abs(total - 1.0) > tol) throw std::runtime_error("mass differs from 1");
}

}  // namespace negfeed::test
