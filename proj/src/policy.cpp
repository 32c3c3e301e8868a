#include "negfeed/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "negfeed/errors.hpp"

namespace negfeed {

GridDistribution uniform(const GridSpec& spec) {
    const double u = 1.0 / static_cast<double>(spec.size());
    return GridDistribution(spec, std::vector<double>(spec.size(), u), true);
}

GridDistribution combine_positive(std::span<const GridDistribution> policies) {
    if (policies.empty()) throw std::invalid_argument("combine_positive: no policies");
    const GridSpec& spec = policies.front().spec();
    std::vector<double> sum(spec.size(), 0.0);
    for (const auto& p : policies) {
        if (!(p.spec() == spec)) throw SpecMismatch("combine_positive: policies use different lattices");
        for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += p[c];
    }
    return GridDistribution::normalize(spec, std::move(sum));
}

void AvoidanceSet::add(GridDistribution avoid) {
    if (!distributions_.empty() && !(distributions_.front().spec() == avoid.spec()))
        throw SpecMismatch("AvoidanceSet: distributions must share one lattice");
    distributions_.push_back(std::move(avoid));
}

std::vector<double> complement_factor(const GridDistribution& avoid, std::span<const std::uint8_t> mask_bits) {
    const std::size_t n = avoid.size();
    if (mask_bits.size() != n) throw SpecMismatch("complement_factor: mask size mismatch");
    const double u = 1.0 / static_cast<double>(n);
    const double floor = kComplementFloor * u;
    const double peak = *std::max_element(avoid.values().begin(), avoid.values().end());
    const double scale = peak > 0.0 ? u / peak : 0.0;
    std::vector<double> f(n);
    for (std::size_t c = 0; c < n; ++c) f[c] = mask_bits[c] ? std::max(u - scale * avoid[c], floor) : u;
    return f;
}

namespace {

void require_same(const GridDistribution& a, const GridDistribution& b, const char* what) {
    if (!(a.spec() == b.spec())) throw SpecMismatch(std::string(what) + ": policy and avoidance lattices differ");
}

}  // namespace

GridDistribution poe_apply_negative(const GridDistribution& policy, const GridDistribution& avoid, const Mask& mask) {
    require_same(policy, avoid, "poe_apply_negative");
    const auto bits = mask.expand_to(policy.spec());
    const auto f = complement_factor(avoid, bits);
    std::vector<double> out(policy.size());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = f[c] * policy[c];
    return GridDistribution::normalize(policy.spec(), std::move(out));
}

GridDistribution poe_apply_sequence(const GridDistribution& policy, const AvoidanceSet& avoids, const Mask& mask) {
    GridDistribution current = policy;
    for (const auto& avoid : avoids.distributions()) current = poe_apply_negative(current, avoid, mask);
    return current;
}

GridDistribution moe_apply_negative(const GridDistribution& policy, const GridDistribution& avoid, const Mask& mask,
                                    double mix) {
    require_same(policy, avoid, "moe_apply_negative");
    if (!(mix > 0.0 && mix < 1.0)) throw std::invalid_argument("moe_apply_negative: mix must be in (0, 1)");
    const auto bits = mask.expand_to(policy.spec());
    auto f = complement_factor(avoid, bits);
    double total = 0.0;
    for (double v : f) total += v;
    std::vector<double> out(policy.size());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = (1.0 - mix) * policy[c] + mix * (f[c] / total);
    return GridDistribution::normalize(policy.spec(), std::move(out));
}

GridDistribution neg_weight_refit(const DemoSet& all_demos, const GridSpec& grid, const EmOptions& em,
                                  double neg_weight, const Eigen::VectorXd& widen) {
    if (neg_weight > 0.0) throw std::invalid_argument("neg_weight_refit: weight must not be positive");
    DemoSet weighted;
    weighted.reserve(all_demos.size());
    bool any_positive = false;
    for (const auto& demo : all_demos) {
        Demonstration d = demo;
        if (d.label == Label::negative) {
            d.weight = neg_weight;
        } else {
            any_positive = true;
        }
        weighted.push_back(std::move(d));
    }
    if (!any_positive) throw std::invalid_argument("neg_weight_refit: at least one positive demonstration required");
    const FitResult fit = fit_em(weighted, em);
    return rasterize(widened(fit.mixture, widen), grid);
}

// --- Path sampling --------------------------------------------------------

namespace {

// Calls fn(cell) for every spatial cell within `radius` (per axis) of
// `center`, in increasing flat-index order.
template <typename Fn>
void for_each_neighbor(const GridSpec& spatial, std::span<const std::size_t> center, int radius, Fn&& fn) {
    const std::size_t dims = spatial.dims();
    std::size_t lo[8], hi[8], idx[8];
    for (std::size_t d = 0; d < dims; ++d) {
        const auto r = static_cast<std::size_t>(radius);
        lo[d] = center[d] > r ? center[d] - r : 0;
        hi[d] = std::min(center[d] + r, spatial.axis(d).cells - 1);
        idx[d] = lo[d];
    }
    while (true) {
        fn(spatial.flat_index(std::span<const std::size_t>(idx, dims)));
        std::size_t d = dims;
        while (true) {
            if (d == 0) return;
            --d;
            if (++idx[d] <= hi[d]) break;
            idx[d] = lo[d];
        }
    }
}

Trajectory emit(const GridDistribution& policy, const std::vector<std::size_t>& path) {
    const GridSpec& spec = policy.spec();
    const GridSpec spatial = spec.spatial();
    Trajectory t;
    t.source = TrajectorySource::rollout;
    for (std::size_t p = 0; p < path.size(); ++p) t.points.push_back(Sample{spec.axis(0).center(p), spatial.center(path[p])});
    return t;
}

std::size_t draw(std::span<const double> weights, double total, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last_positive = i;
        target -= weights[i];
        if (target < 0.0) return i;
    }
    return last_positive;
}

}  // namespace

Trajectory sample_trajectory(const GridDistribution& policy, const SampleOptions& options) {
    const GridSpec& spec = policy.spec();
    if (spec.dims() < 2) throw std::invalid_argument("sample_trajectory: policy needs phase and spatial axes");
    if (spec.dims() > 9) throw std::invalid_argument("sample_trajectory: too many spatial axes");
    if (options.continuity < 1) throw std::invalid_argument("sample_trajectory: continuity must be >= 1");
    const GridSpec spatial = spec.spatial();
    const std::size_t phases = spec.axis(0).cells;
    const std::size_t slice = spatial.size();
    std::vector<std::size_t> coords(spatial.dims());

    if (options.mode == SampleMode::argmax) {
        constexpr double kNegInf = -std::numeric_limits<double>::infinity();
        std::vector<double> prev(slice), cur(slice);
        std::vector<std::uint32_t> back(phases * slice, 0);
        for (std::size_t s = 0; s < slice; ++s) prev[s] = policy[s] > 0.0 ? std::log(policy[s]) : kNegInf;
        for (std::size_t p = 1; p < phases; ++p) {
            for (std::size_t s = 0; s < slice; ++s) {
                const double v = policy[p * slice + s];
                spatial.unravel(s, coords);
                double best = kNegInf;
                std::size_t arg = 0;
                bool found = false;
                for_each_neighbor(spatial, coords, options.continuity, [&](std::size_t q) {
                    if (!found || prev[q] > best) {
                        best = prev[q];
                        arg = q;
                        found = true;
                    }
                });
                back[p * slice + s] = static_cast<std::uint32_t>(arg);
                cur[s] = v > 0.0 ? best + std::log(v) : kNegInf;
            }
            std::swap(prev, cur);
        }
        std::size_t end = 0;
        for (std::size_t s = 1; s < slice; ++s)
            if (prev[s] > prev[end]) end = s;
        if (prev[end] == kNegInf) throw DeadEnd("argmax: no path with positive probability");
        std::vector<std::size_t> path(phases);
        path[phases - 1] = end;
        for (std::size_t p = phases - 1; p > 0; --p) path[p - 1] = back[p * slice + path[p]];
        return emit(policy, path);
    }

    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> path(phases);
    std::vector<double> w;
    std::vector<std::size_t> cand;
    for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
        const auto first = policy.slice(0);
        double total = 0.0;
        for (double v : first) total += v;
        if (!(total > 0.0)) throw DeadEnd("stochastic: first phase slice has no mass");
        path[0] = draw(first, total, rng);
        bool ok = true;
        for (std::size_t p = 1; p < phases && ok; ++p) {
            spatial.unravel(path[p - 1], coords);
            w.clear();
            cand.clear();
            total = 0.0;
            for_each_neighbor(spatial, coords, options.continuity, [&](std::size_t q) {
                const double v = policy[p * slice + q];
                cand.push_back(q);
                w.push_back(v);
                total += v;
            });
            if (!(total > 0.0)) {
                ok = false;
                break;
            }
            path[p] = cand[draw(w, total, rng)];
        }
        if (ok) return emit(policy, path);
    }
    throw DeadEnd("stochastic: restart budget exhausted");
}

}  // namespace negfeed
