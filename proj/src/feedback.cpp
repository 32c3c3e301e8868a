#include "negfeed/feedback.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "negfeed/errors.hpp"

namespace negfeed {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::poe: return "poe";
        case Method::moe: return "moe";
        case Method::neg_weight: return "neg_weight";
    }
    return "poe";
}

Method method_from_string(std::string_view s) {
    if (s == "poe") return Method::poe;
    if (s == "moe") return Method::moe;
    if (s == "neg_weight") return Method::neg_weight;
    throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

std::string to_string(const Selector& s) {
    char buf[64];
    switch (s.kind) {
        case Selector::Kind::none: return "none";
        case Selector::Kind::central: std::snprintf(buf, sizeof buf, "central:%.17g", s.fraction); return buf;
        case Selector::Kind::mask: std::snprintf(buf, sizeof buf, "mask:%.17g", s.threshold); return buf;
    }
    return "none";
}

Selector selector_from_string(std::string_view s) {
    const auto number = [&](std::string_view tail) {
        std::size_t used = 0;
        const std::string str(tail);
        double v = 0.0;
        try {
            v = std::stod(str, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != str.size() || str.empty()) throw std::invalid_argument("bad selector '" + std::string(s) + "'");
        return v;
    };
    if (s == "none") return Selector::none();
    if (s == "central") return Selector::central();
    if (s.starts_with("central:")) return Selector::central(number(s.substr(8)));
    if (s.starts_with("mask:")) return Selector::mask(number(s.substr(5)));
    if (s.starts_with("mask")) return Selector::mask(number(s.substr(4)) / 100.0);
    throw std::invalid_argument("unknown selector '" + std::string(s) + "'");
}

void FeedbackConfig::validate() const {
    if (max_cycles < 0) throw std::invalid_argument("FeedbackConfig: max_cycles must be >= 0");
    if (selector.kind == Selector::Kind::mask && !(selector.threshold > 0.0 && selector.threshold <= 1.0))
        throw std::invalid_argument("FeedbackConfig: mask threshold must be in (0, 1]");
    if (selector.kind == Selector::Kind::central && !(selector.fraction >= 0.0 && selector.fraction < 0.5))
        throw std::invalid_argument("FeedbackConfig: central fraction must be in [0, 0.5)");
    if (demos_per_behavior < 1) throw std::invalid_argument("FeedbackConfig: demos_per_behavior must be >= 1");
    if (demos_per_behavior > pool_per_behavior)
        throw std::invalid_argument("FeedbackConfig: demos_per_behavior exceeds the pool size");
    if (positive_components < 1 || avoid_components < 1)
        throw std::invalid_argument("FeedbackConfig: component counts must be >= 1");
    if (neg_weight > 0.0) throw std::invalid_argument("FeedbackConfig: neg_weight must not be positive");
    if (moe_mix && !(*moe_mix > 0.0 && *moe_mix < 1.0))
        throw std::invalid_argument("FeedbackConfig: moe_mix must be in (0, 1)");
    if (continuity < 1) throw std::invalid_argument("FeedbackConfig: continuity must be >= 1");
    if (em_max_iterations < 1 || em_tolerance < 0.0)
        throw std::invalid_argument("FeedbackConfig: bad EM iteration budget");
    if (smoothing_cells < 0.0) throw std::invalid_argument("FeedbackConfig: smoothing_cells must be >= 0");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent seed for a named stream of a trial.
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) { return splitmix64(splitmix64(base) ^ stream); }

enum Stream : std::uint64_t {
    kPool = 1,
    kSelect = 2,
    kPositiveFit = 3,
    kRollout = 100,
    kAvoidFit = 1000,
    kRefit = 2000,
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

EmOptions em_options(const FeedbackConfig& config, int components, std::uint64_t seed) {
    EmOptions opt;
    opt.components = components;
    opt.seed = seed;
    opt.init = config.em_init;
    opt.max_iterations = config.em_max_iterations;
    opt.tolerance = config.em_tolerance;
    return opt;
}

Eigen::VectorXd widen_variance(const FeedbackConfig& config, const GridSpec& grid) {
    if (config.smoothing_cells == 0.0) return {};
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.dims()));
    for (std::size_t d = 0; d < grid.dims(); ++d) {
        const double s = config.smoothing_cells * grid.axis(d).width();
        v[static_cast<Eigen::Index>(d)] = s * s;
    }
    return v;
}

GridDistribution fit_and_rasterize(const FeedbackConfig& config, const DemoSet& demos, const GridSpec& grid,
                                   int components, std::uint64_t seed) {
    const FitResult fit = fit_em(demos, em_options(config, components, seed));
    return rasterize(widened(fit.mixture, widen_variance(config, grid)), grid);
}

GridDistribution learn_positive(const FeedbackConfig& config, const DemoSet& demos, const GridSpec& grid,
                                std::uint64_t seed) {
    if (!config.split_positive) return fit_and_rasterize(config, demos, grid, config.positive_components, seed);
    std::vector<GridDistribution> parts;
    for (std::size_t i = 0; i < demos.size(); ++i)
        parts.push_back(fit_and_rasterize(config, DemoSet{demos[i]}, grid, config.positive_components, seed + i));
    return combine_positive(parts);
}

}  // namespace

DemoSet trial_demos(const FeedbackConfig& config, const TaskSpec& task, std::size_t trial) {
    config.validate();
    std::vector<std::size_t> chosen;
    std::mt19937_64 select_rng(stream_seed(config.seed + trial, kSelect));
    if (!config.behaviors.empty()) {
        for (const auto& name : config.behaviors) {
            (void)task.behavior(name);
            for (std::size_t b = 0; b < task.behaviors.size(); ++b)
                if (task.behaviors[b].name == name) chosen.push_back(b);
        }
    } else {
        chosen.resize(task.behaviors.size());
        std::iota(chosen.begin(), chosen.end(), 0);
        if (config.random_behaviors > 0) {
            if (config.random_behaviors > chosen.size())
                throw std::invalid_argument("FeedbackConfig: random_behaviors exceeds the task's ambiguity");
            std::shuffle(chosen.begin(), chosen.end(), select_rng);
            chosen.resize(config.random_behaviors);
            std::sort(chosen.begin(), chosen.end());
        }
    }
    const double noise = config.demo_noise < 0.0 ? default_demo_noise(task) : config.demo_noise;
    DemoSet out;
    for (std::size_t b : chosen) {
        // The pool depends only on the config seed: every trial draws from the
        // same recorded demonstrations.
        const DemoSet pool =
            synth_demos(task, task.behaviors[b].name, config.pool_per_behavior, noise, stream_seed(config.seed, kPool + 16 * b));
        std::vector<std::size_t> idx(pool.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), select_rng);
        for (std::size_t i = 0; i < config.demos_per_behavior; ++i) out.push_back(pool[idx[i]]);
    }
    return out;
}

Trajectory select_region(const Trajectory& failure, const Selector& selector, const Mask& mask) {
    switch (selector.kind) {
        case Selector::Kind::none: return failure;
        case Selector::Kind::central: return central_trajectory_selector(failure, selector.fraction);
        case Selector::Kind::mask: {
            Trajectory out = failure;
            out.points.clear();
            for (const auto& p : failure.points)
                if (mask.open_at(p.position)) out.points.push_back(p);
            return out;
        }
    }
    return failure;
}

History run_feedback(const FeedbackConfig& config, const TaskSpec& task, std::size_t trial,
                     const OutcomeOverride& override_outcome) {
    config.validate();
    const GridSpec grid = config.grid ? *config.grid : task.policy_grid();
    if (grid.dims() != static_cast<std::size_t>(task.dim) + 1)
        throw std::invalid_argument("run_feedback: grid must be phase plus the task's spatial axes");
    const std::uint64_t base = config.seed + trial;
    const DemoSet positives = trial_demos(config, task, trial);

    const auto rollout = [&](const GridDistribution& policy, int cycle) {
        SampleOptions so;
        so.mode = config.rollout_mode;
        so.continuity = config.continuity;
        so.max_restarts = config.max_restarts;
        so.seed = stream_seed(base, kRollout + static_cast<std::uint64_t>(cycle));
        CycleRecord rec;
        rec.cycle = cycle;
        try {
            rec.rollout = sample_trajectory(policy, so);
            rec.outcome = evaluate(rec.rollout, task);
        } catch (const DeadEnd&) {
            rec.outcome.kind = OutcomeKind::GoalMiss;
            rec.outcome.final_distance = std::numeric_limits<double>::infinity();
        }
        if (override_outcome) {
            if (auto forced = override_outcome(trial, cycle, rec.rollout)) rec.outcome.kind = *forced;
        }
        rec.rollout.outcome = rec.outcome.kind;
        return rec;
    };

    History history;

    // Learn from the positive demonstrations and roll out.
    auto t0 = std::chrono::steady_clock::now();
    GridDistribution policy = learn_positive(config, positives, grid, stream_seed(base, kPositiveFit));
    const Mask mask = config.selector.kind == Selector::Kind::mask
                          ? build_mask(positives, grid.spatial(), config.selector.threshold)
                          : Mask::all_ones(grid.spatial());
    double elapsed = seconds_since(t0);

    DemoSet dataset = positives;  // negative weighting keeps everything
    const std::size_t scheme_bytes = policy.serialized_size() + mask.serialized_size();
    const auto state_bytes = [&] {
        return config.method == Method::neg_weight ? serialized_demos_size(dataset) : scheme_bytes;
    };

    {
        CycleRecord rec = rollout(policy, 0);
        rec.wall_time_s = elapsed;
        rec.state_bytes = state_bytes();
        if (config.keep_snapshots) rec.policy = std::make_shared<const GridDistribution>(policy);
        history.push_back(std::move(rec));
    }

    for (int cycle = 1; cycle <= config.max_cycles; ++cycle) {
        const CycleRecord& last = history.back();
        if (last.outcome.success() && !config.force_cycles) break;

        t0 = std::chrono::steady_clock::now();
        if (!last.rollout.empty()) {
            // The selected part of the failure is the negative set.
            Trajectory region = select_region(last.rollout, config.selector, mask);
            if (region.empty()) region = central_trajectory_selector(last.rollout, 1.0 / 6.0);

            if (config.method == Method::neg_weight) {
                dataset.push_back(region.as_demonstration(Label::negative, config.neg_weight));
                policy = neg_weight_refit(
                    dataset, grid,
                    em_options(config, config.positive_components,
                               stream_seed(base, kRefit + static_cast<std::uint64_t>(cycle))),
                    config.neg_weight, widen_variance(config, grid));
            } else {
                // Avoidance policy from this single failure only.
                const int k = std::min<int>(config.avoid_components, static_cast<int>(region.size()));
                const GridDistribution avoid =
                    fit_and_rasterize(config, DemoSet{region.as_demonstration(Label::negative, 1.0)}, grid, k,
                                      stream_seed(base, kAvoidFit + static_cast<std::uint64_t>(cycle)));
                if (config.method == Method::poe) {
                    policy = poe_apply_negative(policy, avoid, mask);
                } else {
                    const double mix = config.moe_mix ? *config.moe_mix : 1.0 / (1.0 + cycle);
                    policy = moe_apply_negative(policy, avoid, mask, mix);
                }
            }
        }
        elapsed = seconds_since(t0);

        CycleRecord rec = rollout(policy, cycle);
        rec.wall_time_s = elapsed;
        rec.state_bytes = state_bytes();
        if (config.keep_snapshots) rec.policy = std::make_shared<const GridDistribution>(policy);
        history.push_back(std::move(rec));
    }
    return history;
}

std::vector<double> success_fractions(const std::vector<History>& histories, int max_cycles) {
    std::vector<double> rate(static_cast<std::size_t>(max_cycles) + 1, 0.0);
    if (histories.empty()) return rate;
    for (const auto& h : histories) {
        std::size_t first = rate.size();
        for (const auto& rec : h) {
            if (rec.outcome.success()) {
                first = static_cast<std::size_t>(rec.cycle);
                break;
            }
        }
        for (std::size_t c = first; c < rate.size(); ++c) rate[c] += 1.0;
    }
    for (double& r : rate) r /= static_cast<double>(histories.size());
    return rate;
}

SuccessCurve success_rate(const FeedbackConfig& config, const TaskSpec& task, std::size_t trials, int workers,
                          const OutcomeOverride& override_outcome) {
    if (trials < 1) throw std::invalid_argument("success_rate: trials must be >= 1");
    SuccessCurve out;
    out.histories.resize(trials);
    std::size_t next = 0;
    std::mutex mu;
    std::exception_ptr error;
    const auto work = [&] {
        while (true) {
            std::size_t t;
            {
                std::lock_guard lock(mu);
                if (next >= trials || error) return;
                t = next++;
            }
            try {
                out.histories[t] = run_feedback(config, task, t, override_outcome);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(trials)));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    out.rate = success_fractions(out.histories, config.max_cycles);
    return out;
}

OutcomeOverride load_outcome_overrides(std::string_view csv) {
    auto table = std::make_shared<std::map<std::pair<std::size_t, int>, OutcomeKind>>();
    std::istringstream in{std::string(csv)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.starts_with("trial")) continue;
        std::istringstream row(line);
        std::string trial, cycle, outcome;
        if (!std::getline(row, trial, ',') || !std::getline(row, cycle, ',') || !std::getline(row, outcome))
            throw FormatError("override row '" + line + "' must be trial,cycle,outcome");
        while (!outcome.empty() && (outcome.back() == '\r' || outcome.back() == ' ')) outcome.pop_back();
        OutcomeKind kind;
        if (outcome == "success") {
            kind = OutcomeKind::Success;
        } else if (outcome == "collision") {
            kind = OutcomeKind::Collision;
        } else if (outcome == "goal_miss") {
            kind = OutcomeKind::GoalMiss;
        } else {
            throw FormatError("unknown outcome '" + outcome + "'");
        }
        try {
            (*table)[{std::stoul(trial), std::stoi(cycle)}] = kind;
        } catch (const std::exception&) {
            throw FormatError("override row '" + line + "' has non-numeric indices");
        }
    }
    return [table](std::size_t trial, int cycle, const Trajectory&) -> std::optional<OutcomeKind> {
        auto it = table->find({trial, cycle});
        if (it == table->end()) return std::nullopt;
        return it->second;
    };
}

std::string history_csv_rows(std::string_view variant, const std::vector<History>& histories) {
    std::string out;
    char buf[256];
    for (std::size_t t = 0; t < histories.size(); ++t) {
        for (const auto& rec : histories[t]) {
            std::snprintf(buf, sizeof buf, "%.*s,%zu,%d,%.*s,%d,%.9f,%zu\n", static_cast<int>(variant.size()),
                          variant.data(), t, rec.cycle, static_cast<int>(to_string(rec.outcome.kind).size()),
                          to_string(rec.outcome.kind).data(), rec.outcome.success() ? 1 : 0, rec.wall_time_s,
                          rec.state_bytes);
            out += buf;
        }
    }
    return out;
}

}  // namespace negfeed
