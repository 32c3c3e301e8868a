#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "negfeed/env.hpp"
#include "negfeed/grid.hpp"
#include "negfeed/mask.hpp"
#include "negfeed/policy.hpp"

namespace negfeed {

enum class Method { poe, moe, neg_weight };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// How the failed rollout is cut down before learning from it.
struct Selector {
    enum class Kind { mask, central, none };
    Kind kind = Kind::mask;
    /// Consensus fraction for Kind::mask.
    double threshold = 0.5;
    /// Discard fraction at each end for Kind::central.
    double fraction = 1.0 / 6.0;

    static Selector mask(double threshold) { return {Kind::mask, threshold, 1.0 / 6.0}; }
    static Selector central(double fraction = 1.0 / 6.0) { return {Kind::central, 0.5, fraction}; }
    static Selector none() { return {Kind::none, 0.5, 1.0 / 6.0}; }
};

std::string to_string(const Selector& s);
/// Parses "none", "central", "central:<f>", "mask:<t>" or "mask<percent>".
Selector selector_from_string(std::string_view s);

struct FeedbackConfig {
    Method method = Method::poe;
    Selector selector;
    int max_cycles = 5;

    // Demonstration sampling. Each trial draws `demos_per_behavior`
    // demonstrations per behavior from a pool of `pool_per_behavior`
    // synthesized ones. Behaviors are `behaviors` if given, otherwise
    // `random_behaviors` distinct ones drawn per trial when non-zero,
    // otherwise all of the task's behaviors.
    std::size_t demos_per_behavior = 1;
    std::vector<std::string> behaviors;
    std::size_t random_behaviors = 0;
    std::size_t pool_per_behavior = 10;
    /// Demonstration noise std-dev; negative selects the task default.
    double demo_noise = -1.0;

    /// Policy lattice; the task default when empty.
    std::optional<GridSpec> grid;
    int positive_components = 6;
    int avoid_components = 4;
    EmInit em_init = EmInit::phase_bins;
    int em_max_iterations = 300;
    /// Zero runs every fit for exactly em_max_iterations (the timing study
    /// uses this to take convergence speed out of the comparison).
    double em_tolerance = 1e-7;
    /// Per-axis std-dev, in cells, by which every fitted mixture is widened
    /// before rasterization.
    double smoothing_cells = 1.0;
    /// Fit one mixture per demonstration and sum them instead of one joint
    /// mixture.
    bool split_positive = false;

    double neg_weight = -1.0;
    /// Fixed MoE mix weight; 1 / (1 + cycle) when empty.
    std::optional<double> moe_mix;

    SampleMode rollout_mode = SampleMode::argmax;
    int continuity = 2;
    int max_restarts = 10;

    /// Keep cycling (learning from every rollout) after a success. Used by
    /// the efficiency study so that every run contributes to every cycle.
    bool force_cycles = false;
    bool keep_snapshots = false;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CycleRecord {
    int cycle = 0;
    Trajectory rollout;
    Outcome outcome;
    /// Learn + apply time of this cycle; cycle 0 covers the initial fit.
    double wall_time_s = 0.0;
    /// Serialized size of everything the method must keep between cycles.
    std::size_t state_bytes = 0;
    std::shared_ptr<const GridDistribution> policy;
};

using History = std::vector<CycleRecord>;

/// Replaces the automatic classification of a rollout (human-in-the-loop
/// override). Returning empty keeps the automatic outcome.
using OutcomeOverride = std::function<std::optional<OutcomeKind>(std::size_t trial, int cycle, const Trajectory&)>;

/// Outcome overrides read from CSV rows `trial,cycle,outcome` (outcome one of
/// success, collision, goal_miss); '#' lines are comments.
OutcomeOverride load_outcome_overrides(std::string_view csv);

/// The demonstrations a trial learns from, drawn reproducibly from the
/// config seed (pool) and the trial index (selection).
DemoSet trial_demos(const FeedbackConfig& config, const TaskSpec& task, std::size_t trial);

/// Failure region the selector keeps, before any fallback. Exposed for tests.
Trajectory select_region(const Trajectory& failure, const Selector& selector, const Mask& mask);

/// One run of the negative feedback loop on trial `trial` (seed = config
/// seed + trial).
History run_feedback(const FeedbackConfig& config, const TaskSpec& task, std::size_t trial = 0,
                     const OutcomeOverride& override_outcome = {});

struct SuccessCurve {
    /// Fraction of trials that have succeeded at or before each cycle.
    std::vector<double> rate;
    std::vector<History> histories;
};

/// Per-cycle success fraction over `trials` independent runs, optionally in
/// parallel. A trial that succeeds at cycle j counts as a success for every
/// cycle from j on.
SuccessCurve success_rate(const FeedbackConfig& config, const TaskSpec& task, std::size_t trials, int workers = 1,
                          const OutcomeOverride& override_outcome = {});

/// Success fractions from finished histories (same counting rule).
std::vector<double> success_fractions(const std::vector<History>& histories, int max_cycles);

/// One CSV row per (trial, cycle):
/// `variant,trial,cycle,outcome,success,wall_time_s,state_bytes`.
std::string history_csv_rows(std::string_view variant, const std::vector<History>& histories);
inline constexpr std::string_view kHistoryCsvHeader = "variant,trial,cycle,outcome,success,wall_time_s,state_bytes";
inline constexpr int kCsvSchemaVersion = 1;

}  // namespace negfeed
