#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "negfeed/env.hpp"
#include "negfeed/feedback.hpp"

namespace negfeed {

struct Variant {
    std::string name;
    FeedbackConfig config;
};

struct ExperimentSuite {
    std::string name;
    std::string task;
    std::size_t trials = 10;
    /// Added to every variant's config seed.
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<Variant> variants;
    std::filesystem::path output_dir = ".";

    /// Throws std::invalid_argument on duplicate variant names, trials < 1 or
    /// an invalid variant config.
    void validate() const;
};

/// Suite file layout:
///
///   {"name": ..., "task": "simple", "trials": 30, "seed": 0, "workers": 1,
///    "defaults": {<config>}, "variants": [{"name": ..., <config>}, ...]}
///
/// Config keys: method, selector, max_cycles, demos_per_behavior, behaviors,
/// random_behaviors, pool_per_behavior, demo_noise, positive_components,
/// avoid_components, smoothing_cells, split_positive, neg_weight, moe_mix,
/// em_init, em_max_iterations, em_tolerance, rollout, continuity, max_restarts, force_cycles, seed, and
/// grid {"phase_cells", "spatial_cells"}. Unknown keys are errors.
ExperimentSuite suite_from_json(std::string_view text);
ExperimentSuite load_suite(const std::filesystem::path& path);

struct VariantResult {
    std::string name;
    std::vector<double> success;
    std::vector<History> histories;
};

struct SuiteResult {
    std::vector<VariantResult> variants;
    /// "<variant>: <message>" for every variant that threw.
    std::vector<std::string> failures;
    std::filesystem::path history_csv;
    std::filesystem::path success_csv;

    bool ok() const { return failures.empty(); }
};

/// Runs every variant and writes `<name>_history.csv` (one row per trial and
/// cycle) and `<name>_success.csv` (per-variant per-cycle success fraction
/// and mean state size) into the output directory. Rows are flushed after
/// each variant, so a failing variant leaves the earlier ones on disk.
/// Everything except the wall_time_s column is a function of the suite.
SuiteResult run_suite(const ExperimentSuite& suite, const OutcomeOverride& override_outcome = {});

inline constexpr std::string_view kSuccessCsvHeader = "variant,cycle,success_rate,trials,mean_state_bytes";

struct TimingRow {
    std::string method;
    int cycle = 0;
    std::size_t runs = 0;
    double mean_s = 0.0;
    double stddev_s = 0.0;
};

/// Mean and (sample) standard deviation of the learn+apply wall time per
/// feedback cycle (1, 2, ...) for each named history set. Cycle 0, the
/// initial fit, is not a feedback step and is left out.
std::vector<TimingRow> timing_report(const std::vector<std::pair<std::string, std::vector<History>>>& runs);
std::string timing_csv(const std::vector<TimingRow>& rows);

/// True when the cycle means from `first` on lie within `tolerance` of
/// their joint mean.
bool timing_flat(const std::vector<TimingRow>& rows, std::string_view method, int first, double tolerance);
/// True when the cycle means are strictly increasing.
bool timing_increasing(const std::vector<TimingRow>& rows, std::string_view method);

struct MemoryReport {
    std::size_t demos = 0;
    std::size_t dataset_bytes = 0;
    std::size_t scheme_bytes = 0;
};

/// Serialized size of the trial-0 demonstration set versus the policy grid
/// plus mask that a product-of-experts run keeps.
MemoryReport memory_report(const FeedbackConfig& config, const TaskSpec& task);
std::string memory_csv(const std::vector<MemoryReport>& rows);

/// Reference byte counts for the real-robot task; printed next
/// to ours for reference only.
inline constexpr std::size_t kReferenceDatasetBytes = 8768;
inline constexpr std::size_t kReferenceSchemeBytes = 512;

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct Table {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

/// Groups `y_column` against `x_column` by `series_column` from a CSV with a
/// header row ('#' lines skipped). Throws MalformedTable on missing columns,
/// ragged rows or non-numeric values.
Table table_from_csv(std::string_view csv, std::string_view series_column, std::string_view x_column,
                     std::string_view y_column);

/// Line chart with one polyline per series and a legend. Output bytes depend
/// only on the table. Throws MalformedTable on duplicate series names or
/// non-finite values.
std::string plot_svg(const Table& table);

}  // namespace negfeed
