// negfeed: run experiment suites, timing and memory studies, and plot their
// CSV output.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "negfeed/bench.hpp"
#include "negfeed/errors.hpp"

namespace fs = std::filesystem;
using namespace negfeed;

namespace {

struct SuiteFlags {
    std::string suite;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::size_t> trials;
    std::string override_file;
};

void add_suite_flags(CLI::App* cmd, SuiteFlags& f) {
    cmd->add_option("-s,--suite", f.suite, "Suite JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", f.out, "Output directory (overrides NEGFEED_OUT_DIR and the suite file)");
    cmd->add_option("--seed", f.seed, "Base seed added to every variant seed");
    cmd->add_option("-j,--workers", f.workers, "Parallel trials");
    cmd->add_option("--trials", f.trials, "Trials per variant");
    cmd->add_option("--override", f.override_file, "CSV of trial,cycle,outcome overrides")->check(CLI::ExistingFile);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

std::optional<fs::path> env_out_dir() {
    if (const char* env = std::getenv("NEGFEED_OUT_DIR"); env && *env) return fs::path(env);
    return std::nullopt;
}

ExperimentSuite load(const SuiteFlags& f) {
    ExperimentSuite s = load_suite(f.suite);
    if (!f.out.empty()) {
        s.output_dir = f.out;
    } else if (auto env = env_out_dir()) {
        s.output_dir = *env;
    }
    if (f.seed) s.seed = *f.seed;
    if (f.workers) s.workers = *f.workers;
    if (f.trials) s.trials = *f.trials;
    s.validate();
    return s;
}

OutcomeOverride overrides(const SuiteFlags& f) {
    if (f.override_file.empty()) return {};
    return load_outcome_overrides(read_file(f.override_file));
}

int report_failures(const SuiteResult& r) {
    for (const auto& msg : r.failures) std::cerr << "variant failed: " << msg << '\n';
    return r.ok() ? 0 : 1;
}

int cmd_run(const SuiteFlags& f) {
    const ExperimentSuite suite = load(f);
    const SuiteResult r = run_suite(suite, overrides(f));
    for (const auto& v : r.variants) {
        std::printf("%-16s", v.name.c_str());
        for (double s : v.success) std::printf(" %.2f", s);
        std::printf("\n");
    }
    std::printf("wrote %s\nwrote %s\n", r.history_csv.string().c_str(), r.success_csv.string().c_str());
    return report_failures(r);
}

int cmd_timing(const SuiteFlags& f) {
    const ExperimentSuite suite = load(f);
    const SuiteResult r = run_suite(suite, overrides(f));
    std::vector<std::pair<std::string, std::vector<History>>> runs;
    for (const auto& v : r.variants) runs.emplace_back(v.name, v.histories);
    const auto rows = timing_report(runs);
    const fs::path out = suite.output_dir / (suite.name + "_timing.csv");
    write_file(out, timing_csv(rows));
    for (const auto& row : rows)
        std::printf("%-12s cycle %d  mean %.6f s  std %.6f s  (n=%zu)\n", row.method.c_str(), row.cycle, row.mean_s,
                    row.stddev_s, row.runs);
    for (const auto& v : r.variants)
        std::printf("%-12s cycles 2+ within 20%% of their mean: %s; strictly increasing: %s\n", v.name.c_str(),
                    timing_flat(rows, v.name, 2, 0.2) ? "yes" : "no", timing_increasing(rows, v.name) ? "yes" : "no");
    std::printf("wrote %s\n", out.string().c_str());
    return report_failures(r);
}

int cmd_memory(const std::string& task_name, std::size_t max_demos, std::string out_dir) {
    if (out_dir.empty()) out_dir = env_out_dir().value_or(fs::path(".")).string();
    const TaskSpec task = make_task(task_name);
    std::vector<MemoryReport> rows;
    for (std::size_t n = 1; n <= max_demos; ++n) {
        FeedbackConfig c;
        c.demos_per_behavior = n;
        c.pool_per_behavior = std::max(c.pool_per_behavior, n);
        rows.push_back(memory_report(c, task));
    }
    fs::create_directories(out_dir);
    const fs::path out = fs::path(out_dir) / ("memory_" + task_name + ".csv");
    write_file(out, memory_csv(rows));
    for (const auto& r : rows)
        std::printf("%3zu demos: dataset %7zu B   policy+mask %7zu B\n", r.demos, r.dataset_bytes, r.scheme_bytes);
    std::printf("reference (real robot): dataset %zu B, scheme %zu B\nwrote %s\n", kReferenceDatasetBytes, kReferenceSchemeBytes,
                out.string().c_str());
    return 0;
}

int cmd_plot(const std::vector<std::string>& files, std::string series, std::string x, std::string y,
             std::string out_dir) {
    if (out_dir.empty()) {
        if (auto env = env_out_dir()) out_dir = env->string();
    }
    for (const auto& file : files) {
        const std::string csv = read_file(file);
        std::string s = series, xc = x, yc = y;
        if (yc.empty()) {
            if (csv.find("success_rate") != std::string::npos) {
                s = s.empty() ? "variant" : s;
                xc = xc.empty() ? "cycle" : xc;
                yc = "success_rate";
            } else if (csv.find("mean_s") != std::string::npos) {
                s = s.empty() ? "method" : s;
                xc = xc.empty() ? "cycle" : xc;
                yc = "mean_s";
            } else {
                throw MalformedTable(file + ": pass --series, --x and --y");
            }
        }
        Table t = table_from_csv(csv, s, xc, yc);
        t.title = fs::path(file).stem().string();
        fs::path out = fs::path(file).replace_extension(".svg");
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            out = fs::path(out_dir) / out.filename();
        }
        write_file(out, plot_svg(t));
        std::printf("wrote %s\n", out.string().c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Negative feedback imitation learning experiments"};
    app.require_subcommand(1);

    SuiteFlags run_flags, timing_flags;
    auto* run = app.add_subcommand("run", "Run an experiment suite and write history/success CSVs");
    add_suite_flags(run, run_flags);
    auto* timing = app.add_subcommand("timing", "Run a suite and report per-cycle learn+apply times");
    add_suite_flags(timing, timing_flags);

    std::string mem_task = "pickplace3d", mem_out;
    std::size_t mem_max = 8;
    auto* memory = app.add_subcommand("memory", "Dataset size versus policy grid plus mask size");
    memory->add_option("-t,--task", mem_task, "Task name")->capture_default_str();
    memory->add_option("--max-demos", mem_max, "Largest demonstrations-per-behavior count")->capture_default_str();
    memory->add_option("-o,--out", mem_out, "Output directory");

    std::vector<std::string> plot_files;
    std::string plot_series, plot_x, plot_y, plot_out;
    auto* plot = app.add_subcommand("plot", "Render CSV tables as SVG line charts");
    plot->add_option("csv", plot_files, "CSV files")->required()->check(CLI::ExistingFile);
    plot->add_option("--series", plot_series, "Column naming each line");
    plot->add_option("--x", plot_x, "X column");
    plot->add_option("--y", plot_y, "Y column");
    plot->add_option("-o,--out", plot_out, "Output directory (default: next to each CSV)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (timing->parsed()) return cmd_timing(timing_flags);
        if (memory->parsed()) return cmd_memory(mem_task, mem_max, mem_out);
        if (plot->parsed()) return cmd_plot(plot_files, plot_series, plot_x, plot_y, plot_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
