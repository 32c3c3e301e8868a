#include "negfeed/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "negfeed/errors.hpp"

namespace negfeed {

using nlohmann::json;

void ExperimentSuite::validate() const {
    if (trials < 1) throw std::invalid_argument("suite '" + name + "': trials must be >= 1");
    if (workers < 1) throw std::invalid_argument("suite '" + name + "': workers must be >= 1");
    std::set<std::string> seen;
    for (const auto& v : variants) {
        if (v.name.empty()) throw std::invalid_argument("suite '" + name + "': variant without a name");
        if (!seen.insert(v.name).second)
            throw std::invalid_argument("suite '" + name + "': duplicate variant '" + v.name + "'");
        v.config.validate();
    }
}

namespace {

void apply_config(FeedbackConfig& c, const json& j, const TaskSpec& task) {
    for (const auto& [key, value] : j.items()) {
        if (key == "name") {
            continue;
        } else if (key == "method") {
            c.method = method_from_string(value.get<std::string>());
        } else if (key == "selector") {
            c.selector = selector_from_string(value.get<std::string>());
        } else if (key == "max_cycles") {
            c.max_cycles = value.get<int>();
        } else if (key == "demos_per_behavior") {
            c.demos_per_behavior = value.get<std::size_t>();
        } else if (key == "behaviors") {
            c.behaviors = value.get<std::vector<std::string>>();
        } else if (key == "random_behaviors") {
            c.random_behaviors = value.get<std::size_t>();
        } else if (key == "pool_per_behavior") {
            c.pool_per_behavior = value.get<std::size_t>();
        } else if (key == "demo_noise") {
            c.demo_noise = value.get<double>();
        } else if (key == "positive_components") {
            c.positive_components = value.get<int>();
        } else if (key == "avoid_components") {
            c.avoid_components = value.get<int>();
        } else if (key == "smoothing_cells") {
            c.smoothing_cells = value.get<double>();
        } else if (key == "split_positive") {
            c.split_positive = value.get<bool>();
        } else if (key == "neg_weight") {
            c.neg_weight = value.get<double>();
        } else if (key == "moe_mix") {
            if (value.is_null()) {
                c.moe_mix.reset();
            } else {
                c.moe_mix = value.get<double>();
            }
        } else if (key == "em_init") {
            const auto s = value.get<std::string>();
            if (s == "phase_bins") {
                c.em_init = EmInit::phase_bins;
            } else if (s == "kmeans_pp") {
                c.em_init = EmInit::kmeans_pp;
            } else {
                throw FormatError("unknown em_init '" + s + "'");
            }
        } else if (key == "em_max_iterations") {
            c.em_max_iterations = value.get<int>();
        } else if (key == "em_tolerance") {
            c.em_tolerance = value.get<double>();
        } else if (key == "rollout") {
            const auto s = value.get<std::string>();
            if (s == "argmax") {
                c.rollout_mode = SampleMode::argmax;
            } else if (s == "stochastic") {
                c.rollout_mode = SampleMode::stochastic;
            } else {
                throw FormatError("unknown rollout mode '" + s + "'");
            }
        } else if (key == "continuity") {
            c.continuity = value.get<int>();
        } else if (key == "max_restarts") {
            c.max_restarts = value.get<int>();
        } else if (key == "force_cycles") {
            c.force_cycles = value.get<bool>();
        } else if (key == "seed") {
            c.seed = value.get<std::uint64_t>();
        } else if (key == "grid") {
            TaskSpec t = task;
            t.phase_cells = value.value("phase_cells", t.phase_cells);
            if (value.contains("spatial_cells")) {
                const auto& sc = value.at("spatial_cells");
                t.spatial_cells = sc.is_array() ? sc.get<std::vector<std::size_t>>()
                                                : std::vector<std::size_t>(t.spatial_cells.size(), sc.get<std::size_t>());
            }
            c.grid = t.policy_grid();
        } else {
            throw FormatError("unknown config key '" + key + "'");
        }
    }
}

}  // namespace

ExperimentSuite suite_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("suite: ") + e.what());
    }
    ExperimentSuite s;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key != "name" && key != "task" && key != "trials" && key != "seed" && key != "workers" &&
                key != "defaults" && key != "variants" && key != "output_dir" && key != "description" &&
                key != "version")
                throw FormatError("suite: unknown key '" + key + "'");
        }
        s.name = j.at("name").get<std::string>();
        s.task = j.at("task").get<std::string>();
        s.trials = j.value("trials", s.trials);
        s.seed = j.value("seed", s.seed);
        s.workers = j.value("workers", s.workers);
        s.output_dir = j.value("output_dir", std::string("."));
        const TaskSpec task = make_task(s.task);
        FeedbackConfig defaults;
        if (j.contains("defaults")) apply_config(defaults, j.at("defaults"), task);
        for (const auto& v : j.value("variants", json::array())) {
            Variant var{v.at("name").get<std::string>(), defaults};
            apply_config(var.config, v, task);
            s.variants.push_back(std::move(var));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("suite: ") + e.what());
    }
    s.validate();
    return s;
}

ExperimentSuite load_suite(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open suite file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return suite_from_json(buf.str());
}

namespace {

std::string success_csv_rows(const VariantResult& v) {
    std::string out;
    char buf[256];
    for (std::size_t c = 0; c < v.success.size(); ++c) {
        double bytes = 0.0;
        std::size_t n = 0;
        for (const auto& h : v.histories) {
            if (c < h.size()) {
                bytes += static_cast<double>(h[c].state_bytes);
                ++n;
            }
        }
        std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%zu,%.1f\n", v.name.c_str(), c, v.success[c],
                      v.histories.size(), n ? bytes / static_cast<double>(n) : 0.0);
        out += buf;
    }
    return out;
}

void write_header(const std::filesystem::path& path, std::string_view header) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# schema_version=" << kCsvSchemaVersion << '\n' << header << '\n';
}

void append(const std::filesystem::path& path, const std::string& rows) {
    std::ofstream out(path, std::ios::app);
    out << rows;
    out.flush();
}

}  // namespace

SuiteResult run_suite(const ExperimentSuite& suite, const OutcomeOverride& override_outcome) {
    suite.validate();
    const TaskSpec task = make_task(suite.task);
    std::filesystem::create_directories(suite.output_dir);
    SuiteResult result;
    result.history_csv = suite.output_dir / (suite.name + "_history.csv");
    result.success_csv = suite.output_dir / (suite.name + "_success.csv");
    write_header(result.history_csv, kHistoryCsvHeader);
    write_header(result.success_csv, kSuccessCsvHeader);

    for (const auto& variant : suite.variants) {
        FeedbackConfig config = variant.config;
        config.seed += suite.seed;
        try {
            SuccessCurve curve = success_rate(config, task, suite.trials, suite.workers, override_outcome);
            VariantResult v{variant.name, std::move(curve.rate), std::move(curve.histories)};
            append(result.history_csv, history_csv_rows(v.name, v.histories));
            append(result.success_csv, success_csv_rows(v));
            result.variants.push_back(std::move(v));
        } catch (const std::exception& e) {
            result.failures.push_back(variant.name + ": " + e.what());
        }
    }
    return result;
}

std::vector<TimingRow> timing_report(const std::vector<std::pair<std::string, std::vector<History>>>& runs) {
    std::vector<TimingRow> rows;
    for (const auto& [method, histories] : runs) {
        std::map<int, std::vector<double>> per_cycle;
        for (const auto& h : histories)
            for (const auto& rec : h)
                if (rec.cycle > 0) per_cycle[rec.cycle].push_back(rec.wall_time_s);
        for (const auto& [cycle, times] : per_cycle) {
            TimingRow r{method, cycle, times.size(), 0.0, 0.0};
            for (double t : times) r.mean_s += t;
            r.mean_s /= static_cast<double>(times.size());
            if (times.size() > 1) {
                double ss = 0.0;
                for (double t : times) ss += (t - r.mean_s) * (t - r.mean_s);
                r.stddev_s = std::sqrt(ss / static_cast<double>(times.size() - 1));
            }
            rows.push_back(r);
        }
    }
    return rows;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
    std::string out = "# schema_version=" + std::to_string(kCsvSchemaVersion) + "\nmethod,cycle,runs,mean_s,stddev_s\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%zu,%.9f,%.9f\n", r.method.c_str(), r.cycle, r.runs, r.mean_s,
                      r.stddev_s);
        out += buf;
    }
    return out;
}

bool timing_flat(const std::vector<TimingRow>& rows, std::string_view method, int first, double tolerance) {
    std::vector<double> means;
    for (const auto& r : rows)
        if (r.method == method && r.cycle >= first) means.push_back(r.mean_s);
    if (means.empty()) return false;
    double joint = 0.0;
    for (double m : means) joint += m;
    joint /= static_cast<double>(means.size());
    return std::all_of(means.begin(), means.end(),
                       [&](double m) { return std::abs(m - joint) <= tolerance * joint; });
}

bool timing_increasing(const std::vector<TimingRow>& rows, std::string_view method) {
    std::vector<double> means;
    for (const auto& r : rows)
        if (r.method == method) means.push_back(r.mean_s);
    if (means.size() < 2) return false;
    for (std::size_t i = 1; i < means.size(); ++i)
        if (!(means[i] > means[i - 1])) return false;
    return true;
}

MemoryReport memory_report(const FeedbackConfig& config, const TaskSpec& task) {
    const GridSpec grid = config.grid ? *config.grid : task.policy_grid();
    const DemoSet demos = trial_demos(config, task, 0);
    const Mask mask = config.selector.kind == Selector::Kind::mask
                          ? build_mask(demos, grid.spatial(), config.selector.threshold)
                          : Mask::all_ones(grid.spatial());
    MemoryReport r;
    r.demos = demos.size();
    r.dataset_bytes = serialized_demos_size(demos);
    r.scheme_bytes = uniform(grid).serialized_size() + mask.serialized_size();
    return r;
}

std::string memory_csv(const std::vector<MemoryReport>& rows) {
    std::string out = "# schema_version=" + std::to_string(kCsvSchemaVersion) + "\n# reference: dataset " +
                      std::to_string(kReferenceDatasetBytes) + " B, scheme " + std::to_string(kReferenceSchemeBytes) +
                      " B\ndemos,dataset_bytes,scheme_bytes\n";
    for (const auto& r : rows)
        out += std::to_string(r.demos) + "," + std::to_string(r.dataset_bytes) + "," + std::to_string(r.scheme_bytes) + "\n";
    return out;
}

// --- Tables and plots -----------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// Round `span` up to 1, 2 or 5 times a power of ten.
double nice_step(double span, int ticks) {
    const double raw = span / ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double f : {1.0, 2.0, 5.0, 10.0})
        if (f * mag >= raw) return f * mag;
    return 10.0 * mag;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

}  // namespace

Table table_from_csv(std::string_view csv, std::string_view series_column, std::string_view x_column,
                     std::string_view y_column) {
    std::istringstream in{std::string(csv)};
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        header = split_csv_line(line);
        break;
    }
    if (header.empty()) throw MalformedTable("table has no header row");
    const auto column = [&](std::string_view name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw MalformedTable("missing column '" + std::string(name) + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t si = column(series_column), xi = column(x_column), yi = column(y_column);

    Table t;
    t.x_label = std::string(x_column);
    t.y_label = std::string(y_column);
    std::map<std::string, std::size_t> index;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw MalformedTable("row " + std::to_string(row) + " is ragged");
        const auto number = [&](const std::string& s) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(s, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != s.size()) throw MalformedTable("row " + std::to_string(row) + ": '" + s + "' is not a number");
            return v;
        };
        const double x = number(cells[xi]), y = number(cells[yi]);
        auto [it, inserted] = index.try_emplace(cells[si], t.series.size());
        if (inserted) t.series.push_back(Series{cells[si], {}});
        t.series[it->second].points.emplace_back(x, y);
    }
    return t;
}

std::string plot_svg(const Table& table) {
    std::set<std::string> names;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : table.series) {
        if (!names.insert(s.name).second) throw MalformedTable("duplicate series '" + s.name + "'");
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) throw MalformedTable("non-finite value in '" + s.name + "'");
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (!std::isfinite(x0)) {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    y0 = std::min(y0, 0.0);
    if (x1 <= x0) x1 = x0 + 1.0;
    if (y1 <= y0) y1 = y0 + 1.0;
    const double ystep = nice_step(y1 - y0, 5);
    y1 = std::ceil(y1 / ystep - 1e-9) * ystep;
    const double xstep = nice_step(x1 - x0, 6);

    constexpr double W = 640, H = 400, L = 64, R = 160, T = 40, B = 56;
    const double pw = W - L - R, ph = H - T - B;
    const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    const auto py = [&](double y) { return T + ph - (y - y0) / (y1 - y0) * ph; };
    static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    o += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    o += "<text x=\"" + fmt(L + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         xml_escape(table.title) + "</text>\n";
    o += "<g stroke=\"black\" stroke-width=\"1\">\n";
    o += "<line x1=\"" + fmt(L) + "\" y1=\"" + fmt(T + ph) + "\" x2=\"" + fmt(L + pw) + "\" y2=\"" + fmt(T + ph) + "\"/>\n";
    o += "<line x1=\"" + fmt(L) + "\" y1=\"" + fmt(T) + "\" x2=\"" + fmt(L) + "\" y2=\"" + fmt(T + ph) + "\"/>\n";
    o += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (double y = y0; y <= y1 + 1e-9 * ystep; y += ystep) {
        o += "<line x1=\"" + fmt(L - 4) + "\" y1=\"" + fmt(py(y)) + "\" x2=\"" + fmt(L) + "\" y2=\"" + fmt(py(y)) +
             "\" stroke=\"black\"/>";
        o += "<text x=\"" + fmt(L - 6) + "\" y=\"" + fmt(py(y) + 4) + "\" text-anchor=\"end\">" + tick_label(y) + "</text>\n";
    }
    for (double x = std::ceil(x0 / xstep - 1e-9) * xstep; x <= x1 + 1e-9 * xstep; x += xstep) {
        o += "<line x1=\"" + fmt(px(x)) + "\" y1=\"" + fmt(T + ph) + "\" x2=\"" + fmt(px(x)) + "\" y2=\"" +
             fmt(T + ph + 4) + "\" stroke=\"black\"/>";
        o += "<text x=\"" + fmt(px(x)) + "\" y=\"" + fmt(T + ph + 16) + "\" text-anchor=\"middle\">" + tick_label(x) +
             "</text>\n";
    }
    o += "<text x=\"" + fmt(L + pw / 2) + "\" y=\"" + fmt(H - 16) + "\" text-anchor=\"middle\">" +
         xml_escape(table.x_label) + "</text>\n";
    o += "<text x=\"16\" y=\"" + fmt(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt(T + ph / 2) + ")\">" + xml_escape(table.y_label) + "</text>\n";
    o += "</g>\n";
    for (std::size_t i = 0; i < table.series.size(); ++i) {
        const auto& s = table.series[i];
        const char* color = kColors[i % std::size(kColors)];
        if (!s.points.empty()) {
            o += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"";
            for (std::size_t k = 0; k < s.points.size(); ++k) {
                if (k) o += ' ';
                o += fmt(px(s.points[k].first)) + "," + fmt(py(s.points[k].second));
            }
            o += "\"/>\n";
        }
        const double ly = T + 12 + 18 * static_cast<double>(i);
        o += "<line x1=\"" + fmt(L + pw + 12) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(L + pw + 32) + "\" y2=\"" +
             fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>";
        o += "<text x=\"" + fmt(L + pw + 38) + "\" y=\"" + fmt(ly + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + xml_escape(s.name) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

}  // namespace negfeed
