#include "negfeed/demo.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "negfeed/errors.hpp"

namespace negfeed {

namespace {
constexpr std::uint32_t kDemoVersion = 1;
}

std::vector<Point> Demonstration::positions() const {
    std::vector<Point> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.position);
    return out;
}

void Demonstration::validate(const Box* region) const {
    if (samples.empty()) throw std::invalid_argument("demonstration has no samples");
    const int d = dim();
    if (d != 2 && d != 3) throw std::invalid_argument("demonstration positions must be 2D or 3D");
    if (weight < 0.0 && label != Label::negative)
        throw std::invalid_argument("negative weight on a positive demonstration");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.position.size() != d) throw std::invalid_argument("inconsistent sample dimension");
        if (!(s.phase >= 0.0 && s.phase <= 1.0)) throw std::invalid_argument("phase outside [0, 1]");
        if (i > 0 && !(s.phase > samples[i - 1].phase))
            throw std::invalid_argument("phases must be strictly increasing");
        if (region && !region->contains(s.position))
            throw std::invalid_argument("sample outside the task region");
    }
    if (label == Label::positive && (samples.front().phase != 0.0 || samples.back().phase != 1.0))
        throw std::invalid_argument("positive demonstration must span phase 0 to 1");
}

std::string_view to_string(Label label) { return label == Label::positive ? "positive" : "negative"; }

Label label_from_string(std::string_view s) {
    if (s == "positive") return Label::positive;
    if (s == "negative") return Label::negative;
    throw FormatError("unknown label '" + std::string(s) + "'");
}

std::string demos_to_jsonl(const DemoSet& demos) {
    std::string out;
    for (const auto& demo : demos) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& s : demo.samples) {
            nlohmann::json row = nlohmann::json::array({s.phase});
            for (Eigen::Index i = 0; i < s.position.size(); ++i) row.push_back(s.position[i]);
            rows.push_back(std::move(row));
        }
        nlohmann::json rec = {{"label", to_string(demo.label)}, {"weight", demo.weight}, {"samples", rows}};
        out += rec.dump();
        out += '\n';
    }
    return out;
}

DemoSet demos_from_jsonl(std::string_view text) {
    DemoSet demos;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            Demonstration demo;
            demo.label = label_from_string(rec.at("label").get<std::string>());
            demo.weight = rec.value("weight", 1.0);
            for (const auto& row : rec.at("samples")) {
                if (!row.is_array() || row.size() < 3 || row.size() > 4)
                    throw FormatError("sample rows must be [phase, x, y] or [phase, x, y, z]");
                Sample s;
                s.phase = row[0].get<double>();
                s.position.resize(static_cast<Eigen::Index>(row.size() - 1));
                for (std::size_t i = 1; i < row.size(); ++i)
                    s.position[static_cast<Eigen::Index>(i - 1)] = row[i].get<double>();
                demo.samples.push_back(std::move(s));
            }
            demo.validate();
            demos.push_back(std::move(demo));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("demo line " + std::to_string(lineno) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw FormatError("demo line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return demos;
}

void save_demos(const std::filesystem::path& path, const DemoSet& demos) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << demos_to_jsonl(demos);
}

DemoSet load_demos(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return demos_from_jsonl(ss.str());
}

std::vector<std::uint8_t> serialize_demos(const DemoSet& demos) {
    ByteWriter w;
    w.tag("NFDS");
    w.u32(kDemoVersion);
    w.u32(static_cast<std::uint32_t>(demos.size()));
    for (const auto& demo : demos) {
        w.u8(demo.label == Label::positive ? 0 : 1);
        w.f64(demo.weight);
        w.u8(static_cast<std::uint8_t>(demo.dim()));
        w.u32(static_cast<std::uint32_t>(demo.samples.size()));
        for (const auto& s : demo.samples) {
            w.f64(s.phase);
            for (Eigen::Index i = 0; i < s.position.size(); ++i) w.f64(s.position[i]);
        }
    }
    return w.take();
}

DemoSet deserialize_demos(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("NFDS");
    if (r.u32() != kDemoVersion) throw FormatError("unsupported demo dataset version");
    const std::uint32_t count = r.u32();
    if (count > bytes.size()) throw FormatError("implausible demonstration count");
    DemoSet demos(count);
    for (auto& demo : demos) {
        demo.label = r.u8() == 0 ? Label::positive : Label::negative;
        demo.weight = r.f64();
        const int dim = r.u8();
        const std::uint32_t samples = r.u32();
        if (samples > bytes.size()) throw FormatError("implausible sample count");
        demo.samples.resize(samples);
        for (auto& s : demo.samples) {
            s.phase = r.f64();
            s.position.resize(dim);
            for (int i = 0; i < dim; ++i) s.position[i] = r.f64();
        }
    }
    if (!r.done()) throw FormatError("trailing bytes after demo dataset");
    return demos;
}

std::size_t serialized_demos_size(const DemoSet& demos) {
    std::size_t n = 12;
    for (const auto& demo : demos)
        n += 1 + 8 + 1 + 4 + demo.samples.size() * 8 * (1 + static_cast<std::size_t>(demo.dim()));
    return n;
}

}  // namespace negfeed
