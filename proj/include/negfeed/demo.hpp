#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "negfeed/geometry.hpp"

namespace negfeed {

enum class Label { positive, negative };

struct Sample {
    double phase = 0.0;
    Point position;
};

/// A phase-indexed positional trajectory. Positive demonstrations span the
/// full phase range [0, 1]; negative ones (selected failure regions) may
/// cover any increasing sub-range of it.
struct Demonstration {
    std::vector<Sample> samples;
    Label label = Label::positive;
    double weight = 1.0;

    int dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().position.size()); }
    std::vector<Point> positions() const;

    /// Throws std::invalid_argument when an invariant is broken. With
    /// `region` set, positions must also lie inside it.
    void validate(const Box* region = nullptr) const;
};

using DemoSet = std::vector<Demonstration>;

std::string_view to_string(Label label);
Label label_from_string(std::string_view s);

// Text format: JSON Lines, one demonstration per line:
//   {"label":"positive","weight":1.0,"samples":[[phase,x,y(,z)],...]}
std::string demos_to_jsonl(const DemoSet& demos);
DemoSet demos_from_jsonl(std::string_view text);
void save_demos(const std::filesystem::path& path, const DemoSet& demos);
DemoSet load_demos(const std::filesystem::path& path);

/// Binary layout: "NFDS", u32 version, u32 count, then per demonstration
/// u8 label, f64 weight, u8 dim, u32 sample count and (phase, position...)
/// as f64 rows.
std::vector<std::uint8_t> serialize_demos(const DemoSet& demos);
DemoSet deserialize_demos(std::span<const std::uint8_t> bytes);
std::size_t serialized_demos_size(const DemoSet& demos);

}  // namespace negfeed
