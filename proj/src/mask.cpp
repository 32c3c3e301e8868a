#include "negfeed/mask.hpp"

#include <cmath>
#include <stdexcept>

#include "negfeed/errors.hpp"

namespace negfeed {

namespace {
constexpr std::uint32_t kMaskVersion = 1;
}

Mask::Mask(GridSpec spec, std::vector<std::uint32_t> counts, std::size_t trajectories, double threshold)
    : spec_(std::move(spec)), counts_(std::move(counts)), threshold_(threshold), trajectories_(trajectories) {
    if (counts_.size() != spec_.size()) throw std::invalid_argument("Mask: count size does not match spec");
    if (!(threshold_ > 0.0 && threshold_ <= 1.0)) throw std::invalid_argument("Mask: threshold must be in (0, 1]");
    const double limit = threshold_ * static_cast<double>(trajectories_);
    bits_.resize(counts_.size());
    for (std::size_t c = 0; c < counts_.size(); ++c) {
        if (counts_[c] > trajectories_) throw std::invalid_argument("Mask: count exceeds trajectory count");
        bits_[c] = static_cast<double>(counts_[c]) > limit ? 0 : 1;
    }
}

Mask Mask::all_ones(GridSpec spec) {
    std::vector<std::uint32_t> counts(spec.size(), 0);
    return Mask(std::move(spec), std::move(counts), 0, 1.0);
}

std::size_t Mask::ones() const {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
}

std::vector<std::uint8_t> Mask::expand_to(const GridSpec& grid) const {
    if (grid == spec_) return bits_;
    if (grid.dims() == spec_.dims() + 1 && grid.spatial() == spec_) {
        std::vector<std::uint8_t> out;
        out.reserve(grid.size());
        for (std::size_t p = 0; p < grid.axis(0).cells; ++p) out.insert(out.end(), bits_.begin(), bits_.end());
        return out;
    }
    throw SpecMismatch("mask lattice does not match the policy grid");
}

bool Mask::open_at(const Eigen::Ref<const Eigen::VectorXd>& position) const {
    const auto cell = spec_.locate(position);
    return !cell || bits_[*cell] != 0;
}

std::string Mask::to_text() const {
    std::string out;
    const auto emit_2d = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) out += bits_[offset + r * cols + c] ? '1' : '0';
            out += '\n';
        }
    };
    if (spec_.dims() == 1) {
        emit_2d(0, 1, spec_.size());
    } else if (spec_.dims() == 2) {
        emit_2d(0, spec_.axis(0).cells, spec_.axis(1).cells);
    } else {
        const std::size_t block = spec_.stride(0);
        const std::size_t cols = spec_.axis(spec_.dims() - 1).cells;
        for (std::size_t s = 0; s < spec_.axis(0).cells; ++s) {
            if (s > 0) out += '\n';
            emit_2d(s * block, block / cols, cols);
        }
    }
    return out;
}

std::vector<std::uint8_t> Mask::serialize() const {
    ByteWriter w;
    w.tag("NFMK");
    w.u32(kMaskVersion);
    write_axes(w, spec_);
    w.f64(threshold_);
    w.u32(static_cast<std::uint32_t>(trajectories_));
    std::uint8_t acc = 0;
    for (std::size_t c = 0; c < bits_.size(); ++c) {
        if (bits_[c]) acc |= static_cast<std::uint8_t>(1u << (c % 8));
        if (c % 8 == 7) {
            w.u8(acc);
            acc = 0;
        }
    }
    if (bits_.size() % 8 != 0) w.u8(acc);
    return w.take();
}

Mask Mask::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("NFMK");
    if (r.u32() != kMaskVersion) throw FormatError("unsupported mask version");
    Mask m;
    m.spec_ = read_axes(r);
    m.threshold_ = r.f64();
    m.trajectories_ = r.u32();
    m.bits_.resize(m.spec_.size());
    m.counts_.assign(m.spec_.size(), 0);
    std::uint8_t acc = 0;
    for (std::size_t c = 0; c < m.bits_.size(); ++c) {
        if (c % 8 == 0) acc = r.u8();
        m.bits_[c] = (acc >> (c % 8)) & 1u;
    }
    if (!r.done()) throw FormatError("trailing bytes after mask");
    return m;
}

std::size_t Mask::serialized_size() const {
    return 4 + 4 + 4 + spec_.dims() * (8 + 8 + 4) + 8 + 4 + (bits_.size() + 7) / 8;
}

Mask build_mask(const DemoSet& demos, const GridSpec& spatial, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("build_mask: threshold must be in (0, 1]");
    std::vector<std::uint32_t> counts(spatial.size(), 0);
    std::size_t n = 0;
    for (const auto& demo : demos) {
        if (demo.label != Label::positive) continue;
        ++n;
        for (std::size_t cell : cells_traversed(demo.positions(), spatial)) ++counts[cell];
    }
    if (n == 0) throw std::invalid_argument("build_mask: at least one positive demonstration required");
    return Mask(spatial, std::move(counts), n, threshold);
}

Trajectory central_trajectory_selector(const Trajectory& traj, double discard_fraction) {
    if (!(discard_fraction >= 0.0 && discard_fraction < 0.5))
        throw std::invalid_argument("central_trajectory_selector: fraction must be in [0, 0.5)");
    // The small slack keeps exact multiples (60 / 6) from rounding up.
    const auto cut = static_cast<std::size_t>(std::ceil(discard_fraction * static_cast<double>(traj.size()) - 1e-9));
    if (2 * cut >= traj.size()) throw EmptySelection("central selection leaves no points");
    Trajectory out = traj;
    out.points.assign(traj.points.begin() + static_cast<std::ptrdiff_t>(cut),
                      traj.points.end() - static_cast<std::ptrdiff_t>(cut));
    return out;
}

}  // namespace negfeed
