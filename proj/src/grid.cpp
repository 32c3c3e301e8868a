#include "negfeed/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>

#include "negfeed/errors.hpp"

namespace negfeed {

namespace {
constexpr std::uint32_t kGridVersion = 1;
}

std::optional<std::size_t> Axis::locate(double x) const {
    if (!(x >= lo && x <= hi)) return std::nullopt;
    auto i = static_cast<std::size_t>(std::floor((x - lo) / width()));
    return std::min(i, cells - 1);
}

GridSpec::GridSpec(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw std::invalid_argument("GridSpec: at least one axis required");
    for (const auto& a : axes_) {
        if (a.cells < 2) throw std::invalid_argument("GridSpec: each axis needs at least 2 cells");
        if (!(a.lo < a.hi)) throw std::invalid_argument("GridSpec: axis bounds must satisfy lo < hi");
    }
    strides_.assign(axes_.size(), 1);
    for (std::size_t d = axes_.size() - 1; d > 0; --d) strides_[d - 1] = strides_[d] * axes_[d].cells;
    size_ = strides_[0] * axes_[0].cells;
}

std::size_t GridSpec::flat_index(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes_.size(); ++d) flat += idx[d] * strides_[d];
    return flat;
}

void GridSpec::unravel(std::size_t flat, std::span<std::size_t> idx) const {
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        idx[d] = flat / strides_[d];
        flat %= strides_[d];
    }
}

Eigen::VectorXd GridSpec::center(std::size_t flat) const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(axes_.size()));
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        c[static_cast<Eigen::Index>(d)] = axes_[d].center(flat / strides_[d]);
        flat %= strides_[d];
    }
    return c;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (const auto& a : axes_) v *= a.width();
    return v;
}

std::optional<std::size_t> GridSpec::locate(const Eigen::Ref<const Eigen::VectorXd>& p) const {
    if (static_cast<std::size_t>(p.size()) != axes_.size())
        throw std::invalid_argument("GridSpec::locate: dimension mismatch");
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        auto i = axes_[d].locate(p[static_cast<Eigen::Index>(d)]);
        if (!i) return std::nullopt;
        flat += *i * strides_[d];
    }
    return flat;
}

GridSpec GridSpec::spatial() const {
    if (axes_.size() < 2) throw std::invalid_argument("GridSpec::spatial: no spatial axes");
    return GridSpec(std::vector<Axis>(axes_.begin() + 1, axes_.end()));
}

GridSpec GridSpec::with_phase(std::size_t phase_cells) const {
    std::vector<Axis> axes;
    axes.push_back(Axis{0.0, 1.0, phase_cells});
    axes.insert(axes.end(), axes_.begin(), axes_.end());
    return GridSpec(std::move(axes));
}

GridDistribution::GridDistribution(GridSpec spec, std::vector<double> values, bool normalized)
    : spec_(std::move(spec)), values_(std::move(values)), normalized_(normalized) {
    if (values_.size() != spec_.size())
        throw std::invalid_argument("GridDistribution: value count does not match spec");
}

GridDistribution GridDistribution::normalize(GridSpec spec, std::vector<double> values) {
    double total = 0.0;
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("GridDistribution: values must be finite and non-negative");
        total += v;
    }
    if (!(total > 0.0)) throw std::invalid_argument("GridDistribution: zero total mass");
    for (double& v : values) v /= total;
    return GridDistribution(std::move(spec), std::move(values), true);
}

double GridDistribution::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double GridDistribution::entropy() const {
    double h = 0.0;
    for (double v : values_)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

std::size_t GridDistribution::argmax() const {
    return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

std::size_t GridDistribution::slice_size() const { return spec_.dims() > 1 ? spec_.stride(0) : 1; }

std::span<const double> GridDistribution::slice(std::size_t phase_cell) const {
    const std::size_t n = slice_size();
    return std::span<const double>(values_).subspan(phase_cell * n, n);
}

// Binary helpers ------------------------------------------------------------

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

void ByteWriter::tag(const char (&t)[5]) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(t[i]));
}

void ByteReader::need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw FormatError("binary record truncated");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return in_[pos_++];
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
}

double ByteReader::f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return std::bit_cast<double>(bits);
}

void ByteReader::expect_tag(const char (&t)[5]) {
    need(4);
    if (std::memcmp(in_.data() + pos_, t, 4) != 0) throw FormatError(std::string("expected tag ") + t);
    pos_ += 4;
}

void write_axes(ByteWriter& w, const GridSpec& spec) {
    w.u32(static_cast<std::uint32_t>(spec.dims()));
    for (const auto& a : spec.axes()) {
        w.f64(a.lo);
        w.f64(a.hi);
        w.u32(static_cast<std::uint32_t>(a.cells));
    }
}

GridSpec read_axes(ByteReader& r) {
    const std::uint32_t dims = r.u32();
    if (dims == 0 || dims > 16) throw FormatError("implausible axis count");
    std::vector<Axis> axes(dims);
    for (auto& a : axes) {
        a.lo = r.f64();
        a.hi = r.f64();
        a.cells = r.u32();
    }
    try {
        return GridSpec(std::move(axes));
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
}

std::vector<std::uint8_t> GridDistribution::serialize() const {
    ByteWriter w;
    w.tag("NFGD");
    w.u32(kGridVersion);
    write_axes(w, spec_);
    w.u8(normalized_ ? 1 : 0);
    for (double v : values_) w.f64(v);
    return w.take();
}

GridDistribution GridDistribution::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("NFGD");
    if (r.u32() != kGridVersion) throw FormatError("unsupported grid version");
    GridSpec spec = read_axes(r);
    const bool normalized = r.u8() != 0;
    std::vector<double> values(spec.size());
    for (double& v : values) v = r.f64();
    if (!r.done()) throw FormatError("trailing bytes after grid");
    return GridDistribution(std::move(spec), std::move(values), normalized);
}

std::size_t GridDistribution::serialized_size() const {
    return 4 + 4 + 4 + spec_.dims() * (8 + 8 + 4) + 1 + values_.size() * 8;
}

}  // namespace negfeed
