#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace negfeed {

/// One lattice axis: `cells` equal-width cells spanning [lo, hi].
struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t cells = 2;

    double width() const { return (hi - lo) / static_cast<double>(cells); }
    double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width(); }

    /// Cell containing `x` (half-open cells, the upper bound belongs to the
    /// last cell). Empty when `x` is outside [lo, hi].
    std::optional<std::size_t> locate(double x) const;

    bool operator==(const Axis&) const = default;
};

/// Row-major lattice over an axis-aligned region. For policy grids axis 0 is
/// phase and the remaining axes are spatial.
class GridSpec {
public:
    GridSpec() = default;
    explicit GridSpec(std::vector<Axis> axes);

    std::size_t dims() const { return axes_.size(); }
    const Axis& axis(std::size_t d) const { return axes_.at(d); }
    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t size() const { return size_; }
    std::size_t stride(std::size_t d) const { return strides_.at(d); }

    std::size_t flat_index(std::span<const std::size_t> idx) const;
    void unravel(std::size_t flat, std::span<std::size_t> idx) const;
    Eigen::VectorXd center(std::size_t flat) const;
    double cell_volume() const;

    /// Cell containing `p`, or empty when `p` lies outside the region.
    std::optional<std::size_t> locate(const Eigen::Ref<const Eigen::VectorXd>& p) const;

    /// The spec with axis 0 removed (the spatial part of a policy grid).
    GridSpec spatial() const;
    /// Prepend a phase axis over [0, 1].
    GridSpec with_phase(std::size_t phase_cells) const;

    bool operator==(const GridSpec& other) const { return axes_ == other.axes_; }

private:
    std::vector<Axis> axes_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

/// Non-negative values over a GridSpec, optionally normalized to unit mass.
class GridDistribution {
public:
    GridDistribution() = default;
    GridDistribution(GridSpec spec, std::vector<double> values, bool normalized);

    /// Rescale `values` to unit mass. Throws std::invalid_argument when the
    /// total mass is zero or any value is negative or non-finite.
    static GridDistribution normalize(GridSpec spec, std::vector<double> values);

    const GridSpec& spec() const { return spec_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    bool normalized() const { return normalized_; }

    double sum() const;
    double entropy() const;
    std::size_t argmax() const;

    /// Cells per phase slice (product of the non-leading axes).
    std::size_t slice_size() const;
    std::span<const double> slice(std::size_t phase_cell) const;

    /// Binary layout: "NFGD", u32 version, u32 dims, per axis (f64 lo,
    /// f64 hi, u32 cells), u8 normalized, then f64 values in row-major order.
    /// All fields little-endian.
    std::vector<std::uint8_t> serialize() const;
    static GridDistribution deserialize(std::span<const std::uint8_t> bytes);
    std::size_t serialized_size() const;

private:
    GridSpec spec_;
    std::vector<double> values_;
    bool normalized_ = false;
};

/// Little-endian byte writer shared by the binary formats.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v);
    void f64(double v);
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void tag(const char (&t)[5]);
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}
    std::uint8_t u8();
    std::uint32_t u32();
    double f64();
    void expect_tag(const char (&t)[5]);
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const;
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void write_axes(ByteWriter& w, const GridSpec& spec);
GridSpec read_axes(ByteReader& r);

}  // namespace negfeed
