#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stem {

/// Thrown when an argument violates an operation's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Dense row-major 2-D array. Rows index the y axis, columns the x axis.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    std::vector<T>& values() noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Boolean masks are stored as bytes so that element references are real references.
using Mask = Grid<std::uint8_t>;

/// Lattice geometry: element (r, c) sits at model coordinates
/// (origin.x + c * spacing, origin.y + r * spacing).
struct GridGeometry {
    std::size_t height = 0;
    std::size_t width = 0;
    double spacing = 1.0;
    Point2 origin{};

    Point2 coords(std::size_t row, std::size_t col) const {
        return {origin.x + static_cast<double>(col) * spacing,
                origin.y + static_cast<double>(row) * spacing};
    }

    /// Area of the domain in model units (one cell per sample).
    double area() const {
        return static_cast<double>(height) * static_cast<double>(width) * spacing * spacing;
    }

    void validate() const;
};

/// A sampled field: signal, noise, observed or smoothed.
struct GridField {
    Grid<double> values;
    double spacing = 1.0;
    Point2 origin{};

    GridField() = default;
    explicit GridField(const GridGeometry& geometry, double fill = 0.0)
        : values(geometry.height, geometry.width, fill),
          spacing(geometry.spacing),
          origin(geometry.origin) {}

    std::size_t height() const noexcept { return values.rows(); }
    std::size_t width() const noexcept { return values.cols(); }

    GridGeometry geometry() const { return {values.rows(), values.cols(), spacing, origin}; }

    double& operator()(std::size_t r, std::size_t c) { return values(r, c); }
    double operator()(std::size_t r, std::size_t c) const { return values(r, c); }

    /// Throws DomainError unless the field is at least 3x3 with finite values.
    void validate() const;
};

GridField operator+(const GridField& a, const GridField& b);

}  // namespace stem
