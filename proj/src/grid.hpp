#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace graydose {

enum class Quantity { height, dose, energy };

std::string_view to_string(Quantity q);
/// Canonical unit token written to grid files: "um" for heights, "uC/cm2" otherwise.
std::string_view unit_of(Quantity q);

/// Uniform 2D grid, row-major, row 0 first. Cell (r, c) is centered at
/// (origin_x + (c + 0.5) pitch, origin_y + (r + 0.5) pitch); the y axis runs
/// down the rows, matching the order rows are written to grid files.
class Grid {
public:
    Grid() = default;
    Grid(std::size_t cols, std::size_t rows, double pitch, Quantity quantity, double fill = 0.0,
         double origin_x = 0.0, double origin_y = 0.0);

    std::size_t cols() const noexcept { return cols_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return values_.size(); }
    double pitch() const noexcept { return pitch_; }
    Quantity quantity() const noexcept { return quantity_; }
    double origin_x() const noexcept { return origin_x_; }
    double origin_y() const noexcept { return origin_y_; }

    double x_center(std::size_t c) const noexcept { return origin_x_ + (static_cast<double>(c) + 0.5) * pitch_; }
    double y_center(std::size_t r) const noexcept { return origin_y_ + (static_cast<double>(r) + 0.5) * pitch_; }
    double width_um() const noexcept { return static_cast<double>(cols_) * pitch_; }
    double height_um() const noexcept { return static_cast<double>(rows_) * pitch_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    double min() const;
    double max() const;

    /// Same shape, pitch and origin.
    bool same_geometry(const Grid& other) const noexcept;

    /// Copy with a different quantity tag; values untouched.
    Grid retagged(Quantity q) const;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t cols_ = 0;
    std::size_t rows_ = 0;
    double pitch_ = 1.0;
    Quantity quantity_ = Quantity::height;
    double origin_x_ = 0.0;
    double origin_y_ = 0.0;
    std::vector<double> values_;
};

using HeightMap = Grid;
using DoseMap = Grid;

}  // namespace graydose
