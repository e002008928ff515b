#include "grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace graydose {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_parameter: return "invalid-parameter";
        case ErrorCode::io: return "io";
        case ErrorCode::parse: return "parse";
        case ErrorCode::incompatible_grid: return "incompatible-grid";
        case ErrorCode::invalid_geometry: return "invalid-geometry";
        case ErrorCode::target_exceeds_resist: return "target-exceeds-resist";
        case ErrorCode::infeasible_target: return "infeasible-target";
        case ErrorCode::bad_calibration: return "bad-calibration";
        case ErrorCode::incomplete_calibration: return "incomplete-calibration";
        case ErrorCode::insufficient_data: return "insufficient-data";
        case ErrorCode::degenerate_geometry: return "degenerate-geometry";
        case ErrorCode::degenerate_data: return "degenerate-data";
        case ErrorCode::no_resonance: return "no-resonance";
        case ErrorCode::out_of_support: return "out-of-support";
        case ErrorCode::under_resolved: return "under-resolved";
    }
    return "unknown";
}

std::string_view to_string(Quantity q) {
    switch (q) {
        case Quantity::height: return "height";
        case Quantity::dose: return "dose";
        case Quantity::energy: return "energy";
    }
    return "height";
}

std::string_view unit_of(Quantity q) { return q == Quantity::height ? "um" : "uC/cm2"; }

Grid::Grid(std::size_t cols, std::size_t rows, double pitch, Quantity quantity, double fill,
           double origin_x, double origin_y)
    : cols_(cols), rows_(rows), pitch_(pitch), quantity_(quantity), origin_x_(origin_x), origin_y_(origin_y) {
    require(cols > 0 && rows > 0, ErrorCode::invalid_parameter, "grid dimensions must be positive");
    require(std::isfinite(pitch) && pitch > 0.0, ErrorCode::invalid_parameter, "grid pitch must be positive");
    values_.assign(cols * rows, fill);
}

double Grid::min() const { return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()); }
double Grid::max() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }

bool Grid::same_geometry(const Grid& other) const noexcept {
    return cols_ == other.cols_ && rows_ == other.rows_ && pitch_ == other.pitch_ && origin_x_ == other.origin_x_ &&
           origin_y_ == other.origin_y_;
}

Grid Grid::retagged(Quantity q) const {
    Grid out = *this;
    out.quantity_ = q;
    return out;
}

}  // namespace graydose
