#include "profile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace graydose {

namespace {

void validate(const BridgeSpec& spec, double full_height) {
    require(std::isfinite(full_height) && full_height > 0.0, ErrorCode::invalid_parameter,
            "resist thickness must be positive");
    require(spec.span_um > 0.0 && spec.width_um > 0.0 && spec.margin_um >= 0.0 && spec.apex_um > 0.0,
            ErrorCode::invalid_geometry, "bridge span, width and apex must be positive and margin non-negative");
    if (spec.apex_um > full_height) {
        fail(ErrorCode::target_exceeds_resist, "bridge apex " + std::to_string(spec.apex_um) +
                                                   " um exceeds resist thickness " + std::to_string(full_height) +
                                                   " um");
    }
    require(spec.apex_um <= 0.5 * spec.span_um, ErrorCode::invalid_geometry,
            "arc apex cannot exceed half the span");
}

}  // namespace

double arc_height(const BridgeSpec& spec, double x_um) {
    const double half = 0.5 * spec.span_um;
    if (std::abs(x_um) >= half) return 0.0;
    const double r = spec.arc_radius();
    return std::max(0.0, spec.apex_um - r + std::sqrt(r * r - x_um * x_um));
}

HeightMap arc_bridge_height_map(const BridgeSpec& spec, double full_height, double pitch_um) {
    validate(spec, full_height);
    require(std::isfinite(pitch_um) && pitch_um > 0.0, ErrorCode::invalid_parameter, "pitch must be positive");
    require(pitch_um <= spec.span_um / 16.0, ErrorCode::invalid_geometry,
            "pitch must resolve the span with at least 16 cells");

    const double extent_x = spec.span_um + 2.0 * spec.margin_um;
    const double extent_y = spec.width_um + 2.0 * spec.margin_um;
    const auto cols = static_cast<std::size_t>(std::ceil(extent_x / pitch_um - 1e-9));
    const auto rows = static_cast<std::size_t>(std::ceil(extent_y / pitch_um - 1e-9));
    // Origin chosen so the bridge center sits at (0, 0).
    HeightMap map(cols, rows, pitch_um, Quantity::height, 0.0, -0.5 * static_cast<double>(cols) * pitch_um,
                  -0.5 * static_cast<double>(rows) * pitch_um);

    const double half_span = 0.5 * spec.span_um;
    const double half_width = 0.5 * spec.width_um;
    for (std::size_t r = 0; r < rows; ++r) {
        // Cell centers are computed from the index offset so mirrored cells get identical values.
        const double y = (static_cast<double>(r) + 0.5 - 0.5 * static_cast<double>(rows)) * pitch_um;
        for (std::size_t c = 0; c < cols; ++c) {
            const double x = (static_cast<double>(c) + 0.5 - 0.5 * static_cast<double>(cols)) * pitch_um;
            if (std::abs(x) <= half_span && std::abs(y) <= half_width) map(r, c) = arc_height(spec, std::abs(x));
        }
    }
    return map;
}

HeightMap uniform_height_map(std::size_t cols, std::size_t rows, double pitch_um, double full_height) {
    require(std::isfinite(full_height) && full_height > 0.0, ErrorCode::invalid_parameter,
            "resist thickness must be positive");
    return HeightMap(cols, rows, pitch_um, Quantity::height, full_height);
}

HeightMap compose(const HeightMap& base, const HeightMap& patch, double x_um, double y_um) {
    if (std::abs(base.pitch() - patch.pitch()) > 1e-12 * base.pitch()) {
        fail(ErrorCode::incompatible_grid, "pitch mismatch: base " + std::to_string(base.pitch()) + " um, patch " +
                                               std::to_string(patch.pitch()) + " um");
    }
    const double fc = (x_um - base.origin_x()) / base.pitch();
    const double fr = (y_um - base.origin_y()) / base.pitch();
    const double rc = std::round(fc);
    const double rr = std::round(fr);
    require(std::abs(fc - rc) <= 1e-6 && std::abs(fr - rr) <= 1e-6, ErrorCode::invalid_geometry,
            "patch position is not on the base lattice");
    require(rc >= 0.0 && rr >= 0.0 && rc + static_cast<double>(patch.cols()) <= static_cast<double>(base.cols()) &&
                rr + static_cast<double>(patch.rows()) <= static_cast<double>(base.rows()),
            ErrorCode::invalid_geometry, "patch does not fit inside the base grid at the given position");

    HeightMap out = base;
    const auto c0 = static_cast<std::size_t>(rc);
    const auto r0 = static_cast<std::size_t>(rr);
    for (std::size_t r = 0; r < patch.rows(); ++r)
        for (std::size_t c = 0; c < patch.cols(); ++c) out(r0 + r, c0 + c) = std::min(out(r0 + r, c0 + c), patch(r, c));
    return out;
}

HeightMap centered_bridge_field(const BridgeSpec& spec, double full_height, double pitch_um, std::size_t cols,
                                std::size_t rows) {
    const HeightMap patch = arc_bridge_height_map(spec, full_height, pitch_um);
    require(patch.cols() <= cols && patch.rows() <= rows, ErrorCode::invalid_geometry,
            "field too small for the bridge footprint");
    require((cols - patch.cols()) % 2 == 0 && (rows - patch.rows()) % 2 == 0, ErrorCode::invalid_geometry,
            "field and bridge cell counts must share parity to center the bridge");
    const HeightMap base = uniform_height_map(cols, rows, pitch_um, full_height);
    return compose(base, patch, static_cast<double>((cols - patch.cols()) / 2) * pitch_um,
                   static_cast<double>((rows - patch.rows()) / 2) * pitch_um);
}

}  // namespace graydose
