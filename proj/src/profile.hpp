#pragma once

#include "grid.hpp"

namespace graydose {

/// Airbridge target: circular-arc deck along x, extruded across its width, with
/// a cleared margin around the footprint.
struct BridgeSpec {
    double span_um = 28.0;    // foot to foot along the bridge axis
    double apex_um = 3.0;     // arc height at the center
    double width_um = 8.0;    // deck width across the axis
    double margin_um = 4.0;   // zero-height border around the deck

    double arc_radius() const { return span_um * span_um / (8.0 * apex_um) + 0.5 * apex_um; }
};

/// Arc height at distance x from the bridge center, clamped at zero beyond the feet.
double arc_height(const BridgeSpec& spec, double x_um);

/// Patch covering the deck plus margin, centered on the bridge. Values follow
/// the arc on the deck and are zero in the margin.
HeightMap arc_bridge_height_map(const BridgeSpec& spec, double full_height, double pitch_um);

/// Uniform unexposed field of the given size.
HeightMap uniform_height_map(std::size_t cols, std::size_t rows, double pitch_um, double full_height);

/// Cell-wise minimum of base and patch with the patch's top-left corner at
/// (x_um, y_um) in base coordinates. The offset must land on the base lattice.
HeightMap compose(const HeightMap& base, const HeightMap& patch, double x_um, double y_um);

/// Places the bridge patch centered on the field.
HeightMap centered_bridge_field(const BridgeSpec& spec, double full_height, double pitch_um, std::size_t cols,
                                std::size_t rows);

}  // namespace graydose
