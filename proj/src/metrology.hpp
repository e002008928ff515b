#pragma once

#include <optional>
#include <span>
#include <vector>

#include "grid.hpp"

namespace graydose {

struct ProfilePoint {
    double x = 0.0;  // um along the cut
    double h = 0.0;  // um
};

/// Circle through a profilometer cut: center (center_x, center_h) and radius.
struct ProfileFit {
    double center_x = 0.0;
    double center_h = 0.0;
    double radius = 0.0;
    double rms_residual = 0.0;  // sqrt(mean((|p_i - c| - R)^2))
    int iterations = 0;         // geometric refinement steps taken

    /// Upper branch h(x) = b + sqrt(R^2 - (x - a)^2); NaN off the circle.
    double upper_branch(double x) const;
};

/// Algebraic (Kasa) least-squares circle; the seed for circle_fit.
ProfileFit kasa_fit(std::span<const ProfilePoint> points);

/// Kasa seed refined by Gauss-Newton on orthogonal distances (at most 50
/// steps, stops when the step is below 1e-10 um). Refinement never accepts a
/// step that raises the rms residual.
ProfileFit circle_fit(std::span<const ProfilePoint> points);

/// Line through the height map along which a trace was measured: trace
/// coordinate s maps to (x0 + s cos(angle), y0 + s sin(angle)).
struct AxisCut {
    double x0 = 0.0;
    double y0 = 0.0;
    double angle_rad = 0.0;
};

struct ProfileError {
    double max_abs = 0.0;
    double rms = 0.0;
};

/// Bilinear interpolation between cell centers; throws invalid_geometry
/// outside the hull of cell centers.
double sample_bilinear(const Grid& grid, double x_um, double y_um);

ProfileError profile_error(std::span<const ProfilePoint> trace, const HeightMap& target, const AxisCut& cut);

struct TransmissionPoint {
    double freq_ghz = 0.0;
    double mag_db = 0.0;
};

struct TransmissionTrace {
    std::vector<TransmissionPoint> points;
    double power_dbm = 0.0;
};

/// Lorentzian dip |S|^2 = B (1 - A / (1 + 4 ((f - f0) / kappa)^2)) fitted in linear power.
struct ResonanceFit {
    double f0_ghz = 0.0;
    double kappa_ghz = 0.0;
    double depth = 0.0;
    double baseline = 1.0;
    bool degraded = false;  // least squares failed; f0 is the discrete minimum
};

ResonanceFit fit_resonance(const TransmissionTrace& trace);

enum class ShiftSign { positive, negative };

struct ShiftResult {
    double f_low_ghz = 0.0;
    double f_high_ghz = 0.0;
    double shift_mhz = 0.0;
    double threshold_mhz = 0.0;
    bool threshold_is_default = false;
    bool operable = false;
    ShiftSign sign = ShiftSign::positive;
    bool degraded = false;
};

/// max(0.1 MHz, 5 x the coarser median frequency step of the two traces).
double default_shift_threshold_mhz(const TransmissionTrace& low, const TransmissionTrace& high);

/// Resonance shift from the low-power to the high-power trace.
ShiftResult power_shift(const TransmissionTrace& low, const TransmissionTrace& high,
                        std::optional<double> threshold_mhz = std::nullopt);

}  // namespace graydose
