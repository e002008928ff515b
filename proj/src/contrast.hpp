#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace graydose {

constexpr double kDefaultResistThickness = 3.0;   // um, thinned PMGI stack
constexpr double kInitialResistThickness = 6.4;   // um, original calibration stack

struct ContrastSample {
    double dose = 0.0;    // uC/cm^2
    double height = 0.0;  // um
};

struct ContrastKnot {
    double dose = 0.0;
    double height = 0.0;

    friend bool operator==(const ContrastKnot&, const ContrastKnot&) = default;
};

/// Remnant height after development as a function of absorbed dose.
///
/// Constant at full_height up to onset_dose, zero from clearing_dose on and
/// strictly decreasing in between. The interior is either a monotone cubic
/// Hermite interpolant through knots in (ln(dose + log_offset), height), or the
/// parametric form  T0 * (1 - (ln(D/D0) / ln(Dc/D0))^gamma).
class ContrastCurve {
public:
    enum class Model { interpolated, parametric };

    /// Knots must start at (D0, T0), end at (Dc, 0) and have strictly
    /// increasing doses with strictly decreasing heights.
    static ContrastCurve interpolated(double full_height, std::vector<ContrastKnot> knots);
    static ContrastCurve parametric(double full_height, double onset_dose, double clearing_dose, double gamma);

    Model model() const noexcept { return model_; }
    double full_height() const noexcept { return full_height_; }
    double onset_dose() const noexcept { return onset_dose_; }
    double clearing_dose() const noexcept { return clearing_dose_; }
    double gamma() const noexcept { return gamma_; }
    double log_offset() const noexcept { return log_offset_; }
    std::span<const ContrastKnot> knots() const noexcept { return knots_; }

    /// Height for an absorbed dose; dose >= 0.
    double height(double dose) const;
    /// Unique dose on [D0, Dc] producing the height; height in [0, T0].
    double dose(double height) const;

    /// Same as height() without argument validation, for hot loops.
    double height_unchecked(double dose) const noexcept;

private:
    ContrastCurve() = default;
    double interior_height(double dose) const noexcept;

    Model model_ = Model::interpolated;
    double full_height_ = 0.0;
    double onset_dose_ = 0.0;
    double clearing_dose_ = 0.0;
    double gamma_ = 1.0;
    double log_offset_ = 0.0;
    std::vector<ContrastKnot> knots_;
    std::vector<double> u_;      // ln(dose + log_offset) per knot
    std::vector<double> slope_;  // dh/du per knot
};

struct ContrastFitOptions {
    /// Lowest-dose block must lie within this fraction of T0 of full height, and
    /// the highest-dose block within it of zero, to count as calibration anchors.
    double anchor_tolerance = 0.05;
    /// Isotonic repairs moving any sample further than this fraction of T0 mean
    /// the data is not a contrast curve.
    double repair_threshold = 0.10;
};

struct ContrastFitReport {
    double max_repair_displacement = 0.0;  // um
    double rms_residual = 0.0;             // um, curve vs. raw samples
    std::size_t sample_count = 0;
};

ContrastCurve fit_contrast(std::span<const ContrastSample> samples, double full_height,
                           const ContrastFitOptions& options = {}, ContrastFitReport* report = nullptr);

/// Parametric model with D0 and Dc taken from the monotone fit and gamma chosen
/// by least squares; useful for extrapolating sparse calibrations.
ContrastCurve fit_parametric_contrast(std::span<const ContrastSample> samples, double full_height,
                                      const ContrastFitOptions& options = {}, ContrastFitReport* report = nullptr);

/// RMS of curve(dose) - height over the samples.
double contrast_residual(const ContrastCurve& curve, std::span<const ContrastSample> samples);

inline double height_for_dose(const ContrastCurve& curve, double dose) { return curve.height(dose); }
inline double dose_for_height(const ContrastCurve& curve, double height) { return curve.dose(height); }

}  // namespace graydose
