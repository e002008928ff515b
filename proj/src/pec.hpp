#pragma once

#include <cstddef>
#include <vector>

#include "contrast.hpp"
#include "convolver.hpp"
#include "error.hpp"
#include "grid.hpp"
#include "kernel.hpp"

namespace graydose {

struct ExposureOptions {
    Boundary boundary = Boundary::zero_pad;
    unsigned threads = 1;
};

/// Absorbed energy (dose-equivalent units): dose (*) kernel.
Grid absorbed_energy(const DoseMap& dose, const DiscreteKernel& kernel, const ExposureOptions& options = {});

/// Remnant height after exposure and development.
HeightMap forward_simulate(const DoseMap& dose, const DiscreteKernel& kernel, const ContrastCurve& curve,
                           const ExposureOptions& options = {});

struct SolverOptions {
    double tolerance_um = 0.0;  // <= 0: 1% of the resist thickness
    int max_iterations = 200;
    double relaxation = 1.0;
    double max_dose = 0.0;      // <= 0: five times the clearing dose
    Boundary boundary = Boundary::zero_pad;
    unsigned threads = 1;
};

struct SolverReport {
    int iterations = 0;
    double max_error_um = 0.0;
    bool converged = false;
    std::vector<double> error_trace;  // max height error per iteration, um
    double tolerance_um = 0.0;
    double max_dose = 0.0;
    double guard_band_um = 0.0;       // edge band sensitive to unmodelled exterior exposure
};

struct DoseSolution {
    DoseMap dose;
    SolverReport report;
};

/// Raised when no admissible dose can reach the target: full-height cells whose
/// background already exceeds the onset dose with zero local dose, or cleared
/// cells that stay below the clearing dose at the dose cap.
class InfeasibleTarget : public Error {
public:
    InfeasibleTarget(const std::string& what, HeightMap diagnostic, DoseSolution best)
        : Error(ErrorCode::infeasible_target, what), diagnostic_(std::move(diagnostic)), best_(std::move(best)) {}

    /// Height error (um) on cells that cannot be fixed, zero elsewhere.
    const HeightMap& diagnostic() const noexcept { return diagnostic_; }
    const DoseSolution& best_effort() const noexcept { return best_; }

private:
    HeightMap diagnostic_;
    DoseSolution best_;
};

/// Dose map whose forward simulation reproduces the target heights.
///
/// The target is first inverted pointwise through the contrast curve to an
/// energy map E* (D0 on full-height cells, Dc on cleared cells), then the dose
/// is refined by the projected fixed-point iteration
///   d <- clamp(d + relaxation * (E* - d (*) K), 0, max_dose)
/// starting from d = E*. Convergence is judged on simulated height. Hitting
/// max_iterations yields a report with converged = false rather than an error.
DoseSolution solve_dose(const HeightMap& target, const DiscreteKernel& kernel, const ContrastCurve& curve,
                        const SolverOptions& options = {});

/// Per-cell height error using the one-sided rule on full-height and cleared cells.
double height_error(double target, double simulated, double full_height) noexcept;

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;  // um

    friend bool operator==(const Rect&, const Rect&) = default;
};

struct DoseLayer {
    double dose = 0.0;  // uC/cm^2
    std::vector<Rect> rects;

    friend bool operator==(const DoseLayer&, const DoseLayer&) = default;
};

struct DoseLayers {
    std::vector<DoseLayer> levels;

    std::size_t rect_count() const;
    friend bool operator==(const DoseLayers&, const DoseLayers&) = default;
};

constexpr int kDefaultDoseLevels = 256;

/// Snaps every nonzero cell to the nearest of n_levels uniform doses spanning
/// [min nonzero, max] and fractures each level into rectangles: row runs first,
/// then identical runs in consecutive rows are merged.
DoseLayers quantize(const DoseMap& dose, int n_levels = kDefaultDoseLevels);

/// Rasterizes layers back onto a grid with the given geometry.
DoseMap dequantize(const DoseLayers& layers, const Grid& geometry);

}  // namespace graydose
