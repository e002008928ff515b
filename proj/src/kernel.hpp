#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace graydose {

struct GaussianTerm {
    double weight = 1.0;
    double sigma_um = 1.0;

    friend bool operator==(const GaussianTerm&, const GaussianTerm&) = default;
};

/// Radially symmetric mixture of Gaussians describing deposited energy per unit
/// area around a beam impact point:
///   K(r) = sum_i w_i / (pi s_i^2) exp(-r^2 / s_i^2),  sum_i w_i = 1.
class PointSpreadFunction {
public:
    /// Terms must already be normalized (sum of weights within 1e-12 of 1).
    explicit PointSpreadFunction(std::vector<GaussianTerm> terms);

    /// Normalizes arbitrary non-negative weights; `applied_factor` receives the
    /// multiplier applied to every weight.
    static PointSpreadFunction normalized(std::vector<GaussianTerm> terms, double* applied_factor = nullptr);

    std::span<const GaussianTerm> terms() const noexcept { return terms_; }
    double density(double r_um) const;
    double smallest_sigma() const;
    double largest_sigma() const;

private:
    std::vector<GaussianTerm> terms_;
};

/// Forward/backscatter decomposition: weights 1/(1+eta) at alpha and
/// eta/(1+eta) at beta. A zero eta drops the backscatter term.
PointSpreadFunction make_double_gaussian(double alpha_um, double beta_um, double eta);

/// Default stack model used throughout the tools.
PointSpreadFunction default_psf();

/// Fraction of the deposited energy inside a disc of radius r.
double radial_energy_cdf(const PointSpreadFunction& psf, double r_um);

/// Smallest radius enclosing at least 1 - fraction of the energy.
double truncation_radius(const PointSpreadFunction& psf, double fraction);

enum class ResolutionPolicy {
    warn,    // flag an under-resolved kernel and carry on
    strict,  // throw ErrorCode::under_resolved
};

/// PSF integrated over square cells of the simulation pitch, truncated to a
/// disc and renormalized to unit sum. Stored as a (2n+1) x (2n+1) grid with the
/// impact cell at the center.
class DiscreteKernel {
public:
    DiscreteKernel(std::size_t half_width, double pitch_um, double radius_um, std::vector<double> weights,
                   bool under_resolved);

    std::size_t half_width() const noexcept { return half_width_; }
    std::size_t extent() const noexcept { return 2 * half_width_ + 1; }
    double pitch() const noexcept { return pitch_; }
    double truncation_radius() const noexcept { return radius_; }
    bool under_resolved() const noexcept { return under_resolved_; }

    /// Weight at offset (dy, dx) cells from the center; zero outside the stored extent.
    double at(long dy, long dx) const noexcept;
    std::span<const double> weights() const noexcept { return weights_; }
    double sum() const;

private:
    std::size_t half_width_;
    double pitch_;
    double radius_;
    std::vector<double> weights_;
    bool under_resolved_;
};

constexpr double kDefaultTruncationFraction = 1e-4;

DiscreteKernel discretize(const PointSpreadFunction& psf, double pitch_um,
                          double truncation_fraction = kDefaultTruncationFraction,
                          ResolutionPolicy policy = ResolutionPolicy::warn);

/// Single-cell kernel; proximity-free exposure.
DiscreteKernel delta_kernel(double pitch_um);

/// Energy inside a disc of radius r for the discrete kernel, treating each
/// cell's weight as spread uniformly over the cell (exact cell/disc overlap).
double discrete_radial_cdf(const DiscreteKernel& kernel, double r_um);

/// Area of the intersection of the disc |p| <= r with [x0,x1] x [y0,y1].
double disc_rect_overlap(double r, double x0, double x1, double y0, double y1);

}  // namespace graydose
