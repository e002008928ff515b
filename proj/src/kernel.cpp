#include "kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "error.hpp"

namespace graydose {

namespace {

void validate_terms(const std::vector<GaussianTerm>& terms) {
    require(!terms.empty(), ErrorCode::invalid_parameter, "PSF needs at least one term");
    for (const auto& t : terms) {
        require(std::isfinite(t.sigma_um) && t.sigma_um > 0.0, ErrorCode::invalid_parameter,
                "PSF sigma must be positive, got " + std::to_string(t.sigma_um));
        require(std::isfinite(t.weight) && t.weight >= 0.0, ErrorCode::invalid_parameter,
                "PSF weight must be non-negative, got " + std::to_string(t.weight));
    }
}

// Probability mass of a 1D normal with density exp(-x^2/s^2)/(s sqrt(pi)) on [a, b].
double axis_mass(double a, double b, double sigma) {
    const double ua = a / sigma;
    const double ub = b / sigma;
    if (ua >= 0.0) return 0.5 * (std::erfc(ua) - std::erfc(ub));
    if (ub <= 0.0) return 0.5 * (std::erfc(-ub) - std::erfc(-ua));
    return 0.5 * (std::erf(ub) - std::erf(ua));
}

// Antiderivative of sqrt(r^2 - x^2) on [-r, r].
double half_chord_integral(double r, double x) {
    x = std::clamp(x, -r, r);
    return 0.5 * (x * std::sqrt(std::max(0.0, r * r - x * x)) + r * r * std::asin(x / r));
}

}  // namespace

PointSpreadFunction::PointSpreadFunction(std::vector<GaussianTerm> terms) : terms_(std::move(terms)) {
    validate_terms(terms_);
    double total = 0.0;
    for (const auto& t : terms_) total += t.weight;
    require(std::abs(total - 1.0) <= 1e-12, ErrorCode::invalid_parameter,
            "PSF weights must sum to 1, got " + std::to_string(total));
}

PointSpreadFunction PointSpreadFunction::normalized(std::vector<GaussianTerm> terms, double* applied_factor) {
    validate_terms(terms);
    double total = 0.0;
    for (const auto& t : terms) total += t.weight;
    require(total > 0.0, ErrorCode::invalid_parameter, "PSF weights sum to zero");
    const double factor = 1.0 / total;
    for (auto& t : terms) t.weight *= factor;
    if (applied_factor) *applied_factor = factor;
    return PointSpreadFunction(std::move(terms));
}

double PointSpreadFunction::density(double r_um) const {
    double k = 0.0;
    for (const auto& t : terms_) {
        const double s2 = t.sigma_um * t.sigma_um;
        k += t.weight / (std::numbers::pi * s2) * std::exp(-r_um * r_um / s2);
    }
    return k;
}

double PointSpreadFunction::smallest_sigma() const {
    return std::min_element(terms_.begin(), terms_.end(), [](auto& a, auto& b) { return a.sigma_um < b.sigma_um; })
        ->sigma_um;
}

double PointSpreadFunction::largest_sigma() const {
    return std::max_element(terms_.begin(), terms_.end(), [](auto& a, auto& b) { return a.sigma_um < b.sigma_um; })
        ->sigma_um;
}

PointSpreadFunction make_double_gaussian(double alpha_um, double beta_um, double eta) {
    require(std::isfinite(alpha_um) && alpha_um > 0.0, ErrorCode::invalid_parameter, "alpha must be positive");
    require(std::isfinite(beta_um) && beta_um > 0.0, ErrorCode::invalid_parameter, "beta must be positive");
    require(std::isfinite(eta) && eta >= 0.0, ErrorCode::invalid_parameter, "eta must be non-negative");
    if (eta == 0.0) return PointSpreadFunction({{1.0, alpha_um}});
    const double back = eta / (1.0 + eta);
    return PointSpreadFunction({{1.0 - back, alpha_um}, {back, beta_um}});
}

PointSpreadFunction default_psf() { return make_double_gaussian(0.03, 30.0, 1.0); }

double radial_energy_cdf(const PointSpreadFunction& psf, double r_um) {
    require(std::isfinite(r_um) && r_um >= 0.0, ErrorCode::invalid_parameter, "radius must be non-negative");
    double f = 0.0;
    for (const auto& t : psf.terms()) f += t.weight * -std::expm1(-(r_um * r_um) / (t.sigma_um * t.sigma_um));
    return std::min(f, 1.0);
}

double truncation_radius(const PointSpreadFunction& psf, double fraction) {
    require(fraction > 0.0 && fraction < 1.0, ErrorCode::invalid_parameter, "truncation fraction must be in (0, 1)");
    const double goal = 1.0 - fraction;
    double hi = psf.largest_sigma();
    while (radial_energy_cdf(psf, hi) < goal) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (radial_energy_cdf(psf, mid) >= goal ? hi : lo) = mid;
    }
    return hi;
}

DiscreteKernel::DiscreteKernel(std::size_t half_width, double pitch_um, double radius_um, std::vector<double> weights,
                               bool under_resolved)
    : half_width_(half_width),
      pitch_(pitch_um),
      radius_(radius_um),
      weights_(std::move(weights)),
      under_resolved_(under_resolved) {
    require(weights_.size() == extent() * extent(), ErrorCode::invalid_parameter, "kernel weight count mismatch");
    require(pitch_ > 0.0, ErrorCode::invalid_parameter, "kernel pitch must be positive");
}

double DiscreteKernel::at(long dy, long dx) const noexcept {
    const long n = static_cast<long>(half_width_);
    if (dy < -n || dy > n || dx < -n || dx > n) return 0.0;
    return weights_[static_cast<std::size_t>((dy + n) * static_cast<long>(extent()) + (dx + n))];
}

double DiscreteKernel::sum() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

DiscreteKernel discretize(const PointSpreadFunction& psf, double pitch_um, double truncation_fraction,
                          ResolutionPolicy policy) {
    require(std::isfinite(pitch_um) && pitch_um > 0.0, ErrorCode::invalid_parameter, "pitch must be positive");
    require(truncation_fraction > 0.0 && truncation_fraction < 1.0, ErrorCode::invalid_parameter,
            "truncation fraction must be in (0, 1)");
    const bool under_resolved = pitch_um > psf.smallest_sigma();
    if (under_resolved && policy == ResolutionPolicy::strict) {
        fail(ErrorCode::under_resolved, "pitch " + std::to_string(pitch_um) + " um exceeds smallest sigma " +
                                            std::to_string(psf.smallest_sigma()) + " um");
    }

    const double radius = truncation_radius(psf, truncation_fraction);
    const auto n = static_cast<std::size_t>(std::ceil(radius / pitch_um));
    const std::size_t extent = 2 * n + 1;

    // Separable per-axis cell masses for every term.
    std::vector<std::vector<double>> axis(psf.terms().size(), std::vector<double>(extent));
    for (std::size_t t = 0; t < psf.terms().size(); ++t) {
        const double sigma = psf.terms()[t].sigma_um;
        for (std::size_t i = 0; i < extent; ++i) {
            const double c = (static_cast<double>(i) - static_cast<double>(n)) * pitch_um;
            axis[t][i] = axis_mass(c - 0.5 * pitch_um, c + 0.5 * pitch_um, sigma);
        }
    }

    std::vector<double> w(extent * extent, 0.0);
    const double r2 = radius * radius;
    for (std::size_t iy = 0; iy < extent; ++iy) {
        const double y = (static_cast<double>(iy) - static_cast<double>(n)) * pitch_um;
        for (std::size_t ix = 0; ix < extent; ++ix) {
            const double x = (static_cast<double>(ix) - static_cast<double>(n)) * pitch_um;
            if (x * x + y * y > r2) continue;
            double v = 0.0;
            for (std::size_t t = 0; t < psf.terms().size(); ++t) v += psf.terms()[t].weight * axis[t][iy] * axis[t][ix];
            w[iy * extent + ix] = v;
        }
    }
    // Renormalize with a compensated sum so the cell total is 1 to rounding.
    long double total = 0.0L;
    for (double v : w) total += v;
    const double scale = static_cast<double>(1.0L / total);
    for (double& v : w) v *= scale;
    return DiscreteKernel(n, pitch_um, radius, std::move(w), under_resolved);
}

DiscreteKernel delta_kernel(double pitch_um) { return DiscreteKernel(0, pitch_um, 0.0, {1.0}, false); }

double disc_rect_overlap(double r, double x0, double x1, double y0, double y1) {
    if (r <= 0.0) return 0.0;
    const double lo = std::max(x0, -r);
    const double hi = std::min(x1, r);
    if (hi <= lo || y1 <= y0) return 0.0;

    std::vector<double> cuts{lo, hi};
    for (double y : {y0, y1}) {
        if (std::abs(y) < r) {
            const double x = std::sqrt(r * r - y * y);
            for (double c : {-x, x})
                if (c > lo && c < hi) cuts.push_back(c);
        }
    }
    std::sort(cuts.begin(), cuts.end());

    double area = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        if (b <= a) continue;
        const double m = 0.5 * (a + b);
        const double s = std::sqrt(std::max(0.0, r * r - m * m));
        const bool upper_is_arc = s < y1;
        const bool lower_is_arc = -s > y0;
        const double top = upper_is_arc ? s : y1;
        const double bottom = lower_is_arc ? -s : y0;
        if (top <= bottom) continue;
        const double arc = half_chord_integral(r, b) - half_chord_integral(r, a);
        area += (upper_is_arc ? arc : y1 * (b - a)) - (lower_is_arc ? -arc : y0 * (b - a));
    }
    return area;
}

double discrete_radial_cdf(const DiscreteKernel& kernel, double r_um) {
    require(std::isfinite(r_um) && r_um >= 0.0, ErrorCode::invalid_parameter, "radius must be non-negative");
    const long n = static_cast<long>(kernel.half_width());
    const double p = kernel.pitch();
    const double cell_area = p * p;
    double f = 0.0;
    for (long iy = -n; iy <= n; ++iy) {
        for (long ix = -n; ix <= n; ++ix) {
            const double w = kernel.at(iy, ix);
            if (w == 0.0) continue;
            const double x0 = (static_cast<double>(ix) - 0.5) * p;
            const double y0 = (static_cast<double>(iy) - 0.5) * p;
            const double nx = std::max({x0, -(x0 + p), 0.0});
            const double ny = std::max({y0, -(y0 + p), 0.0});
            if (nx * nx + ny * ny >= r_um * r_um) continue;
            const double fx = std::max(std::abs(x0), std::abs(x0 + p));
            const double fy = std::max(std::abs(y0), std::abs(y0 + p));
            if (fx * fx + fy * fy <= r_um * r_um) {
                f += w;
                continue;
            }
            f += w * disc_rect_overlap(r_um, x0, x0 + p, y0, y0 + p) / cell_area;
        }
    }
    return std::min(f, 1.0);
}

}  // namespace graydose
