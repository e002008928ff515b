#include "contrast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "error.hpp"

namespace graydose {

namespace {

// Monotone cubic Hermite slopes (Fritsch-Butland interior, shape-preserving ends).
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n == 2) {
        d[0] = d[1] = (y[1] - y[0]) / (x[1] - x[0]);
        return d;
    }
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x[k + 1] - x[k];
        delta[k] = (y[k + 1] - y[k]) / h[k];
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (delta[k - 1] * delta[k] <= 0.0) continue;
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return s;
    };
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
}

struct Block {
    std::size_t first;
    std::size_t last;
    double sum;
    double mean() const { return sum / static_cast<double>(last - first + 1); }
};

// Pool-adjacent-violators for a non-increasing fit with unit weights. Equal
// neighbours are pooled too so every block has a distinct level.
std::vector<Block> isotonic_decreasing(const std::vector<double>& y) {
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < y.size(); ++i) {
        blocks.push_back({i, i, y[i]});
        while (blocks.size() > 1) {
            const Block& b = blocks.back();
            const Block& a = blocks[blocks.size() - 2];
            if (a.mean() > b.mean()) break;
            Block merged{a.first, b.last, a.sum + b.sum};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    return blocks;
}

struct MonotoneFit {
    std::vector<ContrastSample> sorted;
    std::vector<ContrastKnot> knots;
    double max_displacement = 0.0;
};

MonotoneFit monotone_fit(std::span<const ContrastSample> samples, double full_height,
                         const ContrastFitOptions& options) {
    require(std::isfinite(full_height) && full_height > 0.0, ErrorCode::invalid_parameter,
            "full height must be positive");
    require(samples.size() >= 4, ErrorCode::incomplete_calibration,
            "contrast calibration needs at least 4 samples, got " + std::to_string(samples.size()));
    for (const auto& s : samples) {
        require(std::isfinite(s.dose) && s.dose >= 0.0 && std::isfinite(s.height) && s.height >= 0.0,
                ErrorCode::invalid_parameter, "contrast samples must be finite and non-negative");
    }

    MonotoneFit fit;
    fit.sorted.assign(samples.begin(), samples.end());
    std::sort(fit.sorted.begin(), fit.sorted.end(), [](auto& a, auto& b) { return a.dose < b.dose; });
    for (std::size_t i = 1; i < fit.sorted.size(); ++i) {
        require(fit.sorted[i].dose != fit.sorted[i - 1].dose, ErrorCode::invalid_parameter,
                "duplicate calibration dose " + std::to_string(fit.sorted[i].dose));
    }

    std::vector<double> clipped(fit.sorted.size());
    std::transform(fit.sorted.begin(), fit.sorted.end(), clipped.begin(),
                   [&](const ContrastSample& s) { return std::min(s.height, full_height); });
    std::vector<Block> blocks = isotonic_decreasing(clipped);

    const double tol = options.anchor_tolerance * full_height;
    require(blocks.size() >= 2 && blocks.front().mean() >= full_height - tol, ErrorCode::incomplete_calibration,
            "calibration lacks a full-height anchor at low dose");
    require(blocks.back().mean() <= tol, ErrorCode::incomplete_calibration,
            "calibration lacks a zero-height anchor at high dose");

    // Level assigned to every sample after isotonic repair and anchor snapping.
    std::vector<double> level(clipped.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        double v = blocks[b].mean();
        if (b == 0) v = full_height;
        if (b + 1 == blocks.size()) v = 0.0;
        for (std::size_t i = blocks[b].first; i <= blocks[b].last; ++i) level[i] = v;
    }
    for (std::size_t i = 0; i < clipped.size(); ++i)
        fit.max_displacement = std::max(fit.max_displacement, std::abs(level[i] - clipped[i]));
    if (fit.max_displacement > options.repair_threshold * full_height) {
        fail(ErrorCode::bad_calibration,
             "calibration is not monotone: isotonic repair moves a sample by " +
                 std::to_string(fit.max_displacement) + " um (limit " +
                 std::to_string(options.repair_threshold * full_height) + " um)");
    }

    const double onset = fit.sorted[blocks.front().last].dose;
    const double clearing = fit.sorted[blocks.back().first].dose;
    const double offset = onset > 0.0 ? 0.0 : 1e-3 * clearing;

    fit.knots.push_back({onset, full_height});
    for (std::size_t b = 1; b + 1 < blocks.size(); ++b) {
        // Pooled blocks collapse to one knot at the mean log-dose.
        double u = 0.0;
        for (std::size_t i = blocks[b].first; i <= blocks[b].last; ++i) u += std::log(fit.sorted[i].dose + offset);
        u /= static_cast<double>(blocks[b].last - blocks[b].first + 1);
        const double dose = blocks[b].first == blocks[b].last ? fit.sorted[blocks[b].first].dose : std::exp(u) - offset;
        fit.knots.push_back({dose, blocks[b].mean()});
    }
    fit.knots.push_back({clearing, 0.0});
    return fit;
}

}  // namespace

ContrastCurve ContrastCurve::interpolated(double full_height, std::vector<ContrastKnot> knots) {
    require(std::isfinite(full_height) && full_height > 0.0, ErrorCode::invalid_parameter,
            "full height must be positive");
    require(knots.size() >= 2, ErrorCode::invalid_parameter, "contrast curve needs at least two knots");
    require(knots.front().height == full_height && knots.back().height == 0.0, ErrorCode::invalid_parameter,
            "contrast knots must run from full height to zero");
    require(knots.front().dose >= 0.0, ErrorCode::invalid_parameter, "onset dose must be non-negative");
    for (std::size_t k = 1; k < knots.size(); ++k) {
        require(knots[k].dose > knots[k - 1].dose && knots[k].height < knots[k - 1].height,
                ErrorCode::invalid_parameter, "contrast knots must be strictly monotone");
    }
    ContrastCurve c;
    c.model_ = Model::interpolated;
    c.full_height_ = full_height;
    c.onset_dose_ = knots.front().dose;
    c.clearing_dose_ = knots.back().dose;
    c.log_offset_ = c.onset_dose_ > 0.0 ? 0.0 : 1e-3 * c.clearing_dose_;
    c.knots_ = std::move(knots);
    std::vector<double> y;
    for (const auto& k : c.knots_) {
        c.u_.push_back(std::log(k.dose + c.log_offset_));
        y.push_back(k.height);
    }
    c.slope_ = pchip_slopes(c.u_, y);
    return c;
}

ContrastCurve ContrastCurve::parametric(double full_height, double onset_dose, double clearing_dose, double gamma) {
    require(std::isfinite(full_height) && full_height > 0.0, ErrorCode::invalid_parameter,
            "full height must be positive");
    require(std::isfinite(onset_dose) && onset_dose > 0.0, ErrorCode::invalid_parameter,
            "parametric model needs a positive onset dose");
    require(std::isfinite(clearing_dose) && clearing_dose > onset_dose, ErrorCode::invalid_parameter,
            "clearing dose must exceed onset dose");
    require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::invalid_parameter, "gamma must be positive");
    ContrastCurve c;
    c.model_ = Model::parametric;
    c.full_height_ = full_height;
    c.onset_dose_ = onset_dose;
    c.clearing_dose_ = clearing_dose;
    c.gamma_ = gamma;
    return c;
}

double ContrastCurve::interior_height(double dose) const noexcept {
    if (model_ == Model::parametric) {
        const double x = std::log(dose / onset_dose_) / std::log(clearing_dose_ / onset_dose_);
        return full_height_ * (1.0 - std::pow(x, gamma_));
    }
    const double u = std::log(dose + log_offset_);
    const auto it = std::upper_bound(u_.begin(), u_.end(), u);
    std::size_t k = it == u_.begin() ? 0 : static_cast<std::size_t>(it - u_.begin()) - 1;
    k = std::min(k, u_.size() - 2);
    const double h = u_[k + 1] - u_[k];
    const double t = (u - u_[k]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * knots_[k].height + (t3 - 2 * t2 + t) * h * slope_[k] +
           (-2 * t3 + 3 * t2) * knots_[k + 1].height + (t3 - t2) * h * slope_[k + 1];
}

double ContrastCurve::height_unchecked(double dose) const noexcept {
    if (dose <= onset_dose_) return full_height_;
    if (dose >= clearing_dose_) return 0.0;
    return std::clamp(interior_height(dose), 0.0, full_height_);
}

double ContrastCurve::height(double dose) const {
    require(std::isfinite(dose) && dose >= 0.0, ErrorCode::invalid_parameter,
            "dose must be non-negative, got " + std::to_string(dose));
    return height_unchecked(dose);
}

double ContrastCurve::dose(double height) const {
    require(std::isfinite(height) && height >= 0.0 && height <= full_height_, ErrorCode::invalid_parameter,
            "height " + std::to_string(height) + " outside [0, " + std::to_string(full_height_) + "]");
    if (height == full_height_) return onset_dose_;
    if (height == 0.0) return clearing_dose_;
    const double offset = model_ == Model::parametric ? 0.0 : log_offset_;
    double lo = std::log(onset_dose_ + offset);
    double hi = std::log(clearing_dose_ + offset);
    // Bisection in log-dose; stops once the dose bracket is below 1e-12 relative.
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (height_unchecked(std::exp(mid) - offset) > height ? lo : hi) = mid;
        if (hi - lo <= 1e-12) break;
    }
    return std::clamp(std::exp(0.5 * (lo + hi)) - offset, onset_dose_, clearing_dose_);
}

double contrast_residual(const ContrastCurve& curve, std::span<const ContrastSample> samples) {
    if (samples.empty()) return 0.0;
    double ss = 0.0;
    for (const auto& s : samples) {
        const double r = curve.height(s.dose) - s.height;
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(samples.size()));
}

ContrastCurve fit_contrast(std::span<const ContrastSample> samples, double full_height,
                           const ContrastFitOptions& options, ContrastFitReport* report) {
    MonotoneFit fit = monotone_fit(samples, full_height, options);
    ContrastCurve curve = ContrastCurve::interpolated(full_height, fit.knots);
    if (report) {
        report->max_repair_displacement = fit.max_displacement;
        report->rms_residual = contrast_residual(curve, samples);
        report->sample_count = samples.size();
    }
    return curve;
}

ContrastCurve fit_parametric_contrast(std::span<const ContrastSample> samples, double full_height,
                                      const ContrastFitOptions& options, ContrastFitReport* report) {
    MonotoneFit fit = monotone_fit(samples, full_height, options);
    const double onset = fit.knots.front().dose;
    const double clearing = fit.knots.back().dose;
    require(onset > 0.0, ErrorCode::incomplete_calibration,
            "parametric model needs a positive-dose full-height anchor");

    auto sse = [&](double log_gamma) {
        const ContrastCurve c = ContrastCurve::parametric(full_height, onset, clearing, std::exp(log_gamma));
        double s = 0.0;
        for (const auto& smp : fit.sorted) {
            const double r = c.height_unchecked(smp.dose) - smp.height;
            s += r * r;
        }
        return s;
    };
    // Golden-section search on ln(gamma) over [0.05, 20].
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::log(0.05), b = std::log(20.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = sse(x1), f2 = sse(x2);
    while (b - a > 1e-10) {
        if (f1 < f2) {
            b = x2, x2 = x1, f2 = f1;
            x1 = b - phi * (b - a), f1 = sse(x1);
        } else {
            a = x1, x1 = x2, f1 = f2;
            x2 = a + phi * (b - a), f2 = sse(x2);
        }
    }
    ContrastCurve curve = ContrastCurve::parametric(full_height, onset, clearing, std::exp(0.5 * (a + b)));
    if (report) {
        report->max_repair_displacement = fit.max_displacement;
        report->rms_residual = contrast_residual(curve, samples);
        report->sample_count = samples.size();
    }
    return curve;
}

}  // namespace graydose
