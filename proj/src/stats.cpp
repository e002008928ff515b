#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "error.hpp"

namespace graydose {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

std::vector<double> checked_sorted(std::span<const double> samples, std::size_t min_count, const char* what) {
    require(samples.size() >= min_count, ErrorCode::insufficient_data,
            std::string(what) + " needs at least " + std::to_string(min_count) + " samples, got " +
                std::to_string(samples.size()));
    std::vector<double> v(samples.begin(), samples.end());
    for (double x : v) require(std::isfinite(x), ErrorCode::invalid_parameter, "non-finite sample");
    std::sort(v.begin(), v.end());
    return v;
}

// numpy-style linear quantile on sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

double interp(const std::vector<double>& x, const std::vector<double>& y, double at) {
    if (x.empty() || at < x.front() || at > x.back()) return 0.0;
    const auto it = std::upper_bound(x.begin(), x.end(), at);
    if (it == x.end()) return y.back();
    const auto j = static_cast<std::size_t>(it - x.begin());
    if (j == 0) return y.front();
    const double t = (at - x[j - 1]) / (x[j] - x[j - 1]);
    return y[j - 1] + t * (y[j] - y[j - 1]);
}

}  // namespace

std::string_view to_string(SampleLabel label) {
    switch (label) {
        case SampleLabel::operable: return "operable";
        case SampleLabel::non_operable: return "non-operable";
        case SampleLabel::pre_test: return "pre-test";
        case SampleLabel::post_150c: return "post-150C";
        case SampleLabel::post_200c: return "post-200C";
        case SampleLabel::unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

std::optional<SampleLabel> parse_label(std::string_view text) {
    for (auto l : {SampleLabel::operable, SampleLabel::non_operable, SampleLabel::pre_test, SampleLabel::post_150c,
                   SampleLabel::post_200c, SampleLabel::unlabeled}) {
        if (text == to_string(l)) return l;
    }
    if (text.empty()) return SampleLabel::unlabeled;
    return std::nullopt;
}

std::vector<LabeledSamples> group_by_label(std::span<const LabeledValue> rows) {
    std::vector<LabeledSamples> out;
    for (auto l : {SampleLabel::operable, SampleLabel::non_operable, SampleLabel::pre_test, SampleLabel::post_150c,
                   SampleLabel::post_200c, SampleLabel::unlabeled}) {
        LabeledSamples g{l, {}};
        for (const auto& r : rows)
            if (r.label == l) g.values.push_back(r.resistance_kohm);
        if (!g.values.empty()) out.push_back(std::move(g));
    }
    return out;
}

double EmpiricalCdf::operator()(double x) const {
    const auto it = std::upper_bound(values.begin(), values.end(), x);
    if (it == values.begin()) return 0.0;
    return fractions[static_cast<std::size_t>(it - values.begin()) - 1];
}

EmpiricalCdf ecdf(std::span<const double> samples) {
    const std::vector<double> v = checked_sorted(samples, 1, "ECDF");
    EmpiricalCdf out;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
        out.values.push_back(v[i]);
        out.fractions.push_back(i + 1 == v.size() ? 1.0 : static_cast<double>(i + 1) / n);
    }
    return out;
}

double DensityEstimate::pdf_at(double x) const { return interp(grid, pdf, x); }

double silverman_bandwidth(std::span<const double> samples) {
    const std::vector<double> v = checked_sorted(samples, 2, "bandwidth selection");
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    require(sd > 0.0, ErrorCode::degenerate_data, "samples have zero variance; pass an explicit bandwidth");
    const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(n, -0.2);
}

DensityEstimate kde(std::span<const double> samples, const KdeOptions& options) {
    const std::vector<double> v = checked_sorted(samples, 3, "KDE");
    const double b = options.bandwidth > 0.0 ? options.bandwidth : silverman_bandwidth(v);
    require(std::isfinite(b) && b > 0.0, ErrorCode::invalid_parameter, "bandwidth must be positive");
    const auto n = static_cast<double>(v.size());
    const double reach = 10.0 * b;  // kernels beyond this contribute < 1e-22

    auto window = [&](double x) {
        const auto first = std::lower_bound(v.begin(), v.end(), x - reach);
        const auto last = std::upper_bound(first, v.end(), x + reach);
        return std::make_pair(first, last);
    };
    auto slope_at = [&](double x) {
        auto [first, last] = window(x);
        double s = 0.0;
        for (auto it = first; it != last; ++it) {
            const double z = (x - *it) / b;
            s += z * std::exp(-0.5 * z * z);
        }
        return std::abs(s) * kInvSqrt2Pi / (n * b * b);
    };

    const double lo = v.front() - options.tail_bandwidths * b;
    const double hi = v.back() + options.tail_bandwidths * b;

    // Grid step: fine enough that the trapezoid running integral of the pdf
    // tracks the analytic cdf to ~5e-7 (error ~ h^2/12 * |f'| range).
    double max_slope = 0.0;
    for (double x = lo; x <= hi; x += 0.25 * b) max_slope = std::max(max_slope, slope_at(x));
    double step = 0.125 * b;
    if (max_slope > 0.0) step = std::min(step, std::sqrt(12.0 * 5e-7 / (3.0 * max_slope)));
    std::size_t points = std::max(options.min_points, static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1);
    points = std::min<std::size_t>(points, std::size_t{1} << 22);

    DensityEstimate d;
    d.bandwidth = b;
    d.grid.resize(points);
    d.pdf.resize(points);
    d.cdf.resize(points);
    const double dx = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        const double x = i + 1 == points ? hi : lo + dx * static_cast<double>(i);
        auto [first, last] = window(x);
        double p = 0.0, c = static_cast<double>(first - v.begin());
        for (auto it = first; it != last; ++it) {
            const double z = (x - *it) / b;
            p += std::exp(-0.5 * z * z);
            c += 0.5 * std::erfc(-z / std::numbers::sqrt2);
        }
        d.grid[i] = x;
        d.pdf[i] = p * kInvSqrt2Pi / (n * b);
        d.cdf[i] = c / n;
    }
    return d;
}

PosteriorPoint posterior_operable(const DensityEstimate& operable, const DensityEstimate& non_operable, double prior,
                                  double r_kohm) {
    require(std::isfinite(prior) && prior > 0.0 && prior < 1.0, ErrorCode::invalid_parameter,
            "prior must lie in (0, 1)");
    if (!operable.covers(r_kohm) && !non_operable.covers(r_kohm)) {
        fail(ErrorCode::out_of_support,
             "resistance " + std::to_string(r_kohm) + " kOhm lies outside both density grids");
    }
    const double po = operable.pdf_at(r_kohm);
    const double pn = non_operable.pdf_at(r_kohm);
    if (po < 1e-12 && pn < 1e-12) return {prior, true};
    const double a = prior * po;
    const double b = (1.0 - prior) * pn;
    return {a / (a + b), false};
}

PosteriorCurve posterior_curve(const DensityEstimate& operable, const DensityEstimate& non_operable, double prior,
                               std::size_t points) {
    require(points >= 2, ErrorCode::invalid_parameter, "posterior curve needs at least 2 points");
    require(!operable.grid.empty() && !non_operable.grid.empty(), ErrorCode::insufficient_data,
            "posterior needs both class densities");
    const double lo = std::min(operable.grid.front(), non_operable.grid.front());
    const double hi = std::max(operable.grid.back(), non_operable.grid.back());
    PosteriorCurve c;
    c.prior = prior;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = i + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        // Gaps between disjoint grids count as out of support for both classes.
        PosteriorPoint p{prior, true};
        if (operable.covers(x) || non_operable.covers(x)) p = posterior_operable(operable, non_operable, prior, x);
        c.grid.push_back(x);
        c.probability.push_back(p.probability);
        c.extrapolated.push_back(p.extrapolated);
    }
    return c;
}

std::optional<double> posterior_crossing(const PosteriorCurve& curve, double level) {
    for (std::size_t i = 1; i < curve.grid.size(); ++i) {
        if (curve.extrapolated[i - 1] || curve.extrapolated[i]) continue;
        const double a = curve.probability[i - 1];
        const double b = curve.probability[i];
        if (a >= level && b < level) {
            const double t = (a - level) / (a - b);
            return curve.grid[i - 1] + t * (curve.grid[i] - curve.grid[i - 1]);
        }
    }
    return std::nullopt;
}

double empirical_prior(std::size_t n_operable, std::size_t n_non_operable) {
    require(n_operable > 0 && n_non_operable > 0, ErrorCode::insufficient_data,
            "empirical prior needs samples of both classes");
    return static_cast<double>(n_operable) / static_cast<double>(n_operable + n_non_operable);
}

Interval wilson_interval(long successes, long trials, double z) {
    require(trials >= 1 && successes >= 0 && successes <= trials, ErrorCode::invalid_parameter,
            "inconsistent counts " + std::to_string(successes) + "/" + std::to_string(trials));
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::vector<YieldRow> yield_summary(std::span<const YieldGroup> groups) {
    std::vector<YieldRow> rows;
    for (const auto& g : groups) {
        const Interval ci = wilson_interval(g.n_operable, g.n_total);
        rows.push_back({g.label, g.n_operable, g.n_total,
                        static_cast<double>(g.n_operable) / static_cast<double>(g.n_total), ci});
    }
    return rows;
}

}  // namespace graydose
