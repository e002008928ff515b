#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace graydose {

enum class SampleLabel { operable, non_operable, pre_test, post_150c, post_200c, unlabeled };

std::string_view to_string(SampleLabel label);
std::optional<SampleLabel> parse_label(std::string_view text);

struct LabeledValue {
    double resistance_kohm = 0.0;
    SampleLabel label = SampleLabel::unlabeled;
};

/// Resistances (kOhm) sharing one label.
struct LabeledSamples {
    SampleLabel label = SampleLabel::unlabeled;
    std::vector<double> values;
};

/// One entry per label present, in enum order.
std::vector<LabeledSamples> group_by_label(std::span<const LabeledValue> rows);

/// Right-continuous empirical CDF: jump points (distinct sorted values) and the
/// cumulative fraction at each.
struct EmpiricalCdf {
    std::vector<double> values;
    std::vector<double> fractions;

    double operator()(double x) const;
};

EmpiricalCdf ecdf(std::span<const double> samples);

/// Gaussian KDE tabulated on a uniform grid. The CDF is the sum of kernel
/// CDFs, so pdf is its exact derivative rather than a numerical one.
struct DensityEstimate {
    double bandwidth = 0.0;  // kOhm
    std::vector<double> grid;
    std::vector<double> pdf;  // 1/kOhm
    std::vector<double> cdf;

    bool covers(double x) const { return !grid.empty() && x >= grid.front() && x <= grid.back(); }
    /// Linear interpolation of the tabulated pdf; zero off the grid.
    double pdf_at(double x) const;
};

/// 0.9 min(sd, IQR / 1.34) n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

struct KdeOptions {
    double bandwidth = 0.0;          // <= 0: Silverman
    std::size_t min_points = 512;
    double tail_bandwidths = 6.0;    // grid margin beyond the extreme samples
};

DensityEstimate kde(std::span<const double> samples, const KdeOptions& options = {});

struct PosteriorPoint {
    double probability = 0.0;
    bool extrapolated = false;  // both densities below 1e-12; the prior is returned
};

/// Bayes rule with class-conditional densities and prior P(operable).
PosteriorPoint posterior_operable(const DensityEstimate& operable, const DensityEstimate& non_operable, double prior,
                                  double r_kohm);

struct PosteriorCurve {
    double prior = 0.0;
    std::vector<double> grid;
    std::vector<double> probability;
    std::vector<bool> extrapolated;
};

/// Posterior on a uniform grid over the union of both density grids.
PosteriorCurve posterior_curve(const DensityEstimate& operable, const DensityEstimate& non_operable, double prior,
                               std::size_t points = 1024);

/// First location where the curve falls through `level` (linear interpolation).
std::optional<double> posterior_crossing(const PosteriorCurve& curve, double level = 0.5);

/// n_operable / (n_operable + n_non_operable).
double empirical_prior(std::size_t n_operable, std::size_t n_non_operable);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval, 95% by default.
Interval wilson_interval(long successes, long trials, double z = 1.959963984540054);

struct YieldGroup {
    std::string label;
    long n_operable = 0;
    long n_total = 0;
};

struct YieldRow {
    std::string label;
    long n_operable = 0;
    long n_total = 0;
    double fraction = 0.0;
    Interval wilson;
};

std::vector<YieldRow> yield_summary(std::span<const YieldGroup> groups);

}  // namespace graydose
