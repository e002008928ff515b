#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "error.hpp"
#include "oracles.hpp"
#include "stats.hpp"

using namespace graydose;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an exception");
    return ErrorCode::invalid_parameter;
}

std::vector<double> normal_samples(double mu, double sd, std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(mu, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return s;
}

}  // namespace

TEST_CASE("ecdf step values") {
    const std::vector<double> one{10.0};
    const auto e1 = ecdf(one);
    CHECK(e1(9.999) == 0.0);
    CHECK(e1(10.0) == 1.0);
    CHECK(e1(50.0) == 1.0);

    const std::vector<double> two{20.0, 10.0};
    const auto e2 = ecdf(two);
    CHECK(e2(9.0) == 0.0);
    CHECK(e2(10.0) == 0.5);
    CHECK(e2(19.99) == 0.5);
    CHECK(e2(20.0) == 1.0);

    const std::vector<double> ties{3, 1, 3, 2, 3};
    const auto e3 = ecdf(ties);
    REQUIRE(e3.values.size() == 3);
    CHECK(e3.fractions == std::vector<double>{0.2, 0.4, 1.0});
    CHECK(code_of([] { ecdf(std::vector<double>{}); }) == ErrorCode::insufficient_data);
}

TEST_CASE("ecdf jump count and total mass") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> u(1, 40);
    std::vector<double> v(300);
    for (auto& x : v) x = u(rng);
    const auto e = ecdf(v);
    std::vector<double> distinct = v;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    CHECK(e.values == distinct);
    CHECK(e.fractions.back() == 1.0);
    for (std::size_t i = 1; i < e.fractions.size(); ++i) CHECK(e.fractions[i] > e.fractions[i - 1]);
}

TEST_CASE("ecdf obeys the Kolmogorov-Smirnov bound") {
    int ok = 0;
    const int seeds = 200;
    for (int seed = 1; seed <= seeds; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> v(1000);
        for (auto& x : v) x = u(rng);
        const auto e = ecdf(v);
        double d = 0.0;
        double prev = 0.0;
        for (std::size_t i = 0; i < e.values.size(); ++i) {
            d = std::max({d, std::abs(e.fractions[i] - e.values[i]), std::abs(e.values[i] - prev)});
            prev = e.fractions[i];
        }
        if (d <= 1.36 / std::sqrt(1000.0)) ++ok;
    }
    CHECK(ok >= 180);
}

TEST_CASE("silverman bandwidth") {
    const auto v = normal_samples(20.0, 2.0, 501, 3);
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : s) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1));
    const double iqr = s[375] - s[125];  // exact order statistics for n = 501
    CHECK(silverman_bandwidth(v) == doctest::Approx(0.9 * std::min(sd, iqr / 1.34) * std::pow(n, -0.2)));

    // Heavy ties: IQR collapses to zero and the standard deviation takes over.
    const std::vector<double> tied{5, 5, 5, 5, 5, 5, 5, 9, 1};
    CHECK(silverman_bandwidth(tied) > 0.0);
    CHECK(code_of([] { silverman_bandwidth(std::vector<double>{4, 4, 4}); }) == ErrorCode::degenerate_data);
}

TEST_CASE("kde preconditions") {
    CHECK(code_of([] { kde(std::vector<double>{1, 2}); }) == ErrorCode::insufficient_data);
    CHECK(code_of([] { kde(std::vector<double>{7, 7, 7, 7}); }) == ErrorCode::degenerate_data);
    const auto d = kde(std::vector<double>{7, 7, 7, 7}, {.bandwidth = 0.5});
    CHECK(d.bandwidth == 0.5);
}

TEST_CASE("kde of symmetric samples is symmetric") {
    const std::vector<double> v{10.0 - 1.5, 10.0 - 0.25, 10.0 + 0.25, 10.0 + 1.5};
    const auto d = kde(v, {.bandwidth = 0.4});
    const std::size_t n = d.grid.size();
    CHECK(d.grid.front() + d.grid.back() == doctest::Approx(20.0).epsilon(1e-14));
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(d.pdf[i] - d.pdf[n - 1 - i]) <= 1e-12);
}

TEST_CASE("kde normalization and cdf consistency") {
    for (unsigned seed : {1u, 2u, 3u}) {
        for (double bw : {0.0, 0.2, 3.0}) {
            const auto v = normal_samples(20.0, 2.0, 300, seed);
            const auto d = kde(v, {.bandwidth = bw});
            CHECK(d.grid.size() >= 512);
            CHECK(d.grid.front() <= *std::min_element(v.begin(), v.end()) - 4 * d.bandwidth);
            CHECK(d.grid.back() >= *std::max_element(v.begin(), v.end()) + 4 * d.bandwidth);
            CHECK(std::abs(trapezoid(d.grid, d.pdf) - 1.0) <= 1e-6);
            CHECK(d.cdf.front() <= 1e-6);
            CHECK(d.cdf.back() >= 1.0 - 1e-6);
            double running = d.cdf.front();
            for (std::size_t i = 1; i < d.grid.size(); ++i) {
                CHECK(d.pdf[i] >= 0.0);
                CHECK(d.cdf[i] >= d.cdf[i - 1]);
                running += 0.5 * (d.pdf[i] + d.pdf[i - 1]) * (d.grid[i] - d.grid[i - 1]);
                if (i % 97 == 0) CHECK(std::abs(running - d.cdf[i]) <= 1e-6);
            }
            CHECK(std::abs(running - d.cdf.back()) <= 1e-6);
        }
    }
}

TEST_CASE("kde cdf against the generating normal") {
    // The kde cdf is the sample ecdf smoothed by the kernel, so its distance to
    // the true cdf is bounded by the ecdf's own distance plus the smoothing bias
    // sup |F * K_b - F| <= b^2 / 2 * sup |f'| for a normal F.
    const double sd = 2.0;
    const double max_slope = 1.0 / (sd * sd * std::sqrt(2.0 * oracle::kPi * std::exp(1.0)));
    int within = 0;
    double total = 0.0;
    for (unsigned seed = 1; seed <= 20; ++seed) {
        auto v = normal_samples(20.0, sd, 2000, seed);
        const auto d = kde(v);
        double worst = 0.0;
        for (std::size_t i = 0; i < d.grid.size(); ++i)
            worst = std::max(worst, std::abs(d.cdf[i] - oracle::normal_cdf(d.grid[i], 20.0, sd)));
        std::sort(v.begin(), v.end());
        double ecdf_dev = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double F = oracle::normal_cdf(v[i], 20.0, sd);
            ecdf_dev = std::max({ecdf_dev, std::abs((i + 1) / 2000.0 - F), std::abs(i / 2000.0 - F)});
        }
        CAPTURE(seed);
        CHECK(worst <= ecdf_dev + 0.5 * d.bandwidth * d.bandwidth * max_slope + 1e-6);
        if (worst <= 0.02) ++within;
        total += worst;
    }
    CHECK(within >= 15);
    CHECK(total / 20.0 <= 0.02);
}

TEST_CASE("posterior basics") {
    const auto a = kde(normal_samples(20.0, 2.0, 200, 1));
    CHECK(posterior_operable(a, a, 0.5, 20.0).probability == doctest::Approx(0.5).epsilon(1e-15));
    const auto far = kde(normal_samples(200.0, 2.0, 200, 2));
    const auto p = posterior_operable(a, far, 0.3, 20.0);
    CHECK(p.probability == 1.0);
    CHECK_FALSE(p.extrapolated);
    CHECK(code_of([&] { posterior_operable(a, far, 0.5, 100.0); }) == ErrorCode::out_of_support);
    CHECK(code_of([&] { posterior_operable(a, far, 0.5, -5.0); }) == ErrorCode::out_of_support);
    CHECK(code_of([&] { posterior_operable(a, far, 1.0, 20.0); }) == ErrorCode::invalid_parameter);

    // Far tail inside the grid: both densities vanish, the prior comes back flagged.
    DensityEstimate x{1.0, {0.0, 1.0, 2.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    const auto q = posterior_operable(x, x, 0.42, 1.5);
    CHECK(q.extrapolated);
    CHECK(q.probability == 0.42);
}

TEST_CASE("posterior complement and scale invariance") {
    const auto op = kde(normal_samples(15.0, 3.0, 400, 4));
    const auto non = kde(normal_samples(25.0, 3.0, 400, 5));
    DensityEstimate op_scaled = op, non_scaled = non;
    for (auto& v : op_scaled.pdf) v *= 7.5;
    for (auto& v : non_scaled.pdf) v *= 7.5;
    for (double r = 8.0; r <= 32.0; r += 0.37) {
        for (double prior : {0.2, 0.5, 0.77}) {
            const auto p = posterior_operable(op, non, prior, r);
            if (p.extrapolated) continue;
            const auto swapped = posterior_operable(non, op, 1.0 - prior, r);
            CHECK(std::abs(swapped.probability - (1.0 - p.probability)) <= 1e-12);
            const auto scaled = posterior_operable(op_scaled, non_scaled, prior, r);
            CHECK(std::abs(scaled.probability - p.probability) <= 1e-12);
            CHECK(p.probability >= 0.0);
            CHECK(p.probability <= 1.0);
        }
    }
}

TEST_CASE("posterior crossing of two equal-variance classes") {
    const auto op = kde(normal_samples(15.0, 3.0, 2000, 11));
    const auto non = kde(normal_samples(25.0, 3.0, 2000, 12));
    const auto curve = posterior_curve(op, non, 0.5, 4096);
    const auto x = posterior_crossing(curve, 0.5);
    REQUIRE(x.has_value());
    CHECK(std::abs(*x - oracle::equal_variance_crossing(15.0, 25.0)) <= 0.2);
    for (double p : curve.probability) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    CHECK(curve.prior == 0.5);
}

TEST_CASE("empirical prior and labels") {
    CHECK(empirical_prior(3, 1) == 0.75);
    CHECK(code_of([] { empirical_prior(0, 0); }) == ErrorCode::insufficient_data);
    CHECK(parse_label("operable") == SampleLabel::operable);
    CHECK(parse_label("non-operable") == SampleLabel::non_operable);
    CHECK(parse_label("post-150C") == SampleLabel::post_150c);
    CHECK(parse_label("") == SampleLabel::unlabeled);
    CHECK_FALSE(parse_label("broken").has_value());
    for (auto l : {SampleLabel::operable, SampleLabel::non_operable, SampleLabel::pre_test, SampleLabel::post_150c,
                   SampleLabel::post_200c, SampleLabel::unlabeled})
        CHECK(parse_label(to_string(l)) == l);

    const std::vector<LabeledValue> rows{{1, SampleLabel::non_operable}, {2, SampleLabel::operable},
                                         {3, SampleLabel::non_operable}};
    const auto groups = group_by_label(rows);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].label == SampleLabel::operable);
    CHECK(groups[1].values == std::vector<double>{1, 3});
}

TEST_CASE("yield fractions and Wilson intervals") {
    const std::vector<YieldGroup> g{{"no-AB", 18, 25}, {"reflow", 1, 9}, {"GSL", 28, 44}, {"none", 0, 5}};
    const auto rows = yield_summary(g);
    CHECK(rows[0].fraction == 18.0 / 25.0);
    CHECK(rows[1].fraction == 1.0 / 9.0);
    CHECK(rows[2].fraction == 28.0 / 44.0);
    for (const auto& r : rows) {
        const auto [lo, hi] = oracle::wilson(r.n_operable, r.n_total, 1.959963984540054);
        CHECK(r.wilson.lo == doctest::Approx(lo).epsilon(1e-12));
        CHECK(r.wilson.hi == doctest::Approx(hi).epsilon(1e-12));
        CHECK(r.wilson.lo <= r.fraction);
        CHECK(r.wilson.hi >= r.fraction);
    }
    CHECK(rows[3].wilson.lo == doctest::Approx(0.0).scale(1.0));
    const std::vector<YieldGroup> bad{{"x", 5, 4}};
    CHECK(code_of([&] { yield_summary(bad); }) == ErrorCode::invalid_parameter);
    const std::vector<YieldGroup> empty{{"x", 0, 0}};
    CHECK(code_of([&] { yield_summary(empty); }) == ErrorCode::invalid_parameter);
}
