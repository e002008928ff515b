#include <doctest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "contrast.hpp"
#include "oracles.hpp"

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

// Samples on h = T0 (1 - (D - D0) / (Dc - D0)) plus anchors outside [D0, Dc].
std::vector<ContrastSample> linear_samples(double T0, double D0, double Dc) {
    std::vector<ContrastSample> s{{0.5 * D0, T0}};
    for (int i = 0; i <= 8; ++i) {
        const double d = D0 + (Dc - D0) * i / 8.0;
        s.push_back({d, T0 * (1.0 - (d - D0) / (Dc - D0))});
    }
    s.push_back({1.5 * Dc, 0.0});
    return s;
}

}  // namespace

TEST_CASE("interpolated fit reproduces exact knots") {
    const double T0 = 3.0, D0 = 200.0, Dc = 600.0;
    const auto samples = linear_samples(T0, D0, Dc);
    ContrastFitReport rep;
    const auto c = fit_contrast(samples, T0, {}, &rep);
    CHECK(c.onset_dose() == D0);
    CHECK(c.clearing_dose() == Dc);
    for (const auto& s : samples) CHECK(std::abs(c.height(s.dose) - s.height) <= 1e-9);
    CHECK(rep.rms_residual <= 1e-9);
    CHECK(rep.max_repair_displacement == 0.0);
    CHECK(rep.sample_count == samples.size());
    // Midpoint of the linear generator is a knot.
    CHECK(c.height(0.5 * (D0 + Dc)) == doctest::Approx(0.5 * T0).epsilon(1e-12));
}

TEST_CASE("boundary conventions") {
    const auto c = fit_contrast(linear_samples(3.0, 200.0, 600.0), 3.0);
    CHECK(c.height(0.0) == 3.0);
    CHECK(c.height(150.0) == 3.0);
    CHECK(c.height(600.0) == 0.0);
    CHECK(c.height(1e6) == 0.0);
    CHECK(c.dose(3.0) == 200.0);
    CHECK(c.dose(0.0) == 600.0);
    CHECK(code_of([&] { c.height(-1.0); }) == ErrorCode::invalid_parameter);
    CHECK(code_of([&] { c.dose(-0.01); }) == ErrorCode::invalid_parameter);
    CHECK(code_of([&] { c.dose(3.01); }) == ErrorCode::invalid_parameter);
}

TEST_CASE("calibration errors") {
    const std::vector<ContrastSample> two{{0, 3}, {600, 0}};
    CHECK(code_of([&] { fit_contrast(two, 3.0); }) == ErrorCode::incomplete_calibration);

    const std::vector<ContrastSample> no_zero{{0, 3}, {100, 3}, {200, 2}, {300, 1}};
    CHECK(code_of([&] { fit_contrast(no_zero, 3.0); }) == ErrorCode::incomplete_calibration);

    const std::vector<ContrastSample> no_full{{100, 2}, {200, 1.5}, {300, 1}, {400, 0}};
    CHECK(code_of([&] { fit_contrast(no_full, 3.0); }) == ErrorCode::incomplete_calibration);

    // A 1 um bump is far beyond the 10% repair threshold.
    const std::vector<ContrastSample> bumpy{{0, 3}, {200, 3}, {300, 1.0}, {350, 2.0}, {400, 1.2}, {600, 0}};
    CHECK(code_of([&] { fit_contrast(bumpy, 3.0); }) == ErrorCode::bad_calibration);

    const std::vector<ContrastSample> dup{{0, 3}, {200, 3}, {200, 2}, {600, 0}};
    CHECK(code_of([&] { fit_contrast(dup, 3.0); }) == ErrorCode::invalid_parameter);
}

TEST_CASE("small violations are repaired") {
    const std::vector<ContrastSample> s{{0, 3}, {200, 3}, {300, 2.0}, {350, 2.1}, {400, 1.0}, {600, 0}, {700, 0}};
    ContrastFitReport rep;
    const auto c = fit_contrast(s, 3.0, {}, &rep);
    CHECK(rep.max_repair_displacement == doctest::Approx(0.05));
    CHECK(c.height(325.0) == doctest::Approx(2.05).epsilon(0.05));
}

TEST_CASE("noisy log-power calibration stays near its generator") {
    const double T0 = 3.0, D0 = 200.0, Dc = 600.0;
    for (unsigned seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> noise(-0.05 * T0, 0.05 * T0);
        std::vector<ContrastSample> s;
        for (int i = 0; i < 40; ++i) {
            const double d = 20.0 + i * 20.0;
            const double h = oracle::log_power_contrast(T0, D0, Dc, 2.0, d) + noise(rng);
            s.push_back({d, std::clamp(h, 0.0, T0)});
        }
        const auto c = fit_contrast(s, T0);
        double worst = 0.0;
        for (double d = D0; d <= Dc; d += 1.0)
            worst = std::max(worst, std::abs(c.height(d) - oracle::log_power_contrast(T0, D0, Dc, 2.0, d)));
        CAPTURE(seed);
        CHECK(worst <= 0.1 * T0);
    }
}

TEST_CASE("parametric model recovers gamma") {
    const double T0 = 3.0, D0 = 200.0, Dc = 600.0;
    std::vector<ContrastSample> s{{0, T0}};
    for (double d = 200.0; d <= 700.0; d += 25.0) s.push_back({d, oracle::log_power_contrast(T0, D0, Dc, 2.5, d)});
    ContrastFitReport rep;
    const auto c = fit_parametric_contrast(s, T0, {}, &rep);
    CHECK(c.model() == ContrastCurve::Model::parametric);
    CHECK(c.gamma() == doctest::Approx(2.5).epsilon(1e-6));
    CHECK(rep.rms_residual < 1e-8);
    for (double d = 0.0; d <= 800.0; d += 7.0)
        CHECK(c.height(d) == doctest::Approx(oracle::log_power_contrast(T0, D0, Dc, 2.5, d)).epsilon(1e-8));
}

TEST_CASE("monotonicity and range over many curves") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double T0 = 1.0 + 5.0 * u(rng), D0 = 50.0 + 200.0 * u(rng), Dc = D0 * (1.5 + 3.0 * u(rng));
        std::vector<ContrastSample> s{{0.0, T0}, {D0, T0}};
        const int interior = 3 + static_cast<int>(8 * u(rng));
        std::vector<double> h;
        for (int i = 0; i < interior; ++i) h.push_back(T0 * u(rng));
        std::sort(h.rbegin(), h.rend());
        for (int i = 0; i < interior; ++i) s.push_back({D0 + (Dc - D0) * (i + 1.0) / (interior + 1.0), h[i]});
        s.push_back({Dc, 0.0});
        const auto c = fit_contrast(s, T0);
        double prev = T0;
        for (double d = 0.0; d <= 1.2 * Dc; d += Dc / 500.0) {
            const double v = c.height(d);
            CHECK(v <= prev);
            CHECK(v >= 0.0);
            CHECK(v <= T0);
            if (d > c.onset_dose() && d < c.clearing_dose() && d - Dc / 500.0 > c.onset_dose()) CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("inversion round trips") {
    const auto c = ContrastCurve::parametric(3.0, 200.0, 600.0, 2.0);
    const auto lin = fit_contrast(linear_samples(3.0, 200.0, 600.0), 3.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uh(1e-6, 3.0 - 1e-6), ud(200.0 + 1e-6, 600.0 - 1e-6);
    for (const auto* curve : {&c, &lin}) {
        for (int i = 0; i < 200; ++i) {
            const double h = uh(rng);
            const double d = curve->dose(h);
            CHECK(d >= 200.0);
            CHECK(d <= 600.0);
            CHECK(std::abs(curve->height(d) - h) <= 1e-4 * 3.0);
            const double d2 = ud(rng);
            CHECK(curve->dose(curve->height(d2)) == doctest::Approx(d2).epsilon(1e-6));
        }
    }
}

TEST_CASE("onset at zero dose uses a log offset") {
    const std::vector<ContrastSample> s{{0, 3}, {100, 2}, {200, 1}, {300, 0}, {400, 0}};
    const auto c = fit_contrast(s, 3.0);
    CHECK(c.onset_dose() == 0.0);
    CHECK(c.log_offset() > 0.0);
    CHECK(c.height(0.0) == 3.0);
    CHECK(c.height(100.0) == doctest::Approx(2.0));
    CHECK(c.dose(2.0) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(code_of([&] { fit_parametric_contrast(s, 3.0); }) == ErrorCode::incomplete_calibration);
}

TEST_CASE("knot validation") {
    CHECK(code_of([] { ContrastCurve::interpolated(3.0, {{100, 3}, {50, 1}, {200, 0}}); }) ==
          ErrorCode::invalid_parameter);
    CHECK(code_of([] { ContrastCurve::interpolated(3.0, {{100, 2.5}, {200, 0}}); }) == ErrorCode::invalid_parameter);
    CHECK(code_of([] { ContrastCurve::parametric(3.0, 0.0, 600.0, 2.0); }) == ErrorCode::invalid_parameter);
    CHECK(code_of([] { ContrastCurve::parametric(3.0, 600.0, 200.0, 2.0); }) == ErrorCode::invalid_parameter);
}

TEST_CASE("thickness constants") {
    CHECK(kDefaultResistThickness == 3.0);
    CHECK(kInitialResistThickness == 6.4);
}
