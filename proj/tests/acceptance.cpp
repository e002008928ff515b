// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//
//   acceptance [--allow-known N]...
//
// Criteria named with --allow-known still print FAIL together with their
// reason but do not change the exit status.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "contrast.hpp"
#include "formats.hpp"
#include "kernel.hpp"
#include "metrology.hpp"
#include "oracles.hpp"
#include "pec.hpp"
#include "profile.hpp"
#include "stats.hpp"

using namespace graydose;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const ContrastCurve& demo_curve() {
    static const ContrastCurve c = ContrastCurve::parametric(3.0, 200.0, 600.0, 2.0);
    return c;
}

Outcome psf_constraint() {
    const auto t0 = Clock::now();
    const double inside = radial_energy_cdf(default_psf(), 20.0);
    const double ms = 1e3 * seconds_since(t0);
    return {inside <= 0.70 && ms < 1.0, fmt("cdf(20 um)=%.4f (beyond: %.1f%%) in %.3f ms", inside, 100 * (1 - inside), ms)};
}

// Kept for criterion 5, which fits a circle to the compiled bridge.
Grid g_bridge_dose;
Grid g_bridge_target;

Outcome bridge_round_trip() {
    const auto t0 = Clock::now();
    const auto target = centered_bridge_field(BridgeSpec{}, 3.0, 0.5, 256, 256);
    const auto kernel = discretize(default_psf(), 0.5);
    const auto sol = solve_dose(target, kernel, demo_curve());
    const double secs = seconds_since(t0);
    const auto h = forward_simulate(sol.dose, kernel, demo_curve());
    // The guard band exceeds half the field here, so every cell is checked.
    double worst = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i)
        worst = std::max(worst, height_error(target.values()[i], h.values()[i], 3.0));
    g_bridge_dose = sol.dose;
    g_bridge_target = target;
    const bool ok = sol.report.converged && worst <= 0.03 && sol.report.iterations <= 200 && secs <= 10.0;
    return {ok, fmt("max error %.4f um over all %zu cells, %d iterations, %.2f s (guard band %.1f um)", worst,
                    h.size(), sol.report.iterations, secs, sol.report.guard_band_um)};
}

Grid smooth_target(std::size_t n, double pitch, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Grid g(n, n, pitch, Quantity::height);
    const double base = 0.6 + 1.8 * u(rng);
    struct Bump {
        double x, y, s, a;
    };
    std::vector<Bump> bumps;
    for (int i = 0; i < 3; ++i)
        bumps.push_back({u(rng) * n * pitch, u(rng) * n * pitch, (0.2 + 0.3 * u(rng)) * n * pitch, u(rng) - 0.5});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double v = base;
            for (const auto& b : bumps) {
                const double dx = g.x_center(c) - b.x, dy = g.y_center(r) - b.y;
                v += b.a * std::exp(-(dx * dx + dy * dy) / (b.s * b.s));
            }
            g(r, c) = std::clamp(v, 0.15, 2.85);
        }
    return g;
}

Outcome dense_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(8, 24);
    const auto kernel = discretize(default_psf(), 0.5);
    oracle::Stencil st{static_cast<long>(kernel.half_width()),
                       std::vector<double>(kernel.weights().begin(), kernel.weights().end())};
    int accepted = 0, tried = 0, agree = 0;
    double worst = 0.0;
    while (accepted < 24 && tried < 400) {
        ++tried;
        const auto n = static_cast<std::size_t>(size(rng));
        const auto target = smooth_target(n, 0.5, rng);
        DoseSolution sol;
        try {
            sol = solve_dose(target, kernel, demo_curve());
        } catch (const InfeasibleTarget&) {
            continue;
        }
        if (!sol.report.converged) continue;
        const auto N = static_cast<long>(n * n);
        const auto A = oracle::convolution_matrix(static_cast<long>(n), static_cast<long>(n), st);
        Eigen::VectorXd wanted(N);
        for (long i = 0; i < N; ++i) wanted(i) = demo_curve().dose(target.values()[static_cast<std::size_t>(i)]);
        const Eigen::VectorXd d = A.partialPivLu().solve(wanted);
        if (d.minCoeff() < 0.0 || d.maxCoeff() > sol.report.max_dose) continue;  // not feasible for the oracle
        ++accepted;
        const Eigen::VectorXd e = A * d;
        const auto h = forward_simulate(sol.dose, kernel, demo_curve());
        double local = 0.0;
        for (long i = 0; i < N; ++i)
            local = std::max(local, std::abs(h.values()[static_cast<std::size_t>(i)] - demo_curve().height(e(i))));
        worst = std::max(worst, local);
        if (local <= 2.0 * sol.report.tolerance_um) ++agree;
    }
    const double secs = seconds_since(t0);
    return {accepted >= 20 && agree == accepted && secs <= 60.0,
            fmt("%d/%d feasible targets agree (of %d drawn), worst %.4f um, %.1f s", agree, accepted, tried, worst,
                secs)};
}

Outcome contrast_inversion() {
    std::mt19937_64 rng(11);
    std::vector<ContrastSample> cal;
    std::uniform_real_distribution<double> noise(-0.03, 0.03);
    for (int i = 0; i < 40; ++i) {
        const double d = 20.0 + 20.0 * i;
        cal.push_back({d, std::clamp(oracle::log_power_contrast(3.0, 200, 600, 2.0, d) + noise(rng), 0.0, 3.0)});
    }
    const auto fitted = fit_contrast(cal, 3.0);
    double worst = 0.0;
    bool bounds = true;
    for (const ContrastCurve* c : {&fitted, &demo_curve()}) {
        const double t0 = c->full_height();
        bounds = bounds && c->height(0.0) == t0 && c->height(c->clearing_dose()) == 0.0;
        std::uniform_real_distribution<double> uh(0.0, t0);
        std::uniform_real_distribution<double> ud(c->onset_dose(), c->clearing_dose());
        for (int i = 0; i < 500; ++i) {
            const double h = uh(rng);
            worst = std::max(worst, std::abs(c->height(c->dose(h)) - h) / t0);
            const double d = ud(rng);
            worst = std::max(worst, std::abs(c->height(c->dose(c->height(d))) - c->height(d)) / t0);
        }
    }
    return {bounds && worst <= 1e-4,
            fmt("1000 round trips per curve (500 each way), worst %.2e T0; C(0)=T0 and C(Dc)=0 %s", worst, bounds ? "hold" : "fail")};
}

Outcome circle_fit_checks() {
    const double R = 34.17, b = -31.17;
    std::vector<ProfilePoint> exact;
    for (int i = 0; i < 20; ++i) {
        const double x = -14.0 + 28.0 * i / 19.0;
        exact.push_back({x, b + std::sqrt(R * R - x * x)});
    }
    const auto fe = circle_fit(exact);
    const double exact_err = std::max({std::abs(fe.radius - R), std::abs(fe.center_h - b), std::abs(fe.center_x)});

    int within = 0;
    for (unsigned seed = 1; seed <= 100; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, 0.02);
        std::vector<ProfilePoint> pts;
        for (int i = 0; i < 200; ++i) {
            const double t = 2.0 * oracle::kPi * i / 200.0;
            pts.push_back({R * std::cos(t) + g(rng), b + R * std::sin(t) + g(rng)});
        }
        if (std::abs(circle_fit(pts).radius - R) <= 0.01) ++within;
    }

    // Centre-row profile of the compiled bridge, measured on the simulated heights.
    const auto kernel = discretize(default_psf(), 0.5);
    const auto h = forward_simulate(g_bridge_dose, kernel, demo_curve());
    const std::size_t row = h.rows() / 2;
    std::vector<ProfilePoint> trace;
    double sampling = 0.0;
    for (std::size_t c = 0; c < h.cols(); ++c) {
        const double x = h.x_center(c) - 0.5 * h.width_um();
        if (std::abs(x) >= 13.0) continue;
        trace.push_back({x, h(row, c)});
        sampling = std::max(sampling, std::abs(h(row, c) - g_bridge_target(row, c)));
    }
    const auto fb = circle_fit(trace);
    const bool ok = exact_err <= 1e-8 && fe.rms_residual <= 1e-8 && within >= 99 && fb.rms_residual <= sampling;
    return {ok, fmt("exact arc error %.1e; noisy circle %d/100 within 0.01 um; bridge profile R=%.3f um, "
                    "rms %.4f um <= sampling error %.4f um",
                    exact_err, within, fb.radius, fb.rms_residual, sampling)};
}

TransmissionTrace dip(double f0, double power) {
    TransmissionTrace t;
    t.power_dbm = power;
    for (int i = 0; i < 401; ++i) {
        const double f = 6.045 + 5e-5 * i;
        t.points.push_back({f, oracle::lorentzian_db(f, f0, 1e-3, 0.9)});
    }
    return t;
}

Outcome resonance_shift() {
    const auto s = power_shift(dip(6.0538, -110), dip(6.0560, -70));
    return {std::abs(s.shift_mhz - 2.2) <= 0.05 && s.operable && s.sign == ShiftSign::positive,
            fmt("shift %+.4f MHz, operable=%s, threshold %.2f MHz", s.shift_mhz, s.operable ? "true" : "false",
                s.threshold_mhz)};
}

Outcome yields() {
    const std::vector<YieldGroup> groups{{"no-AB", 18, 25}, {"reflow", 1, 9}, {"GSL", 28, 44}};
    const auto rows = yield_summary(groups);
    const char* want[] = {"0.720", "0.111", "0.636"};
    bool ok = true;
    std::string got;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string s = fmt("%.3f", rows[i].fraction);
        ok = ok && s == want[i];
        got += (i ? " " : "") + s;
    }
    return {ok, "fractions " + got};
}

std::vector<double> normals(double mu, double sd, std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(mu, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

Outcome posterior() {
    const auto op = kde(normals(15.0, 3.0, 2000, 11));
    const auto non = kde(normals(25.0, 3.0, 2000, 12));
    const auto x = posterior_crossing(posterior_curve(op, non, 0.5, 4096), 0.5);
    const double want = oracle::equal_variance_crossing(15.0, 25.0);
    return {x && std::abs(*x - want) <= 0.2,
            fmt("crossing %.3f kOhm vs analytic %.1f; published raw data not bundled, that check skipped",
                x ? *x : NAN, want)};
}

Outcome kde_accuracy() {
    int within = 0;
    double worst = 0.0;
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const auto d = kde(normals(20.0, 2.0, 2000, seed));
        double dev = 0.0;
        for (std::size_t i = 0; i < d.grid.size(); ++i)
            dev = std::max(dev, std::abs(d.cdf[i] - oracle::normal_cdf(d.grid[i], 20.0, 2.0)));
        if (dev <= 0.02) ++within;
        worst = std::max(worst, dev);
    }
    return {within == 20, fmt("%d/20 seeds within 0.02, worst %.4f; the raw sample ecdf itself exceeds 0.02 "
                              "in about 45%% of seeds at n=2000",
                              within, worst)};
}

template <class T, class W, class R>
bool round_trips(const T& value, W&& write, R&& read) {
    std::ostringstream a;
    write(a, value);
    std::istringstream in(a.str());
    const T back = read(in, "<mem>");
    std::ostringstream b;
    write(b, back);
    return a.str() == b.str();
}

Outcome determinism() {
    const auto target = centered_bridge_field(BridgeSpec{}, 3.0, 0.5, 96, 48);
    const auto kernel = discretize(default_psf(), 0.5);
    std::string first_grid, first_layers;
    bool same = true;
    for (int run = 0; run < 2; ++run) {
        const auto sol = solve_dose(target, kernel, demo_curve());
        std::ostringstream g, l;
        write_grid(g, sol.dose);
        write_layers(l, quantize(sol.dose));
        if (run == 0) {
            first_grid = g.str();
            first_layers = l.str();
        } else {
            same = g.str() == first_grid && l.str() == first_layers;
        }
    }

    std::istringstream gin(first_grid);
    const Grid dose = read_grid(gin);
    std::istringstream lin(first_layers);
    const DoseLayers layers = read_layers(lin);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ContrastSample> cs;
    std::vector<ProfilePoint> tr;
    std::vector<LabeledValue> lv;
    for (int i = 0; i < 50; ++i) {
        cs.push_back({100.0 + 10 * i + u(rng), 3.0 * u(rng)});
        tr.push_back({i + u(rng) * 0.5, u(rng)});
        lv.push_back({1.0 + 30 * u(rng), i % 2 ? SampleLabel::operable : SampleLabel::non_operable});
    }
    const std::vector<ContrastSample> anchors{{100, 3}, {200, 3}, {300, 1.5}, {400, 0}, {500, 0}};
    const bool formats =
        round_trips(dose, write_grid, read_grid) && round_trips(layers, write_layers, read_layers) &&
        round_trips(cs, write_contrast_samples, read_contrast_samples) &&
        round_trips(tr, write_profile_trace, read_profile_trace) &&
        round_trips(dip(6.0538, -110), write_transmission, read_transmission) &&
        round_trips(lv, write_labeled_samples, read_labeled_samples) &&
        round_trips(fit_contrast(anchors, 3.0), write_contrast_model, read_contrast_model);
    // A grid read back from its own file reproduces it value for value.
    std::ostringstream again;
    write_grid(again, dose);
    std::istringstream ain(again.str());
    const bool values = read_grid(ain) == dose;
    return {same && formats && values,
            fmt("re-runs %s; grid, layers, contrast, trace, transmission and sample files %s",
                same ? "byte-identical" : "differ", formats && values ? "round-trip exactly" : "do not round-trip")};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> allowed;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--allow-known") == 0 && i + 1 < argc) {
            allowed.insert(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: acceptance [--allow-known N]...\n");
            return 2;
        }
    }

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"PSF energy beyond 20 um", psf_constraint},
        {"bridge dose round trip", bridge_round_trip},
        {"dense linear oracle", dense_oracle},
        {"contrast inversion", contrast_inversion},
        {"circle fit", circle_fit_checks},
        {"resonance shift", resonance_shift},
        {"yield summary", yields},
        {"posterior crossing", posterior},
        {"KDE accuracy", kde_accuracy},
        {"determinism and round trips", determinism},
    };
    int blocking = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool known = !o.pass && allowed.count(id);
        std::printf("%-4s %2d %-28s %s%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(),
                    known ? " [known limitation]" : "");
        if (!o.pass && !known) ++blocking;
    }
    std::fflush(stdout);
    return blocking == 0 ? 0 : 1;
}
