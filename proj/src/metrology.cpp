#include "metrology.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "error.hpp"

namespace graydose {

namespace {

double rms_about(std::span<const ProfilePoint> pts, double a, double b, double r) {
    double ss = 0.0;
    for (const auto& p : pts) {
        const double d = std::hypot(p.x - a, p.h - b) - r;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(pts.size()));
}

void check_circle_input(std::span<const ProfilePoint> pts) {
    require(pts.size() >= 5, ErrorCode::insufficient_data,
            "circle fit needs at least 5 samples, got " + std::to_string(pts.size()));
    double mx = 0.0, mh = 0.0;
    for (const auto& p : pts) {
        require(std::isfinite(p.x) && std::isfinite(p.h), ErrorCode::invalid_parameter, "non-finite trace sample");
        mx += p.x;
        mh += p.h;
    }
    mx /= static_cast<double>(pts.size());
    mh /= static_cast<double>(pts.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : pts) {
        const Eigen::Vector2d v(p.x - mx, p.h - mh);
        cov += v * v.transpose();
    }
    cov /= static_cast<double>(pts.size());
    // Smallest eigenvalue = mean squared orthogonal distance to the best line.
    const double line_rms = std::sqrt(std::max(0.0, Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues()(0)));
    require(line_rms > 1e-9, ErrorCode::degenerate_geometry, "trace samples are collinear");
}

double median(std::vector<double> v) {
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(m), v.end());
    double hi = v[m];
    if (v.size() % 2 == 1) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(m)));
}

double median_step_ghz(const TransmissionTrace& t) {
    std::vector<double> steps;
    for (std::size_t i = 1; i < t.points.size(); ++i) steps.push_back(t.points[i].freq_ghz - t.points[i - 1].freq_ghz);
    return steps.empty() ? 0.0 : median(steps);
}

}  // namespace

double ProfileFit::upper_branch(double x) const {
    const double dx = x - center_x;
    const double s = radius * radius - dx * dx;
    return s < 0.0 ? std::numeric_limits<double>::quiet_NaN() : center_h + std::sqrt(s);
}

ProfileFit kasa_fit(std::span<const ProfilePoint> pts) {
    check_circle_input(pts);
    double mx = 0.0, mh = 0.0;
    for (const auto& p : pts) {
        mx += p.x;
        mh += p.h;
    }
    mx /= static_cast<double>(pts.size());
    mh /= static_cast<double>(pts.size());

    // Minimize sum (x^2 + h^2 + A x + B h + C)^2 in centered coordinates.
    Eigen::MatrixXd m(pts.size(), 3);
    Eigen::VectorXd rhs(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = pts[i].x - mx;
        const double h = pts[i].h - mh;
        m.row(static_cast<Eigen::Index>(i)) << x, h, 1.0;
        rhs(static_cast<Eigen::Index>(i)) = -(x * x + h * h);
    }
    const Eigen::Vector3d abc = m.colPivHouseholderQr().solve(rhs);
    ProfileFit fit;
    fit.center_x = -0.5 * abc(0) + mx;
    fit.center_h = -0.5 * abc(1) + mh;
    const double r2 = 0.25 * (abc(0) * abc(0) + abc(1) * abc(1)) - abc(2);
    require(std::isfinite(r2) && r2 > 0.0, ErrorCode::degenerate_geometry, "algebraic circle fit failed");
    fit.radius = std::sqrt(r2);
    fit.rms_residual = rms_about(pts, fit.center_x, fit.center_h, fit.radius);
    return fit;
}

ProfileFit circle_fit(std::span<const ProfilePoint> pts) {
    ProfileFit fit = kasa_fit(pts);
    Eigen::Vector3d p(fit.center_x, fit.center_h, fit.radius);
    double rms = fit.rms_residual;
    const auto n = static_cast<Eigen::Index>(pts.size());

    for (int it = 0; it < 50; ++it) {
        Eigen::MatrixXd jac(n, 3);
        Eigen::VectorXd res(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double dx = pts[static_cast<std::size_t>(i)].x - p(0);
            const double dh = pts[static_cast<std::size_t>(i)].h - p(1);
            const double d = std::max(std::hypot(dx, dh), 1e-300);
            jac.row(i) << -dx / d, -dh / d, -1.0;
            res(i) = d - p(2);
        }
        const Eigen::Vector3d step = jac.colPivHouseholderQr().solve(-res);
        if (!step.allFinite()) break;

        double scale = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k, scale *= 0.5) {
            const Eigen::Vector3d trial = p + scale * step;
            if (trial(2) <= 0.0) continue;
            const double trial_rms = rms_about(pts, trial(0), trial(1), trial(2));
            if (trial_rms <= rms) {
                p = trial;
                rms = trial_rms;
                accepted = true;
                break;
            }
        }
        fit.iterations = it + 1;
        if (!accepted || (scale * step).lpNorm<Eigen::Infinity>() <= 1e-10) break;
    }
    fit.center_x = p(0);
    fit.center_h = p(1);
    fit.radius = p(2);
    fit.rms_residual = rms;
    return fit;
}

double sample_bilinear(const Grid& grid, double x_um, double y_um) {
    const double fc = (x_um - grid.origin_x()) / grid.pitch() - 0.5;
    const double fr = (y_um - grid.origin_y()) / grid.pitch() - 0.5;
    const double eps = 1e-9;
    const double max_c = static_cast<double>(grid.cols() - 1);
    const double max_r = static_cast<double>(grid.rows() - 1);
    require(std::isfinite(fc) && std::isfinite(fr) && fc >= -eps && fr >= -eps && fc <= max_c + eps &&
                fr <= max_r + eps,
            ErrorCode::invalid_geometry,
            "point (" + std::to_string(x_um) + ", " + std::to_string(y_um) + ") um lies outside the grid");
    const double c = std::clamp(fc, 0.0, max_c);
    const double r = std::clamp(fr, 0.0, max_r);
    const auto c0 = std::min(static_cast<std::size_t>(c), grid.cols() > 1 ? grid.cols() - 2 : 0);
    const auto r0 = std::min(static_cast<std::size_t>(r), grid.rows() > 1 ? grid.rows() - 2 : 0);
    const std::size_t c1 = std::min(c0 + 1, grid.cols() - 1);
    const std::size_t r1 = std::min(r0 + 1, grid.rows() - 1);
    const double tc = c - static_cast<double>(c0);
    const double tr = r - static_cast<double>(r0);
    const double top = grid(r0, c0) * (1.0 - tc) + grid(r0, c1) * tc;
    const double bottom = grid(r1, c0) * (1.0 - tc) + grid(r1, c1) * tc;
    return top * (1.0 - tr) + bottom * tr;
}

ProfileError profile_error(std::span<const ProfilePoint> trace, const HeightMap& target, const AxisCut& cut) {
    require(!trace.empty(), ErrorCode::insufficient_data, "empty profile trace");
    const double cx = std::cos(cut.angle_rad);
    const double cy = std::sin(cut.angle_rad);
    ProfileError err;
    double ss = 0.0;
    for (const auto& p : trace) {
        const double expected = sample_bilinear(target, cut.x0 + p.x * cx, cut.y0 + p.x * cy);
        const double d = p.h - expected;
        err.max_abs = std::max(err.max_abs, std::abs(d));
        ss += d * d;
    }
    err.rms = std::sqrt(ss / static_cast<double>(trace.size()));
    return err;
}

ResonanceFit fit_resonance(const TransmissionTrace& trace) {
    const auto& pts = trace.points;
    require(pts.size() >= 5, ErrorCode::insufficient_data, "transmission trace needs at least 5 points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        require(std::isfinite(pts[i].freq_ghz) && std::isfinite(pts[i].mag_db), ErrorCode::invalid_parameter,
                "non-finite transmission sample");
        if (i > 0) {
            require(pts[i].freq_ghz > pts[i - 1].freq_ghz, ErrorCode::invalid_parameter,
                    "transmission frequencies must be strictly increasing");
        }
    }

    std::vector<double> db(pts.size());
    std::transform(pts.begin(), pts.end(), db.begin(), [](auto& p) { return p.mag_db; });
    const double med_db = median(db);
    const auto imin = static_cast<std::size_t>(std::min_element(db.begin(), db.end()) - db.begin());
    if (db[imin] > med_db - 3.0) {
        fail(ErrorCode::no_resonance, "no resonance dip: minimum " + std::to_string(db[imin]) +
                                          " dB is within 3 dB of the median " + std::to_string(med_db) + " dB");
    }

    std::vector<double> f(pts.size()), pw(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        f[i] = pts[i].freq_ghz;
        pw[i] = std::pow(10.0, pts[i].mag_db / 10.0);
    }
    const double base0 = std::pow(10.0, med_db / 10.0);
    const double depth0 = 1.0 - pw[imin] / base0;
    const double fmin = f[imin];

    ResonanceFit fallback{fmin, 0.0, depth0, base0, true};

    // Discrete full width at half depth.
    const double half = base0 * (1.0 - 0.5 * depth0);
    auto crossing = [&](long dir) -> std::optional<double> {
        for (long i = static_cast<long>(imin); i + dir >= 0 && i + dir < static_cast<long>(f.size()); i += dir) {
            const auto j = static_cast<std::size_t>(i + dir);
            const auto k = static_cast<std::size_t>(i);
            if (pw[j] >= half) return f[k] + (half - pw[k]) / (pw[j] - pw[k]) * (f[j] - f[k]);
        }
        return std::nullopt;
    };
    const auto left = crossing(-1);
    const auto right = crossing(+1);
    double kappa0 = 0.0;
    if (left && right) kappa0 = *right - *left;
    else if (left) kappa0 = 2.0 * (fmin - *left);
    else if (right) kappa0 = 2.0 * (*right - fmin);
    const double step = median_step_ghz(trace);
    kappa0 = std::max(kappa0, step);
    fallback.kappa_ghz = kappa0;

    // Window of +-5 linewidths, widened to at least 8 points.
    std::size_t lo = imin, hi = imin;
    while (lo > 0 && fmin - f[lo - 1] <= 5.0 * kappa0) --lo;
    while (hi + 1 < f.size() && f[hi + 1] - fmin <= 5.0 * kappa0) ++hi;
    while (hi - lo + 1 < 8 && (lo > 0 || hi + 1 < f.size())) {
        if (lo > 0) --lo;
        if (hi + 1 < f.size() && hi - lo + 1 < 8) ++hi;
    }
    const double wlo = f[lo], whi = f[hi];
    const auto m = static_cast<Eigen::Index>(hi - lo + 1);

    // Parameters scaled to O(1): f0 = fmin + t0 kappa0, kappa = t1 kappa0, A = t2, B = t3 base0.
    Eigen::Vector4d t(0.0, 1.0, depth0, 1.0);
    auto evaluate = [&](const Eigen::Vector4d& th, Eigen::VectorXd& res, Eigen::MatrixXd* jac) {
        const double f0 = fmin + th(0) * kappa0;
        const double kap = th(1) * kappa0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const std::size_t s = lo + static_cast<std::size_t>(i);
            const double z = (f[s] - f0) / kap;
            const double l = 1.0 / (1.0 + 4.0 * z * z);
            const double b = th(3) * base0;
            res(i) = (b * (1.0 - th(2) * l) - pw[s]) / base0;
            if (jac) {
                const double dl_dz = -8.0 * z * l * l;
                (*jac)(i, 0) = -b * th(2) * dl_dz * (-1.0 / kap) * kappa0 / base0;
                (*jac)(i, 1) = -b * th(2) * dl_dz * (-z / kap) * kappa0 / base0;
                (*jac)(i, 2) = -b * l / base0;
                (*jac)(i, 3) = (1.0 - th(2) * l);
            }
        }
    };

    Eigen::VectorXd res(m), trial_res(m);
    Eigen::MatrixXd jac(m, 4);
    evaluate(t, res, &jac);
    double cost = res.squaredNorm();
    double lambda = 1e-3;
    bool ok = false;
    for (int it = 0; it < 200; ++it) {
        const Eigen::Matrix4d jtj = jac.transpose() * jac;
        const Eigen::Vector4d g = jac.transpose() * res;
        Eigen::Matrix4d a = jtj;
        a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
        const Eigen::Vector4d delta = a.ldlt().solve(-g);
        if (!delta.allFinite()) break;
        const Eigen::Vector4d trial = t + delta;
        if (trial(1) <= 0.0) {
            lambda *= 10.0;
            continue;
        }
        evaluate(trial, trial_res, nullptr);
        const double trial_cost = trial_res.squaredNorm();
        if (trial_cost < cost) {
            const double drop = cost - trial_cost;
            t = trial;
            evaluate(t, res, &jac);
            cost = trial_cost;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (delta.lpNorm<Eigen::Infinity>() < 1e-12 || drop <= 1e-15 * cost) {
                ok = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) {
                ok = true;  // no further descent possible from here
                break;
            }
        }
    }

    const double f0 = fmin + t(0) * kappa0;
    const double kap = t(1) * kappa0;
    if (!ok || !t.allFinite() || kap <= 0.0 || t(2) <= 0.0 || f0 < wlo || f0 > whi) return fallback;
    return ResonanceFit{f0, kap, t(2), t(3) * base0, false};
}

double default_shift_threshold_mhz(const TransmissionTrace& low, const TransmissionTrace& high) {
    const double step_mhz = 1e3 * std::max(median_step_ghz(low), median_step_ghz(high));
    return std::max(0.1, 5.0 * step_mhz);
}

ShiftResult power_shift(const TransmissionTrace& low, const TransmissionTrace& high,
                        std::optional<double> threshold_mhz) {
    auto fit = [](const TransmissionTrace& t, const char* which) {
        try {
            return fit_resonance(t);
        } catch (const Error& e) {
            throw Error(e.code(), std::string(which) + " trace: " + e.what());
        }
    };
    const ResonanceFit a = fit(low, "low-power");
    const ResonanceFit b = fit(high, "high-power");

    ShiftResult out;
    out.f_low_ghz = a.f0_ghz;
    out.f_high_ghz = b.f0_ghz;
    out.shift_mhz = (b.f0_ghz - a.f0_ghz) * 1e3;
    out.threshold_is_default = !threshold_mhz.has_value();
    out.threshold_mhz = threshold_mhz ? *threshold_mhz : default_shift_threshold_mhz(low, high);
    require(std::isfinite(out.threshold_mhz) && out.threshold_mhz >= 0.0, ErrorCode::invalid_parameter,
            "shift threshold must be non-negative");
    out.operable = std::abs(out.shift_mhz) >= out.threshold_mhz;
    out.sign = out.shift_mhz < 0.0 ? ShiftSign::negative : ShiftSign::positive;
    out.degraded = a.degraded || b.degraded;
    return out;
}

}  // namespace graydose
