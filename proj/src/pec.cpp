#include "pec.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <thread>

namespace graydose {

namespace {

void check_pitch(const Grid& grid, const DiscreteKernel& kernel) {
    if (std::abs(grid.pitch() - kernel.pitch()) > 1e-9 * grid.pitch()) {
        fail(ErrorCode::incompatible_grid, "kernel pitch " + std::to_string(kernel.pitch()) +
                                               " um does not match grid pitch " + std::to_string(grid.pitch()) +
                                               " um");
    }
}

// Runs fn(begin, end) over contiguous index ranges. Each index is touched by
// exactly one worker, so results do not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count / 4096, 1))));
    if (threads == 1) {
        fn(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

Grid absorbed_energy(const DoseMap& dose, const DiscreteKernel& kernel, const ExposureOptions& options) {
    check_pitch(dose, kernel);
    Grid energy = dose.retagged(Quantity::energy);
    Convolver conv(kernel, dose.cols(), dose.rows(), options.boundary);
    conv.apply(dose.values(), energy.values());
    return energy;
}

HeightMap forward_simulate(const DoseMap& dose, const DiscreteKernel& kernel, const ContrastCurve& curve,
                           const ExposureOptions& options) {
    Grid energy = absorbed_energy(dose, kernel, options);
    HeightMap height = energy.retagged(Quantity::height);
    auto e = energy.values();
    auto h = height.values();
    parallel_for(h.size(), options.threads, [&](std::size_t b, std::size_t end) {
        for (std::size_t i = b; i < end; ++i) h[i] = curve.height_unchecked(std::max(0.0, e[i]));
    });
    return height;
}

double height_error(double target, double simulated, double full_height) noexcept {
    if (target >= full_height) return std::max(0.0, full_height - simulated);
    if (target <= 0.0) return std::max(0.0, simulated);
    return std::abs(simulated - target);
}

DoseSolution solve_dose(const HeightMap& target, const DiscreteKernel& kernel, const ContrastCurve& curve,
                        const SolverOptions& options) {
    check_pitch(target, kernel);
    const double t0 = curve.full_height();
    const double tol = options.tolerance_um > 0.0 ? options.tolerance_um : 0.01 * t0;
    const double cap = options.max_dose > 0.0 ? options.max_dose : 5.0 * curve.clearing_dose();
    require(options.max_iterations >= 1, ErrorCode::invalid_parameter, "max_iterations must be at least 1");
    require(options.relaxation > 0.0 && options.relaxation <= 2.0, ErrorCode::invalid_parameter,
            "relaxation must lie in (0, 2]");
    require(cap >= curve.clearing_dose(), ErrorCode::invalid_parameter, "dose cap is below the clearing dose");
    for (double v : target.values()) {
        require(std::isfinite(v) && v >= 0.0, ErrorCode::invalid_parameter, "target heights must be non-negative");
        if (v > t0) {
            fail(ErrorCode::target_exceeds_resist, "target height " + std::to_string(v) +
                                                       " um exceeds resist thickness " + std::to_string(t0) + " um");
        }
    }

    const std::size_t n = target.size();
    const auto tv = target.values();
    std::vector<double> wanted(n);
    parallel_for(n, options.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) wanted[i] = curve.dose(tv[i]);
    });

    DoseSolution sol{target.retagged(Quantity::dose), {}};
    SolverReport& rep = sol.report;
    rep.tolerance_um = tol;
    rep.max_dose = cap;
    rep.guard_band_um = options.boundary == Boundary::zero_pad ? kernel.truncation_radius() : 0.0;

    auto d = sol.dose.values();
    for (std::size_t i = 0; i < n; ++i) d[i] = std::clamp(wanted[i], 0.0, cap);

    Convolver conv(kernel, target.cols(), target.rows(), options.boundary);
    std::vector<double> energy(n);
    std::vector<double> cell_error(n);

    for (int it = 1; it <= options.max_iterations; ++it) {
        conv.apply(d, energy);
        parallel_for(n, options.threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                cell_error[i] = height_error(tv[i], curve.height_unchecked(std::max(0.0, energy[i])), t0);
        });
        const double err = *std::max_element(cell_error.begin(), cell_error.end());
        rep.error_trace.push_back(err);
        rep.iterations = it;
        rep.max_error_um = err;
        if (err <= tol) {
            rep.converged = true;
            return sol;
        }
        if (it == options.max_iterations) break;
        parallel_for(n, options.threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                d[i] = std::clamp(d[i] + options.relaxation * (wanted[i] - energy[i]), 0.0, cap);
        });
    }

    // Not converged: separate cells pinned at a dose bound from merely slow ones.
    HeightMap diagnostic = target.retagged(Quantity::height);
    std::fill(diagnostic.values().begin(), diagnostic.values().end(), 0.0);
    std::size_t pinned = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = curve.height_unchecked(std::max(0.0, energy[i]));
        const double err = height_error(tv[i], h, t0);
        if (err <= tol) continue;
        const bool too_bright = h < tv[i] && d[i] <= 0.0;
        const bool too_dark = h > tv[i] && d[i] >= cap;
        if (too_bright || too_dark) {
            diagnostic.values()[i] = err;
            worst = std::max(worst, err);
            ++pinned;
        }
    }
    if (pinned > 0) {
        throw InfeasibleTarget(std::to_string(pinned) + " cells cannot reach their target height (worst " +
                                   std::to_string(worst) + " um): dose is pinned at 0 or at the " +
                                   std::to_string(cap) + " uC/cm2 cap",
                               std::move(diagnostic), std::move(sol));
    }
    return sol;
}

std::size_t DoseLayers::rect_count() const {
    std::size_t n = 0;
    for (const auto& l : levels) n += l.rects.size();
    return n;
}

DoseLayers quantize(const DoseMap& dose, int n_levels) {
    require(n_levels >= 2, ErrorCode::invalid_parameter, "quantization needs at least 2 levels");
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (double v : dose.values()) {
        require(std::isfinite(v) && v >= 0.0, ErrorCode::invalid_parameter, "doses must be non-negative");
        if (v <= 0.0) continue;
        lo = any ? std::min(lo, v) : v;
        hi = any ? std::max(hi, v) : v;
        any = true;
    }
    DoseLayers out;
    if (!any) return out;

    const std::size_t rows = dose.rows();
    const std::size_t cols = dose.cols();
    const double span = hi - lo;
    const int steps = n_levels - 1;
    auto level_of = [&](double v) -> int {
        if (span <= 0.0) return 0;
        return static_cast<int>(std::lround((v - lo) / span * steps));
    };
    auto level_dose = [&](int k) { return span <= 0.0 ? lo : lo + span * static_cast<double>(k) / steps; };

    std::vector<int> idx(dose.size(), -1);
    for (std::size_t i = 0; i < dose.size(); ++i)
        if (dose.values()[i] > 0.0) idx[i] = level_of(dose.values()[i]);

    struct Open {
        std::size_t row0;
        bool seen;
    };
    // Per level: open rectangles keyed by column run [c0, c1].
    std::map<int, std::map<std::pair<std::size_t, std::size_t>, Open>> open;
    std::map<int, std::vector<Rect>> closed;
    const double p = dose.pitch();
    auto emit = [&](int level, std::size_t c0, std::size_t c1, std::size_t r0, std::size_t r1) {
        closed[level].push_back({dose.origin_x() + static_cast<double>(c0) * p,
                                 dose.origin_y() + static_cast<double>(r0) * p,
                                 dose.origin_x() + static_cast<double>(c1 + 1) * p,
                                 dose.origin_y() + static_cast<double>(r1 + 1) * p});
    };

    for (std::size_t r = 0; r <= rows; ++r) {
        for (auto& [level, runs] : open)
            for (auto& [key, o] : runs) o.seen = false;
        if (r < rows) {
            std::size_t c = 0;
            while (c < cols) {
                const int k = idx[r * cols + c];
                std::size_t e = c;
                while (e + 1 < cols && idx[r * cols + e + 1] == k) ++e;
                if (k >= 0) {
                    auto& runs = open[k];
                    auto it = runs.find({c, e});
                    if (it != runs.end()) it->second.seen = true;
                    else runs.emplace(std::make_pair(c, e), Open{r, true});
                }
                c = e + 1;
            }
        }
        for (auto& [level, runs] : open) {
            for (auto it = runs.begin(); it != runs.end();) {
                if (it->second.seen) {
                    ++it;
                    continue;
                }
                emit(level, it->first.first, it->first.second, it->second.row0, r - 1);
                it = runs.erase(it);
            }
        }
    }

    for (auto& [level, rects] : closed) {
        std::sort(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) {
            return a.y0 != b.y0 ? a.y0 < b.y0 : a.x0 < b.x0;
        });
        out.levels.push_back({level_dose(level), std::move(rects)});
    }
    return out;
}

DoseMap dequantize(const DoseLayers& layers, const Grid& geometry) {
    DoseMap out = geometry.retagged(Quantity::dose);
    std::fill(out.values().begin(), out.values().end(), 0.0);
    const double p = geometry.pitch();
    for (const auto& level : layers.levels) {
        for (const auto& rect : level.rects) {
            const auto c0 = static_cast<long>(std::lround((rect.x0 - geometry.origin_x()) / p));
            const auto c1 = static_cast<long>(std::lround((rect.x1 - geometry.origin_x()) / p));
            const auto r0 = static_cast<long>(std::lround((rect.y0 - geometry.origin_y()) / p));
            const auto r1 = static_cast<long>(std::lround((rect.y1 - geometry.origin_y()) / p));
            require(c0 >= 0 && r0 >= 0 && c1 <= static_cast<long>(geometry.cols()) &&
                        r1 <= static_cast<long>(geometry.rows()),
                    ErrorCode::invalid_geometry, "layer rectangle outside the grid");
            for (long r = r0; r < r1; ++r)
                for (long c = c0; c < c1; ++c)
                    out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = level.dose;
        }
    }
    return out;
}

}  // namespace graydose
