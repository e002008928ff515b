#include "graydose/graydose.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "contrast.hpp"
#include "formats.hpp"
#include "kernel.hpp"
#include "metrology.hpp"
#include "pec.hpp"
#include "profile.hpp"
#include "stats.hpp"

using namespace graydose;

struct gd_psf {
    PointSpreadFunction value;
};
struct gd_kernel {
    DiscreteKernel value;
};
struct gd_contrast {
    ContrastCurve value;
};
struct gd_grid {
    Grid value;
};
struct gd_layers {
    DoseLayers value;
};
struct gd_density {
    DensityEstimate value;
};

namespace {

thread_local std::string g_last_error;

gd_status status_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_parameter: return GD_ERR_INVALID_PARAMETER;
        case ErrorCode::io: return GD_ERR_IO;
        case ErrorCode::parse: return GD_ERR_PARSE;
        case ErrorCode::incompatible_grid: return GD_ERR_INCOMPATIBLE_GRID;
        case ErrorCode::invalid_geometry: return GD_ERR_INVALID_GEOMETRY;
        case ErrorCode::target_exceeds_resist: return GD_ERR_TARGET_EXCEEDS_RESIST;
        case ErrorCode::infeasible_target: return GD_ERR_INFEASIBLE_TARGET;
        case ErrorCode::bad_calibration: return GD_ERR_BAD_CALIBRATION;
        case ErrorCode::incomplete_calibration: return GD_ERR_INCOMPLETE_CALIBRATION;
        case ErrorCode::insufficient_data: return GD_ERR_INSUFFICIENT_DATA;
        case ErrorCode::degenerate_geometry: return GD_ERR_DEGENERATE_GEOMETRY;
        case ErrorCode::degenerate_data: return GD_ERR_DEGENERATE_DATA;
        case ErrorCode::no_resonance: return GD_ERR_NO_RESONANCE;
        case ErrorCode::out_of_support: return GD_ERR_OUT_OF_SUPPORT;
        case ErrorCode::under_resolved: return GD_ERR_UNDER_RESOLVED;
    }
    return GD_ERR_INTERNAL;
}

template <typename Fn>
gd_status guarded(Fn&& fn) noexcept {
    try {
        fn();
        g_last_error.clear();
        return GD_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
    } catch (const std::exception& e) {
        g_last_error = e.what();
    } catch (...) {
        g_last_error = "unknown error";
    }
    return GD_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
    if (!p) fail(ErrorCode::invalid_parameter, std::string(what) + " must not be NULL");
}

template <typename T>
T* copy_out(const std::vector<T>& v) {
    auto* p = static_cast<T*>(std::malloc(std::max<std::size_t>(1, v.size()) * sizeof(T)));
    if (!p) throw std::bad_alloc();
    if (!v.empty()) std::memcpy(p, v.data(), v.size() * sizeof(T));
    return p;
}

Quantity quantity_of(gd_quantity q) {
    switch (q) {
        case GD_HEIGHT: return Quantity::height;
        case GD_DOSE: return Quantity::dose;
        case GD_ENERGY: return Quantity::energy;
    }
    fail(ErrorCode::invalid_parameter, "unknown grid quantity");
}

Boundary boundary_of(gd_boundary b) {
    if (b == GD_ZERO_PAD) return Boundary::zero_pad;
    if (b == GD_PERIODIC) return Boundary::periodic;
    fail(ErrorCode::invalid_parameter, "unknown boundary policy");
}

BridgeSpec bridge_of(const gd_bridge_spec* s) {
    need(s, "bridge spec");
    return {s->span_um, s->apex_um, s->width_um, s->margin_um};
}

std::vector<ProfilePoint> profile_points(const double* x, const double* h, size_t n) {
    if (n) {
        need(x, "x");
        need(h, "h");
    }
    std::vector<ProfilePoint> pts(n);
    for (size_t i = 0; i < n; ++i) pts[i] = {x[i], h[i]};
    return pts;
}

TransmissionTrace transmission(const double* f, const double* m, size_t n) {
    if (n) {
        need(f, "frequencies");
        need(m, "magnitudes");
    }
    TransmissionTrace t;
    for (size_t i = 0; i < n; ++i) t.points.push_back({f[i], m[i]});
    return t;
}

void fill_report(const SolverReport& r, gd_solver_report* out, double* trace, size_t capacity) {
    if (out) *out = {r.iterations, r.max_error_um, r.converged ? 1 : 0, r.tolerance_um, r.max_dose, r.guard_band_um};
    if (trace)
        for (size_t i = 0; i < std::min(capacity, r.error_trace.size()); ++i) trace[i] = r.error_trace[i];
}

}  // namespace

extern "C" {

const char* gd_version(void) { return "1.0.0"; }
int gd_grid_format_version(void) { return kGridFormatVersion; }
int gd_layer_format_version(void) { return kLayerFormatVersion; }
const char* gd_last_error(void) { return g_last_error.c_str(); }
void gd_buffer_free(void* buffer) { std::free(buffer); }

const char* gd_status_name(gd_status status) {
    switch (status) {
        case GD_OK: return "ok";
        case GD_ERR_INVALID_PARAMETER: return "invalid-parameter";
        case GD_ERR_IO: return "io";
        case GD_ERR_PARSE: return "parse";
        case GD_ERR_INCOMPATIBLE_GRID: return "incompatible-grid";
        case GD_ERR_INVALID_GEOMETRY: return "invalid-geometry";
        case GD_ERR_TARGET_EXCEEDS_RESIST: return "target-exceeds-resist";
        case GD_ERR_INFEASIBLE_TARGET: return "infeasible-target";
        case GD_ERR_BAD_CALIBRATION: return "bad-calibration";
        case GD_ERR_INCOMPLETE_CALIBRATION: return "incomplete-calibration";
        case GD_ERR_INSUFFICIENT_DATA: return "insufficient-data";
        case GD_ERR_DEGENERATE_GEOMETRY: return "degenerate-geometry";
        case GD_ERR_DEGENERATE_DATA: return "degenerate-data";
        case GD_ERR_NO_RESONANCE: return "no-resonance";
        case GD_ERR_OUT_OF_SUPPORT: return "out-of-support";
        case GD_ERR_UNDER_RESOLVED: return "under-resolved";
        case GD_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

// ---- kernel

gd_status gd_psf_double_gaussian(double alpha_um, double beta_um, double eta, gd_psf** out) {
    return guarded([&] {
        need(out, "out");
        *out = new gd_psf{make_double_gaussian(alpha_um, beta_um, eta)};
    });
}

gd_status gd_psf_from_terms(const double* weights, const double* sigmas_um, size_t count, gd_psf** out,
                            double* applied_factor) {
    return guarded([&] {
        need(out, "out");
        if (count) {
            need(weights, "weights");
            need(sigmas_um, "sigmas");
        }
        std::vector<GaussianTerm> terms;
        for (size_t i = 0; i < count; ++i) terms.push_back({weights[i], sigmas_um[i]});
        *out = new gd_psf{PointSpreadFunction::normalized(std::move(terms), applied_factor)};
    });
}

gd_status gd_psf_load(const char* path, gd_psf** out, double* applied_factor) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        auto in = open_for_read(path);
        *out = new gd_psf{read_psf(in, path, applied_factor)};
    });
}

gd_status gd_psf_save(const gd_psf* psf, const char* path) {
    return guarded([&] {
        need(psf, "psf");
        need(path, "path");
        auto out = open_for_write(path);
        write_psf(out, psf->value);
        if (!out) fail(ErrorCode::io, std::string("failed writing '") + path + "'");
    });
}

size_t gd_psf_term_count(const gd_psf* psf) { return psf ? psf->value.terms().size() : 0; }

gd_status gd_psf_term(const gd_psf* psf, size_t index, double* weight, double* sigma_um) {
    return guarded([&] {
        need(psf, "psf");
        require(index < psf->value.terms().size(), ErrorCode::invalid_parameter, "term index out of range");
        if (weight) *weight = psf->value.terms()[index].weight;
        if (sigma_um) *sigma_um = psf->value.terms()[index].sigma_um;
    });
}

gd_status gd_psf_radial_cdf(const gd_psf* psf, double r_um, double* fraction) {
    return guarded([&] {
        need(psf, "psf");
        need(fraction, "fraction");
        *fraction = radial_energy_cdf(psf->value, r_um);
    });
}

void gd_psf_free(gd_psf* psf) { delete psf; }

gd_status gd_kernel_discretize(const gd_psf* psf, double pitch_um, double truncation_fraction, int strict,
                               gd_kernel** out) {
    return guarded([&] {
        need(psf, "psf");
        need(out, "out");
        const double fraction = truncation_fraction > 0.0 ? truncation_fraction : kDefaultTruncationFraction;
        *out = new gd_kernel{discretize(psf->value, pitch_um, fraction,
                                        strict ? ResolutionPolicy::strict : ResolutionPolicy::warn)};
    });
}

size_t gd_kernel_extent(const gd_kernel* kernel) { return kernel ? kernel->value.extent() : 0; }
double gd_kernel_pitch(const gd_kernel* kernel) { return kernel ? kernel->value.pitch() : 0.0; }
double gd_kernel_truncation_radius(const gd_kernel* kernel) {
    return kernel ? kernel->value.truncation_radius() : 0.0;
}
int gd_kernel_under_resolved(const gd_kernel* kernel) { return kernel && kernel->value.under_resolved() ? 1 : 0; }
const double* gd_kernel_weights(const gd_kernel* kernel) { return kernel ? kernel->value.weights().data() : nullptr; }

gd_status gd_kernel_radial_cdf(const gd_kernel* kernel, double r_um, double* fraction) {
    return guarded([&] {
        need(kernel, "kernel");
        need(fraction, "fraction");
        *fraction = discrete_radial_cdf(kernel->value, r_um);
    });
}

void gd_kernel_free(gd_kernel* kernel) { delete kernel; }

// ---- contrast

gd_status gd_contrast_samples_load(const char* path, double** doses, double** heights, size_t* count) {
    return guarded([&] {
        need(path, "path");
        need(doses, "doses");
        need(heights, "heights");
        need(count, "count");
        auto in = open_for_read(path);
        const auto samples = read_contrast_samples(in, path);
        std::vector<double> d, h;
        for (const auto& s : samples) {
            d.push_back(s.dose);
            h.push_back(s.height);
        }
        *doses = copy_out(d);
        *heights = copy_out(h);
        *count = samples.size();
    });
}

gd_status gd_contrast_fit(const double* doses, const double* heights, size_t count, double full_height_um,
                          int parametric, gd_contrast** out, gd_contrast_fit_report* report) {
    return guarded([&] {
        need(out, "out");
        if (count) {
            need(doses, "doses");
            need(heights, "heights");
        }
        std::vector<ContrastSample> samples(count);
        for (size_t i = 0; i < count; ++i) samples[i] = {doses[i], heights[i]};
        ContrastFitReport rep;
        ContrastCurve curve = parametric ? fit_parametric_contrast(samples, full_height_um, {}, &rep)
                                         : fit_contrast(samples, full_height_um, {}, &rep);
        *out = new gd_contrast{std::move(curve)};
        if (report) *report = {rep.max_repair_displacement, rep.rms_residual, rep.sample_count};
    });
}

gd_status gd_contrast_parametric(double full_height_um, double onset_dose, double clearing_dose, double gamma,
                                 gd_contrast** out) {
    return guarded([&] {
        need(out, "out");
        *out = new gd_contrast{ContrastCurve::parametric(full_height_um, onset_dose, clearing_dose, gamma)};
    });
}

gd_status gd_contrast_load(const char* path, gd_contrast** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        auto in = open_for_read(path);
        *out = new gd_contrast{read_contrast_model(in, path)};
    });
}

gd_status gd_contrast_save(const gd_contrast* curve, const char* path) {
    return guarded([&] {
        need(curve, "curve");
        need(path, "path");
        auto out = open_for_write(path);
        write_contrast_model(out, curve->value);
        if (!out) fail(ErrorCode::io, std::string("failed writing '") + path + "'");
    });
}

gd_status gd_contrast_params(const gd_contrast* curve, double* full_height_um, double* onset_dose,
                             double* clearing_dose) {
    return guarded([&] {
        need(curve, "curve");
        if (full_height_um) *full_height_um = curve->value.full_height();
        if (onset_dose) *onset_dose = curve->value.onset_dose();
        if (clearing_dose) *clearing_dose = curve->value.clearing_dose();
    });
}

gd_status gd_contrast_height(const gd_contrast* curve, double dose, double* height_um) {
    return guarded([&] {
        need(curve, "curve");
        need(height_um, "height");
        *height_um = curve->value.height(dose);
    });
}

gd_status gd_contrast_dose(const gd_contrast* curve, double height_um, double* dose) {
    return guarded([&] {
        need(curve, "curve");
        need(dose, "dose");
        *dose = curve->value.dose(height_um);
    });
}

gd_status gd_contrast_residual(const gd_contrast* curve, const double* doses, const double* heights, size_t count,
                               double* rms_um) {
    return guarded([&] {
        need(curve, "curve");
        need(rms_um, "rms");
        std::vector<ContrastSample> samples(count);
        for (size_t i = 0; i < count; ++i) samples[i] = {doses[i], heights[i]};
        *rms_um = contrast_residual(curve->value, samples);
    });
}

void gd_contrast_free(gd_contrast* curve) { delete curve; }

// ---- grids

gd_status gd_grid_create(size_t cols, size_t rows, double pitch_um, gd_quantity quantity, double fill,
                         gd_grid** out) {
    return guarded([&] {
        need(out, "out");
        *out = new gd_grid{Grid(cols, rows, pitch_um, quantity_of(quantity), fill)};
    });
}

gd_status gd_grid_from_values(size_t cols, size_t rows, double pitch_um, gd_quantity quantity, const double* values,
                              gd_grid** out) {
    return guarded([&] {
        need(out, "out");
        need(values, "values");
        Grid g(cols, rows, pitch_um, quantity_of(quantity));
        std::copy_n(values, cols * rows, g.values().begin());
        *out = new gd_grid{std::move(g)};
    });
}

gd_status gd_grid_load(const char* path, gd_grid** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        auto in = open_for_read(path);
        *out = new gd_grid{read_grid(in, path)};
    });
}

gd_status gd_grid_save(const gd_grid* grid, const char* path) {
    return guarded([&] {
        need(grid, "grid");
        need(path, "path");
        auto out = open_for_write(path);
        write_grid(out, grid->value);
        if (!out) fail(ErrorCode::io, std::string("failed writing '") + path + "'");
    });
}

size_t gd_grid_cols(const gd_grid* grid) { return grid ? grid->value.cols() : 0; }
size_t gd_grid_rows(const gd_grid* grid) { return grid ? grid->value.rows() : 0; }
double gd_grid_pitch(const gd_grid* grid) { return grid ? grid->value.pitch() : 0.0; }

gd_quantity gd_grid_quantity(const gd_grid* grid) {
    if (!grid) return GD_HEIGHT;
    switch (grid->value.quantity()) {
        case Quantity::height: return GD_HEIGHT;
        case Quantity::dose: return GD_DOSE;
        case Quantity::energy: return GD_ENERGY;
    }
    return GD_HEIGHT;
}

void gd_grid_origin(const gd_grid* grid, double* x_um, double* y_um) {
    if (x_um) *x_um = grid ? grid->value.origin_x() : 0.0;
    if (y_um) *y_um = grid ? grid->value.origin_y() : 0.0;
}

const double* gd_grid_values(const gd_grid* grid) { return grid ? grid->value.values().data() : nullptr; }
void gd_grid_free(gd_grid* grid) { delete grid; }

gd_bridge_spec gd_bridge_default(void) {
    const BridgeSpec s;
    return {s.span_um, s.apex_um, s.width_um, s.margin_um};
}

gd_status gd_bridge_height_map(const gd_bridge_spec* spec, double full_height_um, double pitch_um, gd_grid** out) {
    return guarded([&] {
        need(out, "out");
        *out = new gd_grid{arc_bridge_height_map(bridge_of(spec), full_height_um, pitch_um)};
    });
}

gd_status gd_bridge_field(const gd_bridge_spec* spec, double full_height_um, double pitch_um, size_t cols,
                          size_t rows, gd_grid** out) {
    return guarded([&] {
        need(out, "out");
        *out = new gd_grid{centered_bridge_field(bridge_of(spec), full_height_um, pitch_um, cols, rows)};
    });
}

gd_status gd_grid_compose(const gd_grid* base, const gd_grid* patch, double x_um, double y_um, gd_grid** out) {
    return guarded([&] {
        need(base, "base");
        need(patch, "patch");
        need(out, "out");
        *out = new gd_grid{compose(base->value, patch->value, x_um, y_um)};
    });
}

// ---- proximity correction

gd_solver_options gd_solver_defaults(void) {
    const SolverOptions o;
    return {o.tolerance_um, o.max_iterations, o.relaxation, o.max_dose, GD_ZERO_PAD, o.threads};
}

gd_status gd_forward_simulate(const gd_grid* dose, const gd_kernel* kernel, const gd_contrast* curve,
                              gd_boundary boundary, unsigned threads, gd_grid** height, gd_grid** energy) {
    return guarded([&] {
        need(dose, "dose");
        need(kernel, "kernel");
        need(curve, "curve");
        need(height, "height");
        const ExposureOptions opt{boundary_of(boundary), std::max(1u, threads)};
        Grid e = absorbed_energy(dose->value, kernel->value, opt);
        Grid h = e.retagged(Quantity::height);
        for (std::size_t i = 0; i < h.size(); ++i)
            h.values()[i] = curve->value.height_unchecked(std::max(0.0, e.values()[i]));
        *height = new gd_grid{std::move(h)};
        if (energy) *energy = new gd_grid{std::move(e)};
    });
}

gd_status gd_solve_dose(const gd_grid* target, const gd_kernel* kernel, const gd_contrast* curve,
                        const gd_solver_options* options, gd_grid** dose, gd_solver_report* report,
                        double* error_trace, size_t trace_capacity, gd_grid** diagnostic) {
    if (dose) *dose = nullptr;
    if (diagnostic) *diagnostic = nullptr;
    return guarded([&] {
        need(target, "target");
        need(kernel, "kernel");
        need(curve, "curve");
        need(dose, "dose");
        const gd_solver_options o = options ? *options : gd_solver_defaults();
        SolverOptions so;
        so.tolerance_um = o.tolerance_um;
        so.max_iterations = o.max_iterations;
        so.relaxation = o.relaxation;
        so.max_dose = o.max_dose;
        so.boundary = boundary_of(o.boundary);
        so.threads = std::max(1u, o.threads);
        try {
            DoseSolution sol = solve_dose(target->value, kernel->value, curve->value, so);
            fill_report(sol.report, report, error_trace, trace_capacity);
            *dose = new gd_grid{std::move(sol.dose)};
        } catch (const InfeasibleTarget& e) {
            fill_report(e.best_effort().report, report, error_trace, trace_capacity);
            *dose = new gd_grid{e.best_effort().dose};
            if (diagnostic) *diagnostic = new gd_grid{e.diagnostic()};
            throw;
        }
    });
}

gd_status gd_height_error(const gd_grid* target, const gd_grid* simulated, double full_height_um,
                          double* max_error_um) {
    return guarded([&] {
        need(target, "target");
        need(simulated, "simulated");
        need(max_error_um, "max_error");
        require(target->value.cols() == simulated->value.cols() && target->value.rows() == simulated->value.rows(),
                ErrorCode::incompatible_grid, "target and simulated grids differ in shape");
        double worst = 0.0;
        for (std::size_t i = 0; i < target->value.size(); ++i)
            worst = std::max(worst, height_error(target->value.values()[i], simulated->value.values()[i],
                                                 full_height_um));
        *max_error_um = worst;
    });
}

gd_status gd_quantize(const gd_grid* dose, int levels, gd_layers** out) {
    return guarded([&] {
        need(dose, "dose");
        need(out, "out");
        *out = new gd_layers{quantize(dose->value, levels)};
    });
}

gd_status gd_layers_load(const char* path, gd_layers** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        auto in = open_for_read(path);
        *out = new gd_layers{read_layers(in, path)};
    });
}

gd_status gd_layers_save(const gd_layers* layers, const char* path) {
    return guarded([&] {
        need(layers, "layers");
        need(path, "path");
        auto out = open_for_write(path);
        write_layers(out, layers->value);
        if (!out) fail(ErrorCode::io, std::string("failed writing '") + path + "'");
    });
}

size_t gd_layers_level_count(const gd_layers* layers) { return layers ? layers->value.levels.size() : 0; }

gd_status gd_layers_level(const gd_layers* layers, size_t level, double* dose, size_t* rect_count) {
    return guarded([&] {
        need(layers, "layers");
        require(level < layers->value.levels.size(), ErrorCode::invalid_parameter, "level index out of range");
        if (dose) *dose = layers->value.levels[level].dose;
        if (rect_count) *rect_count = layers->value.levels[level].rects.size();
    });
}

gd_status gd_layers_rect(const gd_layers* layers, size_t level, size_t index, double rect[4]) {
    return guarded([&] {
        need(layers, "layers");
        need(rect, "rect");
        require(level < layers->value.levels.size(), ErrorCode::invalid_parameter, "level index out of range");
        const auto& rects = layers->value.levels[level].rects;
        require(index < rects.size(), ErrorCode::invalid_parameter, "rectangle index out of range");
        rect[0] = rects[index].x0;
        rect[1] = rects[index].y0;
        rect[2] = rects[index].x1;
        rect[3] = rects[index].y1;
    });
}

gd_status gd_layers_rasterize(const gd_layers* layers, const gd_grid* geometry, gd_grid** out) {
    return guarded([&] {
        need(layers, "layers");
        need(geometry, "geometry");
        need(out, "out");
        *out = new gd_grid{dequantize(layers->value, geometry->value)};
    });
}

void gd_layers_free(gd_layers* layers) { delete layers; }

// ---- metrology

gd_status gd_profile_trace_load(const char* path, double** x_um, double** h_um, size_t* count) {
    return guarded([&] {
        need(path, "path");
        need(x_um, "x");
        need(h_um, "h");
        need(count, "count");
        auto in = open_for_read(path);
        const auto trace = read_profile_trace(in, path);
        std::vector<double> x, h;
        for (const auto& p : trace) {
            x.push_back(p.x);
            h.push_back(p.h);
        }
        *x_um = copy_out(x);
        *h_um = copy_out(h);
        *count = trace.size();
    });
}

gd_status gd_circle_fit(const double* x_um, const double* h_um, size_t count, gd_circle* out) {
    return guarded([&] {
        need(out, "out");
        const ProfileFit f = circle_fit(profile_points(x_um, h_um, count));
        *out = {f.center_x, f.center_h, f.radius, f.rms_residual, f.iterations};
    });
}

gd_status gd_profile_error(const double* x_um, const double* h_um, size_t count, const gd_grid* target,
                           double cut_x0_um, double cut_y0_um, double cut_angle_rad, double* max_abs_um,
                           double* rms_um) {
    return guarded([&] {
        need(target, "target");
        const ProfileError e =
            profile_error(profile_points(x_um, h_um, count), target->value, {cut_x0_um, cut_y0_um, cut_angle_rad});
        if (max_abs_um) *max_abs_um = e.max_abs;
        if (rms_um) *rms_um = e.rms;
    });
}

gd_status gd_transmission_load(const char* path, double** freq_ghz, double** mag_db, size_t* count,
                               double* power_dbm) {
    return guarded([&] {
        need(path, "path");
        need(freq_ghz, "freq");
        need(mag_db, "mag");
        need(count, "count");
        auto in = open_for_read(path);
        const TransmissionTrace t = read_transmission(in, path);
        std::vector<double> f, m;
        for (const auto& p : t.points) {
            f.push_back(p.freq_ghz);
            m.push_back(p.mag_db);
        }
        *freq_ghz = copy_out(f);
        *mag_db = copy_out(m);
        *count = t.points.size();
        if (power_dbm) *power_dbm = t.power_dbm;
    });
}

gd_status gd_fit_resonance(const double* freq_ghz, const double* mag_db, size_t count, gd_resonance* out) {
    return guarded([&] {
        need(out, "out");
        const ResonanceFit r = fit_resonance(transmission(freq_ghz, mag_db, count));
        *out = {r.f0_ghz, r.kappa_ghz, r.depth, r.degraded ? 1 : 0};
    });
}

gd_status gd_power_shift(const double* low_freq_ghz, const double* low_mag_db, size_t low_count,
                         const double* high_freq_ghz, const double* high_mag_db, size_t high_count,
                         double threshold_mhz, gd_shift* out) {
    return guarded([&] {
        need(out, "out");
        std::optional<double> threshold;
        if (threshold_mhz >= 0.0) threshold = threshold_mhz;
        const ShiftResult s = power_shift(transmission(low_freq_ghz, low_mag_db, low_count),
                                          transmission(high_freq_ghz, high_mag_db, high_count), threshold);
        *out = {s.f_low_ghz, s.f_high_ghz, s.shift_mhz, s.threshold_mhz, s.threshold_is_default ? 1 : 0,
                s.operable ? 1 : 0, s.sign == ShiftSign::negative ? -1 : 1, s.degraded ? 1 : 0};
    });
}

// ---- statistics

const char* gd_label_name(gd_label label) {
    switch (label) {
        case GD_LABEL_OPERABLE: return "operable";
        case GD_LABEL_NON_OPERABLE: return "non-operable";
        case GD_LABEL_PRE_TEST: return "pre-test";
        case GD_LABEL_POST_150C: return "post-150C";
        case GD_LABEL_POST_200C: return "post-200C";
        case GD_LABEL_UNLABELED: return "unlabeled";
    }
    return "unlabeled";
}

gd_status gd_labeled_samples_load(const char* path, double** resistance_kohm, int** labels, size_t* count) {
    return guarded([&] {
        need(path, "path");
        need(resistance_kohm, "resistance");
        need(labels, "labels");
        need(count, "count");
        auto in = open_for_read(path);
        const auto rows = read_labeled_samples(in, path);
        std::vector<double> v;
        std::vector<int> l;
        for (const auto& r : rows) {
            v.push_back(r.resistance_kohm);
            l.push_back(static_cast<int>(r.label));
        }
        *resistance_kohm = copy_out(v);
        *labels = copy_out(l);
        *count = rows.size();
    });
}

gd_status gd_ecdf(const double* values, size_t count, double** points, double** fractions, size_t* point_count) {
    return guarded([&] {
        need(points, "points");
        need(fractions, "fractions");
        need(point_count, "point_count");
        if (count) need(values, "values");
        const EmpiricalCdf e = ecdf(std::span<const double>(values, count));
        *points = copy_out(e.values);
        *fractions = copy_out(e.fractions);
        *point_count = e.values.size();
    });
}

gd_status gd_kde(const double* values, size_t count, double bandwidth, gd_density** out) {
    return guarded([&] {
        need(out, "out");
        if (count) need(values, "values");
        KdeOptions opt;
        opt.bandwidth = bandwidth;
        *out = new gd_density{kde(std::span<const double>(values, count), opt)};
    });
}

double gd_density_bandwidth(const gd_density* d) { return d ? d->value.bandwidth : 0.0; }
size_t gd_density_size(const gd_density* d) { return d ? d->value.grid.size() : 0; }
const double* gd_density_grid(const gd_density* d) { return d ? d->value.grid.data() : nullptr; }
const double* gd_density_pdf(const gd_density* d) { return d ? d->value.pdf.data() : nullptr; }
const double* gd_density_cdf(const gd_density* d) { return d ? d->value.cdf.data() : nullptr; }
void gd_density_free(gd_density* d) { delete d; }

gd_status gd_posterior(const gd_density* operable, const gd_density* non_operable, double prior, double r_kohm,
                       double* probability, int* extrapolated) {
    return guarded([&] {
        need(operable, "operable");
        need(non_operable, "non_operable");
        need(probability, "probability");
        const PosteriorPoint p = posterior_operable(operable->value, non_operable->value, prior, r_kohm);
        *probability = p.probability;
        if (extrapolated) *extrapolated = p.extrapolated ? 1 : 0;
    });
}

gd_status gd_posterior_curve(const gd_density* operable, const gd_density* non_operable, double prior,
                             size_t points, double** grid, double** probability, int** extrapolated) {
    return guarded([&] {
        need(operable, "operable");
        need(non_operable, "non_operable");
        need(grid, "grid");
        need(probability, "probability");
        const PosteriorCurve c = posterior_curve(operable->value, non_operable->value, prior, points);
        *grid = copy_out(c.grid);
        *probability = copy_out(c.probability);
        if (extrapolated) {
            std::vector<int> flags(c.extrapolated.begin(), c.extrapolated.end());
            *extrapolated = copy_out(flags);
        }
    });
}

gd_status gd_posterior_crossing(const gd_density* operable, const gd_density* non_operable, double prior,
                                double level, double* r_kohm) {
    return guarded([&] {
        need(operable, "operable");
        need(non_operable, "non_operable");
        need(r_kohm, "r");
        const PosteriorCurve c = posterior_curve(operable->value, non_operable->value, prior, 4096);
        const auto x = posterior_crossing(c, level);
        if (!x) fail(ErrorCode::out_of_support, "posterior never falls through the requested level");
        *r_kohm = *x;
    });
}

gd_status gd_yield(long n_operable, long n_total, double* fraction, double* wilson_lo, double* wilson_hi) {
    return guarded([&] {
        const YieldGroup g{"", n_operable, n_total};
        const YieldRow row = yield_summary(std::span<const YieldGroup>(&g, 1)).front();
        if (fraction) *fraction = row.fraction;
        if (wilson_lo) *wilson_lo = row.wilson.lo;
        if (wilson_hi) *wilson_hi = row.wilson.hi;
    });
}

}  // extern "C"
