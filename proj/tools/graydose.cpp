// graydose command-line driver. Everything goes through the C interface.
#include <graydose/graydose.h>

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kIo = 1, kDomain = 2, kNotConverged = 3 };

struct Failure {
    int code;
    std::string message;
};

int exit_code_for(gd_status s) {
    switch (s) {
        case GD_OK: return kOk;
        case GD_ERR_IO:
        case GD_ERR_PARSE: return kIo;
        default: return kDomain;
    }
}

void check(gd_status s, const std::string& context = {}) {
    if (s == GD_OK) return;
    std::string msg = gd_last_error();
    if (!context.empty()) msg = context + ": " + msg;
    throw Failure{exit_code_for(s), std::string(gd_status_name(s)) + ": " + msg};
}

[[noreturn]] void usage_error(const std::string& msg) { throw Failure{kDomain, "invalid-parameter: " + msg}; }

template <typename T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Psf = std::unique_ptr<gd_psf, Deleter<gd_psf, gd_psf_free>>;
using Kernel = std::unique_ptr<gd_kernel, Deleter<gd_kernel, gd_kernel_free>>;
using Contrast = std::unique_ptr<gd_contrast, Deleter<gd_contrast, gd_contrast_free>>;
using GridH = std::unique_ptr<gd_grid, Deleter<gd_grid, gd_grid_free>>;
using Layers = std::unique_ptr<gd_layers, Deleter<gd_layers, gd_layers_free>>;
using Density = std::unique_ptr<gd_density, Deleter<gd_density, gd_density_free>>;

// Copies a malloc'd buffer from the library into a vector and releases it.
template <typename T>
std::vector<T> take(T* buffer, size_t n) {
    std::vector<T> v(buffer, buffer + n);
    gd_buffer_free(buffer);
    return v;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Fixed-point with trailing zeros removed: 2.200 -> 2.2, 3.000 -> 3.
std::string trimmed(double v, int digits) {
    std::string s = fixed(v, digits);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

Psf load_psf(const std::string& path) {
    gd_psf* p = nullptr;
    check(gd_psf_load(path.c_str(), &p, nullptr));
    return Psf(p);
}

Contrast load_contrast(const std::string& path) {
    gd_contrast* c = nullptr;
    check(gd_contrast_load(path.c_str(), &c));
    return Contrast(c);
}

GridH load_grid(const std::string& path) {
    gd_grid* g = nullptr;
    check(gd_grid_load(path.c_str(), &g));
    return GridH(g);
}

Kernel make_kernel(const gd_psf* psf, double pitch, double truncation, bool strict) {
    gd_kernel* k = nullptr;
    check(gd_kernel_discretize(psf, pitch, truncation, strict ? 1 : 0, &k));
    if (gd_kernel_under_resolved(k))
        std::cerr << "warning: pitch " << num(pitch)
                  << " um exceeds the narrowest PSF sigma; the forward-scatter term is under-resolved\n";
    return Kernel(k);
}

gd_boundary parse_boundary(const std::string& s) {
    if (s == "zero-pad" || s == "zero_pad") return GD_ZERO_PAD;
    if (s == "periodic") return GD_PERIODIC;
    usage_error("boundary must be zero-pad or periodic, got '" + s + "'");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Failure{kIo, "io: cannot create directory '" + dir.string() + "': " + ec.message()};
}

std::ofstream open_text(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{kIo, "io: cannot open '" + path.string() + "' for writing"};
    return out;
}

// ---- config files: "[section]" headers and "key = value" lines, '#' comments.

class Config {
public:
    static Config load(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw Failure{kIo, "io: cannot open '" + path.string() + "'"};
        Config cfg;
        cfg.dir_ = path.parent_path();
        std::string line, section;
        for (int lineno = 1; std::getline(in, line); ++lineno) {
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                if (b == std::string::npos) return std::string();
                return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto where = path.string() + ":" + std::to_string(lineno) + ": ";
            if (line.front() == '[') {
                if (line.back() != ']') throw Failure{kIo, "parse: " + where + "unterminated section header"};
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw Failure{kIo, "parse: " + where + "expected 'key = value'"};
            const auto key = trim(line.substr(0, eq));
            if (key.empty()) throw Failure{kIo, "parse: " + where + "empty key"};
            cfg.values_[section + "." + key] = {trim(line.substr(eq + 1)), where};
        }
        return cfg;
    }

    std::optional<std::string> text(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.push_back(key);
        return it->second.value;
    }

    std::string path(const std::string& key) const {
        auto v = text(key);
        if (!v || v->empty()) throw Failure{kIo, "parse: missing required key '" + key + "'"};
        fs::path p(*v);
        return (p.is_absolute() ? p : dir_ / p).lexically_normal().string();
    }

    double number(const std::string& key, double fallback) const {
        auto v = text(key);
        if (!v) return fallback;
        char* end = nullptr;
        errno = 0;
        const double d = std::strtod(v->c_str(), &end);
        if (v->empty() || *end != '\0' || errno == ERANGE || !std::isfinite(d))
            throw Failure{kIo, "parse: " + values_.at(key).where + "'" + key + "' is not a number"};
        return d;
    }

    bool flag(const std::string& key, bool fallback) const {
        auto v = text(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "yes" || *v == "1") return true;
        if (*v == "false" || *v == "no" || *v == "0") return false;
        throw Failure{kIo, "parse: " + values_.at(key).where + "'" + key + "' must be true or false"};
    }

    std::vector<std::string> unknown_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (std::find(used_.begin(), used_.end(), k) == used_.end()) out.push_back(k);
        return out;
    }

private:
    struct Entry {
        std::string value;
        std::string where;
    };
    fs::path dir_;
    std::map<std::string, Entry> values_;
    mutable std::vector<std::string> used_;
};

// ---- subcommands

struct FitContrastArgs {
    std::string samples, out;
    double full_height = 3.0;
    bool parametric = false;
};

int run_fit_contrast(const FitContrastArgs& a) {
    double *doses = nullptr, *heights = nullptr;
    size_t n = 0;
    check(gd_contrast_samples_load(a.samples.c_str(), &doses, &heights, &n));
    const auto d = take(doses, n);
    const auto h = take(heights, n);
    gd_contrast* c = nullptr;
    gd_contrast_fit_report rep{};
    check(gd_contrast_fit(d.data(), h.data(), n, a.full_height, a.parametric ? 1 : 0, &c, &rep));
    Contrast curve(c);
    check(gd_contrast_save(curve.get(), a.out.c_str()));
    double t0 = 0, d0 = 0, dc = 0;
    check(gd_contrast_params(curve.get(), &t0, &d0, &dc));
    std::cout << "model=" << (a.parametric ? "parametric" : "interpolated") << "\n"
              << "full_height_um=" << num(t0) << "\n"
              << "onset_dose=" << num(d0) << "\n"
              << "clearing_dose=" << num(dc) << "\n"
              << "rms_residual_um=" << num(rep.rms_residual_um) << "\n"
              << "max_repair_um=" << num(rep.max_repair_displacement_um) << "\n"
              << "samples=" << rep.sample_count << "\n";
    return kOk;
}

struct MakePsfArgs {
    double alpha = 0.03, beta = 30.0, eta = 1.0;
    std::string out;
};

int run_make_psf(const MakePsfArgs& a) {
    gd_psf* p = nullptr;
    check(gd_psf_double_gaussian(a.alpha, a.beta, a.eta, &p));
    Psf psf(p);
    check(gd_psf_save(psf.get(), a.out.c_str()));
    double at20 = 0;
    check(gd_psf_radial_cdf(psf.get(), 20.0, &at20));
    std::cout << "terms=" << gd_psf_term_count(psf.get()) << "\n"
              << "energy_within_20um=" << fixed(at20, 4) << "\n";
    return kOk;
}

struct GenBridgeArgs {
    double span = 28, apex = 3, width = 8, margin = 4, thickness = 3.0, pitch = 0.5;
    size_t cols = 0, rows = 0;
    std::string out;
};

int run_gen_bridge(const GenBridgeArgs& a) {
    const gd_bridge_spec spec{a.span, a.apex, a.width, a.margin};
    gd_grid* g = nullptr;
    if (a.cols == 0 && a.rows == 0)
        check(gd_bridge_height_map(&spec, a.thickness, a.pitch, &g));
    else
        check(gd_bridge_field(&spec, a.thickness, a.pitch, a.cols, a.rows, &g));
    GridH grid(g);
    check(gd_grid_save(grid.get(), a.out.c_str()));
    std::cout << "cols=" << gd_grid_cols(grid.get()) << " rows=" << gd_grid_rows(grid.get())
              << " pitch_um=" << num(a.pitch) << "\n"
              << "arc_radius_um=" << num(a.span * a.span / (8 * a.apex) + a.apex / 2) << "\n";
    return kOk;
}

struct CompileArgs {
    std::string config;
    int threads = 0;
};

int run_compile(const CompileArgs& a) {
    const Config cfg = Config::load(a.config);
    const std::string psf_path = cfg.path("inputs.psf");
    const std::string contrast_path = cfg.path("inputs.contrast");
    const std::string target_path = cfg.path("inputs.target");
    const fs::path out_dir = cfg.path("output.dir");

    gd_solver_options opt = gd_solver_defaults();
    opt.tolerance_um = cfg.number("solver.tolerance_um", opt.tolerance_um);
    opt.max_iterations = static_cast<int>(cfg.number("solver.max_iterations", opt.max_iterations));
    opt.relaxation = cfg.number("solver.relaxation", opt.relaxation);
    opt.max_dose = cfg.number("solver.max_dose", opt.max_dose);
    if (auto b = cfg.text("solver.boundary")) opt.boundary = parse_boundary(*b);
    opt.threads = static_cast<unsigned>(cfg.number("solver.threads", opt.threads));
    if (a.threads > 0) opt.threads = static_cast<unsigned>(a.threads);
    const double truncation = cfg.number("kernel.truncation_fraction", 1e-4);
    const bool strict = cfg.flag("kernel.strict", false);
    const int levels = static_cast<int>(cfg.number("quantize.levels", 256));
    const auto seed = cfg.text("run.seed");
    for (const auto& k : cfg.unknown_keys()) std::cerr << "warning: unused config key '" << k << "'\n";

    Psf psf = load_psf(psf_path);
    Contrast curve = load_contrast(contrast_path);
    GridH target = load_grid(target_path);
    Kernel kernel = make_kernel(psf.get(), gd_grid_pitch(target.get()), truncation, strict);
    ensure_dir(out_dir);

    gd_grid* dose_raw = nullptr;
    gd_grid* diag_raw = nullptr;
    gd_solver_report rep{};
    std::vector<double> trace(static_cast<size_t>(std::max(0, opt.max_iterations)) + 1, 0.0);
    const gd_status st = gd_solve_dose(target.get(), kernel.get(), curve.get(), &opt, &dose_raw, &rep,
                                       trace.data(), trace.size(), &diag_raw);
    GridH dose(dose_raw), diagnostic(diag_raw);
    const std::string solve_message = st == GD_OK ? "" : gd_last_error();
    if (st != GD_OK && st != GD_ERR_INFEASIBLE_TARGET) check(st);

    const fs::path report_path = out_dir / "report.txt";
    {
        auto out = open_text(report_path);
        out << "status=" << (st == GD_OK ? (rep.converged ? "converged" : "not-converged") : "infeasible") << "\n"
            << "iterations=" << rep.iterations << "\n"
            << "max_error_um=" << num(rep.max_error_um) << "\n"
            << "tolerance_um=" << num(rep.tolerance_um) << "\n"
            << "max_dose=" << num(rep.max_dose) << "\n"
            << "guard_band_um=" << num(rep.guard_band_um) << "\n"
            << "boundary=" << (opt.boundary == GD_PERIODIC ? "periodic" : "zero-pad") << "\n"
            << "relaxation=" << num(opt.relaxation) << "\n"
            << "kernel_extent=" << gd_kernel_extent(kernel.get()) << "\n"
            << "kernel_radius_um=" << num(gd_kernel_truncation_radius(kernel.get())) << "\n"
            << "kernel_under_resolved=" << (gd_kernel_under_resolved(kernel.get()) ? "true" : "false") << "\n";
        if (seed) out << "seed=" << *seed << "\n";
        out << "error_trace_um=";
        const size_t shown = std::min(trace.size(), static_cast<size_t>(std::max(0, rep.iterations)));
        for (size_t i = 0; i < shown; ++i) out << (i ? "," : "") << num(trace[i]);
        out << "\n";
    }
    if (dose) check(gd_grid_save(dose.get(), (out_dir / "dose.grid").string().c_str()));

    if (st == GD_ERR_INFEASIBLE_TARGET) {
        if (diagnostic) check(gd_grid_save(diagnostic.get(), (out_dir / "diagnostic.grid").string().c_str()));
        throw Failure{kDomain, std::string("infeasible-target: ") + solve_message};
    }

    gd_layers* layers_raw = nullptr;
    check(gd_quantize(dose.get(), levels, &layers_raw));
    Layers layers(layers_raw);
    check(gd_layers_save(layers.get(), (out_dir / "dose.layers").string().c_str()));
    size_t rects = 0;
    for (size_t i = 0; i < gd_layers_level_count(layers.get()); ++i) {
        size_t n = 0;
        check(gd_layers_level(layers.get(), i, nullptr, &n));
        rects += n;
    }
    {
        std::ofstream out(report_path, std::ios::app | std::ios::binary);
        out << "levels=" << gd_layers_level_count(layers.get()) << "\n"
            << "rectangles=" << rects << "\n";
    }
    std::cout << "iterations=" << rep.iterations << " max_error_um=" << num(rep.max_error_um)
              << " converged=" << (rep.converged ? "true" : "false") << "\n"
              << "wrote " << (out_dir / "dose.grid").string() << ", " << (out_dir / "dose.layers").string() << ", "
              << report_path.string() << "\n";
    if (!rep.converged) {
        std::cerr << "error: solver stopped after " << rep.iterations << " iterations with max error "
                  << num(rep.max_error_um) << " um (tolerance " << num(rep.tolerance_um) << " um)\n";
        return kNotConverged;
    }
    return kOk;
}

struct SimulateArgs {
    std::string dose, psf, contrast, out, target, energy, boundary = "zero-pad";
    double truncation = 1e-4;
    int threads = 1;
};

int run_simulate(const SimulateArgs& a) {
    GridH dose = load_grid(a.dose);
    Psf psf = load_psf(a.psf);
    Contrast curve = load_contrast(a.contrast);
    Kernel kernel = make_kernel(psf.get(), gd_grid_pitch(dose.get()), a.truncation, false);
    gd_grid *h = nullptr, *e = nullptr;
    check(gd_forward_simulate(dose.get(), kernel.get(), curve.get(), parse_boundary(a.boundary),
                              static_cast<unsigned>(std::max(1, a.threads)), &h, a.energy.empty() ? nullptr : &e));
    GridH height(h), energy(e);
    check(gd_grid_save(height.get(), a.out.c_str()));
    if (energy) check(gd_grid_save(energy.get(), a.energy.c_str()));
    std::cout << "wrote " << a.out << "\n";
    if (!a.target.empty()) {
        GridH target = load_grid(a.target);
        double t0 = 0, worst = 0;
        check(gd_contrast_params(curve.get(), &t0, nullptr, nullptr));
        check(gd_height_error(target.get(), height.get(), t0, &worst));
        std::cout << "max_error_um=" << num(worst) << "\n";
    }
    return kOk;
}

struct CircleFitArgs {
    std::string trace, target;
    double x0 = 0, y0 = 0, angle = 0;
};

int run_circle_fit(const CircleFitArgs& a) {
    double *x = nullptr, *h = nullptr;
    size_t n = 0;
    check(gd_profile_trace_load(a.trace.c_str(), &x, &h, &n));
    const auto xs = take(x, n);
    const auto hs = take(h, n);
    gd_circle c{};
    check(gd_circle_fit(xs.data(), hs.data(), n, &c));
    std::cout << "center_x_um=" << num(c.center_x_um) << "\n"
              << "center_h_um=" << num(c.center_h_um) << "\n"
              << "radius_um=" << num(c.radius_um) << "\n"
              << "rms_residual_um=" << num(c.rms_residual_um) << "\n"
              << "iterations=" << c.iterations << "\n";
    if (!a.target.empty()) {
        GridH target = load_grid(a.target);
        double max_abs = 0, rms = 0;
        check(gd_profile_error(xs.data(), hs.data(), n, target.get(), a.x0, a.y0, a.angle, &max_abs, &rms));
        std::cout << "target_max_abs_um=" << num(max_abs) << "\n"
                  << "target_rms_um=" << num(rms) << "\n";
    }
    return kOk;
}

struct Trace {
    std::vector<double> f, m;
};

Trace load_trace(const std::string& path) {
    double *f = nullptr, *m = nullptr;
    size_t n = 0;
    check(gd_transmission_load(path.c_str(), &f, &m, &n, nullptr));
    return {take(f, n), take(m, n)};
}

struct ShiftArgs {
    std::string low, high;
    double threshold = -1.0;
};

int run_shift(const ShiftArgs& a) {
    const Trace low = load_trace(a.low);
    const Trace high = load_trace(a.high);
    gd_shift s{};
    check(gd_power_shift(low.f.data(), low.m.data(), low.f.size(), high.f.data(), high.m.data(), high.f.size(),
                         a.threshold, &s));
    std::cout << "shift_mhz=" << trimmed(s.shift_mhz, 3) << " operable=" << (s.operable ? "true" : "false")
              << " sign=" << (s.sign < 0 ? "negative" : "positive") << "\n"
              << "f_low_ghz=" << fixed(s.f_low_ghz, 7) << " f_high_ghz=" << fixed(s.f_high_ghz, 7) << "\n"
              << "threshold_mhz=" << trimmed(s.threshold_mhz, 4)
              << " threshold_source=" << (s.threshold_is_default ? "convention" : "user")
              << " degraded=" << (s.degraded ? "true" : "false") << "\n";
    return kOk;
}

struct StatsArgs {
    std::string samples, out, sweep;
    double bandwidth = 0.0, prior = -1.0;
    size_t points = 1024;
};

struct Sweep {
    double lo, hi;
    int n;
};

Sweep parse_sweep(const std::string& s) {
    Sweep sw{};
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> sw.lo >> c1 >> sw.hi >> c2 >> sw.n) || c1 != ':' || c2 != ':' || sw.lo <= 0 || sw.hi < sw.lo ||
        sw.n < 1 || !(in >> std::ws).eof())
        usage_error("--bandwidth-sweep expects lo:hi:n with 0 < lo <= hi and n >= 1");
    return sw;
}

int run_stats(const StatsArgs& a) {
    double* values = nullptr;
    int* labels = nullptr;
    size_t n = 0;
    check(gd_labeled_samples_load(a.samples.c_str(), &values, &labels, &n));
    const auto v = take(values, n);
    const auto l = take(labels, n);
    const fs::path dir = a.out;
    ensure_dir(dir);

    std::map<int, std::vector<double>> by_label;
    for (size_t i = 0; i < n; ++i) by_label[l[i]].push_back(v[i]);

    auto summary = open_text(dir / "summary.txt");
    summary << "samples=" << n << "\n";
    std::map<int, Density> densities;
    for (const auto& [label, vals] : by_label) {
        const std::string name = gd_label_name(static_cast<gd_label>(label));
        double *pts = nullptr, *fr = nullptr;
        size_t m = 0;
        check(gd_ecdf(vals.data(), vals.size(), &pts, &fr, &m), name);
        const auto xs = take(pts, m);
        const auto fs_ = take(fr, m);
        auto e = open_text(dir / ("ecdf_" + name + ".csv"));
        e << "resistance_kohm,fraction\n";
        for (size_t i = 0; i < m; ++i) e << num(xs[i]) << "," << num(fs_[i]) << "\n";
        summary << name << "_count=" << vals.size() << "\n";
        if (vals.size() < 3) {
            summary << name << "_kde=skipped (fewer than 3 samples)\n";
            continue;
        }
        gd_density* d = nullptr;
        check(gd_kde(vals.data(), vals.size(), a.bandwidth, &d), name);
        Density dens(d);
        const size_t g = gd_density_size(dens.get());
        const double* grid = gd_density_grid(dens.get());
        const double* pdf = gd_density_pdf(dens.get());
        const double* cdf = gd_density_cdf(dens.get());
        auto p = open_text(dir / ("pdf_" + name + ".csv"));
        p << "resistance_kohm,pdf,cdf\n";
        for (size_t i = 0; i < g; ++i) p << num(grid[i]) << "," << num(pdf[i]) << "," << num(cdf[i]) << "\n";
        summary << name << "_bandwidth_kohm=" << num(gd_density_bandwidth(dens.get())) << "\n";
        densities.emplace(label, std::move(dens));
    }

    const auto op = densities.find(GD_LABEL_OPERABLE);
    const auto non = densities.find(GD_LABEL_NON_OPERABLE);
    if (op != densities.end() && non != densities.end()) {
        const double n_op = static_cast<double>(by_label[GD_LABEL_OPERABLE].size());
        const double n_non = static_cast<double>(by_label[GD_LABEL_NON_OPERABLE].size());
        const double prior = a.prior > 0 ? a.prior : n_op / (n_op + n_non);
        double *grid = nullptr, *prob = nullptr;
        int* extra = nullptr;
        check(gd_posterior_curve(op->second.get(), non->second.get(), prior, a.points, &grid, &prob, &extra));
        const auto gx = take(grid, a.points);
        const auto gp = take(prob, a.points);
        const auto ge = take(extra, a.points);
        auto post = open_text(dir / "posterior.csv");
        post << "resistance_kohm,p_operable,extrapolated\n";
        for (size_t i = 0; i < a.points; ++i) post << num(gx[i]) << "," << num(gp[i]) << "," << ge[i] << "\n";
        summary << "prior=" << num(prior) << " prior_source=" << (a.prior > 0 ? "user" : "empirical") << "\n";
        double crossing = 0;
        const gd_status cs = gd_posterior_crossing(op->second.get(), non->second.get(), prior, 0.5, &crossing);
        summary << "posterior_crossing_kohm=" << (cs == GD_OK ? num(crossing) : std::string("none")) << "\n";
        if (cs != GD_OK && cs != GD_ERR_OUT_OF_SUPPORT) check(cs);

        if (!a.sweep.empty()) {
            const Sweep sw = parse_sweep(a.sweep);
            auto out = open_text(dir / "bandwidth_sweep.csv");
            out << "bandwidth_kohm,posterior_crossing_kohm\n";
            const auto& vo = by_label[GD_LABEL_OPERABLE];
            const auto& vn = by_label[GD_LABEL_NON_OPERABLE];
            for (int i = 0; i < sw.n; ++i) {
                const double bw = sw.n == 1 ? sw.lo : sw.lo + (sw.hi - sw.lo) * i / (sw.n - 1);
                gd_density *dop = nullptr, *dnon = nullptr;
                check(gd_kde(vo.data(), vo.size(), bw, &dop));
                Density hop(dop);
                check(gd_kde(vn.data(), vn.size(), bw, &dnon));
                Density hnon(dnon);
                double x = 0;
                const gd_status s = gd_posterior_crossing(hop.get(), hnon.get(), prior, 0.5, &x);
                if (s != GD_OK && s != GD_ERR_OUT_OF_SUPPORT) check(s);
                out << num(bw) << "," << (s == GD_OK ? num(x) : std::string("none")) << "\n";
            }
        }
    }
    std::cout << "wrote " << (dir / "summary.txt").string() << "\n";
    return kOk;
}

struct YieldArgs {
    std::vector<long> counts;
    std::vector<std::string> groups;
    bool csv = false;
};

int run_yield(const YieldArgs& a) {
    struct Row {
        std::string label;
        long k, n;
    };
    std::vector<Row> rows;
    if (!a.counts.empty()) {
        if (a.counts.size() != 2) usage_error("yield expects two counts: n_operable n_total");
        rows.push_back({"all", a.counts[0], a.counts[1]});
    }
    for (const auto& g : a.groups) {
        const auto c1 = g.find(':');
        const auto c2 = g.rfind(':');
        if (c1 == std::string::npos || c1 == c2) usage_error("--group expects label:n_operable:n_total, got '" + g + "'");
        try {
            rows.push_back({g.substr(0, c1), std::stol(g.substr(c1 + 1, c2 - c1 - 1)), std::stol(g.substr(c2 + 1))});
        } catch (const std::exception&) {
            usage_error("--group counts must be integers, got '" + g + "'");
        }
    }
    if (rows.empty()) usage_error("yield needs counts or at least one --group");

    struct Result {
        Row row;
        double fraction, lo, hi;
    };
    std::vector<Result> results;
    for (const auto& r : rows) {
        Result res{r, 0, 0, 0};
        check(gd_yield(r.k, r.n, &res.fraction, &res.lo, &res.hi), r.label);
        results.push_back(res);
    }
    if (a.csv) {
        std::cout << "label,n_operable,n_total,fraction,wilson_lo,wilson_hi\n";
        for (const auto& r : results)
            std::cout << r.row.label << "," << r.row.k << "," << r.row.n << "," << fixed(r.fraction, 3) << ","
                      << fixed(r.lo, 3) << "," << fixed(r.hi, 3) << "\n";
        return kOk;
    }
    if (a.groups.empty()) {
        const auto& r = results.front();
        std::cout << fixed(r.fraction, 3) << "\n"
                  << "wilson95=" << fixed(r.lo, 3) << "," << fixed(r.hi, 3) << "\n";
        return kOk;
    }
    size_t width = 5;
    for (const auto& r : results) width = std::max(width, r.row.label.size());
    char line[256];
    std::snprintf(line, sizeof line, "%-*s %6s %6s %8s %17s\n", static_cast<int>(width), "label", "n_op", "n",
                  "fraction", "wilson95");
    std::cout << line;
    for (const auto& r : results) {
        std::snprintf(line, sizeof line, "%-*s %6ld %6ld %8.3f    [%.3f, %.3f]\n", static_cast<int>(width),
                      r.row.label.c_str(), r.row.k, r.row.n, r.fraction, r.lo, r.hi);
        std::cout << line;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graydose: grayscale e-beam dose compiler"};
    app.require_subcommand(0, 1);
    bool version = false;
    app.add_flag("--version", version, "Print library and file-format versions");

    FitContrastArgs fc;
    auto* fit = app.add_subcommand("fit-contrast", "Fit a contrast curve to calibration samples");
    fit->add_option("samples", fc.samples, "CSV with header dose_uC_cm2,height_um")->required();
    fit->add_option("--full-height", fc.full_height, "Resist thickness T0 in um");
    fit->add_option("-o,--out", fc.out, "Contrast model file to write")->required();
    fit->add_flag("--parametric", fc.parametric, "Fit the closed-form log-dose model instead of interpolating");

    MakePsfArgs mp;
    auto* mk = app.add_subcommand("make-psf", "Write a double-Gaussian PSF file");
    mk->add_option("--alpha", mp.alpha, "Forward-scatter sigma, um");
    mk->add_option("--beta", mp.beta, "Backscatter sigma, um");
    mk->add_option("--eta", mp.eta, "Backscatter to forward-scatter energy ratio");
    mk->add_option("-o,--out", mp.out, "PSF file to write")->required();

    GenBridgeArgs gb;
    auto* gen = app.add_subcommand("gen-bridge", "Generate an arc airbridge target height map");
    gen->add_option("--span", gb.span, "Foot-to-foot span, um");
    gen->add_option("--apex", gb.apex, "Apex height, um");
    gen->add_option("--width", gb.width, "Deck width, um");
    gen->add_option("--margin", gb.margin, "Cleared margin, um");
    gen->add_option("--thickness", gb.thickness, "Resist thickness T0, um");
    gen->add_option("--pitch", gb.pitch, "Grid pitch, um");
    gen->add_option("--cols", gb.cols, "Field columns (0 with --rows 0: bridge patch only)");
    gen->add_option("--rows", gb.rows, "Field rows");
    gen->add_option("-o,--out", gb.out, "Grid file to write")->required();

    CompileArgs cp;
    auto* comp = app.add_subcommand("compile", "Solve for the dose map of a target and fracture it");
    comp->add_option("config", cp.config, "Run configuration file")->required();
    comp->add_option("--threads", cp.threads, "Worker threads (overrides the config)");

    SimulateArgs sm;
    auto* sim = app.add_subcommand("simulate", "Forward-simulate developed heights for a dose map");
    sim->add_option("dose", sm.dose, "Dose grid file")->required();
    sim->add_option("--psf", sm.psf, "PSF file")->required();
    sim->add_option("--contrast", sm.contrast, "Contrast model file")->required();
    sim->add_option("-o,--out", sm.out, "Height grid file to write")->required();
    sim->add_option("--energy", sm.energy, "Also write the absorbed-energy grid");
    sim->add_option("--target", sm.target, "Report the max height error against this target");
    sim->add_option("--boundary", sm.boundary, "zero-pad or periodic");
    sim->add_option("--truncation", sm.truncation, "PSF energy fraction dropped by the kernel");
    sim->add_option("--threads", sm.threads, "Worker threads");

    CircleFitArgs cf;
    auto* circ = app.add_subcommand("circle-fit", "Fit a circle to a profilometer trace");
    circ->add_option("trace", cf.trace, "CSV with header x_um,height_um")->required();
    circ->add_option("--target", cf.target, "Compare the trace with this height map");
    circ->add_option("--x0", cf.x0, "Cut origin x on the target, um");
    circ->add_option("--y0", cf.y0, "Cut origin y on the target, um");
    circ->add_option("--angle", cf.angle, "Cut direction, radians");

    ShiftArgs sh;
    auto* shift = app.add_subcommand("shift", "Resonance shift between low- and high-power traces");
    shift->add_option("low", sh.low, "Low-power transmission CSV")->required();
    shift->add_option("high", sh.high, "High-power transmission CSV")->required();
    shift->add_option("--threshold", sh.threshold, "Operability threshold in MHz (default: convention)");

    StatsArgs st;
    auto* stats = app.add_subcommand("stats", "ECDF, KDE and posterior tables for labeled resistances");
    stats->add_option("samples", st.samples, "CSV with header resistance_kohm,label")->required();
    stats->add_option("-o,--out", st.out, "Output directory")->required();
    stats->add_option("--bandwidth", st.bandwidth, "KDE bandwidth in kOhm (default: Silverman)");
    stats->add_option("--prior", st.prior, "Prior P(operable) (default: empirical)");
    stats->add_option("--points", st.points, "Posterior table length")->check(CLI::Range(2, 1000000));
    stats->add_option("--bandwidth-sweep", st.sweep, "lo:hi:n bandwidths for the posterior crossing");

    YieldArgs yl;
    auto* yield = app.add_subcommand("yield", "Operable fractions with Wilson intervals");
    yield->add_option("counts", yl.counts, "n_operable n_total");
    yield->add_option("--group", yl.groups, "label:n_operable:n_total (repeatable)");
    yield->add_flag("--csv", yl.csv, "Machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kIo;
    }

    try {
        if (version) {
            std::cout << "graydose " << gd_version() << "\n"
                      << "gslgrid " << gd_grid_format_version() << "\n"
                      << "gsllayers " << gd_layer_format_version() << "\n";
            return kOk;
        }
        if (fit->parsed()) return run_fit_contrast(fc);
        if (mk->parsed()) return run_make_psf(mp);
        if (gen->parsed()) return run_gen_bridge(gb);
        if (comp->parsed()) return run_compile(cp);
        if (sim->parsed()) return run_simulate(sm);
        if (circ->parsed()) return run_circle_fit(cf);
        if (shift->parsed()) return run_shift(sh);
        if (stats->parsed()) return run_stats(st);
        if (yield->parsed()) return run_yield(yl);
        std::cout << app.help();
        return kOk;
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    }
}
