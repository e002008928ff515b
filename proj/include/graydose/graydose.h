/* graydose: grayscale e-beam dose compiler, C interface.
 *
 * Objects are opaque handles created by gd_*_create/load/fit functions and
 * released with the matching gd_*_free. Every call returns a gd_status; on
 * failure gd_last_error() holds a message for the calling thread. Buffers
 * returned through pointer-to-pointer out-parameters are released with
 * gd_buffer_free. Handles are immutable after creation and may be shared
 * between threads.
 */
#ifndef GRAYDOSE_GRAYDOSE_H
#define GRAYDOSE_GRAYDOSE_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(GRAYDOSE_BUILDING)
#    define GD_API __declspec(dllexport)
#  else
#    define GD_API __declspec(dllimport)
#  endif
#else
#  define GD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gd_status {
    GD_OK = 0,
    GD_ERR_INVALID_PARAMETER = 1,
    GD_ERR_IO = 2,
    GD_ERR_PARSE = 3,
    GD_ERR_INCOMPATIBLE_GRID = 4,
    GD_ERR_INVALID_GEOMETRY = 5,
    GD_ERR_TARGET_EXCEEDS_RESIST = 6,
    GD_ERR_INFEASIBLE_TARGET = 7,
    GD_ERR_BAD_CALIBRATION = 8,
    GD_ERR_INCOMPLETE_CALIBRATION = 9,
    GD_ERR_INSUFFICIENT_DATA = 10,
    GD_ERR_DEGENERATE_GEOMETRY = 11,
    GD_ERR_DEGENERATE_DATA = 12,
    GD_ERR_NO_RESONANCE = 13,
    GD_ERR_OUT_OF_SUPPORT = 14,
    GD_ERR_UNDER_RESOLVED = 15,
    GD_ERR_INTERNAL = 99
} gd_status;

typedef struct gd_psf gd_psf;
typedef struct gd_kernel gd_kernel;
typedef struct gd_contrast gd_contrast;
typedef struct gd_grid gd_grid;
typedef struct gd_layers gd_layers;
typedef struct gd_density gd_density;

typedef enum gd_quantity { GD_HEIGHT = 0, GD_DOSE = 1, GD_ENERGY = 2 } gd_quantity;
typedef enum gd_boundary { GD_ZERO_PAD = 0, GD_PERIODIC = 1 } gd_boundary;

/* ---- library ---------------------------------------------------------- */

GD_API const char* gd_version(void);
GD_API int gd_grid_format_version(void);
GD_API int gd_layer_format_version(void);
GD_API const char* gd_status_name(gd_status status);
GD_API const char* gd_last_error(void);
GD_API void gd_buffer_free(void* buffer);

/* ---- kernel ----------------------------------------------------------- */

GD_API gd_status gd_psf_double_gaussian(double alpha_um, double beta_um, double eta, gd_psf** out);
/* Weights need not be normalized; *applied_factor (optional) receives the scale used. */
GD_API gd_status gd_psf_from_terms(const double* weights, const double* sigmas_um, size_t count, gd_psf** out,
                                   double* applied_factor);
GD_API gd_status gd_psf_load(const char* path, gd_psf** out, double* applied_factor);
GD_API gd_status gd_psf_save(const gd_psf* psf, const char* path);
GD_API size_t gd_psf_term_count(const gd_psf* psf);
GD_API gd_status gd_psf_term(const gd_psf* psf, size_t index, double* weight, double* sigma_um);
GD_API gd_status gd_psf_radial_cdf(const gd_psf* psf, double r_um, double* fraction);
GD_API void gd_psf_free(gd_psf* psf);

/* strict != 0 turns an under-resolved pitch (pitch > smallest sigma) into
 * GD_ERR_UNDER_RESOLVED; otherwise the kernel is built and flagged. */
GD_API gd_status gd_kernel_discretize(const gd_psf* psf, double pitch_um, double truncation_fraction, int strict,
                                      gd_kernel** out);
GD_API size_t gd_kernel_extent(const gd_kernel* kernel);
GD_API double gd_kernel_pitch(const gd_kernel* kernel);
GD_API double gd_kernel_truncation_radius(const gd_kernel* kernel);
GD_API int gd_kernel_under_resolved(const gd_kernel* kernel);
/* extent x extent weights, row-major, impact cell at the center. */
GD_API const double* gd_kernel_weights(const gd_kernel* kernel);
GD_API gd_status gd_kernel_radial_cdf(const gd_kernel* kernel, double r_um, double* fraction);
GD_API void gd_kernel_free(gd_kernel* kernel);

/* ---- contrast --------------------------------------------------------- */

typedef struct gd_contrast_fit_report {
    double max_repair_displacement_um;
    double rms_residual_um;
    size_t sample_count;
} gd_contrast_fit_report;

GD_API gd_status gd_contrast_samples_load(const char* path, double** doses, double** heights, size_t* count);
/* parametric != 0 selects the closed-form model with a least-squares gamma. */
GD_API gd_status gd_contrast_fit(const double* doses, const double* heights, size_t count, double full_height_um,
                                 int parametric, gd_contrast** out, gd_contrast_fit_report* report);
GD_API gd_status gd_contrast_parametric(double full_height_um, double onset_dose, double clearing_dose, double gamma,
                                        gd_contrast** out);
GD_API gd_status gd_contrast_load(const char* path, gd_contrast** out);
GD_API gd_status gd_contrast_save(const gd_contrast* curve, const char* path);
GD_API gd_status gd_contrast_params(const gd_contrast* curve, double* full_height_um, double* onset_dose,
                                    double* clearing_dose);
GD_API gd_status gd_contrast_height(const gd_contrast* curve, double dose, double* height_um);
GD_API gd_status gd_contrast_dose(const gd_contrast* curve, double height_um, double* dose);
GD_API gd_status gd_contrast_residual(const gd_contrast* curve, const double* doses, const double* heights,
                                      size_t count, double* rms_um);
GD_API void gd_contrast_free(gd_contrast* curve);

/* ---- grids and target profiles ---------------------------------------- */

GD_API gd_status gd_grid_create(size_t cols, size_t rows, double pitch_um, gd_quantity quantity, double fill,
                                gd_grid** out);
GD_API gd_status gd_grid_from_values(size_t cols, size_t rows, double pitch_um, gd_quantity quantity,
                                     const double* values, gd_grid** out);
GD_API gd_status gd_grid_load(const char* path, gd_grid** out);
GD_API gd_status gd_grid_save(const gd_grid* grid, const char* path);
GD_API size_t gd_grid_cols(const gd_grid* grid);
GD_API size_t gd_grid_rows(const gd_grid* grid);
GD_API double gd_grid_pitch(const gd_grid* grid);
GD_API gd_quantity gd_grid_quantity(const gd_grid* grid);
GD_API void gd_grid_origin(const gd_grid* grid, double* x_um, double* y_um);
/* cols x rows values, row-major; valid while the handle lives. */
GD_API const double* gd_grid_values(const gd_grid* grid);
GD_API void gd_grid_free(gd_grid* grid);

typedef struct gd_bridge_spec {
    double span_um;
    double apex_um;
    double width_um;
    double margin_um;
} gd_bridge_spec;

GD_API gd_bridge_spec gd_bridge_default(void);
GD_API gd_status gd_bridge_height_map(const gd_bridge_spec* spec, double full_height_um, double pitch_um,
                                      gd_grid** out);
/* Bridge patch centered on a cols x rows unexposed field. */
GD_API gd_status gd_bridge_field(const gd_bridge_spec* spec, double full_height_um, double pitch_um, size_t cols,
                                 size_t rows, gd_grid** out);
GD_API gd_status gd_grid_compose(const gd_grid* base, const gd_grid* patch, double x_um, double y_um,
                                 gd_grid** out);

/* ---- proximity correction --------------------------------------------- */

typedef struct gd_solver_options {
    double tolerance_um;  /* <= 0: 1% of the resist thickness */
    int max_iterations;
    double relaxation;
    double max_dose;      /* <= 0: 5 x clearing dose */
    gd_boundary boundary;
    unsigned threads;
} gd_solver_options;

typedef struct gd_solver_report {
    int iterations;
    double max_error_um;
    int converged;
    double tolerance_um;
    double max_dose;
    double guard_band_um;
} gd_solver_report;

GD_API gd_solver_options gd_solver_defaults(void);

GD_API gd_status gd_forward_simulate(const gd_grid* dose, const gd_kernel* kernel, const gd_contrast* curve,
                                     gd_boundary boundary, unsigned threads, gd_grid** height, gd_grid** energy);
/* On GD_OK *dose holds the solution (check report->converged). On
 * GD_ERR_INFEASIBLE_TARGET *dose holds the best effort and *diagnostic (if
 * non-NULL) a height map of the unreachable cells' errors. error_trace, when
 * non-NULL, receives up to trace_capacity per-iteration errors. */
GD_API gd_status gd_solve_dose(const gd_grid* target, const gd_kernel* kernel, const gd_contrast* curve,
                               const gd_solver_options* options, gd_grid** dose, gd_solver_report* report,
                               double* error_trace, size_t trace_capacity, gd_grid** diagnostic);

/* Largest per-cell height error of simulated against target; full-height
 * and cleared target cells only count errors in the unreachable direction. */
GD_API gd_status gd_height_error(const gd_grid* target, const gd_grid* simulated, double full_height_um,
                                 double* max_error_um);

GD_API gd_status gd_quantize(const gd_grid* dose, int levels, gd_layers** out);
GD_API gd_status gd_layers_load(const char* path, gd_layers** out);
GD_API gd_status gd_layers_save(const gd_layers* layers, const char* path);
GD_API size_t gd_layers_level_count(const gd_layers* layers);
GD_API gd_status gd_layers_level(const gd_layers* layers, size_t level, double* dose, size_t* rect_count);
/* rect receives x0, y0, x1, y1 in um. */
GD_API gd_status gd_layers_rect(const gd_layers* layers, size_t level, size_t index, double rect[4]);
GD_API gd_status gd_layers_rasterize(const gd_layers* layers, const gd_grid* geometry, gd_grid** out);
GD_API void gd_layers_free(gd_layers* layers);

/* ---- metrology -------------------------------------------------------- */

typedef struct gd_circle {
    double center_x_um;
    double center_h_um;
    double radius_um;
    double rms_residual_um;
    int iterations;
} gd_circle;

typedef struct gd_resonance {
    double f0_ghz;
    double kappa_ghz;
    double depth;
    int degraded;
} gd_resonance;

typedef struct gd_shift {
    double f_low_ghz;
    double f_high_ghz;
    double shift_mhz;
    double threshold_mhz;
    int threshold_is_default;
    int operable;
    int sign; /* +1 or -1 */
    int degraded;
} gd_shift;

GD_API gd_status gd_profile_trace_load(const char* path, double** x_um, double** h_um, size_t* count);
GD_API gd_status gd_circle_fit(const double* x_um, const double* h_um, size_t count, gd_circle* out);
/* Trace coordinate s maps to (x0 + s cos(angle), y0 + s sin(angle)) on the target. */
GD_API gd_status gd_profile_error(const double* x_um, const double* h_um, size_t count, const gd_grid* target,
                                  double cut_x0_um, double cut_y0_um, double cut_angle_rad, double* max_abs_um,
                                  double* rms_um);

GD_API gd_status gd_transmission_load(const char* path, double** freq_ghz, double** mag_db, size_t* count,
                                      double* power_dbm);
GD_API gd_status gd_fit_resonance(const double* freq_ghz, const double* mag_db, size_t count, gd_resonance* out);
/* threshold_mhz < 0 selects the default max(0.1 MHz, 5 x frequency step). */
GD_API gd_status gd_power_shift(const double* low_freq_ghz, const double* low_mag_db, size_t low_count,
                                const double* high_freq_ghz, const double* high_mag_db, size_t high_count,
                                double threshold_mhz, gd_shift* out);

/* ---- statistics ------------------------------------------------------- */

typedef enum gd_label {
    GD_LABEL_OPERABLE = 0,
    GD_LABEL_NON_OPERABLE = 1,
    GD_LABEL_PRE_TEST = 2,
    GD_LABEL_POST_150C = 3,
    GD_LABEL_POST_200C = 4,
    GD_LABEL_UNLABELED = 5
} gd_label;

GD_API const char* gd_label_name(gd_label label);
GD_API gd_status gd_labeled_samples_load(const char* path, double** resistance_kohm, int** labels, size_t* count);
/* Jump points and cumulative fractions; ties are merged. */
GD_API gd_status gd_ecdf(const double* values, size_t count, double** points, double** fractions,
                         size_t* point_count);
/* bandwidth <= 0 selects Silverman's rule. */
GD_API gd_status gd_kde(const double* values, size_t count, double bandwidth, gd_density** out);
GD_API double gd_density_bandwidth(const gd_density* density);
GD_API size_t gd_density_size(const gd_density* density);
GD_API const double* gd_density_grid(const gd_density* density);
GD_API const double* gd_density_pdf(const gd_density* density);
GD_API const double* gd_density_cdf(const gd_density* density);
GD_API void gd_density_free(gd_density* density);
GD_API gd_status gd_posterior(const gd_density* operable, const gd_density* non_operable, double prior,
                              double r_kohm, double* probability, int* extrapolated);
/* Posterior tabulated on `points` values spanning both grids. */
GD_API gd_status gd_posterior_curve(const gd_density* operable, const gd_density* non_operable, double prior,
                                    size_t points, double** grid, double** probability, int** extrapolated);
/* First downward crossing of `level`; GD_ERR_OUT_OF_SUPPORT when none. */
GD_API gd_status gd_posterior_crossing(const gd_density* operable, const gd_density* non_operable, double prior,
                                       double level, double* r_kohm);
GD_API gd_status gd_yield(long n_operable, long n_total, double* fraction, double* wilson_lo, double* wilson_hi);

#ifdef __cplusplus
}
#endif

#endif /* GRAYDOSE_GRAYDOSE_H */
