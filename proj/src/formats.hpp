#pragma once

#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "contrast.hpp"
#include "grid.hpp"
#include "kernel.hpp"
#include "metrology.hpp"
#include "pec.hpp"
#include "stats.hpp"

namespace graydose {

constexpr int kGridFormatVersion = 1;
constexpr int kLayerFormatVersion = 1;
constexpr int kContrastFormatVersion = 1;

/// Decimal with 9 significant digits; the textual form every writer uses.
std::string format_number(double v);

// Readers take a `source` name used in "source:line: message" parse errors.

/// gslgrid 1 / "ncols nrows pitch_um quantity unit [origin_x origin_y]" /
/// nrows rows of ncols values, first row first.
void write_grid(std::ostream& out, const Grid& grid);
Grid read_grid(std::istream& in, const std::string& source = "<grid>");

/// gsllayers 1, then per level "level <dose> <count>" and count lines "x0 y0 x1 y1".
void write_layers(std::ostream& out, const DoseLayers& layers);
DoseLayers read_layers(std::istream& in, const std::string& source = "<layers>");

/// One "weight sigma_um" line per term; '#' starts a comment. Weights are
/// normalized on load and the applied factor reported.
void write_psf(std::ostream& out, const PointSpreadFunction& psf);
PointSpreadFunction read_psf(std::istream& in, const std::string& source = "<psf>",
                             double* applied_factor = nullptr);

/// CSV with header dose_uC_cm2,height_um.
void write_contrast_samples(std::ostream& out, const std::vector<ContrastSample>& samples);
std::vector<ContrastSample> read_contrast_samples(std::istream& in, const std::string& source = "<samples>");

/// gslcontrast 1 model file holding either knots or parametric constants.
void write_contrast_model(std::ostream& out, const ContrastCurve& curve);
ContrastCurve read_contrast_model(std::istream& in, const std::string& source = "<contrast>");

/// CSV x_um,height_um.
void write_profile_trace(std::ostream& out, const std::vector<ProfilePoint>& trace);
std::vector<ProfilePoint> read_profile_trace(std::istream& in, const std::string& source = "<trace>");

/// "# power_dbm=<value>" comment, header freq_GHz,mag_dB, then rows.
void write_transmission(std::ostream& out, const TransmissionTrace& trace);
TransmissionTrace read_transmission(std::istream& in, const std::string& source = "<transmission>");

/// CSV resistance_kohm,label.
void write_labeled_samples(std::ostream& out, const std::vector<LabeledValue>& rows);
std::vector<LabeledValue> read_labeled_samples(std::istream& in, const std::string& source = "<samples>");

/// Opened streams; failures raise ErrorCode::io naming the path.
std::ifstream open_for_read(const std::string& path);
std::ofstream open_for_write(const std::string& path);

}  // namespace graydose
