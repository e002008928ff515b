#include "formats.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "error.hpp"

namespace graydose {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    if (sep == ' ') {
        std::istringstream is(s);
        std::string tok;
        while (is >> tok) out.push_back(tok);
        return out;
    }
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

class LineReader {
public:
    LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    /// Next raw line (trimmed); false at end of input.
    bool next(std::string& line) {
        std::string raw;
        if (!std::getline(in_, raw)) return false;
        ++line_no_;
        line = trim(raw);
        return true;
    }

    /// Next line that is neither blank nor a '#' comment.
    bool next_content(std::string& line) {
        while (next(line))
            if (!line.empty() && line[0] != '#') return true;
        return false;
    }

    [[noreturn]] void error(const std::string& msg) const {
        fail(ErrorCode::parse, source_ + ":" + std::to_string(line_no_) + ": " + msg);
    }

    double number(const std::string& tok) const {
        double v = 0.0;
        const char* b = tok.data();
        const char* e = b + tok.size();
        if (!tok.empty() && *b == '+') ++b;
        const auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e || !std::isfinite(v)) error("invalid number '" + tok + "'");
        return v;
    }

    long integer(const std::string& tok) const {
        long v = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) error("invalid integer '" + tok + "'");
        return v;
    }

    int line_no() const { return line_no_; }

private:
    std::istream& in_;
    std::string source_;
    int line_no_ = 0;
};

void expect_header(LineReader& r, const std::string& magic, int version) {
    std::string line;
    if (!r.next(line)) r.error("empty file, expected '" + magic + " " + std::to_string(version) + "'");
    const auto t = split(line, ' ');
    if (t.size() != 2 || t[0] != magic) r.error("expected header '" + magic + " " + std::to_string(version) + "'");
    if (r.integer(t[1]) != version) r.error("unsupported " + magic + " version " + t[1]);
}

void expect_csv_header(LineReader& r, const std::string& header) {
    std::string line;
    if (!r.next_content(line)) r.error("missing CSV header '" + header + "'");
    std::string compact;
    for (char ch : line)
        if (ch != ' ') compact += ch;
    if (compact != header) r.error("expected CSV header '" + header + "', got '" + line + "'");
}

std::string format_precise(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_grid(std::ostream& out, const Grid& grid) {
    out << "gslgrid " << kGridFormatVersion << '\n';
    out << grid.cols() << ' ' << grid.rows() << ' ' << format_number(grid.pitch()) << ' ' << to_string(grid.quantity())
        << ' ' << unit_of(grid.quantity());
    if (grid.origin_x() != 0.0 || grid.origin_y() != 0.0)
        out << ' ' << format_number(grid.origin_x()) << ' ' << format_number(grid.origin_y());
    out << '\n';
    std::string row;
    for (std::size_t r = 0; r < grid.rows(); ++r) {
        row.clear();
        for (std::size_t c = 0; c < grid.cols(); ++c) {
            if (c) row += ' ';
            row += format_number(grid(r, c));
        }
        row += '\n';
        out << row;
    }
}

Grid read_grid(std::istream& in, const std::string& source) {
    LineReader r(in, source);
    expect_header(r, "gslgrid", kGridFormatVersion);
    std::string line;
    if (!r.next(line)) r.error("missing grid dimensions line");
    const auto t = split(line, ' ');
    if (t.size() != 5 && t.size() != 7) r.error("expected 'ncols nrows pitch_um quantity unit [origin_x origin_y]'");
    const long cols = r.integer(t[0]);
    const long rows = r.integer(t[1]);
    const double pitch = r.number(t[2]);
    if (cols <= 0 || rows <= 0) r.error("grid dimensions must be positive");
    if (pitch <= 0.0) r.error("pitch must be positive");
    Quantity q;
    if (t[3] == "height") q = Quantity::height;
    else if (t[3] == "dose") q = Quantity::dose;
    else if (t[3] == "energy") q = Quantity::energy;
    else r.error("unknown quantity '" + t[3] + "'");
    if (t[4] != unit_of(q)) r.error("unit '" + t[4] + "' does not match quantity " + t[3]);
    const double ox = t.size() == 7 ? r.number(t[5]) : 0.0;
    const double oy = t.size() == 7 ? r.number(t[6]) : 0.0;

    Grid g(static_cast<std::size_t>(cols), static_cast<std::size_t>(rows), pitch, q, 0.0, ox, oy);
    for (long row = 0; row < rows; ++row) {
        if (!r.next(line)) r.error("expected " + std::to_string(rows) + " data rows, got " + std::to_string(row));
        const auto vals = split(line, ' ');
        if (static_cast<long>(vals.size()) != cols) {
            r.error("expected " + std::to_string(cols) + " values, got " + std::to_string(vals.size()));
        }
        for (long c = 0; c < cols; ++c)
            g(static_cast<std::size_t>(row), static_cast<std::size_t>(c)) = r.number(vals[static_cast<std::size_t>(c)]);
    }
    while (r.next(line))
        if (!line.empty()) r.error("unexpected content after grid data");
    return g;
}

void write_layers(std::ostream& out, const DoseLayers& layers) {
    out << "gsllayers " << kLayerFormatVersion << '\n';
    for (const auto& level : layers.levels) {
        out << "level " << format_number(level.dose) << ' ' << level.rects.size() << '\n';
        for (const auto& rc : level.rects) {
            out << format_number(rc.x0) << ' ' << format_number(rc.y0) << ' ' << format_number(rc.x1) << ' '
                << format_number(rc.y1) << '\n';
        }
    }
}

DoseLayers read_layers(std::istream& in, const std::string& source) {
    LineReader r(in, source);
    expect_header(r, "gsllayers", kLayerFormatVersion);
    DoseLayers layers;
    std::string line;
    while (r.next(line)) {
        if (line.empty()) continue;
        const auto t = split(line, ' ');
        if (t.size() != 3 || t[0] != "level") r.error("expected 'level <dose> <count>'");
        DoseLayer level;
        level.dose = r.number(t[1]);
        const long count = r.integer(t[2]);
        if (count < 0) r.error("negative rectangle count");
        if (level.dose < 0.0) r.error("negative dose level");
        if (!layers.levels.empty() && level.dose <= layers.levels.back().dose) r.error("dose levels must increase");
        for (long i = 0; i < count; ++i) {
            if (!r.next(line)) r.error("file ends inside a level block");
            const auto v = split(line, ' ');
            if (v.size() != 4) r.error("expected 'x0_um y0_um x1_um y1_um'");
            Rect rc{r.number(v[0]), r.number(v[1]), r.number(v[2]), r.number(v[3])};
            if (!(rc.x1 > rc.x0 && rc.y1 > rc.y0)) r.error("degenerate rectangle");
            level.rects.push_back(rc);
        }
        layers.levels.push_back(std::move(level));
    }
    return layers;
}

void write_psf(std::ostream& out, const PointSpreadFunction& psf) {
    out << "# weight sigma_um\n";
    for (const auto& t : psf.terms()) out << format_number(t.weight) << ' ' << format_number(t.sigma_um) << '\n';
}

PointSpreadFunction read_psf(std::istream& in, const std::string& source, double* applied_factor) {
    LineReader r(in, source);
    std::vector<GaussianTerm> terms;
    std::string line;
    while (r.next(line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        const auto t = split(line, ' ');
        if (t.size() != 2) r.error("expected 'weight sigma_um'");
        const double w = r.number(t[0]);
        const double s = r.number(t[1]);
        if (w < 0.0) r.error("negative weight");
        if (s <= 0.0) r.error("sigma must be positive");
        terms.push_back({w, s});
    }
    if (terms.empty()) r.error("PSF file has no terms");
    return PointSpreadFunction::normalized(std::move(terms), applied_factor);
}

void write_contrast_samples(std::ostream& out, const std::vector<ContrastSample>& samples) {
    out << "dose_uC_cm2,height_um\n";
    for (const auto& s : samples) out << format_number(s.dose) << ',' << format_number(s.height) << '\n';
}

std::vector<ContrastSample> read_contrast_samples(std::istream& in, const std::string& source) {
    LineReader r(in, source);
    expect_csv_header(r, "dose_uC_cm2,height_um");
    std::vector<ContrastSample> out;
    std::string line;
    while (r.next_content(line)) {
        const auto f = split(line, ',');
        if (f.size() != 2) r.error("expected 'dose,height'");
        out.push_back({r.number(f[0]), r.number(f[1])});
    }
    return out;
}

void write_contrast_model(std::ostream& out, const ContrastCurve& curve) {
    out << "gslcontrast " << kContrastFormatVersion << '\n';
    out << "full_height_um " << format_number(curve.full_height()) << '\n';
    if (curve.model() == ContrastCurve::Model::parametric) {
        out << "model parametric\n";
        out << "onset_dose " << format_number(curve.onset_dose()) << '\n';
        out << "clearing_dose " << format_number(curve.clearing_dose()) << '\n';
        out << "gamma " << format_number(curve.gamma()) << '\n';
        return;
    }
    out << "model interpolated\n";
    out << "knots " << curve.knots().size() << '\n';
    for (const auto& k : curve.knots()) out << format_number(k.dose) << ' ' << format_number(k.height) << '\n';
}

ContrastCurve read_contrast_model(std::istream& in, const std::string& source) {
    LineReader r(in, source);
    expect_header(r, "gslcontrast", kContrastFormatVersion);
    std::string line;
    auto keyed = [&](const std::string& key) {
        if (!r.next_content(line)) r.error("missing '" + key + "'");
        const auto t = split(line, ' ');
        if (t.size() != 2 || t[0] != key) r.error("expected '" + key + " <value>'");
        return t[1];
    };
    const double t0 = r.number(keyed("full_height_um"));
    const std::string model = keyed("model");
    try {
        if (model == "parametric") {
            const double d0 = r.number(keyed("onset_dose"));
            const double dc = r.number(keyed("clearing_dose"));
            const double gamma = r.number(keyed("gamma"));
            return ContrastCurve::parametric(t0, d0, dc, gamma);
        }
        if (model != "interpolated") r.error("unknown contrast model '" + model + "'");
        const long n = r.integer(keyed("knots"));
        if (n < 2) r.error("need at least two knots");
        std::vector<ContrastKnot> knots;
        for (long i = 0; i < n; ++i) {
            if (!r.next_content(line)) r.error("file ends inside the knot table");
            const auto t = split(line, ' ');
            if (t.size() != 2) r.error("expected 'dose height'");
            knots.push_back({r.number(t[0]), r.number(t[1])});
        }
        return ContrastCurve::interpolated(t0, std::move(knots));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::parse) throw;
        r.error(e.what());
    }
}

void write_profile_trace(std::ostream& out, const std::vector<ProfilePoint>& trace) {
    out << "x_um,height_um\n";
    for (const auto& p : trace) out << format_number(p.x) << ',' << format_number(p.h) << '\n';
}

std::vector<ProfilePoint> read_profile_trace(std::istream& in, const std::string& source) {
    LineReader r(in, source);
    expect_csv_header(r, "x_um,height_um");
    std::vector<ProfilePoint> out;
    std::string line;
    while (r.next_content(line)) {
        const auto f = split(line, ',');
        if (f.size() != 2) r.error("expected 'x,height'");
        const ProfilePoint p{r.number(f[0]), r.number(f[1])};
        if (!out.empty() && p.x <= out.back().x) r.error("x must be strictly increasing");
        out.push_back(p);
    }
    return out;
}

void write_transmission(std::ostream& out, const TransmissionTrace& trace) {
    out << "# power_dbm=" << format_number(trace.power_dbm) << '\n';
    out << "freq_GHz,mag_dB\n";
    for (const auto& p : trace.points) out << format_precise(p.freq_ghz) << ',' << format_number(p.mag_db) << '\n';
}

TransmissionTrace read_transmission(std::istream& in, const std::string& source) {
    LineReader r(in, source);
    TransmissionTrace trace;
    bool have_power = false, have_header = false;
    std::string line;
    while (r.next(line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("power_dbm=");
            if (pos != std::string::npos) {
                trace.power_dbm = r.number(trim(line.substr(pos + 10)));
                have_power = true;
            }
            continue;
        }
        if (!have_header) {
            std::string compact;
            for (char ch : line)
                if (ch != ' ') compact += ch;
            if (compact != "freq_GHz,mag_dB") r.error("expected CSV header 'freq_GHz,mag_dB'");
            have_header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 2) r.error("expected 'freq,mag'");
        const TransmissionPoint p{r.number(f[0]), r.number(f[1])};
        if (!trace.points.empty() && p.freq_ghz <= trace.points.back().freq_ghz)
            r.error("frequency must be strictly increasing");
        trace.points.push_back(p);
    }
    if (!have_header) r.error("missing CSV header 'freq_GHz,mag_dB'");
    if (!have_power) r.error("missing '# power_dbm=<value>' comment");
    return trace;
}

void write_labeled_samples(std::ostream& out, const std::vector<LabeledValue>& rows) {
    out << "resistance_kohm,label\n";
    for (const auto& v : rows) out << format_number(v.resistance_kohm) << ',' << to_string(v.label) << '\n';
}

std::vector<LabeledValue> read_labeled_samples(std::istream& in, const std::string& source) {
    LineReader r(in, source);
    expect_csv_header(r, "resistance_kohm,label");
    std::vector<LabeledValue> out;
    std::string line;
    while (r.next_content(line)) {
        const auto f = split(line, ',');
        if (f.size() != 2 && f.size() != 1) r.error("expected 'resistance,label'");
        const double v = r.number(f[0]);
        if (v <= 0.0) r.error("resistance must be positive");
        const auto label = parse_label(f.size() == 2 ? f[1] : std::string{});
        if (!label) r.error("unknown label '" + f[1] + "'");
        out.push_back({v, *label});
    }
    return out;
}

std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    return out;
}

}  // namespace graydose
