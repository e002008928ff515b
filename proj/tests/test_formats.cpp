#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "error.hpp"
#include "formats.hpp"

using namespace graydose;

namespace {

template <class Fn>
std::string parse_failure(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
        return e.what();
    }
    FAIL("expected a parse error");
    return {};
}

template <class T, class W>
std::string text_of(const T& value, W&& writer) {
    std::ostringstream os;
    writer(os, value);
    return os.str();
}

}  // namespace

TEST_CASE("number formatting keeps nine significant digits") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(3.0) == "3");
    CHECK(format_number(1.0 / 3.0) == "0.333333333");
    CHECK(format_number(123456789012.0) == "1.23456789e+11");
    CHECK(format_number(-2.5e-7) == "-2.5e-07");
}

TEST_CASE("grid round trip") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    Grid g(13, 7, 0.25, Quantity::height, 0.0, -1.625, -0.875);
    for (double& v : g.values()) v = u(rng);
    const std::string first = text_of(g, write_grid);
    std::istringstream in(first);
    const Grid back = read_grid(in);
    CHECK(back.cols() == 13);
    CHECK(back.rows() == 7);
    CHECK(back.pitch() == 0.25);
    CHECK(back.quantity() == Quantity::height);
    CHECK(back.origin_x() == -1.625);
    CHECK(back.origin_y() == -0.875);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(back.values()[i] - g.values()[i]) <= 5e-9 * 3.0);
    CHECK(text_of(back, write_grid) == first);

    // Values already at nine digits survive bit-exactly.
    std::istringstream again(first);
    CHECK(read_grid(again) == back);
}

TEST_CASE("grid header and quantity tags") {
    const Grid d(2, 1, 0.5, Quantity::dose, 250.0);
    CHECK(text_of(d, write_grid) == "gslgrid 1\n2 1 0.5 dose uC/cm2\n250 250\n");
    const Grid e(1, 1, 1.0, Quantity::energy, 1.5);
    std::istringstream in(text_of(e, write_grid));
    CHECK(read_grid(in).quantity() == Quantity::energy);
}

TEST_CASE("grid parse errors carry source and line") {
    auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_grid(in, "t.grid");
    };
    CHECK(parse_failure([&] { read("gslgrid 2\n1 1 1 height um\n0\n"); }).rfind("t.grid:1:", 0) == 0);
    CHECK(parse_failure([&] { read("gslgrid 1\n2 1 1 height um\n0\n"); }).find("t.grid:3:") == 0);
    CHECK(parse_failure([&] { read("gslgrid 1\n1 1 1 height uC/cm2\n0\n"); }).find("t.grid:2:") == 0);
    CHECK(parse_failure([&] { read("gslgrid 1\n1 1 1 mass kg\n0\n"); }).find("unknown quantity") != std::string::npos);
    CHECK(parse_failure([&] { read("gslgrid 1\n1 2 1 height um\n0\n"); }).find("data rows") != std::string::npos);
    CHECK(parse_failure([&] { read("gslgrid 1\n1 1 1 height um\nabc\n"); }).find("t.grid:3:") == 0);
    CHECK(parse_failure([&] { read("gslgrid 1\n1 1 0 height um\n0\n"); }).find("pitch") != std::string::npos);
    CHECK(parse_failure([&] { read("gslgrid 1\n1 1 1 height um\n0\n7\n"); }).find("t.grid:4:") == 0);
}

TEST_CASE("layers round trip") {
    SUBCASE("empty") {
        const DoseLayers none;
        const std::string text = text_of(none, write_layers);
        CHECK(text == "gsllayers 1\n");
        std::istringstream in(text);
        CHECK(read_layers(in) == none);
    }
    SUBCASE("single rectangle") {
        DoseLayers one;
        one.levels.push_back({412.5, {{-1.5, 0.0, 2.0, 0.5}}});
        const std::string text = text_of(one, write_layers);
        CHECK(text == "gsllayers 1\nlevel 412.5 1\n-1.5 0 2 0.5\n");
        std::istringstream in(text);
        CHECK(read_layers(in) == one);
    }
    SUBCASE("many random rectangles") {
        std::mt19937_64 rng(17);
        std::uniform_int_distribution<int> cell(0, 400);
        DoseLayers many;
        for (int l = 0; l < 10; ++l) many.levels.push_back({100.0 + 37.25 * l, {}});
        for (int i = 0; i < 1000; ++i) {
            const double x0 = cell(rng) * 0.5, y0 = cell(rng) * 0.5;
            many.levels[static_cast<std::size_t>(i % 10)].rects.push_back(
                {x0, y0, x0 + 0.5 * (1 + cell(rng) % 9), y0 + 0.5 * (1 + cell(rng) % 5)});
        }
        const std::string text = text_of(many, write_layers);
        std::istringstream in(text);
        const DoseLayers back = read_layers(in);
        CHECK(back == many);
        CHECK(back.rect_count() == 1000);
        CHECK(text_of(back, write_layers) == text);
    }
}

TEST_CASE("layer parse errors") {
    auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_layers(in, "l");
    };
    CHECK(parse_failure([&] { read("gsllayers 1\nlevel 5 2\n0 0 1 1\n"); }).find("ends inside a level") != std::string::npos);
    CHECK(parse_failure([&] { read("gsllayers 1\nlevel 5 1\n0 0 0 1\n"); }).find("degenerate") != std::string::npos);
    CHECK(parse_failure([&] { read("gsllayers 1\nlevel 5 0\nlevel 4 0\n"); }).find("increase") != std::string::npos);
    CHECK(parse_failure([&] { read("gsllayers 1\nlevel -5 0\n"); }).find("l:2:") == 0);
    CHECK(parse_failure([&] { read("gslgrid 1\n"); }).find("l:1:") == 0);
}

TEST_CASE("psf files are normalized on load") {
    std::istringstream in("# weight sigma_um\n1 0.03   # forward\n\n3 30\n");
    double factor = 0.0;
    const auto psf = read_psf(in, "p", &factor);
    CHECK(factor == doctest::Approx(0.25));
    REQUIRE(psf.terms().size() == 2);
    CHECK(psf.terms()[0].weight == doctest::Approx(0.25));
    CHECK(psf.terms()[1].weight == doctest::Approx(0.75));
    CHECK(psf.terms()[1].sigma_um == 30.0);

    std::istringstream rt(text_of(psf, write_psf));
    const auto back = read_psf(rt);
    CHECK(back.terms()[0].weight == psf.terms()[0].weight);

    auto read = [](const std::string& text) {
        std::istringstream s(text);
        return read_psf(s, "p");
    };
    CHECK(parse_failure([&] { read("1 0.03\n-1 4\n"); }).find("p:2:") == 0);
    CHECK(parse_failure([&] { read("1 0\n"); }).find("sigma") != std::string::npos);
    CHECK(parse_failure([&] { read("# nothing\n"); }).find("no terms") != std::string::npos);
    CHECK(parse_failure([&] { read("1 2 3\n"); }).find("p:1:") == 0);
}

TEST_CASE("contrast samples and models") {
    const std::vector<ContrastSample> s{{100, 3}, {200, 2.5}, {400, 0}};
    std::istringstream in(text_of(s, write_contrast_samples));
    const auto back = read_contrast_samples(in);
    REQUIRE(back.size() == 3);
    CHECK(back[1].dose == 200);
    CHECK(back[1].height == 2.5);

    const auto knots = ContrastCurve::interpolated(3.0, {{100, 3}, {250, 1.25}, {400, 0}});
    std::istringstream km(text_of(knots, write_contrast_model));
    const auto kb = read_contrast_model(km);
    CHECK(kb.model() == ContrastCurve::Model::interpolated);
    CHECK(std::equal(kb.knots().begin(), kb.knots().end(), knots.knots().begin(), knots.knots().end()));
    CHECK(kb.height(180) == knots.height(180));

    const auto para = ContrastCurve::parametric(3.0, 200, 600, 2.0);
    std::istringstream pm(text_of(para, write_contrast_model));
    const auto pb = read_contrast_model(pm);
    CHECK(pb.model() == ContrastCurve::Model::parametric);
    CHECK(pb.gamma() == 2.0);
    CHECK(pb.height(350) == para.height(350));

    auto read = [](const std::string& text) {
        std::istringstream x(text);
        return read_contrast_model(x, "c");
    };
    CHECK(parse_failure([&] { read("gslcontrast 1\nfull_height_um 3\nmodel cubic\n"); }).find("c:3:") == 0);
    CHECK(parse_failure([&] { read("gslcontrast 1\nfull_height_um 3\nmodel interpolated\nknots 2\n100 3\n50 0\n"); })
              .find("c:") == 0);
    auto samples = [](const std::string& text) {
        std::istringstream x(text);
        return read_contrast_samples(x, "s.csv");
    };
    CHECK(parse_failure([&] { samples("dose,height\n1,2\n"); }).find("s.csv:1:") == 0);
    CHECK(parse_failure([&] { samples("dose_uC_cm2,height_um\n1,2\n3\n"); }).find("s.csv:3:") == 0);
}

TEST_CASE("profile traces") {
    const std::vector<ProfilePoint> t{{-1, 0.5}, {0, 1.0}, {1.5, 0.25}};
    std::istringstream in(text_of(t, write_profile_trace));
    const auto back = read_profile_trace(in);
    REQUIRE(back.size() == 3);
    CHECK(back[2].x == 1.5);
    std::istringstream bad("x_um,height_um\n0,1\n0,2\n");
    CHECK(parse_failure([&] { read_profile_trace(bad, "tr"); }).find("tr:3:") == 0);
}

TEST_CASE("transmission traces") {
    TransmissionTrace t;
    t.power_dbm = -110;
    t.points = {{6.0538, -0.5}, {6.05385, -12.25}, {6.0539, -0.75}};
    const std::string text = text_of(t, write_transmission);
    CHECK(text.rfind("# power_dbm=-110\nfreq_GHz,mag_dB\n", 0) == 0);
    std::istringstream in(text);
    const auto back = read_transmission(in);
    CHECK(back.power_dbm == -110);
    REQUIRE(back.points.size() == 3);
    CHECK(back.points[1].freq_ghz == 6.05385);
    CHECK(back.points[1].mag_db == -12.25);

    auto read = [](const std::string& text) {
        std::istringstream x(text);
        return read_transmission(x, "tx");
    };
    CHECK(parse_failure([&] { read("freq_GHz,mag_dB\n6,1\n"); }).find("power_dbm") != std::string::npos);
    CHECK(parse_failure([&] { read("# power_dbm=1\nf,m\n"); }).find("tx:2:") == 0);
    CHECK(parse_failure([&] { read("# power_dbm=1\nfreq_GHz,mag_dB\n6,1\n5,1\n"); }).find("tx:4:") == 0);
}

TEST_CASE("labeled samples") {
    const std::vector<LabeledValue> rows{{12.5, SampleLabel::operable}, {30, SampleLabel::post_200c}};
    std::istringstream in(text_of(rows, write_labeled_samples));
    const auto back = read_labeled_samples(in);
    REQUIRE(back.size() == 2);
    CHECK(back[1].label == SampleLabel::post_200c);
    CHECK(back[0].resistance_kohm == 12.5);

    std::istringstream unl("resistance_kohm,label\n7\n8,\n");
    const auto u = read_labeled_samples(unl);
    CHECK(u[0].label == SampleLabel::unlabeled);
    CHECK(u[1].label == SampleLabel::unlabeled);

    std::istringstream bad("resistance_kohm,label\n7,broken\n");
    CHECK(parse_failure([&] { read_labeled_samples(bad, "r"); }).find("r:2: unknown label") == 0);
    std::istringstream neg("resistance_kohm,label\n-7,operable\n");
    CHECK(parse_failure([&] { read_labeled_samples(neg, "r"); }).find("positive") != std::string::npos);
}

TEST_CASE("file helpers report the path") {
    try {
        open_for_read("/nonexistent/dir/x.grid");
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io);
        CHECK(std::string(e.what()).find("/nonexistent/dir/x.grid") != std::string::npos);
    }
}
