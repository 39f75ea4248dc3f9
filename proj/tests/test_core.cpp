#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dparnet/errors.hpp"
#include "dparnet/image.hpp"
#include "dparnet/param_map.hpp"
#include "dparnet/random_field.hpp"
#include "helpers.hpp"

using namespace dparnet;
namespace fs = std::filesystem;

namespace {

// empirical autocorrelation of a field at horizontal lag
double autocorr(const Grid& g, int lag) {
    double mean = 0.0;
    for (double v : g.v) mean += v;
    mean /= static_cast<double>(g.v.size());
    double num = 0.0;
    int count = 0;
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x + lag < g.w; ++x) {
            num += (g.at(y, x) - mean) * (g.at(y, x + lag) - mean);
            ++count;
        }
    double den = 0.0;
    for (double v : g.v) den += (v - mean) * (v - mean);
    return (num / count) / (den / static_cast<double>(g.v.size()));
}

double total_variation(const Grid& g) {
    double tv = 0.0;
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x) {
            if (x + 1 < g.w) tv += std::abs(g.at(y, x + 1) - g.at(y, x));
            if (y + 1 < g.h) tv += std::abs(g.at(y + 1, x) - g.at(y, x));
        }
    return tv;
}

}  // namespace

TEST_CASE("rng streams are deterministic and mix_seed decorrelates") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
    CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
}

TEST_CASE("smooth_random_field: zero span gives the constant field") {
    SmoothFieldSpec spec{4.0, 0.5, 0.5, 991};
    Grid g = smooth_random_field(spec, 16, 16);
    for (double v : g.v) CHECK(v == 0.5);
}

TEST_CASE("smooth_random_field: bit-identical for the same spec") {
    SmoothFieldSpec spec{3.0, 0.0, 1.0, 7};
    Grid a = smooth_random_field(spec, 32, 32);
    Grid b = smooth_random_field(spec, 32, 32);
    CHECK(a.v == b.v);
}

TEST_CASE("smooth_random_field: range hits the requested span") {
    SmoothFieldSpec spec{5.0, 0.2, 0.8, 3};
    Grid g = smooth_random_field(spec, 48, 48);
    const auto [mn, mx] = std::minmax_element(g.v.begin(), g.v.end());
    CHECK(*mn == doctest::Approx(0.2));
    CHECK(*mx == doctest::Approx(0.8));
}

TEST_CASE("smooth_random_field: autocorrelation decays with lag") {
    SmoothFieldSpec spec{8.0, 0.0, 1.0, 3};
    Grid g = smooth_random_field(spec, 64, 64);
    CHECK(autocorr(g, 4) > autocorr(g, 16));
}

TEST_CASE("smooth_random_field: longer length scales never increase total variation") {
    double prev = 1e300;
    for (double ls : {2.0, 4.0, 8.0}) {
        SmoothFieldSpec spec{ls, 0.0, 1.0, 11};
        const double tv = total_variation(smooth_random_field(spec, 64, 64));
        CHECK(tv <= prev);
        prev = tv;
    }
}

TEST_CASE("smooth_random_field: rejects bad arguments") {
    SmoothFieldSpec spec;
    CHECK_THROWS_AS(smooth_random_field(spec, 4, 16), std::invalid_argument);
    spec.length_scale = 0.5;
    CHECK_THROWS_AS(smooth_random_field(spec, 16, 16), std::invalid_argument);
    spec.length_scale = 2.0;
    spec.min_frac = 0.9;
    spec.max_frac = 0.1;
    CHECK_THROWS_AS(smooth_random_field(spec, 16, 16), std::invalid_argument);
}

TEST_CASE("png round trip: zeros, shapes, quantization bound") {
    const std::string dir = testutil::tmp_dir("core_png");

    Frame zeros(20, 24, 1);
    save_frame(zeros, dir + "/z.png");
    Frame z = load_frame(dir + "/z.png");
    CHECK(z.h == 20);
    CHECK(z.w == 24);
    CHECK(z.c == 1);
    for (double v : z.data) CHECK(v == 0.0);

    Frame rgb = testutil::random_frame(128, 128, 3, 5);
    save_frame(rgb, dir + "/rgb.png");
    Frame r = load_frame(dir + "/rgb.png");
    CHECK(r.c == 3);
    CHECK(r.h == 128);
    CHECK(r.w == 128);

    Frame f16 = testutil::random_frame(33, 17, 1, 9);
    save_frame(f16, dir + "/f16.png", 16);
    Frame g16 = load_frame(dir + "/f16.png");
    double max_err = 0.0;
    for (size_t i = 0; i < f16.data.size(); ++i)
        max_err = std::max(max_err, std::abs(f16.data[i] - g16.data[i]));
    CHECK(max_err <= 1.0 / 65535.0);

    // second save -> load cycle is exact
    save_frame(g16, dir + "/f16b.png", 16);
    Frame h16 = load_frame(dir + "/f16b.png");
    CHECK(g16.data == h16.data);
}

TEST_CASE("png loader reports failures with the path") {
    const std::string dir = testutil::tmp_dir("core_png_err");
    CHECK_THROWS_WITH_AS(load_frame(dir + "/absent.png"), doctest::Contains("absent.png"),
                         IoError);
    std::ofstream(dir + "/junk.png") << "not a png";
    CHECK_THROWS_AS(load_frame(dir + "/junk.png"), IoError);
}

TEST_CASE("pmap: bit-exact round trip with metadata") {
    const std::string dir = testutil::tmp_dir("core_pmap");
    ParamMap m(64, 64, DegradationKind::turbulence, 6e-12);
    Rng rng(3);
    for (float& v : m.values) v = static_cast<float>(rng.uniform());
    write_parammap(m, dir + "/a.pmap");
    ParamMap r = read_parammap(dir + "/a.pmap");
    CHECK(r.kind == DegradationKind::turbulence);
    CHECK(r.phys_max == 6e-12);
    CHECK(r.h == 64);
    CHECK(r.w == 64);
    CHECK(r.values == m.values);
}

TEST_CASE("pmap: wrong magic names the expected bytes") {
    const std::string dir = testutil::tmp_dir("core_pmap_err");
    std::ofstream(dir + "/bad.pmap", std::ios::binary) << "NOPE immaterial";
    CHECK_THROWS_WITH_AS(read_parammap(dir + "/bad.pmap"), doctest::Contains("PMAP"),
                         FormatError);
}

TEST_CASE("pmap: truncated payload is a format error") {
    const std::string dir = testutil::tmp_dir("core_pmap_trunc");
    ParamMap m(16, 16, DegradationKind::noise, 100.0, 0.25f);
    write_parammap(m, dir + "/t.pmap");
    fs::resize_file(dir + "/t.pmap", 24 + 100);
    CHECK_THROWS_AS(read_parammap(dir + "/t.pmap"), FormatError);
}

TEST_CASE("pmap: constant 0.25 noise map has phys 25 everywhere") {
    ParamMap m(8, 8, DegradationKind::noise, 100.0, 0.25f);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) CHECK(m.phys(y, x) == doctest::Approx(25.0));
}

TEST_CASE("sequences load in frame order; temporal mean averages") {
    const std::string dir = testutil::tmp_dir("core_seq");
    Sequence seq;
    seq.id = "s";
    for (int t = 0; t < 4; ++t) seq.frames.emplace_back(16, 16, 1, t / 10.0);
    save_sequence(seq, dir + "/s");
    Sequence r = load_sequence(dir + "/s", "s");
    CHECK(r.length() == 4);
    for (int t = 0; t < 4; ++t)
        CHECK(r.frames[t].at(0, 0, 0) == doctest::Approx(t / 10.0).epsilon(0.01));

    Frame mean = temporal_mean(r);
    CHECK(mean.at(0, 8, 8) == doctest::Approx(0.15).epsilon(0.05));
}
