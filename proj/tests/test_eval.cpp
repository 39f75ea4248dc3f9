#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "dparnet/errors.hpp"
#include "dparnet/evaluate.hpp"
#include "helpers.hpp"

using namespace dparnet;

// ---------------------------------------------------------------------------
// independent brute-force oracles

namespace {

double psnr_oracle(const Frame& a, const Frame& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) acc += std::pow(a.data[i] - b.data[i], 2.0);
    const double mse = acc / static_cast<double>(a.data.size());
    if (mse == 0.0) return 99.0;
    return 10.0 * std::log10(1.0 / mse);
}

double ssim_oracle(const Frame& a, const Frame& b) {
    const int win = 11;
    const double sig = 1.5, c1 = 1e-4, c2 = 9e-4;
    double total = 0.0;
    for (int ch = 0; ch < a.c; ++ch) {
        double acc = 0.0;
        int count = 0;
        for (int oy = 0; oy + win <= a.h; ++oy)
            for (int ox = 0; ox + win <= a.w; ++ox) {
                double wsum = 0.0, mx = 0.0, my = 0.0;
                for (int i = 0; i < win; ++i)
                    for (int j = 0; j < win; ++j) {
                        const double wgt = std::exp(
                            -((i - 5.0) * (i - 5.0) + (j - 5.0) * (j - 5.0)) / (2.0 * sig * sig));
                        wsum += wgt;
                        mx += wgt * a.at(ch, oy + i, ox + j);
                        my += wgt * b.at(ch, oy + i, ox + j);
                    }
                mx /= wsum;
                my /= wsum;
                double vx = 0.0, vy = 0.0, cov = 0.0;
                for (int i = 0; i < win; ++i)
                    for (int j = 0; j < win; ++j) {
                        const double wgt =
                            std::exp(-((i - 5.0) * (i - 5.0) + (j - 5.0) * (j - 5.0)) /
                                     (2.0 * sig * sig)) /
                            wsum;
                        vx += wgt * std::pow(a.at(ch, oy + i, ox + j) - mx, 2.0);
                        vy += wgt * std::pow(b.at(ch, oy + i, ox + j) - my, 2.0);
                        cov += wgt * (a.at(ch, oy + i, ox + j) - mx) *
                               (b.at(ch, oy + i, ox + j) - my);
                    }
                acc += (2.0 * mx * my + c1) * (2.0 * cov + c2) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
        total += acc / count;
    }
    return total / a.c;
}

double nrmse_oracle(const Frame& a, const Frame& b) {
    double acc = 0.0, mn = 1e300, mx = -1e300;
    for (size_t i = 0; i < a.data.size(); ++i) {
        acc += std::pow(a.data[i] - b.data[i], 2.0);
        mn = std::min(mn, b.data[i]);
        mx = std::max(mx, b.data[i]);
    }
    const double rmse = std::sqrt(acc / static_cast<double>(a.data.size()));
    return rmse / (mx > mn ? mx - mn : 1.0);
}

// joint-histogram entropies computed with an independent code path
void vi_histograms(const Frame& a, const Frame& b, double& ha, double& hb, double& hab) {
    std::vector<int> ja(256, 0), jb(256, 0);
    std::vector<int> jj(65536, 0);
    for (size_t i = 0; i < a.data.size(); ++i) {
        const int qa = std::min(255, static_cast<int>(std::clamp(a.data[i], 0.0, 1.0) * 256.0));
        const int qb = std::min(255, static_cast<int>(std::clamp(b.data[i], 0.0, 1.0) * 256.0));
        ++ja[qa];
        ++jb[qb];
        ++jj[qa * 256 + qb];
    }
    const double n = static_cast<double>(a.data.size());
    auto ent = [n](const std::vector<int>& h) {
        double e = 0.0;
        for (int c : h)
            if (c > 0) e -= (c / n) * std::log(c / n);
        return e;
    };
    ha = ent(ja);
    hb = ent(jb);
    hab = ent(jj);
}

double vi_oracle(const Frame& a, const Frame& b) {
    double ha, hb, hab;
    vi_histograms(a, b, ha, hb, hab);
    return 2.0 * hab - ha - hb;
}

}  // namespace

TEST_CASE("psnr: cap, exact constant offset, oracle agreement") {
    Frame a = testutil::random_frame(8, 8, 1, 1);
    CHECK(psnr(a, a) == 99.0);

    Frame gt(16, 16, 1, 0.4);
    Frame off(16, 16, 1, 0.5);
    CHECK(psnr(off, gt) == doctest::Approx(20.0).epsilon(1e-9));

    for (uint64_t s = 0; s < 20; ++s) {
        Frame x = testutil::random_frame(16, 16, 1, 100 + s);
        Frame y = testutil::random_frame(16, 16, 1, 200 + s);
        CHECK(psnr(x, y) == doctest::Approx(psnr_oracle(x, y)).epsilon(1e-9));
    }

    Frame wrong(8, 9, 1);
    CHECK_THROWS_AS(psnr(a, wrong), std::invalid_argument);
}

TEST_CASE("ssim: identity, inversion, window-size guard, oracle agreement") {
    Frame a = testutil::random_frame(32, 32, 1, 5);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    // inverted high-variance image scores poorly
    Frame inv = a;
    for (double& v : inv.data) v = 1.0 - v;
    CHECK(ssim(inv, a) < 0.5);

    for (uint64_t s = 0; s < 5; ++s) {
        Frame x = testutil::random_frame(32, 32, 1, 300 + s);
        Frame y = testutil::random_frame(32, 32, 1, 400 + s);
        CHECK(ssim(x, y) == doctest::Approx(ssim_oracle(x, y)).epsilon(1e-6));
    }

    Frame small(8, 8, 1, 0.5);
    CHECK_THROWS_AS(ssim(small, small), std::invalid_argument);
}

TEST_CASE("nrmse: identity, range normalization, constant gt rule, oracle") {
    Frame a = testutil::random_frame(16, 16, 1, 7);
    CHECK(nrmse(a, a) == 0.0);

    Frame gt(16, 16, 1, 0.0);
    gt.at(0, 0, 0) = 1.0;  // range exactly 1
    Frame off = gt;
    for (double& v : off.data) v += 0.1;
    CHECK(nrmse(off, gt) == doctest::Approx(0.1).epsilon(1e-12));

    Frame const_gt(16, 16, 1, 0.3);
    Frame pred(16, 16, 1, 0.5);
    CHECK(nrmse(pred, const_gt) == doctest::Approx(0.2).epsilon(1e-12));

    for (uint64_t s = 0; s < 20; ++s) {
        Frame x = testutil::random_frame(16, 16, 1, 500 + s);
        Frame y = testutil::random_frame(16, 16, 1, 600 + s);
        CHECK(nrmse(x, y) == doctest::Approx(nrmse_oracle(x, y)).epsilon(1e-10));
    }
}

TEST_CASE("vi: identity, symmetry, independence approaches entropy sum") {
    Frame a = testutil::random_frame(32, 32, 1, 9);
    CHECK(vi(a, a) == 0.0);

    Frame b = testutil::random_frame(32, 32, 1, 10);
    CHECK(vi(a, b) == vi(b, a));

    // structured gt with few levels vs independent noise: VI ~ H(A)+H(B)
    Frame gt(100, 100, 1);
    for (int y = 0; y < 100; ++y)
        for (int x = 0; x < 100; ++x)
            gt.at(0, y, x) = ((y / 25) * 4 + x / 25) % 4 * 0.25 + 0.1;
    Frame noise = testutil::random_frame(100, 100, 1, 11);
    double ha, hb, hab;
    vi_histograms(noise, gt, ha, hb, hab);
    CHECK(vi(noise, gt) == doctest::Approx(ha + hb).epsilon(0.05));

    for (uint64_t s = 0; s < 10; ++s) {
        Frame x = testutil::random_frame(16, 16, 1, 700 + s);
        Frame y = testutil::random_frame(16, 16, 1, 800 + s);
        CHECK(vi(x, y) == doctest::Approx(vi_oracle(x, y)).epsilon(1e-9));
    }
}

TEST_CASE("metric monotonicity along the gt -> noise interpolation path") {
    Frame gt = testutil::random_frame(32, 32, 1, 13);
    Frame noise = testutil::random_frame(32, 32, 1, 14);
    double prev_psnr = 1e300, prev_ssim = 1e300, prev_nrmse = -1.0;
    for (int k = 1; k <= 6; ++k) {
        const double lam = k / 6.0;
        Frame mix = gt;
        for (size_t i = 0; i < mix.data.size(); ++i)
            mix.data[i] = (1.0 - lam) * gt.data[i] + lam * noise.data[i];
        const double p = psnr(mix, gt), s = ssim(mix, gt), n = nrmse(mix, gt);
        CHECK(p < prev_psnr);
        CHECK(s < prev_ssim);
        CHECK(n > prev_nrmse);
        prev_psnr = p;
        prev_ssim = s;
        prev_nrmse = n;
    }
}

TEST_CASE("temporal profile: shape, static rows, degraded jitter") {
    Sequence stat;
    Frame f = testutil::random_frame(64, 48, 1, 15);
    for (int t = 0; t < 10; ++t) stat.frames.push_back(f);
    Frame prof = temporal_profile(stat, 20);
    CHECK(prof.h == 10);
    CHECK(prof.w == 64);
    CHECK(profile_instability(prof) == 0.0);
    CHECK_THROWS_AS(temporal_profile(stat, 48), std::invalid_argument);
}

TEST_CASE("evaluate: identity model on clean data hits every cap") {
    const std::string dir = testutil::tmp_dir("eval_identity");
    make_synthetic_corpus(dir + "/clean", 5, 3, 64, 64, 1, 21);
    DegradationSpec spec;
    spec.kind = DegradationKind::noise;
    spec.field = {8.0, 0.0, 0.0, 1};  // zero-span field: no degradation at all
    DatasetManifest manifest =
        build_dataset(dir + "/clean", Task::denoise, spec, dir + "/ds", 3);
    // zero-intensity build means degraded == clean... except build_dataset
    // randomizes spans; rebuild maps to zero by hand
    for (const ManifestEntry& e : manifest.entries) {
        ParamMap zero(e.H, e.W, DegradationKind::noise, 100.0, 0.0f);
        write_parammap(zero, manifest.resolve(e.pmap_path));
        Sequence clean = load_sequence(manifest.resolve(e.clean_dir), e.seq_id);
        save_sequence(clean, manifest.resolve(e.degraded_dir));
    }

    DparNet model(ModelConfig::defaults(8, 1), 99);  // untouched init = identity
    MetricsReport report =
        evaluate(model, nullptr, true, manifest, "test", "identity", "fixed-ts");
    REQUIRE(!report.per_sequence.empty());
    for (const SeqMetrics& m : report.per_sequence) {
        CHECK(m.psnr == 99.0);
        CHECK(m.ssim == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(m.nrmse == 0.0);
        CHECK(m.vi == 0.0);
    }

    // aggregate equals the row mean
    double mean_psnr = 0.0;
    for (const SeqMetrics& m : report.per_sequence) mean_psnr += m.psnr;
    CHECK(report.aggregate.psnr ==
          doctest::Approx(mean_psnr / report.per_sequence.size()).epsilon(1e-12));

    const std::string table = format_metrics_table(report);
    CHECK(table.find("PSNR") != std::string::npos);
    CHECK(table.find("↑") != std::string::npos);
    CHECK(table.find("↓") != std::string::npos);

    write_metrics_report(report, dir + "/report.json");
    std::ifstream in(dir + "/report.json");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    CHECK(text.find("\"timestamp\": \"fixed-ts\"") != std::string::npos);
}

TEST_CASE("benchmark_efficiency: positive fields, Table-3 units") {
    DparNet model(ModelConfig::defaults(8, 3), 5);
    EfficiencyReport er = benchmark_efficiency(model, 3, 1);
    CHECK(er.params_millions > 0.0);
    CHECK(er.params_millions == doctest::Approx(count_params(model) / 1e6));
    CHECK(er.flops_e10 == doctest::Approx(count_flops(model.config, 256, 256) / 1e10));
    CHECK(er.time_s > 0.0);
}
