#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <regex>

#include "dparnet/checkpoint.hpp"
#include "dparnet/errors.hpp"
#include "dparnet/models.hpp"
#include "helpers.hpp"

using namespace dparnet;

namespace {

ModelConfig small_cfg(Variant v = Variant::full, int in_ch = 1) {
    return ModelConfig::defaults(8, in_ch, v);
}

std::vector<Var> frame_vars(int t_len, int n, int c, int h, int w, uint64_t seed) {
    std::vector<Var> out;
    for (int t = 0; t < t_len; ++t)
        out.push_back(
            make_input(testutil::random_tensor({n, c, h, w}, mix_seed(seed, t), 0.0, 1.0)));
    return out;
}

Sequence random_sequence(int t_len, int h, int w, int c, uint64_t seed) {
    Sequence seq;
    seq.id = "seq";
    for (int t = 0; t < t_len; ++t)
        seq.frames.push_back(testutil::random_frame(h, w, c, mix_seed(seed, t)));
    return seq;
}

// deterministic weight perturbation so zero-initialized output convs
// become active
void perturb(const ParamList& params, uint64_t seed) {
    Rng rng(seed);
    for (const ParamEntry& p : params)
        for (double& v : p.var->value.d) v += rng.uniform(-0.05, 0.05);
}

}  // namespace

TEST_CASE("param net: output shape, sigmoid range, non-constant, odd sizes") {
    ParamNet net(1, 8, 3);
    Var in = make_input(testutil::random_tensor({1, 1, 70, 66}, 1, 0.0, 1.0));
    Var out = net.forward(in);
    CHECK(out->value.shape() == std::vector<int>{1, 1, 70, 66});
    for (int64_t i = 0; i < out->value.numel(); ++i) {
        CHECK(out->value[i] >= 0.0);
        CHECK(out->value[i] <= 1.0);
    }

    Var in2 = make_input(testutil::random_tensor({1, 1, 70, 66}, 2, 0.0, 1.0));
    Var out2 = net.forward(in2);
    double diff = 0.0;
    for (int64_t i = 0; i < out->value.numel(); ++i)
        diff = std::max(diff, std::abs(out->value[i] - out2->value[i]));
    CHECK(diff > 0.0);

    Sequence seq = random_sequence(3, 64, 64, 1, 5);
    ParamMap pm = net.predict(seq, DegradationKind::noise);
    CHECK(pm.h == 64);
    CHECK(pm.w == 64);
    CHECK(pm.phys_max == 100.0);
}

TEST_CASE("brnn_extract: shapes, T=1 boundary") {
    DparNet model(small_cfg(), 7);
    auto frames = frame_vars(7, 2, 1, 32, 32, 11);
    auto feats = model.brnn_extract(frames);
    CHECK(feats.size() == 7);
    for (const Var& f : feats) CHECK(f->value.shape() == std::vector<int>{2, 8, 16, 16});

    auto one = frame_vars(1, 1, 1, 32, 32, 12);
    auto feats1 = model.brnn_extract(one);
    CHECK(feats1.size() == 1);
    CHECK(feats1[0]->value.shape() == std::vector<int>{1, 8, 16, 16});
}

TEST_CASE("brnn directions are symmetric under tied weights") {
    ModelConfig cfg = small_cfg();
    DparNet model(cfg, 13);

    ParamList fwd, bwd;
    model.fwd.collect("d", fwd);
    model.bwd.collect("d", bwd);
    REQUIRE(fwd.size() == bwd.size());
    for (size_t i = 0; i < fwd.size(); ++i) bwd[i].var->value = fwd[i].var->value;

    // tie the two halves of the feature conv so concat order stops mattering
    Tensor& fw = model.feat_conv.w->value;
    const int b = cfg.base_channels;
    for (int co = 0; co < b; ++co)
        for (int ci = 0; ci < b; ++ci)
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) fw.at(co, b + ci, ky, kx) = fw.at(co, ci, ky, kx);

    auto frames = frame_vars(5, 1, 1, 16, 16, 14);
    auto feats = model.brnn_extract(frames);
    std::vector<Var> reversed(frames.rbegin(), frames.rend());
    auto feats_rev = model.brnn_extract(reversed);

    for (int t = 0; t < 5; ++t) {
        const Tensor& a = feats[t]->value;
        const Tensor& r = feats_rev[4 - t]->value;
        for (int64_t i = 0; i < a.numel(); ++i)
            CHECK(a[i] == doctest::Approx(r[i]).epsilon(1e-9));
    }
}

TEST_CASE("reconstruct_frame: window arity enforced, shapes, zero-feature identity") {
    DparNet model(small_cfg(), 17);
    std::vector<Var> five;
    for (int i = 0; i < 5; ++i)
        five.push_back(make_input(testutil::random_tensor({1, 8, 16, 16}, 20 + i)));
    Var resid = model.reconstruct_frame(five);
    CHECK(resid->value.shape() == std::vector<int>{1, 1, 32, 32});

    std::vector<Var> four(five.begin(), five.begin() + 4);
    CHECK_THROWS_AS(model.reconstruct_frame(four), std::invalid_argument);

    // zero features + zero-initialized output conv -> zero residual
    std::vector<Var> zeros;
    for (int i = 0; i < 5; ++i) zeros.push_back(make_input(Tensor({1, 8, 16, 16})));
    Var r0 = model.reconstruct_frame(zeros);
    for (int64_t i = 0; i < r0->value.numel(); ++i) CHECK(r0->value[i] == 0.0);
}

TEST_CASE("sequence edges replicate the nearest feature map") {
    DparNet model(small_cfg(), 19);
    auto frames = frame_vars(7, 1, 1, 16, 16, 23);
    auto feats = model.brnn_extract(frames);

    // silence the wide branch so the deep path is observable alone
    for (double& v : model.wide_out.w->value.d) v = 0.0;
    for (double& v : model.wide_out.b->value.d) v = 0.0;

    // t=0 window must be (F0,F0,F0,F1,F2)
    std::vector<Var> window{feats[0], feats[0], feats[0], feats[1], feats[2]};
    Var manual_deep = ops::add(frames[0], model.reconstruct_frame(window));
    Var y = model.forward_target(frames, make_input(Tensor({1, 1, 16, 16}, 0.5)), 0);
    Var y_manual = model.merge(manual_deep, frames[0]);
    for (int64_t i = 0; i < y->value.numel(); ++i)
        CHECK(y->value[i] == doctest::Approx(y_manual->value[i]).epsilon(1e-12));

    // t = T-1 window replicates from the other end
    std::vector<Var> tail{feats[4], feats[5], feats[6], feats[6], feats[6]};
    Var manual_tail = ops::add(frames[6], model.reconstruct_frame(tail));
    Var y_tail = model.forward_target(frames, make_input(Tensor({1, 1, 16, 16}, 0.5)), 6);
    Var y_tail_manual = model.merge(manual_tail, frames[6]);
    for (int64_t i = 0; i < y_tail->value.numel(); ++i)
        CHECK(y_tail->value[i] == doctest::Approx(y_tail_manual->value[i]).epsilon(1e-12));
}

TEST_CASE("wide model: shape, locality radius <= 24 px") {
    ModelConfig cfg = ModelConfig::defaults(8, 3);
    DparNet model(cfg, 29);
    perturb(model.named_parameters(), 4);  // activate the zero-init output conv

    Var target = make_input(testutil::random_tensor({1, 3, 96, 96}, 30, 0.0, 1.0));
    Tensor pa({1, 1, 96, 96}, 0.2);
    Tensor pb = pa;
    pb.at(0, 0, 48, 48) = 1.0;
    Var ya = model.wide_forward(target, make_input(pa));
    Var yb = model.wide_forward(target, make_input(pb));
    CHECK(ya->value.shape() == std::vector<int>{1, 3, 96, 96});

    double inside = 0.0;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x) {
                const double d = std::abs(ya->value.at(0, c, y, x) - yb->value.at(0, c, y, x));
                if (std::max(std::abs(y - 48), std::abs(x - 48)) > 24)
                    CHECK(d == 0.0);
                else
                    inside = std::max(inside, d);
            }
    CHECK(inside > 0.0);
}

TEST_CASE("merge: averaging init is the identity on equal inputs; linear in y1") {
    ModelConfig cfg = small_cfg();
    DparNet model(cfg, 31);
    Var a = make_input(testutil::random_tensor({1, 1, 16, 16}, 32));
    Var m = model.merge(a, a);
    for (int64_t i = 0; i < a->value.numel(); ++i)
        CHECK(m->value[i] == doctest::Approx(a->value[i]).epsilon(1e-12));

    // zero the y2 half: merge becomes a linear map of y1 alone
    for (int j = 0; j < cfg.in_channels; ++j)
        model.merge_conv.w->value.at(j, cfg.in_channels + j, 0, 0) = 0.0;
    Var b = make_input(testutil::random_tensor({1, 1, 16, 16}, 33));
    Var m1 = model.merge(a, b);
    Var m2 = model.merge(a, make_input(Tensor({1, 1, 16, 16})));
    for (int64_t i = 0; i < m1->value.numel(); ++i)
        CHECK(m1->value[i] == doctest::Approx(m2->value[i]).epsilon(1e-12));

    // gradient flows into both branches at the averaging init
    DparNet fresh(cfg, 34);
    Var y1 = make_param(testutil::random_tensor({1, 1, 8, 8}, 35));
    Var y2 = make_param(testutil::random_tensor({1, 1, 8, 8}, 36));
    Var loss = ops::mean_abs_diff(fresh.merge(y1, y2), make_input(Tensor({1, 1, 8, 8}, 10.0)));
    backward(loss);
    double g1 = 0.0, g2 = 0.0;
    for (int64_t i = 0; i < y1->grad.numel(); ++i) {
        g1 += std::abs(y1->grad[i]);
        g2 += std::abs(y2->grad[i]);
    }
    CHECK(g1 > 0.0);
    CHECK(g2 > 0.0);
}

TEST_CASE("dparnet_forward: identity at init, shape closure, padding of odd sizes") {
    for (int c : {1, 3}) {
        ModelConfig cfg = small_cfg(Variant::full, c);
        DparNet model(cfg, 41);
        Sequence seq = random_sequence(4, 70, 66, c, 43);
        ParamMap pm(70, 66, DegradationKind::noise, 100.0, 0.5f);
        ParamMap used;
        Sequence out = dparnet_forward(model, seq, &pm, nullptr, DegradationKind::noise, &used);
        REQUIRE(out.length() == 4);
        CHECK(out.h() == 70);
        CHECK(out.w() == 66);
        CHECK(out.c() == c);
        CHECK(used.values == pm.values);
        // zero-init output stages + averaging merge = identity
        for (int t = 0; t < 4; ++t)
            for (size_t i = 0; i < out.frames[t].data.size(); ++i)
                CHECK(out.frames[t].data[i] ==
                      doctest::Approx(seq.frames[t].data[i]).epsilon(1e-12));
    }
}

TEST_CASE("variants: v1 ignores pmaps, v3 forces ones, v2 consumes an extra channel") {
    Sequence seq = random_sequence(3, 32, 32, 1, 47);
    ParamMap pa(32, 32, DegradationKind::noise, 100.0, 0.0f);
    ParamMap pb(32, 32, DegradationKind::noise, 100.0, 1.0f);

    DparNet v1(small_cfg(Variant::v1_deep_only), 51);
    perturb(v1.named_parameters(), 52);
    Sequence a = dparnet_forward(v1, seq, &pa, nullptr);
    Sequence b = dparnet_forward(v1, seq, &pb, nullptr);
    for (int t = 0; t < 3; ++t) CHECK(a.frames[t].data == b.frames[t].data);

    DparNet v3(small_cfg(Variant::v3_wide_no_param), 53);
    perturb(v3.named_parameters(), 54);
    Sequence c = dparnet_forward(v3, seq, &pa, nullptr);
    Sequence d = dparnet_forward(v3, seq, &pb, nullptr);
    for (int t = 0; t < 3; ++t) CHECK(c.frames[t].data == d.frames[t].data);

    DparNet v2(small_cfg(Variant::v2_param_as_input), 55);
    perturb(v2.named_parameters(), 56);
    CHECK(v2.fwd.in_conv.w->value.dim(1) == 2);
    Sequence e = dparnet_forward(v2, seq, &pa, nullptr);
    Sequence f = dparnet_forward(v2, seq, &pb, nullptr);
    double diff = 0.0;
    for (int t = 0; t < 3; ++t)
        for (size_t i = 0; i < e.frames[t].data.size(); ++i)
            diff = std::max(diff, std::abs(e.frames[t].data[i] - f.frames[t].data[i]));
    CHECK(diff > 0.0);

    // full variant with non-trivial weights responds to the pmap
    DparNet full(small_cfg(Variant::full), 57);
    perturb(full.named_parameters(), 58);
    Sequence g = dparnet_forward(full, seq, &pa, nullptr);
    Sequence h = dparnet_forward(full, seq, &pb, nullptr);
    diff = 0.0;
    for (int t = 0; t < 3; ++t)
        for (size_t i = 0; i < g.frames[t].data.size(); ++i)
            diff = std::max(diff, std::abs(g.frames[t].data[i] - h.frames[t].data[i]));
    CHECK(diff > 0.0);

    // full without any parameter source is a configuration error
    CHECK_THROWS_AS(dparnet_forward(full, seq, nullptr, nullptr), ConfigError);
}

TEST_CASE("count_params: closed form for the 1x1 merge, wide overhead budgets") {
    const int64_t full = count_params(DparNet(ModelConfig::defaults(64, 1), 1));
    const int64_t v1 =
        count_params(DparNet(ModelConfig::defaults(64, 1, Variant::v1_deep_only), 1));
    const int64_t v2 =
        count_params(DparNet(ModelConfig::defaults(64, 1, Variant::v2_param_as_input), 1));
    const int64_t v3 =
        count_params(DparNet(ModelConfig::defaults(64, 1, Variant::v3_wide_no_param), 1));

    // merge conv: c_in = 2C, c_out = C, 1x1, with bias
    ModelConfig mc = ModelConfig::defaults(64, 3);
    DparNet m3(mc, 2);
    CHECK(m3.merge_conv.w->value.numel() + m3.merge_conv.b->value.numel() == 2 * 3 * 3 + 3);

    CHECK(full == v3);  // v3 differs only in map content
    const double overhead = static_cast<double>(full) / static_cast<double>(v1) - 1.0;
    CHECK(overhead < 0.02);
    CHECK(overhead > 0.0);
    // v2 stays within 0.1% of v1 (only the first conv widens)
    CHECK(std::abs(static_cast<double>(v2) / static_cast<double>(v1) - 1.0) < 0.001);

    // wide model alone is at most 2% of the deep model
    const int64_t wide_and_merge = full - v1;
    CHECK(static_cast<double>(wide_and_merge) < 0.02 * static_cast<double>(v1));
}

TEST_CASE("count_params: doubling the base width roughly quadruples the count") {
    const int64_t small = count_params(DparNet(ModelConfig::defaults(32, 1), 3));
    const int64_t big = count_params(DparNet(ModelConfig::defaults(64, 1), 3));
    const double ratio = static_cast<double>(big) / static_cast<double>(small);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("count_flops: quadratic in resolution, small wide overhead") {
    ModelConfig cfg = ModelConfig::defaults(64, 3);
    const int64_t f256 = count_flops(cfg, 256, 256);
    const int64_t f512 = count_flops(cfg, 512, 512);
    const double ratio = static_cast<double>(f512) / static_cast<double>(f256);
    CHECK(ratio > 3.8);
    CHECK(ratio < 4.2);

    ModelConfig v1 = ModelConfig::defaults(64, 3, Variant::v1_deep_only);
    const double overhead =
        static_cast<double>(f256) / static_cast<double>(count_flops(v1, 256, 256)) - 1.0;
    CHECK(overhead < 0.02);
    CHECK(overhead > 0.0);
}

TEST_CASE("checkpoints: round trip restores weights, config mismatch rejected") {
    const std::string dir = testutil::tmp_dir("models_ckpt");
    ModelConfig cfg = small_cfg(Variant::full);
    DparNet model(cfg, 61);
    perturb(model.named_parameters(), 62);
    save_dparnet_checkpoint(model, dir, 5, {{1, 0.5, 20.0}, {2, 0.4, 21.0}});

    CHECK(checkpoint_type(dir) == "dparnet");
    CHECK(checkpoint_epoch(dir) == 5);
    CHECK(checkpoint_curve(dir).size() == 2);

    DparNet loaded = load_dparnet_checkpoint(dir);
    Sequence seq = random_sequence(3, 32, 32, 1, 63);
    ParamMap pm(32, 32, DegradationKind::noise, 100.0, 0.7f);
    Sequence a = dparnet_forward(model, seq, &pm, nullptr);
    Sequence b = dparnet_forward(loaded, seq, &pm, nullptr);
    for (int t = 0; t < 3; ++t)
        for (size_t i = 0; i < a.frames[t].data.size(); ++i)
            CHECK(a.frames[t].data[i] == doctest::Approx(b.frames[t].data[i]).epsilon(1e-6));

    // a v1 model cannot load from a full checkpoint: extra weight files
    std::ifstream cfg_in(dir + "/config.json");
    std::string text((std::istreambuf_iterator<char>(cfg_in)), {});
    cfg_in.close();
    text = std::regex_replace(text, std::regex("\"full\""), "\"v1_deep_only\"");
    std::ofstream(dir + "/config.json") << text;
    CHECK_THROWS_AS(load_dparnet_checkpoint(dir), ConfigError);
}

TEST_CASE("param net checkpoints round trip") {
    const std::string dir = testutil::tmp_dir("models_pnet_ckpt");
    ParamNet net(1, 8, 71);
    save_param_net_checkpoint(net, dir, 3, {{1, 0.2, 0.1}});
    ParamNet loaded = load_param_net_checkpoint(dir);
    Sequence seq = random_sequence(2, 24, 24, 1, 72);
    ParamMap a = net.predict(seq, DegradationKind::noise);
    ParamMap b = loaded.predict(seq, DegradationKind::noise);
    for (size_t i = 0; i < a.values.size(); ++i)
        CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-6));
    CHECK_THROWS_AS(load_dparnet_checkpoint(dir), ConfigError);
}
