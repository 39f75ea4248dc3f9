#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dparnet/errors.hpp"
#include "dparnet/evaluate.hpp"
#include "dparnet/train.hpp"
#include "helpers.hpp"

using namespace dparnet;

namespace {

std::string extractor_file() {
    static std::string path = [] {
        const std::string p = testutil::tmp_dir("train_fx") + "/fx.dpfx";
        pretrain_feature_extractor(17, 60, nullptr).save(p);
        return p;
    }();
    return path;
}

DatasetManifest small_noise_dataset(const std::string& name, int sequences, int frames, int size,
                                    uint64_t seed) {
    const std::string dir = testutil::tmp_dir(name);
    make_synthetic_corpus(dir + "/clean", sequences, frames, size, size, 1, seed);
    DegradationSpec spec;
    spec.kind = DegradationKind::noise;
    spec.field.length_scale = 12.0;
    return build_dataset(dir + "/clean", Task::denoise, spec, dir + "/ds", seed + 1);
}

}  // namespace

TEST_CASE("pixel loss: zero at identity, constant offset, brute-force oracle") {
    Var a = make_input(testutil::random_tensor({1, 1, 4, 4}, 1, 0.0, 1.0));
    CHECK(pixel_loss(a, a)->value[0] == 0.0);

    Tensor off = a->value;
    for (double& v : off.d) v += 0.1;
    CHECK(pixel_loss(make_input(off), a)->value[0] == doctest::Approx(0.1).epsilon(1e-12));

    Var x = make_input(testutil::random_tensor({1, 1, 4, 4}, 2));
    Var y = make_input(testutil::random_tensor({1, 1, 4, 4}, 3));
    double ref = 0.0;
    for (int64_t i = 0; i < x->value.numel(); ++i)
        ref += std::abs(x->value[i] - y->value[i]);
    ref /= static_cast<double>(x->value.numel());
    CHECK(pixel_loss(x, y)->value[0] == doctest::Approx(ref).epsilon(1e-7));
}

TEST_CASE("perceptual loss: zero at identity, permutation-sensitive, oracle match") {
    FeatureExtractor fx = FeatureExtractor::load(extractor_file());

    Var a = make_input(testutil::random_tensor({1, 1, 16, 16}, 4, 0.0, 1.0));
    CHECK(perceptual_loss(a, a, fx)->value[0] == 0.0);

    // shuffling gt pixels changes the value
    Tensor shuffled = a->value;
    Rng rng(5);
    for (size_t i = shuffled.d.size(); i > 1; --i)
        std::swap(shuffled.d[i - 1], shuffled.d[rng.next_u64() % i]);
    Var b = make_input(testutil::random_tensor({1, 1, 16, 16}, 6, 0.0, 1.0));
    const double before = perceptual_loss(b, a, fx)->value[0];
    const double after = perceptual_loss(b, make_input(shuffled), fx)->value[0];
    CHECK(before != after);

    // independent reimplementation: run the stages by hand via the layer
    // weights and compare mean |delta features|
    Var pred = make_input(testutil::random_tensor({1, 1, 16, 16}, 7, 0.0, 1.0));
    Var gt = make_input(testutil::random_tensor({1, 1, 16, 16}, 8, 0.0, 1.0));
    auto manual_features = [&](const Var& x) {
        Var rgb = ops::concat_channels({x, x, x});
        Var h = ops::relu(fx.c11.forward(rgb));
        h = ops::maxpool2(ops::relu(fx.c12.forward(h)));
        h = ops::relu(fx.c21.forward(h));
        h = ops::maxpool2(ops::relu(fx.c22.forward(h)));
        h = ops::relu(fx.c31.forward(h));
        h = ops::relu(fx.c32.forward(h));
        return ops::relu(fx.c33.forward(h));
    };
    Var fa = manual_features(pred);
    Var fb = manual_features(gt);
    double ref = 0.0;
    for (int64_t i = 0; i < fa->value.numel(); ++i)
        ref += std::abs(fa->value[i] - fb->value[i]);
    ref /= static_cast<double>(fa->value.numel());
    CHECK(perceptual_loss(pred, gt, fx)->value[0] == doctest::Approx(ref).epsilon(1e-5));
}

TEST_CASE("perceptual loss requires real weights; missing file is a config error") {
    CHECK_THROWS_AS(FeatureExtractor::load("/nonexistent/weights.dpfx"), ConfigError);
    Var a = make_input(Tensor({1, 1, 16, 16}, 0.5));
    CHECK_THROWS_AS(total_loss(a, a, nullptr, 1.0, 0.05), ConfigError);
}

TEST_CASE("total loss: defaults combine the parts; alpha2=0 is pixel loss alone") {
    FeatureExtractor fx = FeatureExtractor::load(extractor_file());
    Var pred = make_input(testutil::random_tensor({1, 1, 16, 16}, 9, 0.0, 1.0));
    Var gt = make_input(testutil::random_tensor({1, 1, 16, 16}, 10, 0.0, 1.0));

    CHECK(total_loss(gt, gt, &fx, 1.0, 0.05)->value[0] == 0.0);
    CHECK(total_loss(pred, gt, nullptr, 1.0, 0.0)->value[0] ==
          doctest::Approx(pixel_loss(pred, gt)->value[0]).epsilon(1e-12));

    const double expect = 1.0 * pixel_loss(pred, gt)->value[0] +
                          0.05 * perceptual_loss(pred, gt, fx)->value[0];
    CHECK(total_loss(pred, gt, &fx, 1.0, 0.05)->value[0] ==
          doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("total-loss gradients match central finite differences on 16x16 crops") {
    FeatureExtractor fx = FeatureExtractor::load(extractor_file());
    ModelConfig cfg = ModelConfig::defaults(8, 1);
    DparNet model(cfg, 31);

    auto frames_t = [&] {
        std::vector<Var> fs;
        for (int t = 0; t < 3; ++t)
            fs.push_back(
                make_input(testutil::random_tensor({1, 1, 16, 16}, 100 + t, 0.0, 1.0)));
        return fs;
    };
    Tensor gt_t = testutil::random_tensor({1, 1, 16, 16}, 200, 0.0, 1.0);
    Tensor pm_t = testutil::random_tensor({1, 1, 16, 16}, 201, 0.0, 1.0);

    auto loss_value = [&]() {
        auto fs = frames_t();
        Var y = model.forward_target(fs, make_input(pm_t), 1);
        return total_loss(y, make_input(gt_t), &fx, 1.0, 0.05);
    };

    ParamList params = model.named_parameters();
    Var loss = loss_value();
    backward(loss);

    // ten weights sampled across distinct tensors
    Rng rng(77);
    int checked = 0;
    double worst = 0.0;
    while (checked < 10) {
        const ParamEntry& p = params[rng.next_u64() % params.size()];
        const int64_t i = static_cast<int64_t>(rng.next_u64() % p.var->value.numel());
        if (!p.var->grad_ready) continue;
        const double analytic = p.var->grad[i];
        const double fd =
            testutil::fd_gradient(p.var, i, [&] { return loss_value()->value[0]; }, 1e-6);
        const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
        worst = std::max(worst, std::abs(analytic - fd) / denom);
        ++checked;
    }
    CHECK(worst <= 1e-3);
}

TEST_CASE("param net training reduces validation MAE and is deterministic") {
    DatasetManifest manifest = small_noise_dataset("train_pnet_ds", 10, 3, 48, 5);

    TrainConfig cfg;
    cfg.lr = 2e-3;
    cfg.epochs = 4;
    cfg.batch_size = 2;
    cfg.crop = 48;
    cfg.alpha2 = 0.0;
    cfg.seed = 3;

    ParamNet net(1, 8, 11);
    std::ostringstream log;
    TrainResult r = train_param_net(net, manifest, cfg, &log);
    REQUIRE(r.curve.size() == 4);
    CHECK(r.curve.back().val_metric < r.curve.front().val_metric);
    CHECK(log.str().find("epoch 1") != std::string::npos);

    // same seed, fresh model: identical loss trajectory
    ParamNet net2(1, 8, 11);
    TrainResult r2 = train_param_net(net2, manifest, cfg, nullptr);
    for (size_t i = 0; i < r.curve.size(); ++i) {
        CHECK(r.curve[i].train_loss == r2.curve[i].train_loss);
        CHECK(r.curve[i].val_metric == r2.curve[i].val_metric);
    }

    CHECK_THROWS_AS(train_param_net(net, DatasetManifest{}, cfg, nullptr), ConfigError);
}

TEST_CASE("dparnet training runs for every variant and improves the training loss") {
    DatasetManifest manifest = small_noise_dataset("train_dpar_ds", 8, 3, 48, 9);

    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    cfg.crop = 48;
    cfg.alpha2 = 0.0;
    cfg.seed = 7;
    cfg.use_oracle_pmap = true;

    for (Variant v : {Variant::v1_deep_only, Variant::v2_param_as_input,
                      Variant::v3_wide_no_param, Variant::full}) {
        DparNet model(ModelConfig::defaults(8, 1, v), 21);
        TrainResult r = train_dparnet(model, manifest, cfg, nullptr);
        REQUIRE(r.curve.size() == 3);
        CHECK(r.curve.back().train_loss < r.curve.front().train_loss);
    }

    // full variant without a parameter source is a config error
    TrainConfig bad = cfg;
    bad.use_oracle_pmap = false;
    DparNet model(ModelConfig::defaults(8, 1, Variant::full), 22);
    CHECK_THROWS_AS(train_dparnet(model, manifest, bad, nullptr), ConfigError);
}

TEST_CASE("checkpoint round trip preserves validation PSNR") {
    DatasetManifest manifest = small_noise_dataset("train_ckpt_ds", 6, 3, 48, 13);

    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.epochs = 2;
    cfg.batch_size = 2;
    cfg.crop = 48;
    cfg.alpha2 = 0.0;
    cfg.seed = 5;
    cfg.use_oracle_pmap = true;

    DparNet model(ModelConfig::defaults(8, 1), 23);
    train_dparnet(model, manifest, cfg, nullptr);

    const std::string dir = testutil::tmp_dir("train_ckpt_rt");
    save_dparnet_checkpoint(model, dir + "/a", 2, {});
    DparNet loaded = load_dparnet_checkpoint(dir + "/a");
    const std::vector<std::string> val = manifest.ids_in_split("val");
    const std::vector<std::string>& ids = val.empty() ? manifest.ids_in_split("train") : val;
    const double p1 = validate_psnr(loaded, manifest, ids, nullptr, true);

    save_dparnet_checkpoint(loaded, dir + "/b", 2, {});
    DparNet again = load_dparnet_checkpoint(dir + "/b");
    const double p2 = validate_psnr(again, manifest, ids, nullptr, true);
    CHECK(std::abs(p1 - p2) < 1e-6);
}

TEST_CASE("NaN loss aborts with a numeric error") {
    DatasetManifest manifest = small_noise_dataset("train_nan_ds", 4, 3, 48, 15);
    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.epochs = 1;
    cfg.batch_size = 2;
    cfg.crop = 48;
    cfg.alpha2 = 0.0;
    cfg.seed = 5;
    cfg.use_oracle_pmap = true;

    // poison a weight that feeds the loss without an intervening relu
    // (relu would swallow the NaN: NaN > 0 is false)
    DparNet model(ModelConfig::defaults(8, 1), 25);
    model.rc_out.w->value[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train_dparnet(model, manifest, cfg, nullptr), NumericError);
}
