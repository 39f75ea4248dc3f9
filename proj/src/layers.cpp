#include "dparnet/layers.hpp"

#include <cmath>

namespace dparnet {

static Var init_weight(std::vector<int> shape, int fan_in, Rng& rng, bool zero_init) {
    Tensor t(std::move(shape));
    if (!zero_init) {
        const double bound = std::sqrt(6.0 / fan_in);
        for (double& v : t.d) v = rng.uniform(-bound, bound);
    }
    return make_param(std::move(t));
}

Conv2d::Conv2d(int cin, int cout, int k, int stride_, int pad_, Rng& rng, bool zero_init)
    : stride(stride_), pad(pad_) {
    w = init_weight({cout, cin, k, k}, cin * k * k, rng, zero_init);
    b = make_param(Tensor({cout}));
}

void Conv2d::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".w", w});
    out.push_back({prefix + ".b", b});
}

ConvT2d::ConvT2d(int cin, int cout, Rng& rng) {
    w = init_weight({cin, cout, 4, 4}, cin * 16, rng, false);
    b = make_param(Tensor({cout}));
}

void ConvT2d::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".w", w});
    out.push_back({prefix + ".b", b});
}

ResidualBlock::ResidualBlock(int channels, Rng& rng)
    : c1(channels, channels, 3, 1, 1, rng), c2(channels, channels, 3, 1, 1, rng) {}

Var ResidualBlock::forward(const Var& x) const {
    return ops::add(x, c2.forward(ops::relu(c1.forward(x))));
}

void ResidualBlock::collect(const std::string& prefix, ParamList& out) const {
    c1.collect(prefix + ".c1", out);
    c2.collect(prefix + ".c2", out);
}

Rdb::Rdb(int channels, int growth, Rng& rng) {
    layers.reserve(kLayers);
    for (int i = 0; i < kLayers; ++i)
        layers.emplace_back(channels + i * growth, growth, 3, 1, 1, rng);
    lff = Conv2d(channels + kLayers * growth, channels, 1, 1, 0, rng);
}

Var Rdb::forward(const Var& x) const {
    std::vector<Var> feats{x};
    Var cur = x;
    for (const Conv2d& layer : layers) {
        feats.push_back(ops::relu(layer.forward(cur)));
        cur = ops::concat_channels(feats);
    }
    return ops::add(x, lff.forward(cur));
}

void Rdb::collect(const std::string& prefix, ParamList& out) const {
    for (size_t i = 0; i < layers.size(); ++i)
        layers[i].collect(prefix + ".conv" + std::to_string(i), out);
    lff.collect(prefix + ".lff", out);
}

int64_t param_count(const ParamList& params) {
    int64_t n = 0;
    for (const ParamEntry& p : params) n += p.var->value.numel();
    return n;
}

}  // namespace dparnet
