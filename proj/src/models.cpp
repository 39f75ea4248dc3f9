#include "dparnet/models.hpp"

#include <algorithm>
#include <cmath>

#include "dparnet/errors.hpp"

namespace dparnet {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::v1_deep_only: return "v1_deep_only";
        case Variant::v2_param_as_input: return "v2_param_as_input";
        case Variant::v3_wide_no_param: return "v3_wide_no_param";
    }
    return "full";
}

Variant variant_from_name(const std::string& name) {
    if (name == "full") return Variant::full;
    if (name == "v1_deep_only" || name == "v1") return Variant::v1_deep_only;
    if (name == "v2_param_as_input" || name == "v2") return Variant::v2_param_as_input;
    if (name == "v3_wide_no_param" || name == "v3") return Variant::v3_wide_no_param;
    throw ConfigError("unknown variant: " + name);
}

ModelConfig ModelConfig::defaults(int base, int in_ch, Variant v) {
    ModelConfig cfg;
    cfg.base_channels = base;
    cfg.rdb_growth = std::max(4, base / 2);
    cfg.in_channels = in_ch;
    cfg.variant = v;
    cfg.validate();
    return cfg;
}

void ModelConfig::validate() const {
    if (fusion_window != 5) throw ConfigError("fusion_window must be 5");
    if (in_channels != 1 && in_channels != 3) throw ConfigError("in_channels must be 1 or 3");
    if (base_channels < 4 || rdb_count < 1 || rdb_growth < 1 || wide_channels < 1)
        throw ConfigError("model channel configuration out of range");
}

// ---------------------------------------------------------------------------
// pad helpers: every spatial op in the nets works on multiples of 8

namespace {

struct PadInfo {
    int bottom = 0;
    int right = 0;
};

PadInfo pad_to_multiple8(int h, int w) {
    PadInfo p;
    p.bottom = (8 - h % 8) % 8;
    p.right = (8 - w % 8) % 8;
    return p;
}

Var padded(const Var& x, const PadInfo& p) {
    if (p.bottom == 0 && p.right == 0) return x;
    return ops::reflect_pad(x, 0, p.bottom, 0, p.right);
}

Var unpadded(const Var& x, const PadInfo& p, int h, int w) {
    if (p.bottom == 0 && p.right == 0) return x;
    return ops::crop(x, 0, 0, h, w);
}

Tensor frame_to_tensor(const Frame& f) {
    Tensor t({1, f.c, f.h, f.w});
    std::copy(f.data.begin(), f.data.end(), t.d.begin());
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// parameter prediction network

ParamNet::ParamNet(int in_channels_, int width_, uint64_t seed)
    : in_channels(in_channels_), width(width_) {
    Rng rng(mix_seed(seed, 0x70617261ULL));
    d1 = Conv2d(in_channels, width, 3, 2, 1, rng);
    d2 = Conv2d(width, 2 * width, 3, 2, 1, rng);
    d3 = Conv2d(2 * width, 4 * width, 3, 2, 1, rng);
    rb1 = ResidualBlock(4 * width, rng);
    rb2 = ResidualBlock(4 * width, rng);
    u1 = ConvT2d(4 * width, 2 * width, rng);
    u2 = ConvT2d(2 * width, width, rng);
    u3 = ConvT2d(width, 1, rng);
}

Var ParamNet::forward(const Var& mean_frame) const {
    const int h = mean_frame->value.dim(2);
    const int w = mean_frame->value.dim(3);
    const PadInfo pi = pad_to_multiple8(h, w);
    Var x = padded(mean_frame, pi);
    x = ops::relu(d1.forward(x));
    x = ops::relu(d2.forward(x));
    x = ops::relu(d3.forward(x));
    x = rb2.forward(rb1.forward(x));
    x = ops::relu(u1.forward(x));
    x = ops::relu(u2.forward(x));
    x = ops::sigmoid(u3.forward(x));
    return unpadded(x, pi, h, w);
}

ParamMap ParamNet::predict(const Sequence& degraded, DegradationKind kind) const {
    if (degraded.length() < 1) throw std::invalid_argument("predict: empty sequence");
    Var out = forward(make_input(frame_to_tensor(temporal_mean(degraded))));
    ParamMap map(degraded.h(), degraded.w(), kind, default_phys_max(kind));
    for (size_t i = 0; i < map.values.size(); ++i)
        map.values[i] = static_cast<float>(out->value[static_cast<int64_t>(i)]);
    return map;
}

void ParamNet::freeze() {
    for (const ParamEntry& p : named_parameters()) p.var->requires_grad = false;
}

ParamList ParamNet::named_parameters() const {
    ParamList out;
    d1.collect("pnet.d1", out);
    d2.collect("pnet.d2", out);
    d3.collect("pnet.d3", out);
    rb1.collect("pnet.rb1", out);
    rb2.collect("pnet.rb2", out);
    u1.collect("pnet.u1", out);
    u2.collect("pnet.u2", out);
    u3.collect("pnet.u3", out);
    return out;
}

// ---------------------------------------------------------------------------
// DparNet

DparNet::DparNet(const ModelConfig& cfg, uint64_t seed) : config(cfg) {
    cfg.validate();
    Rng rng(mix_seed(seed, 0x64706172ULL));
    const int b = cfg.base_channels;
    const int c = cfg.in_channels;
    const int cin = cfg.deep_in_channels();

    auto make_direction = [&](Direction& d) {
        d.in_conv = Conv2d(cin, b, 3, 2, 1, rng);
        d.fuse = Conv2d(2 * b, b, 3, 1, 1, rng);
        d.rdbs.clear();
        for (int i = 0; i < cfg.rdb_count; ++i) d.rdbs.emplace_back(b, cfg.rdb_growth, rng);
    };
    make_direction(fwd);
    make_direction(bwd);
    feat_conv = Conv2d(2 * b, b, 3, 1, 1, rng);

    rc_fuse = Conv2d(cfg.fusion_window * b, b, 3, 1, 1, rng);
    rc_rb1 = ResidualBlock(b, rng);
    rc_rb2 = ResidualBlock(b, rng);
    rc_up = ConvT2d(b, b, rng);
    rc_out = Conv2d(b, c, 3, 1, 1, rng, /*zero_init=*/true);

    if (cfg.has_wide()) {
        const int wch = cfg.wide_channels;
        wide_c1 = Conv2d(c + 1, wch, 3, 2, 1, rng);
        wide_c2 = Conv2d(wch, wch, 3, 1, 1, rng);
        wide_rb = ResidualBlock(wch, rng);
        wide_up = ConvT2d(wch, wch, rng);
        wide_out = Conv2d(wch, c, 3, 1, 1, rng, /*zero_init=*/true);

        // averaging init: merge(a, a) = a
        merge_conv = Conv2d(2 * c, c, 1, 1, 0, rng, /*zero_init=*/true);
        for (int j = 0; j < c; ++j) {
            merge_conv.w->value.at(j, j, 0, 0) = 0.5;
            merge_conv.w->value.at(j, c + j, 0, 0) = 0.5;
        }
    }
}

Var DparNet::Direction::step(const Var& frame, const Var& hidden) const {
    Var x = ops::relu(in_conv.forward(frame));
    Var h = ops::relu(fuse.forward(ops::concat_channels({x, hidden})));
    for (const Rdb& rdb : rdbs) h = rdb.forward(h);
    return h;
}

void DparNet::Direction::collect(const std::string& prefix, ParamList& out) const {
    in_conv.collect(prefix + ".in_conv", out);
    fuse.collect(prefix + ".fuse", out);
    for (size_t i = 0; i < rdbs.size(); ++i)
        rdbs[i].collect(prefix + ".rdb" + std::to_string(i), out);
}

std::vector<Var> DparNet::brnn_extract(const std::vector<Var>& frames) const {
    if (frames.empty()) throw std::invalid_argument("brnn_extract: empty sequence");
    const int t_len = static_cast<int>(frames.size());
    const Tensor& f0 = frames[0]->value;
    const int n = f0.dim(0), hh = f0.dim(2) / 2, hw = f0.dim(3) / 2;
    const int b = config.base_channels;

    Var zero = make_input(Tensor({n, b, hh, hw}));
    std::vector<Var> hf(t_len), hb(t_len);
    Var h = zero;
    for (int t = 0; t < t_len; ++t) {
        h = fwd.step(frames[t], h);
        hf[t] = h;
    }
    h = zero;
    for (int t = t_len - 1; t >= 0; --t) {
        h = bwd.step(frames[t], h);
        hb[t] = h;
    }
    std::vector<Var> feats(t_len);
    for (int t = 0; t < t_len; ++t)
        feats[t] = feat_conv.forward(ops::concat_channels({hf[t], hb[t]}));
    return feats;
}

Var DparNet::reconstruct_frame(const std::vector<Var>& feats) const {
    if (static_cast<int>(feats.size()) != config.fusion_window)
        throw std::invalid_argument("reconstruct_frame: need exactly " +
                                    std::to_string(config.fusion_window) + " feature maps, got " +
                                    std::to_string(feats.size()));
    Var x = ops::relu(rc_fuse.forward(ops::concat_channels(feats)));
    x = rc_rb2.forward(rc_rb1.forward(x));
    x = ops::relu(rc_up.forward(x));
    return rc_out.forward(x);
}

Var DparNet::wide_forward(const Var& target, const Var& pmap) const {
    if (!config.has_wide())
        throw std::invalid_argument("wide_forward: variant has no wide branch");
    if (target->value.dim(2) != pmap->value.dim(2) ||
        target->value.dim(3) != pmap->value.dim(3))
        throw std::invalid_argument("wide_forward: frame/parameter map shape mismatch");
    Var x = ops::relu(wide_c1.forward(ops::concat_channels({target, pmap})));
    x = ops::relu(wide_c2.forward(x));
    x = wide_rb.forward(x);
    x = ops::relu(wide_up.forward(x));
    return wide_out.forward(x);
}

Var DparNet::merge(const Var& y1, const Var& y2) const {
    if (!y1->value.same_shape(y2->value))
        throw std::invalid_argument("merge: branch shape mismatch");
    return merge_conv.forward(ops::concat_channels({y1, y2}));
}

Var DparNet::forward_target(const std::vector<Var>& frames, const Var& pmap, int t) const {
    const int t_len = static_cast<int>(frames.size());
    if (t < 0 || t >= t_len) throw std::invalid_argument("forward_target: index out of range");

    Var pmap_used = pmap;
    if (config.variant == Variant::v3_wide_no_param) {
        const Tensor& f0 = frames[0]->value;
        pmap_used = make_input(Tensor({f0.dim(0), 1, f0.dim(2), f0.dim(3)}, 1.0));
    } else if (config.wants_pmap() && !pmap) {
        throw ConfigError(std::string("variant ") + variant_name(config.variant) +
                          " needs a parameter map");
    }

    std::vector<Var> deep_in = frames;
    if (config.variant == Variant::v2_param_as_input)
        for (Var& f : deep_in) f = ops::concat_channels({f, pmap_used});

    std::vector<Var> feats = brnn_extract(deep_in);
    std::vector<Var> window(static_cast<size_t>(config.fusion_window));
    const int half = config.fusion_window / 2;
    for (int k = -half; k <= half; ++k)
        window[static_cast<size_t>(k + half)] = feats[std::clamp(t + k, 0, t_len - 1)];

    Var y1 = ops::add(frames[t], reconstruct_frame(window));
    if (!config.has_wide()) return y1;
    Var y2 = ops::add(frames[t], wide_forward(frames[t], pmap_used));
    return merge(y1, y2);
}

ParamList DparNet::named_parameters() const {
    ParamList out;
    fwd.collect("deep.fwd", out);
    bwd.collect("deep.bwd", out);
    feat_conv.collect("deep.feat", out);
    rc_fuse.collect("rc.fuse", out);
    rc_rb1.collect("rc.rb1", out);
    rc_rb2.collect("rc.rb2", out);
    rc_up.collect("rc.up", out);
    rc_out.collect("rc.out", out);
    if (config.has_wide()) {
        wide_c1.collect("wide.c1", out);
        wide_c2.collect("wide.c2", out);
        wide_rb.collect("wide.rb", out);
        wide_up.collect("wide.up", out);
        wide_out.collect("wide.out", out);
        merge_conv.collect("merge.conv", out);
    }
    return out;
}

Sequence dparnet_forward(const DparNet& model, const Sequence& degraded, const ParamMap* pmap,
                         const ParamNet* pnet, DegradationKind kind, ParamMap* used_pmap) {
    if (degraded.length() < 1) throw std::invalid_argument("dparnet_forward: empty sequence");
    if (degraded.c() != model.config.in_channels)
        throw std::invalid_argument("dparnet_forward: channel count does not match model");

    const int h = degraded.h(), w = degraded.w();
    ParamMap local;
    const ParamMap* used = pmap;
    if (model.config.wants_pmap() && !used) {
        if (!pnet)
            throw ConfigError("variant needs a parameter map: pass one or a parameter net");
        local = pnet->predict(degraded, kind);
        used = &local;
    }
    if (used_pmap && used) *used_pmap = *used;

    const PadInfo pi = pad_to_multiple8(h, w);
    std::vector<Var> frames;
    frames.reserve(degraded.frames.size());
    for (const Frame& f : degraded.frames)
        frames.push_back(padded(make_input(frame_to_tensor(f)), pi));

    Var pmap_var;
    if (used) {
        Tensor t({1, 1, h, w});
        for (size_t i = 0; i < used->values.size(); ++i)
            t[static_cast<int64_t>(i)] = static_cast<double>(used->values[i]);
        pmap_var = padded(make_input(std::move(t)), pi);
    }

    Sequence out;
    out.id = degraded.id;
    out.frame_rate = degraded.frame_rate;
    out.frames.reserve(degraded.frames.size());
    for (int t = 0; t < degraded.length(); ++t) {
        Var y = model.forward_target(frames, pmap_var, t);
        y = unpadded(y, pi, h, w);
        Frame frame(h, w, degraded.c());
        for (size_t i = 0; i < frame.data.size(); ++i)
            frame.data[i] = std::clamp(y->value[static_cast<int64_t>(i)], 0.0, 1.0);
        out.frames.push_back(std::move(frame));
    }
    return out;
}

int64_t count_params(const DparNet& model) { return param_count(model.named_parameters()); }
int64_t count_params(const ParamNet& net) { return param_count(net.named_parameters()); }

// ---------------------------------------------------------------------------
// analytic cost model

namespace {

int64_t conv_cost(int cin, int cout, int k, int64_t out_pixels) {
    return 2 * static_cast<int64_t>(cin) * k * k * cout * out_pixels;
}

int64_t rdb_cost(int b, int g, int64_t px) {
    int64_t f = 0;
    for (int i = 0; i < Rdb::kLayers; ++i) {
        f += conv_cost(b + i * g, g, 3, px);
        f += g * px;  // relu
    }
    f += conv_cost(b + Rdb::kLayers * g, b, 1, px);
    f += b * px;  // skip add
    return f;
}

int64_t rb_cost(int c, int64_t px) {
    return 2 * conv_cost(c, c, 3, px) + 2 * c * px;  // two convs, relu + skip add
}

}  // namespace

int64_t count_flops(const ModelConfig& config, int H, int W) {
    const int b = config.base_channels;
    const int c = config.in_channels;
    const int64_t full_px = static_cast<int64_t>(H) * W;
    const int64_t half_px = full_px / 4;

    // per-direction recurrent step
    int64_t dir = conv_cost(config.deep_in_channels(), b, 3, half_px) + b * half_px;
    dir += conv_cost(2 * b, b, 3, half_px) + b * half_px;
    dir += static_cast<int64_t>(config.rdb_count) * rdb_cost(b, config.rdb_growth, half_px);

    int64_t flops = 2 * dir;                            // forward + backward pass
    flops += conv_cost(2 * b, b, 3, half_px);           // feature conv

    // reconstructor
    flops += conv_cost(config.fusion_window * b, b, 3, half_px) + b * half_px;
    flops += 2 * rb_cost(b, half_px);
    flops += conv_cost(b, b, 4, half_px) + b * full_px;  // deconv counted on input grid
    flops += conv_cost(b, c, 3, full_px);
    flops += c * full_px;  // residual add

    if (config.has_wide()) {
        const int wch = config.wide_channels;
        flops += conv_cost(c + 1, wch, 3, half_px) + wch * half_px;
        flops += conv_cost(wch, wch, 3, half_px) + wch * half_px;
        flops += rb_cost(wch, half_px);
        flops += conv_cost(wch, wch, 4, half_px) + wch * full_px;  // deconv
        flops += conv_cost(wch, c, 3, full_px);
        flops += c * full_px;                      // residual add
        flops += conv_cost(2 * c, c, 1, full_px);  // merge
    }
    return flops;
}

int64_t count_flops_param_net(int in_channels, int width, int H, int W) {
    const int64_t px = static_cast<int64_t>(H) * W;
    int64_t f = conv_cost(in_channels, width, 3, px / 4) + width * px / 4;
    f += conv_cost(width, 2 * width, 3, px / 16) + 2 * width * px / 16;
    f += conv_cost(2 * width, 4 * width, 3, px / 64) + 4 * width * px / 64;
    f += 2 * rb_cost(4 * width, px / 64);
    f += conv_cost(4 * width, 2 * width, 4, px / 64) + 2 * width * px / 16;
    f += conv_cost(2 * width, width, 4, px / 16) + width * px / 4;
    f += conv_cost(width, 1, 4, px / 4) + px;
    return f;
}

}  // namespace dparnet
