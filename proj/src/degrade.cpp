#include "dparnet/degrade.hpp"

#include <algorithm>
#include <cmath>

#include "dparnet/errors.hpp"

namespace dparnet {

void DegradationSpec::validate() const {
    if (max_disp < 0.0 || max_blur_sigma < 0.0)
        throw std::invalid_argument("DegradationSpec: max_disp and max_blur_sigma must be >= 0");
    if (warp_scale <= 0.0)
        throw std::invalid_argument("DegradationSpec: warp_scale must be > 0");
}

ParamMap gen_param_map(const DegradationSpec& spec, int H, int W) {
    spec.validate();
    Grid field = smooth_random_field(spec.field, H, W);
    ParamMap map(H, W, spec.kind, default_phys_max(spec.kind));
    for (size_t i = 0; i < field.v.size(); ++i)
        map.values[i] = static_cast<float>(field.v[i]);
    return map;
}

static void check_shapes(const Sequence& seq, const ParamMap& pmap, DegradationKind want) {
    if (pmap.kind != want)
        throw std::invalid_argument(std::string("parameter map kind mismatch: have ") +
                                    kind_name(pmap.kind) + ", need " + kind_name(want));
    if (seq.h() != pmap.h || seq.w() != pmap.w)
        throw std::invalid_argument("sequence/parameter map shape mismatch");
}

Sequence apply_noise(const Sequence& clean, const ParamMap& pmap, uint64_t seed) {
    check_shapes(clean, pmap, DegradationKind::noise);
    Sequence out;
    out.id = clean.id;
    out.frame_rate = clean.frame_rate;
    out.frames.reserve(clean.frames.size());
    for (int t = 0; t < clean.length(); ++t) {
        Rng rng(mix_seed(seed, static_cast<uint64_t>(t)));
        const Frame& src = clean.frames[t];
        Frame dst(src.h, src.w, src.c);
        for (int y = 0; y < src.h; ++y) {
            for (int x = 0; x < src.w; ++x) {
                const double sigma = pmap.phys(y, x) / 255.0;
                for (int ch = 0; ch < src.c; ++ch) {
                    const double n = rng.normal() * sigma;
                    dst.at(ch, y, x) = std::clamp(src.at(ch, y, x) + n, 0.0, 1.0);
                }
            }
        }
        out.frames.push_back(std::move(dst));
    }
    return out;
}

std::pair<Grid, Grid> gen_displacement(const ParamMap& pmap, const DegradationSpec& spec, int t) {
    spec.validate();
    if (pmap.kind != DegradationKind::turbulence)
        throw std::invalid_argument("gen_displacement: parameter map kind must be turbulence");

    auto make_component = [&](uint64_t stream) {
        SmoothFieldSpec fs;
        fs.length_scale = spec.warp_scale;
        fs.min_frac = 0.0;
        fs.max_frac = 1.0;
        fs.seed = mix_seed(spec.seed, static_cast<uint64_t>(t), stream);
        Grid g = smooth_random_field(fs, pmap.h, pmap.w);
        // zero-mean, unit-max-abs
        double mean = 0.0;
        for (double v : g.v) mean += v;
        mean /= static_cast<double>(g.v.size());
        double max_abs = 0.0;
        for (double& v : g.v) {
            v -= mean;
            max_abs = std::max(max_abs, std::abs(v));
        }
        if (max_abs > 0.0)
            for (double& v : g.v) v /= max_abs;
        for (int y = 0; y < g.h; ++y)
            for (int x = 0; x < g.w; ++x)
                g.at(y, x) *= spec.max_disp * static_cast<double>(pmap.at(y, x));
        return g;
    };
    return {make_component(0), make_component(1)};
}

namespace {

// bilinear sample with coordinates clamped into the frame
double sample_bilinear(const Frame& f, int ch, double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(f.h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(f.w - 1));
    const int y0 = static_cast<int>(y);
    const int x0 = static_cast<int>(x);
    const int y1 = std::min(y0 + 1, f.h - 1);
    const int x1 = std::min(x0 + 1, f.w - 1);
    const double wy = y - y0;
    const double wx = x - x0;
    return (1.0 - wy) * ((1.0 - wx) * f.at(ch, y0, x0) + wx * f.at(ch, y0, x1)) +
           wy * ((1.0 - wx) * f.at(ch, y1, x0) + wx * f.at(ch, y1, x1));
}

Frame warp_frame(const Frame& src, const Grid& dx, const Grid& dy) {
    Frame dst(src.h, src.w, src.c);
    for (int ch = 0; ch < src.c; ++ch)
        for (int y = 0; y < src.h; ++y)
            for (int x = 0; x < src.w; ++x)
                dst.at(ch, y, x) = sample_bilinear(src, ch, y + dy.at(y, x), x + dx.at(y, x));
    return dst;
}

Frame blur_frame(const Frame& src, double sigma) {
    if (sigma <= 0.0) return src;
    Frame dst(src.h, src.w, src.c);
    Grid plane(src.h, src.w);
    for (int ch = 0; ch < src.c; ++ch) {
        for (int y = 0; y < src.h; ++y)
            for (int x = 0; x < src.w; ++x) plane.at(y, x) = src.at(ch, y, x);
        Grid blurred = gaussian_filter(plane, sigma);
        for (int y = 0; y < src.h; ++y)
            for (int x = 0; x < src.w; ++x) dst.at(ch, y, x) = blurred.at(y, x);
    }
    return dst;
}

}  // namespace

Sequence apply_turbulence(const Sequence& clean, const ParamMap& pmap,
                          const DegradationSpec& spec) {
    spec.validate();
    check_shapes(clean, pmap, DegradationKind::turbulence);

    constexpr int kBlurLevels = 4;
    const double top = spec.max_blur_sigma;

    Sequence out;
    out.id = clean.id;
    out.frame_rate = clean.frame_rate;
    out.frames.reserve(clean.frames.size());
    for (int t = 0; t < clean.length(); ++t) {
        auto [dx, dy] = gen_displacement(pmap, spec, t);
        Frame warped = warp_frame(clean.frames[t], dx, dy);

        // K uniformly blurred copies, stds {0, 1/3, 2/3, 1} * max_blur_sigma
        std::vector<Frame> copies;
        copies.reserve(kBlurLevels);
        copies.push_back(warped);
        for (int k = 1; k < kBlurLevels; ++k)
            copies.push_back(blur_frame(warped, top * k / (kBlurLevels - 1)));

        Frame dst(warped.h, warped.w, warped.c);
        const double step = top > 0.0 ? top / (kBlurLevels - 1) : 1.0;
        for (int y = 0; y < dst.h; ++y) {
            for (int x = 0; x < dst.w; ++x) {
                const double sigma = top * static_cast<double>(pmap.at(y, x));
                int k = std::min(static_cast<int>(sigma / step), kBlurLevels - 2);
                const double frac = std::clamp(sigma / step - k, 0.0, 1.0);
                for (int ch = 0; ch < dst.c; ++ch) {
                    const double v = (1.0 - frac) * copies[k].at(ch, y, x) +
                                     frac * copies[k + 1].at(ch, y, x);
                    dst.at(ch, y, x) = std::clamp(v, 0.0, 1.0);
                }
            }
        }
        out.frames.push_back(std::move(dst));
    }
    return out;
}

Sequence apply_degradation(const Sequence& clean, const ParamMap& pmap,
                           const DegradationSpec& spec) {
    if (spec.kind == DegradationKind::noise) return apply_noise(clean, pmap, spec.seed);
    return apply_turbulence(clean, pmap, spec);
}

}  // namespace dparnet
