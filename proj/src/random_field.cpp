#include "dparnet/random_field.hpp"

#include <algorithm>
#include <cmath>

#include "dparnet/errors.hpp"

namespace dparnet {

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

static uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t mix_seed(uint64_t seed, uint64_t index) {
    return splitmix64(splitmix64(seed) ^ (index + 0x632be59bd9b4e019ULL));
}

uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

Grid gaussian_filter(const Grid& in, double sigma) {
    if (sigma <= 0.0) return in;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    // reflect index into [0, n)
    auto reflect = [](int i, int n) {
        if (n == 1) return 0;
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - 1 - i;
        }
        return i;
    };

    Grid tmp(in.h, in.w);
    for (int y = 0; y < in.h; ++y) {
        for (int x = 0; x < in.w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * in.at(y, reflect(x + k, in.w));
            tmp.at(y, x) = acc;
        }
    }
    Grid out(in.h, in.w);
    for (int y = 0; y < in.h; ++y) {
        for (int x = 0; x < in.w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * tmp.at(reflect(y + k, in.h), x);
            out.at(y, x) = acc;
        }
    }
    return out;
}

Grid smooth_random_field(const SmoothFieldSpec& spec, int H, int W) {
    if (H < 8 || W < 8)
        throw std::invalid_argument("smooth_random_field: dimensions must be >= 8, got " +
                                    std::to_string(H) + "x" + std::to_string(W));
    if (spec.length_scale < 1.0)
        throw std::invalid_argument("smooth_random_field: length_scale must be >= 1 pixel");
    if (spec.min_frac < 0.0 || spec.max_frac > 1.0 || spec.min_frac > spec.max_frac)
        throw std::invalid_argument("smooth_random_field: need 0 <= min_frac <= max_frac <= 1");

    Rng rng(spec.seed);
    Grid noise(H, W);
    for (double& v : noise.v) v = rng.normal();

    Grid field = gaussian_filter(noise, spec.length_scale);

    auto [mn_it, mx_it] = std::minmax_element(field.v.begin(), field.v.end());
    const double mn = *mn_it, mx = *mx_it;
    const double span = spec.max_frac - spec.min_frac;
    if (mx - mn < 1e-300 || span == 0.0) {
        std::fill(field.v.begin(), field.v.end(), spec.min_frac);
        return field;
    }
    const double scale = span / (mx - mn);
    for (double& v : field.v) v = spec.min_frac + (v - mn) * scale;
    return field;
}

}  // namespace dparnet
