#ifndef DPARNET_RANDOM_FIELD_HPP
#define DPARNET_RANDOM_FIELD_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace dparnet {

// Deterministic RNG wrapper. mt19937_64 output is pinned by the standard,
// but the std distributions are not, so normal/uniform sampling is done
// by hand to get bit-identical streams everywhere.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller, second value cached
    double normal();

    uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64 step; used to derive independent per-frame / per-purpose seeds
// from (seed, index) without correlated streams.
uint64_t mix_seed(uint64_t seed, uint64_t index);
uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b);

struct SmoothFieldSpec {
    double length_scale = 8.0;  // Gaussian filter std, pixels
    double min_frac = 0.0;
    double max_frac = 1.0;
    uint64_t seed = 0;
};

// Row-major H*W grid of doubles.
struct Grid {
    int h = 0;
    int w = 0;
    std::vector<double> v;

    Grid() = default;
    Grid(int h_, int w_, double fill = 0.0) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}
    double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

// Separable Gaussian filter with symmetric (reflect) borders.
// sigma <= 0 returns the input unchanged.
Grid gaussian_filter(const Grid& in, double sigma);

// Gaussian-filtered white noise, affinely rescaled so min = min_frac and
// max = max_frac. Pure function of (spec, H, W).
Grid smooth_random_field(const SmoothFieldSpec& spec, int H, int W);

}  // namespace dparnet

#endif
