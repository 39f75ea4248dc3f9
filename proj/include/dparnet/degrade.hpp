#ifndef DPARNET_DEGRADE_HPP
#define DPARNET_DEGRADE_HPP

#include <cstdint>
#include <utility>

#include "dparnet/image.hpp"
#include "dparnet/param_map.hpp"
#include "dparnet/random_field.hpp"

namespace dparnet {

// Full recipe for reproducible degradation synthesis. (clean sequence, spec)
// determines the degraded sequence bit-exactly.
struct DegradationSpec {
    DegradationKind kind = DegradationKind::noise;
    SmoothFieldSpec field;
    uint64_t seed = 0;  // per-frame randomness (noise draws, warp fields)

    // turbulence only
    double max_disp = 4.0;        // px displacement at phys_max
    double max_blur_sigma = 2.0;  // px blur std at phys_max
    double warp_scale = 12.0;     // filter std of the displacement fields

    void validate() const;
};

// Static per-sequence parameter map from the spec's field recipe.
ParamMap gen_param_map(const DegradationSpec& spec, int H, int W);

// Additive Gaussian noise, std = phys(x,y)/255 per pixel, independent per
// frame/pixel/channel; frame t uses a generator seeded by mix(seed, t).
// Output clipped to [0,1].
Sequence apply_noise(const Sequence& clean, const ParamMap& pmap, uint64_t seed);

// Per-frame displacement fields for the turbulence warp: two independent
// smooth fields (filter std = warp_scale), zero-mean, unit-max-abs, scaled
// elementwise by max_disp * pmap.
std::pair<Grid, Grid> gen_displacement(const ParamMap& pmap, const DegradationSpec& spec, int t);

// Backward-warp (bilinear, edge clamp) then spatially-variant Gaussian blur
// realized as linear blending of K=4 uniformly blurred copies with stds
// {0, 1/3, 2/3, 1} * max_blur_sigma. Output clipped to [0,1].
Sequence apply_turbulence(const Sequence& clean, const ParamMap& pmap,
                          const DegradationSpec& spec);

// Dispatch on spec.kind.
Sequence apply_degradation(const Sequence& clean, const ParamMap& pmap,
                           const DegradationSpec& spec);

}  // namespace dparnet

#endif
