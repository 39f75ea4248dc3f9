#ifndef DPARNET_LOSS_HPP
#define DPARNET_LOSS_HPP

#include <string>

#include "dparnet/layers.hpp"

namespace dparnet {

// VGG-style fixed feature extractor used by the perceptual loss: two
// 2-conv stages with maxpool, then a 3-conv stage; features are taken
// after the third conv of stage 3. Reduced width (16/32/64); weights come
// from a file produced by the make-extractor tool (a deterministic
// denoising pre-training run) and are never updated here.
class FeatureExtractor {
public:
    static FeatureExtractor create(uint64_t seed);  // fresh random init (pre-training only)
    static FeatureExtractor load(const std::string& path);
    void save(const std::string& path) const;

    // x: (N,3,H,W), H and W multiples of 4 -> (N,64,H/4,W/4)
    Var features(const Var& x) const;
    ParamList named_parameters() const;
    void freeze();  // drop requires_grad on all weights

    Conv2d c11, c12, c21, c22, c31, c32, c33;
};

// Deterministic pre-training of the extractor on procedural textures
// (denoising objective through a throwaway decoder). Used by the
// make-extractor tool; a fixed (seed, steps) pair gives a fixed artifact.
FeatureExtractor pretrain_feature_extractor(uint64_t seed, int steps, std::ostream* log);

// mean absolute difference over pixels/channels
Var pixel_loss(const Var& pred, const Var& gt);

// mean absolute difference of extractor activations; single-channel
// inputs are replicated to 3 channels
Var perceptual_loss(const Var& pred, const Var& gt, const FeatureExtractor& extractor);

// alpha1 * pixel + alpha2 * perceptual; extractor may be null when
// alpha2 == 0
Var total_loss(const Var& pred, const Var& gt, const FeatureExtractor* extractor, double alpha1,
               double alpha2);

}  // namespace dparnet

#endif
