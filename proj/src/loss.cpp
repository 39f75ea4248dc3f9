#include "dparnet/loss.hpp"

#include <stdexcept>

#include "dparnet/errors.hpp"

namespace dparnet {

Var pixel_loss(const Var& pred, const Var& gt) { return ops::mean_abs_diff(pred, gt); }

static Var to_rgb(const Var& x) {
    if (x->value.dim(1) == 3) return x;
    if (x->value.dim(1) == 1) return ops::concat_channels({x, x, x});
    throw std::invalid_argument("perceptual_loss: inputs must have 1 or 3 channels");
}

Var perceptual_loss(const Var& pred, const Var& gt, const FeatureExtractor& extractor) {
    if (!pred->value.same_shape(gt->value))
        throw std::invalid_argument("perceptual_loss: shape mismatch");
    return ops::mean_abs_diff(extractor.features(to_rgb(pred)), extractor.features(to_rgb(gt)));
}

Var total_loss(const Var& pred, const Var& gt, const FeatureExtractor* extractor, double alpha1,
               double alpha2) {
    Var l = ops::scale(pixel_loss(pred, gt), alpha1);
    if (alpha2 != 0.0) {
        if (!extractor)
            throw ConfigError("total_loss: alpha2 > 0 requires pre-trained extractor weights");
        l = ops::add(l, ops::scale(perceptual_loss(pred, gt, *extractor), alpha2));
    }
    return l;
}

}  // namespace dparnet
