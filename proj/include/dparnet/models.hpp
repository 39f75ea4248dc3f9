#ifndef DPARNET_MODELS_HPP
#define DPARNET_MODELS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dparnet/image.hpp"
#include "dparnet/layers.hpp"
#include "dparnet/param_map.hpp"

namespace dparnet {

enum class Variant { full, v1_deep_only, v2_param_as_input, v3_wide_no_param };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
    int base_channels = 64;
    int rdb_count = 2;
    int rdb_growth = 32;
    int wide_channels = 8;
    int fusion_window = 5;  // fixed by the 5-frame fusion
    int in_channels = 1;
    Variant variant = Variant::full;

    // growth tracks half the base width unless overridden
    static ModelConfig defaults(int base = 64, int in_ch = 1, Variant v = Variant::full);
    void validate() const;

    bool has_wide() const {
        return variant == Variant::full || variant == Variant::v3_wide_no_param;
    }
    bool wants_pmap() const {
        return variant == Variant::full || variant == Variant::v2_param_as_input;
    }
    int deep_in_channels() const {
        return in_channels + (variant == Variant::v2_param_as_input ? 1 : 0);
    }
    int param_net_width() const { return std::max(4, base_channels / 4); }
};

// Encoder-decoder over the temporal mean frame: 3 stride-2 convs down,
// 2 residual blocks, 3 stride-2 transposed convs up, sigmoid.
class ParamNet {
public:
    ParamNet() = default;
    ParamNet(int in_channels, int width, uint64_t seed);

    // (N,in,H,W) -> (N,1,H,W) in [0,1]; any H,W (reflect-pads to /8 inside)
    Var forward(const Var& mean_frame) const;

    // inference on a degraded sequence; kind/phys_max from task context
    ParamMap predict(const Sequence& degraded, DegradationKind kind) const;

    ParamList named_parameters() const;
    void freeze();  // stop gradient flow into these weights

    int in_channels = 1;
    int width = 16;

    Conv2d d1, d2, d3;
    ResidualBlock rb1, rb2;
    ConvT2d u1, u2, u3;
};

// Wide & deep restoration network plus the Table-4 ablation variants.
class DparNet {
public:
    DparNet() = default;
    DparNet(const ModelConfig& cfg, uint64_t seed);

    ModelConfig config;

    struct Direction {
        Conv2d in_conv;  // stride 2 into the working half resolution
        Conv2d fuse;     // 2b -> b after [input features, hidden] concat
        std::vector<Rdb> rdbs;

        Var step(const Var& frame, const Var& hidden) const;
        void collect(const std::string& prefix, ParamList& out) const;
    };

    // one feature map per frame, (N, base, H/2, W/2)
    std::vector<Var> brnn_extract(const std::vector<Var>& frames) const;

    // exactly fusion_window feature maps -> full-resolution residual
    Var reconstruct_frame(const std::vector<Var>& feats) const;

    // target frame + parameter map -> full-resolution residual
    Var wide_forward(const Var& target, const Var& pmap) const;

    // channel concat + 1x1 conv back to in_channels
    Var merge(const Var& y1, const Var& y2) const;

    // Restores the target frame t given per-frame inputs (N,C,H,W), H and W
    // multiples of 8. pmap (N,1,H,W) required by full/v2, ignored by v1,
    // replaced by ones for v3.
    Var forward_target(const std::vector<Var>& frames, const Var& pmap, int t) const;

    ParamList named_parameters() const;

    Direction fwd, bwd;
    Conv2d feat_conv;                      // 2b -> b
    Conv2d rc_fuse;                        // 5b -> b
    ResidualBlock rc_rb1, rc_rb2;
    ConvT2d rc_up;                         // back to full resolution
    Conv2d rc_out;                         // b -> C, zero-init
    Conv2d wide_c1, wide_c2;               // (C+1) -> w stride 2, w -> w
    ResidualBlock wide_rb;
    ConvT2d wide_up;
    Conv2d wide_out;                       // w -> C, zero-init
    Conv2d merge_conv;                     // 2C -> C, 1x1, averaging init
};

// Whole-sequence inference: pads to /8, restores every frame, clips to
// [0,1]. If pmap is null and the variant wants one, pnet must be given
// (frozen prediction, tagged with `kind`). used_pmap receives whatever
// map drove the run.
Sequence dparnet_forward(const DparNet& model, const Sequence& degraded,
                         const ParamMap* pmap, const ParamNet* pnet,
                         DegradationKind kind = DegradationKind::noise,
                         ParamMap* used_pmap = nullptr);

int64_t count_params(const DparNet& model);
int64_t count_params(const ParamNet& net);

// Analytic per-frame cost (2*MAC for conv/deconv plus elementwise) at the
// given spatial shape; channel count comes from the config.
int64_t count_flops(const ModelConfig& config, int H, int W);
int64_t count_flops_param_net(int in_channels, int width, int H, int W);

}  // namespace dparnet

#endif
