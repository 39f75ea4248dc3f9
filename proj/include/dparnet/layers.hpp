#ifndef DPARNET_LAYERS_HPP
#define DPARNET_LAYERS_HPP

#include <string>
#include <vector>

#include "dparnet/autodiff.hpp"
#include "dparnet/random_field.hpp"

namespace dparnet {

struct ParamEntry {
    std::string name;
    Var var;
};

using ParamList = std::vector<ParamEntry>;

// He-uniform fan-in init; zero_init makes the layer start as a no-op
// (used by the residual output stages).
struct Conv2d {
    Var w, b;
    int stride = 1;
    int pad = 1;

    Conv2d() = default;
    Conv2d(int cin, int cout, int k, int stride, int pad, Rng& rng, bool zero_init = false);
    Var forward(const Var& x) const { return ops::conv2d(x, w, b, stride, pad); }
    void collect(const std::string& prefix, ParamList& out) const;
};

struct ConvT2d {
    Var w, b;
    int stride = 2;
    int pad = 1;

    ConvT2d() = default;
    // kernel 4, stride 2, pad 1: exact 2x upsampling for even sizes
    ConvT2d(int cin, int cout, Rng& rng);
    Var forward(const Var& x) const { return ops::conv_transpose2d(x, w, b, stride, pad); }
    void collect(const std::string& prefix, ParamList& out) const;
};

// conv-relu-conv plus identity skip
struct ResidualBlock {
    Conv2d c1, c2;

    ResidualBlock() = default;
    ResidualBlock(int channels, Rng& rng);
    Var forward(const Var& x) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

// Residual dense block: densely connected 3x3 conv growth layers, 1x1
// local fusion back to the block width, identity skip.
struct Rdb {
    std::vector<Conv2d> layers;
    Conv2d lff;
    static constexpr int kLayers = 4;

    Rdb() = default;
    Rdb(int channels, int growth, Rng& rng);
    Var forward(const Var& x) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

// total trainable scalar count of a parameter list
int64_t param_count(const ParamList& params);

}  // namespace dparnet

#endif
