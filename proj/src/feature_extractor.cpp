#include <filesystem>
#include <fstream>
#include <iostream>

#include "dparnet/checkpoint.hpp"
#include "dparnet/errors.hpp"
#include "dparnet/loss.hpp"
#include "dparnet/random_field.hpp"

namespace dparnet {

FeatureExtractor FeatureExtractor::create(uint64_t seed) {
    Rng rng(mix_seed(seed, 0x76676721ULL));
    FeatureExtractor fx;
    fx.c11 = Conv2d(3, 16, 3, 1, 1, rng);
    fx.c12 = Conv2d(16, 16, 3, 1, 1, rng);
    fx.c21 = Conv2d(16, 32, 3, 1, 1, rng);
    fx.c22 = Conv2d(32, 32, 3, 1, 1, rng);
    fx.c31 = Conv2d(32, 64, 3, 1, 1, rng);
    fx.c32 = Conv2d(64, 64, 3, 1, 1, rng);
    fx.c33 = Conv2d(64, 64, 3, 1, 1, rng);
    return fx;
}

ParamList FeatureExtractor::named_parameters() const {
    ParamList out;
    c11.collect("fx.c11", out);
    c12.collect("fx.c12", out);
    c21.collect("fx.c21", out);
    c22.collect("fx.c22", out);
    c31.collect("fx.c31", out);
    c32.collect("fx.c32", out);
    c33.collect("fx.c33", out);
    return out;
}

void FeatureExtractor::freeze() {
    for (const ParamEntry& p : named_parameters()) p.var->requires_grad = false;
}

Var FeatureExtractor::features(const Var& x) const {
    if (x->value.dim(1) != 3)
        throw std::invalid_argument("FeatureExtractor: input must have 3 channels");
    if (x->value.dim(2) % 4 || x->value.dim(3) % 4)
        throw std::invalid_argument("FeatureExtractor: H and W must be multiples of 4");
    Var h = ops::relu(c11.forward(x));
    h = ops::maxpool2(ops::relu(c12.forward(h)));
    h = ops::relu(c21.forward(h));
    h = ops::maxpool2(ops::relu(c22.forward(h)));
    h = ops::relu(c31.forward(h));
    h = ops::relu(c32.forward(h));
    return ops::relu(c33.forward(h));
}

void FeatureExtractor::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write extractor weights: " + path);
    f.write("DPFX", 4);
    const uint32_t version = 1;
    f.write(reinterpret_cast<const char*>(&version), 4);
    const ParamList params = named_parameters();
    const auto count = static_cast<uint32_t>(params.size());
    f.write(reinterpret_cast<const char*>(&count), 4);
    for (const ParamEntry& p : params) write_array(f, p.name, p.var->value);
}

FeatureExtractor FeatureExtractor::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("pre-trained extractor weights not found at " + path +
                          " (generate them with the make-extractor tool)");
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "DPFX")
        throw FormatError("bad extractor weights file: " + path);
    uint32_t version = 0, count = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&count), 4);
    if (version != 1) throw FormatError("unsupported extractor file version in " + path);

    FeatureExtractor fx = create(0);
    const ParamList params = fx.named_parameters();
    if (count != params.size()) throw FormatError("extractor weight count mismatch in " + path);
    for (const ParamEntry& p : params) {
        std::string name;
        Tensor t = read_array(f, name);
        if (name != p.name || !t.same_shape(p.var->value))
            throw FormatError("extractor weight layout mismatch in " + path + " at " + name);
        p.var->value = std::move(t);
    }
    fx.freeze();
    return fx;
}

}  // namespace dparnet
