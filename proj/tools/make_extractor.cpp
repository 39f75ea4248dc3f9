// Produces the fixed perceptual-loss extractor weights: a deterministic
// denoising pre-training run on procedural textures. The repository ships
// the resulting file; rerun this tool to regenerate it.

#include <CLI11.hpp>

#include <iostream>

#include "dparnet/loss.hpp"

int main(int argc, char** argv) {
    CLI::App app{"pre-train the perceptual feature extractor"};
    std::string out = "assets/feature_extractor.dpfx";
    uint64_t seed = 17;
    int steps = 400;
    app.add_option("--out", out, "output weights file");
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--steps", steps, "pre-training steps");
    CLI11_PARSE(app, argc, argv);

    try {
        dparnet::FeatureExtractor fx = dparnet::pretrain_feature_extractor(seed, steps, &std::cout);
        fx.save(out);
        std::cout << "wrote " << out << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
