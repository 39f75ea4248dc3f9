#ifndef DPARNET_RUN_CONFIG_HPP
#define DPARNET_RUN_CONFIG_HPP

#include <cstdint>
#include <string>

namespace dparnet {

// Merged view of the degradation template, model and training knobs plus
// paths. Loaded from a JSON config file (unknown keys are errors), then
// overridden by CLI flags; the resolved struct is echoed into the output
// directory as run_config.json.
struct RunConfig {
    // global
    std::string task = "denoise";
    uint64_t seed = 0;
    std::string out;

    // simulate
    std::string clean_root;
    int synth_sequences = 0;  // > 0: generate a synthetic clean corpus first
    int synth_frames = 0;     // 0 = task standard length
    int synth_height = 128;
    int synth_width = 128;
    int synth_channels = 1;
    double length_scale = 24.0;
    double max_disp = 4.0;
    double max_blur_sigma = 2.0;
    double warp_scale = 12.0;

    // model
    int base_channels = 64;
    int rdb_count = 2;
    int rdb_growth = 0;  // 0 = half the base width
    int wide_channels = 8;
    int in_channels = 0;  // 0 = from the dataset
    std::string variant = "full";

    // train
    std::string data;  // manifest path
    std::string stage = "restore";
    double lr = 1e-4;
    int epochs = 100;
    double alpha1 = 1.0;
    double alpha2 = 0.05;
    int batch_size = 4;
    int crop = 256;
    int val_every = 1;
    std::string extractor = "assets/feature_extractor.dpfx";
    std::string param_ckpt;
    bool oracle_pmap = false;

    // eval / ablate
    std::string model_ckpt;
    std::string split = "test";
    int profile_column = -1;
    bool efficiency = false;
    std::string timestamp;  // fixed report timestamp for reproducible bytes
    int ablate_seeds = 1;
    int bench_rounds = 100;

    // Loads and validates the JSON file into this struct; unknown keys
    // throw ConfigError.
    void load_file(const std::string& path);
    void echo(const std::string& out_dir) const;
};

}  // namespace dparnet

#endif
