#include "dparnet/run_config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

#include "dparnet/errors.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace dparnet {

namespace {

json to_json(const RunConfig& c) {
    return json{{"task", c.task},
                {"seed", c.seed},
                {"out", c.out},
                {"clean_root", c.clean_root},
                {"synth_sequences", c.synth_sequences},
                {"synth_frames", c.synth_frames},
                {"synth_height", c.synth_height},
                {"synth_width", c.synth_width},
                {"synth_channels", c.synth_channels},
                {"length_scale", c.length_scale},
                {"max_disp", c.max_disp},
                {"max_blur_sigma", c.max_blur_sigma},
                {"warp_scale", c.warp_scale},
                {"base_channels", c.base_channels},
                {"rdb_count", c.rdb_count},
                {"rdb_growth", c.rdb_growth},
                {"wide_channels", c.wide_channels},
                {"in_channels", c.in_channels},
                {"variant", c.variant},
                {"data", c.data},
                {"stage", c.stage},
                {"lr", c.lr},
                {"epochs", c.epochs},
                {"alpha1", c.alpha1},
                {"alpha2", c.alpha2},
                {"batch_size", c.batch_size},
                {"crop", c.crop},
                {"val_every", c.val_every},
                {"extractor", c.extractor},
                {"param_ckpt", c.param_ckpt},
                {"oracle_pmap", c.oracle_pmap},
                {"model_ckpt", c.model_ckpt},
                {"split", c.split},
                {"profile_column", c.profile_column},
                {"efficiency", c.efficiency},
                {"timestamp", c.timestamp},
                {"ablate_seeds", c.ablate_seeds},
                {"bench_rounds", c.bench_rounds}};
}

template <typename T>
void pick(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read config file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object: " + path);

    const json known = to_json(*this);
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw ConfigError("unknown config key \"" + key + "\" in " + path);

    try {
        pick(j, "task", task);
        pick(j, "seed", seed);
        pick(j, "out", out);
        pick(j, "clean_root", clean_root);
        pick(j, "synth_sequences", synth_sequences);
        pick(j, "synth_frames", synth_frames);
        pick(j, "synth_height", synth_height);
        pick(j, "synth_width", synth_width);
        pick(j, "synth_channels", synth_channels);
        pick(j, "length_scale", length_scale);
        pick(j, "max_disp", max_disp);
        pick(j, "max_blur_sigma", max_blur_sigma);
        pick(j, "warp_scale", warp_scale);
        pick(j, "base_channels", base_channels);
        pick(j, "rdb_count", rdb_count);
        pick(j, "rdb_growth", rdb_growth);
        pick(j, "wide_channels", wide_channels);
        pick(j, "in_channels", in_channels);
        pick(j, "variant", variant);
        pick(j, "data", data);
        pick(j, "stage", stage);
        pick(j, "lr", lr);
        pick(j, "epochs", epochs);
        pick(j, "alpha1", alpha1);
        pick(j, "alpha2", alpha2);
        pick(j, "batch_size", batch_size);
        pick(j, "crop", crop);
        pick(j, "val_every", val_every);
        pick(j, "extractor", extractor);
        pick(j, "param_ckpt", param_ckpt);
        pick(j, "oracle_pmap", oracle_pmap);
        pick(j, "model_ckpt", model_ckpt);
        pick(j, "split", split);
        pick(j, "profile_column", profile_column);
        pick(j, "efficiency", efficiency);
        pick(j, "timestamp", timestamp);
        pick(j, "ablate_seeds", ablate_seeds);
        pick(j, "bench_rounds", bench_rounds);
    } catch (const json::exception& e) {
        throw ConfigError("config value has the wrong type in " + path + ": " + e.what());
    }
}

void RunConfig::echo(const std::string& out_dir) const {
    fs::create_directories(out_dir);
    const std::string path = (fs::path(out_dir) / "run_config.json").string();
    std::ofstream f(path);
    if (!f) throw IoError("cannot echo config to " + path);
    f << to_json(*this).dump(2) << "\n";
}

}  // namespace dparnet
