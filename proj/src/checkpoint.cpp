#include "dparnet/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dparnet/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dparnet {

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path,
                     const std::string& val_name) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write curve file: " + path);
    f << "epoch,loss," << val_name << "\n";
    f.precision(10);
    for (const CurvePoint& p : curve)
        f << p.epoch << "," << p.train_loss << "," << p.val_metric << "\n";
}

std::vector<CurvePoint> read_curve_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read curve file: " + path);
    std::string line;
    std::vector<CurvePoint> out;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (first && line.rfind("epoch,", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        CurvePoint p;
        std::istringstream is(line);
        char comma;
        if (!(is >> p.epoch >> comma >> p.train_loss >> comma >> p.val_metric))
            throw FormatError("bad curve row in " + path + ": " + line);
        out.push_back(p);
    }
    if (out.empty()) throw ConfigError("curve file has no data rows: " + path);
    return out;
}

void write_array(std::ostream& os, const std::string& name, const Tensor& t) {
    const auto name_len = static_cast<uint32_t>(name.size());
    os.write(reinterpret_cast<const char*>(&name_len), 4);
    os.write(name.data(), name_len);
    const uint8_t dtype = 0;  // f32
    const auto rank = static_cast<uint8_t>(t.rank());
    const uint16_t reserved = 0;
    os.write(reinterpret_cast<const char*>(&dtype), 1);
    os.write(reinterpret_cast<const char*>(&rank), 1);
    os.write(reinterpret_cast<const char*>(&reserved), 2);
    for (int i = 0; i < t.rank(); ++i) {
        const auto d = static_cast<uint32_t>(t.dim(i));
        os.write(reinterpret_cast<const char*>(&d), 4);
    }
    for (int64_t i = 0; i < t.numel(); ++i) {
        const auto v = static_cast<float>(t[i]);
        os.write(reinterpret_cast<const char*>(&v), 4);
    }
}

Tensor read_array(std::istream& is, std::string& name) {
    uint32_t name_len = 0;
    is.read(reinterpret_cast<char*>(&name_len), 4);
    if (!is) throw FormatError("truncated array header");
    if (name_len > 4096) throw FormatError("implausible array name length");
    name.resize(name_len);
    is.read(name.data(), name_len);
    uint8_t dtype = 0, rank = 0;
    uint16_t reserved = 0;
    is.read(reinterpret_cast<char*>(&dtype), 1);
    is.read(reinterpret_cast<char*>(&rank), 1);
    is.read(reinterpret_cast<char*>(&reserved), 2);
    if (!is || dtype != 0) throw FormatError("unsupported array dtype");
    std::vector<int> shape(rank);
    for (auto& d : shape) {
        uint32_t v = 0;
        is.read(reinterpret_cast<char*>(&v), 4);
        d = static_cast<int>(v);
    }
    Tensor t(shape);
    for (int64_t i = 0; i < t.numel(); ++i) {
        float v = 0.0f;
        is.read(reinterpret_cast<char*>(&v), 4);
        t[i] = static_cast<double>(v);
    }
    if (!is) throw FormatError("truncated array payload for " + name);
    return t;
}

namespace {

std::string sanitize(const std::string& name) {
    std::string s = name;
    for (char& c : s)
        if (c == '/' || c == '\\') c = '_';
    return s;
}

void save_params(const ParamList& params, const fs::path& dir) {
    fs::create_directories(dir);
    for (const ParamEntry& p : params) {
        std::ofstream f(dir / (sanitize(p.name) + ".arr"), std::ios::binary);
        if (!f) throw IoError("cannot write weight file for " + p.name);
        write_array(f, p.name, p.var->value);
    }
}

void load_params(const ParamList& params, const fs::path& dir, const std::string& what) {
    std::set<std::string> expected;
    for (const ParamEntry& p : params) expected.insert(sanitize(p.name) + ".arr");
    std::set<std::string> present;
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().extension() == ".arr") present.insert(e.path().filename().string());
    if (present != expected)
        throw ConfigError(what + ": weight files do not match the configured architecture (" +
                          std::to_string(present.size()) + " files, " +
                          std::to_string(expected.size()) + " expected)");

    for (const ParamEntry& p : params) {
        std::ifstream f(dir / (sanitize(p.name) + ".arr"), std::ios::binary);
        std::string stored_name;
        Tensor t = read_array(f, stored_name);
        if (stored_name != p.name)
            throw ConfigError(what + ": weight name mismatch, file says " + stored_name +
                              ", model expects " + p.name);
        if (!t.same_shape(p.var->value))
            throw ConfigError(what + ": shape mismatch for " + p.name + ", file " +
                              t.shape_str() + ", model " + p.var->value.shape_str());
        p.var->value = std::move(t);
    }
}

void save_opt_state(const std::vector<std::pair<std::string, Tensor>>& state,
                    const fs::path& dir) {
    if (state.empty()) return;
    fs::create_directories(dir);
    std::ofstream f(dir / "adam.bin", std::ios::binary);
    for (const auto& [name, t] : state) write_array(f, name, t);
}

json curve_to_json(const std::vector<CurvePoint>& curve) {
    json arr = json::array();
    for (const CurvePoint& p : curve)
        arr.push_back({{"epoch", p.epoch}, {"loss", p.train_loss}, {"val", p.val_metric}});
    return arr;
}

std::vector<CurvePoint> curve_from_json(const json& arr) {
    std::vector<CurvePoint> out;
    for (const auto& e : arr)
        out.push_back({e.at("epoch").get<int>(), e.at("loss").get<double>(),
                       e.at("val").get<double>()});
    return out;
}

json read_config_json(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "config.json");
    if (!f) throw IoError("not a checkpoint directory (no config.json): " + dir);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw FormatError("bad checkpoint config in " + dir + ": " + e.what());
    }
    return j;
}

}  // namespace

void save_dparnet_checkpoint(const DparNet& model, const std::string& dir, int epoch,
                             const std::vector<CurvePoint>& curve,
                             const std::vector<std::pair<std::string, Tensor>>& opt_state) {
    fs::create_directories(dir);
    json j;
    j["type"] = "dparnet";
    j["epoch"] = epoch;
    j["config"] = {{"base_channels", model.config.base_channels},
                   {"rdb_count", model.config.rdb_count},
                   {"rdb_growth", model.config.rdb_growth},
                   {"wide_channels", model.config.wide_channels},
                   {"fusion_window", model.config.fusion_window},
                   {"in_channels", model.config.in_channels},
                   {"variant", variant_name(model.config.variant)}};
    j["train_curve"] = curve_to_json(curve);
    std::ofstream f(fs::path(dir) / "config.json");
    if (!f) throw IoError("cannot write checkpoint config in " + dir);
    f << j.dump(2) << "\n";
    save_params(model.named_parameters(), fs::path(dir) / "weights");
    save_opt_state(opt_state, fs::path(dir) / "optimizer");
    if (!curve.empty()) write_curve_csv(curve, (fs::path(dir) / "curve.csv").string(), "val");
}

DparNet load_dparnet_checkpoint(const std::string& dir) {
    json j = read_config_json(dir);
    if (j.at("type") != "dparnet")
        throw ConfigError("checkpoint at " + dir + " is not a dparnet checkpoint");
    const json& c = j.at("config");
    ModelConfig cfg;
    cfg.base_channels = c.at("base_channels").get<int>();
    cfg.rdb_count = c.at("rdb_count").get<int>();
    cfg.rdb_growth = c.at("rdb_growth").get<int>();
    cfg.wide_channels = c.at("wide_channels").get<int>();
    cfg.fusion_window = c.at("fusion_window").get<int>();
    cfg.in_channels = c.at("in_channels").get<int>();
    cfg.variant = variant_from_name(c.at("variant").get<std::string>());
    DparNet model(cfg, 0);
    load_params(model.named_parameters(), fs::path(dir) / "weights", "checkpoint " + dir);
    return model;
}

void save_param_net_checkpoint(const ParamNet& net, const std::string& dir, int epoch,
                               const std::vector<CurvePoint>& curve,
                               const std::vector<std::pair<std::string, Tensor>>& opt_state) {
    fs::create_directories(dir);
    json j;
    j["type"] = "param_net";
    j["epoch"] = epoch;
    j["config"] = {{"in_channels", net.in_channels}, {"width", net.width}};
    j["train_curve"] = curve_to_json(curve);
    std::ofstream f(fs::path(dir) / "config.json");
    if (!f) throw IoError("cannot write checkpoint config in " + dir);
    f << j.dump(2) << "\n";
    save_params(net.named_parameters(), fs::path(dir) / "weights");
    save_opt_state(opt_state, fs::path(dir) / "optimizer");
    if (!curve.empty()) write_curve_csv(curve, (fs::path(dir) / "curve.csv").string(), "val");
}

ParamNet load_param_net_checkpoint(const std::string& dir) {
    json j = read_config_json(dir);
    if (j.at("type") != "param_net")
        throw ConfigError("checkpoint at " + dir + " is not a param_net checkpoint");
    const json& c = j.at("config");
    ParamNet net(c.at("in_channels").get<int>(), c.at("width").get<int>(), 0);
    load_params(net.named_parameters(), fs::path(dir) / "weights", "checkpoint " + dir);
    return net;
}

std::string checkpoint_type(const std::string& dir) {
    return read_config_json(dir).at("type").get<std::string>();
}

int checkpoint_epoch(const std::string& dir) {
    return read_config_json(dir).at("epoch").get<int>();
}

std::vector<CurvePoint> checkpoint_curve(const std::string& dir) {
    return curve_from_json(read_config_json(dir).at("train_curve"));
}

}  // namespace dparnet
