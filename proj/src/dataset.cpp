#include "dparnet/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "dparnet/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dparnet {

const char* task_name(Task t) { return t == Task::deturbulence ? "deturbulence" : "denoise"; }

Task task_from_name(const std::string& name) {
    if (name == "deturbulence") return Task::deturbulence;
    if (name == "denoise") return Task::denoise;
    throw ConfigError("unknown task: " + name);
}

DegradationKind task_kind(Task t) {
    return t == Task::deturbulence ? DegradationKind::turbulence : DegradationKind::noise;
}

int task_train_frames(Task t) { return t == Task::deturbulence ? 15 : 7; }

const ManifestEntry& DatasetManifest::entry(const std::string& seq_id) const {
    for (const ManifestEntry& e : entries)
        if (e.seq_id == seq_id) return e;
    throw ConfigError("sequence id not in manifest: " + seq_id);
}

std::vector<std::string> DatasetManifest::ids_in_split(const std::string& name) const {
    std::vector<std::string> out;
    for (const ManifestEntry& e : entries) {
        auto it = split.find(e.seq_id);
        if (it != split.end() && it->second == name) out.push_back(e.seq_id);
    }
    return out;
}

std::string DatasetManifest::resolve(const std::string& rel) const {
    return (fs::path(root) / rel).lexically_normal().string();
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
    json j;
    j["root"] = ".";
    j["task"] = task_name(m.task);
    json arr = json::array();
    for (const ManifestEntry& e : m.entries)
        arr.push_back({{"seq_id", e.seq_id},
                       {"clean_dir", e.clean_dir},
                       {"degraded_dir", e.degraded_dir},
                       {"pmap_path", e.pmap_path},
                       {"num_frames", e.num_frames},
                       {"H", e.H},
                       {"W", e.W},
                       {"C", e.C}});
    j["entries"] = arr;
    j["split"] = m.split;
    std::ofstream f(path);
    if (!f) throw IoError("cannot write manifest: " + path);
    f << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read manifest: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw FormatError("bad manifest " + path + ": " + e.what());
    }
    DatasetManifest m;
    m.root = fs::path(path).parent_path().string();
    if (m.root.empty()) m.root = ".";
    try {
        m.task = task_from_name(j.at("task").get<std::string>());
        for (const auto& e : j.at("entries")) {
            ManifestEntry me;
            me.seq_id = e.at("seq_id").get<std::string>();
            me.clean_dir = e.at("clean_dir").get<std::string>();
            me.degraded_dir = e.at("degraded_dir").get<std::string>();
            me.pmap_path = e.at("pmap_path").get<std::string>();
            me.num_frames = e.at("num_frames").get<int>();
            me.H = e.at("H").get<int>();
            me.W = e.at("W").get<int>();
            me.C = e.at("C").get<int>();
            m.entries.push_back(std::move(me));
        }
        for (const auto& [k, v] : j.at("split").items()) m.split[k] = v.get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError("manifest " + path + " missing fields: " + e.what());
    }
    return m;
}

namespace {

std::vector<std::string> list_sequence_dirs(const std::string& clean_root) {
    if (!fs::is_directory(clean_root))
        throw IoError("clean sequence root not found: " + clean_root);
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(clean_root)) {
        if (!e.is_directory()) continue;
        bool has_png = false;
        for (const auto& inner : fs::directory_iterator(e.path()))
            if (inner.path().extension() == ".png") {
                has_png = true;
                break;
            }
        if (has_png) ids.push_back(e.path().filename().string());
    }
    if (ids.empty()) throw IoError("no PNG sequence directories under " + clean_root);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::map<std::string, std::string> assign_splits(const std::vector<std::string>& ids,
                                                 uint64_t seed) {
    std::vector<std::string> shuffled = ids;
    Rng rng(mix_seed(seed, 0x73706c69ULL));
    for (size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.next_u64() % i]);

    const auto n = static_cast<int>(ids.size());
    const int n_test = n >= 3 ? std::max(1, static_cast<int>(std::llround(0.2 * n))) : 0;
    const int pool = n - n_test;
    const int n_val = pool >= 3 ? std::max(1, static_cast<int>(std::llround(0.1 * pool))) : 0;

    std::map<std::string, std::string> split;
    for (int i = 0; i < n; ++i) {
        if (i < n_test)
            split[shuffled[i]] = "test";
        else if (i < n_test + n_val)
            split[shuffled[i]] = "val";
        else
            split[shuffled[i]] = "train";
    }
    return split;
}

}  // namespace

DatasetManifest build_dataset(const std::string& clean_root, Task task,
                              const DegradationSpec& spec_template, const std::string& out_root,
                              uint64_t seed) {
    const std::vector<std::string> ids = list_sequence_dirs(clean_root);
    std::error_code ec;
    fs::create_directories(out_root, ec);
    if (ec || !fs::is_directory(out_root))
        throw IoError("cannot create dataset output directory: " + out_root);

    DatasetManifest m;
    m.root = out_root;
    m.task = task;
    m.split = assign_splits(ids, seed);

    for (size_t i = 0; i < ids.size(); ++i) {
        const std::string& id = ids[i];
        Sequence clean = load_sequence((fs::path(clean_root) / id).string(), id);
        if (m.split.at(id) != "test") {
            const int keep = task_train_frames(task);
            if (clean.length() > keep) clean.frames.resize(static_cast<size_t>(keep));
        }

        // per-sequence intensity span and seeds
        Rng rng(mix_seed(seed, i, 0x73657175ULL));
        DegradationSpec spec = spec_template;
        spec.kind = task_kind(task);
        spec.field.min_frac = rng.uniform() * 0.5;
        spec.field.max_frac = spec.field.min_frac + rng.uniform() * (1.0 - spec.field.min_frac);
        spec.field.seed = rng.next_u64();
        spec.seed = rng.next_u64();

        ParamMap pmap = gen_param_map(spec, clean.h(), clean.w());
        Sequence degraded = apply_degradation(clean, pmap, spec);

        const fs::path seq_dir = fs::path(out_root) / id;
        save_sequence(clean, (seq_dir / "clean").string());
        save_sequence(degraded, (seq_dir / "degraded").string());
        write_parammap(pmap, (seq_dir / "pmap.pmap").string());

        ManifestEntry e;
        e.seq_id = id;
        e.clean_dir = (fs::path(id) / "clean").string();
        e.degraded_dir = (fs::path(id) / "degraded").string();
        e.pmap_path = (fs::path(id) / "pmap.pmap").string();
        e.num_frames = clean.length();
        e.H = clean.h();
        e.W = clean.w();
        e.C = clean.c();
        m.entries.push_back(std::move(e));
    }

    write_manifest(m, (fs::path(out_root) / "manifest.json").string());
    return m;
}

Sample load_sample(const DatasetManifest& m, const std::string& seq_id, int target_index) {
    const ManifestEntry& e = m.entry(seq_id);
    Sample s;
    s.degraded = load_sequence(m.resolve(e.degraded_dir), seq_id);
    s.clean = load_sequence(m.resolve(e.clean_dir), seq_id);
    s.pmap = read_parammap(m.resolve(e.pmap_path));
    s.target_index = std::clamp(target_index, 0, s.degraded.length() - 1);
    return s;
}

namespace {

Frame crop_flip_frame(const Frame& f, int oy, int ox, int size, bool fliph, bool flipv) {
    Frame out(size, size, f.c);
    for (int ch = 0; ch < f.c; ++ch)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const int sy = flipv ? size - 1 - y : y;
                const int sx = fliph ? size - 1 - x : x;
                out.at(ch, y, x) = f.at(ch, oy + sy, ox + sx);
            }
    return out;
}

}  // namespace

Sample augment(const Sample& sample, uint64_t seed, int crop) {
    const int h = sample.degraded.h(), w = sample.degraded.w();
    int size = crop;
    if (std::min(h, w) < crop) size = (std::min(h, w) / 8) * 8;
    if (size < 8) throw std::invalid_argument("augment: frame too small to crop");

    Rng rng(mix_seed(seed, 0x61756721ULL));
    const int oy = h == size ? 0 : static_cast<int>(rng.next_u64() % (h - size + 1));
    const int ox = w == size ? 0 : static_cast<int>(rng.next_u64() % (w - size + 1));
    const bool fliph = rng.uniform() < 0.5;
    const bool flipv = rng.uniform() < 0.5;

    Sample out;
    out.target_index = sample.target_index;
    out.degraded.id = sample.degraded.id;
    out.degraded.frame_rate = sample.degraded.frame_rate;
    out.clean.id = sample.clean.id;
    out.clean.frame_rate = sample.clean.frame_rate;
    for (const Frame& f : sample.degraded.frames)
        out.degraded.frames.push_back(crop_flip_frame(f, oy, ox, size, fliph, flipv));
    for (const Frame& f : sample.clean.frames)
        out.clean.frames.push_back(crop_flip_frame(f, oy, ox, size, fliph, flipv));

    out.pmap = ParamMap(size, size, sample.pmap.kind, sample.pmap.phys_max);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const int sy = flipv ? size - 1 - y : y;
            const int sx = fliph ? size - 1 - x : x;
            out.pmap.at(y, x) = sample.pmap.at(oy + sy, ox + sx);
        }
    return out;
}

}  // namespace dparnet
