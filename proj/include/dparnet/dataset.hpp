#ifndef DPARNET_DATASET_HPP
#define DPARNET_DATASET_HPP

#include <map>
#include <string>
#include <vector>

#include "dparnet/degrade.hpp"
#include "dparnet/image.hpp"
#include "dparnet/param_map.hpp"

namespace dparnet {

enum class Task { deturbulence, denoise };

const char* task_name(Task t);
Task task_from_name(const std::string& name);
DegradationKind task_kind(Task t);
// training sequences are standardised to 15 frames (deturbulence) / 7 (denoise)
int task_train_frames(Task t);

struct ManifestEntry {
    std::string seq_id;
    std::string clean_dir;     // relative to manifest root
    std::string degraded_dir;
    std::string pmap_path;
    int num_frames = 0;
    int H = 0;
    int W = 0;
    int C = 1;
};

struct DatasetManifest {
    std::string root;  // directory holding manifest.json; set on read
    Task task = Task::denoise;
    std::vector<ManifestEntry> entries;
    std::map<std::string, std::string> split;  // seq_id -> train | val | test

    const ManifestEntry& entry(const std::string& seq_id) const;
    std::vector<std::string> ids_in_split(const std::string& name) const;
    std::string resolve(const std::string& rel) const;
};

void write_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

// Builds degraded/clean pairs + ground-truth parameter maps from a
// directory of clean PNG sequences. Each sequence draws its own intensity
// span (min_frac ~ U(0,0.5), max_frac ~ U(min_frac,1)) and seeds from
// `seed`; output is byte-reproducible. Train/val sequences are clipped to
// the task's standard length, test keeps the full length. Split: 20%
// test, 10% of the remainder val.
DatasetManifest build_dataset(const std::string& clean_root, Task task,
                              const DegradationSpec& spec_template, const std::string& out_root,
                              uint64_t seed);

struct Sample {
    Sequence degraded;
    Sequence clean;
    ParamMap pmap;
    int target_index = 0;  // center frame by default
};

// target_index is clamped into [0, T)
Sample load_sample(const DatasetManifest& m, const std::string& seq_id, int target_index);

// One crop window + flip decision per call, applied identically to
// degraded, clean and pmap. Crop shrinks to min(H, W) rounded down to a
// multiple of 8 when the frame is smaller than `crop`.
Sample augment(const Sample& sample, uint64_t seed, int crop = 256);

// Moving-geometric-shapes clean corpus for tests and desk-scale runs.
void make_synthetic_corpus(const std::string& dir, int num_sequences, int frames, int H, int W,
                           int C, uint64_t seed);

}  // namespace dparnet

#endif
