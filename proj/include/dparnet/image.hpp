#ifndef DPARNET_IMAGE_HPP
#define DPARNET_IMAGE_HPP

#include <optional>
#include <string>
#include <vector>

namespace dparnet {

// Planar CHW image, values normalized to [0,1]. 8-bit sources are divided
// by 255 on load, 16-bit by 65535.
struct Frame {
    int h = 0;
    int w = 0;
    int c = 1;
    std::vector<double> data;  // size c*h*w, channel-major

    Frame() = default;
    Frame(int h_, int w_, int c_, double fill = 0.0)
        : h(h_), w(w_), c(c_), data(static_cast<size_t>(c_) * h_ * w_, fill) {}

    double& at(int ch, int y, int x) {
        return data[(static_cast<size_t>(ch) * h + y) * w + x];
    }
    double at(int ch, int y, int x) const {
        return data[(static_cast<size_t>(ch) * h + y) * w + x];
    }
    bool same_shape(const Frame& o) const { return h == o.h && w == o.w && c == o.c; }
};

struct Sequence {
    std::vector<Frame> frames;
    std::optional<double> frame_rate;
    std::string id;

    int length() const { return static_cast<int>(frames.size()); }
    int h() const { return frames.empty() ? 0 : frames[0].h; }
    int w() const { return frames.empty() ? 0 : frames[0].w; }
    int c() const { return frames.empty() ? 0 : frames[0].c; }
};

// PNG I/O, grayscale or RGB, 8- or 16-bit. Anything else throws IoError
// with the path in the message.
Frame load_frame(const std::string& path);
void save_frame(const Frame& frame, const std::string& path, int bit_depth = 8);

// Loads frame_00000.png .. in name order from a directory.
Sequence load_sequence(const std::string& dir, const std::string& id);
void save_sequence(const Sequence& seq, const std::string& dir, int bit_depth = 8);

// Mean over frames, per pixel/channel. Used as the parameter net input.
Frame temporal_mean(const Sequence& seq);

}  // namespace dparnet

#endif
