#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dparnet/dataset.hpp"
#include "dparnet/random_field.hpp"

namespace fs = std::filesystem;

namespace dparnet {

namespace {

double smoothstep_edge(double dist, double softness) {
    // 1 inside, 0 outside, soft ramp of the given width
    const double t = std::clamp(0.5 - dist / softness, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

struct Shape {
    int type;  // 0 disk, 1 rectangle
    double cx, cy, rx, ry, intensity;
    double vx = 0.0, vy = 0.0;  // px per frame
};

void draw_shape(Frame& f, const Shape& s, double t, const std::vector<double>& tint) {
    const double cx = s.cx + s.vx * t;
    const double cy = s.cy + s.vy * t;
    for (int y = 0; y < f.h; ++y) {
        for (int x = 0; x < f.w; ++x) {
            double dist;
            if (s.type == 0) {
                const double dx = (x - cx) / s.rx, dy = (y - cy) / s.ry;
                dist = std::sqrt(dx * dx + dy * dy) - 1.0;
                dist *= std::min(s.rx, s.ry);
            } else {
                dist = std::max(std::abs(x - cx) - s.rx, std::abs(y - cy) - s.ry);
            }
            const double a = smoothstep_edge(dist, 2.0);
            if (a <= 0.0) continue;
            for (int ch = 0; ch < f.c; ++ch) {
                double& px = f.at(ch, y, x);
                px = px * (1.0 - a) + a * std::clamp(s.intensity * tint[ch], 0.0, 1.0);
            }
        }
    }
}

}  // namespace

void make_synthetic_corpus(const std::string& dir, int num_sequences, int frames, int H, int W,
                           int C, uint64_t seed) {
    if (num_sequences < 1 || frames < 1 || H < 16 || W < 16 || (C != 1 && C != 3))
        throw std::invalid_argument("make_synthetic_corpus: bad dimensions");
    fs::create_directories(dir);

    for (int s = 0; s < num_sequences; ++s) {
        Rng rng(mix_seed(seed, static_cast<uint64_t>(s), 0x73796e74ULL));

        // static background: gentle gradient + low-frequency texture
        const double base = rng.uniform(0.25, 0.55);
        const double gx = rng.uniform(-0.2, 0.2) / W;
        const double gy = rng.uniform(-0.2, 0.2) / H;
        SmoothFieldSpec tex_spec{std::max(4.0, std::min(H, W) / 8.0), 0.0, 0.25,
                                 rng.next_u64()};
        Grid texture = smooth_random_field(tex_spec, H, W);

        std::vector<double> tint(static_cast<size_t>(C), 1.0);
        if (C == 3)
            for (double& v : tint) v = rng.uniform(0.7, 1.0);

        // a few static shapes plus one or two movers
        std::vector<Shape> shapes;
        const int n_static = 2 + static_cast<int>(rng.next_u64() % 3);
        for (int i = 0; i < n_static; ++i) {
            Shape sh;
            sh.type = static_cast<int>(rng.next_u64() % 2);
            sh.cx = rng.uniform(0.15, 0.85) * W;
            sh.cy = rng.uniform(0.15, 0.85) * H;
            sh.rx = rng.uniform(0.05, 0.18) * W;
            sh.ry = rng.uniform(0.05, 0.18) * H;
            sh.intensity = rng.uniform(0.1, 0.95);
            shapes.push_back(sh);
        }
        const int n_moving = 1 + static_cast<int>(rng.next_u64() % 2);
        for (int i = 0; i < n_moving; ++i) {
            Shape sh;
            sh.type = static_cast<int>(rng.next_u64() % 2);
            sh.cx = rng.uniform(0.3, 0.7) * W;
            sh.cy = rng.uniform(0.3, 0.7) * H;
            sh.rx = rng.uniform(0.04, 0.1) * W;
            sh.ry = rng.uniform(0.04, 0.1) * H;
            sh.intensity = rng.uniform(0.6, 1.0);
            sh.vx = rng.uniform(-1.2, 1.2);
            sh.vy = rng.uniform(-1.2, 1.2);
            shapes.push_back(sh);
        }

        Sequence seq;
        char name[32];
        std::snprintf(name, sizeof(name), "seq_%03d", s);
        seq.id = name;
        for (int t = 0; t < frames; ++t) {
            Frame f(H, W, C);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const double v =
                        std::clamp(base + gx * x + gy * y + texture.at(y, x), 0.02, 0.98);
                    for (int ch = 0; ch < C; ++ch) f.at(ch, y, x) = v * tint[ch];
                }
            for (const Shape& sh : shapes) draw_shape(f, sh, t, tint);
            seq.frames.push_back(std::move(f));
        }
        save_sequence(seq, (fs::path(dir) / seq.id).string());
    }
}

}  // namespace dparnet
