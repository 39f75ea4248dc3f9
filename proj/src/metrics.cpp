#include "dparnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dparnet {

namespace {

void check_pair(const Frame& a, const Frame& b, const char* who) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
    if (a.data.empty()) throw std::invalid_argument(std::string(who) + ": empty frames");
}

}  // namespace

double psnr(const Frame& pred, const Frame& gt) {
    check_pair(pred, gt, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - gt.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(pred.data.size());
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Frame& pred, const Frame& gt) {
    check_pair(pred, gt, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    if (pred.h < kWin || pred.w < kWin)
        throw std::invalid_argument("ssim: images smaller than the 11x11 window");

    double kernel[kWin][kWin];
    double ksum = 0.0;
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
            const double dy = i - kWin / 2, dx = j - kWin / 2;
            kernel[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * kSigma * kSigma));
            ksum += kernel[i][j];
        }
    for (auto& row : kernel)
        for (double& v : row) v /= ksum;

    double total = 0.0;
    for (int ch = 0; ch < pred.c; ++ch) {
        double acc = 0.0;
        int count = 0;
        for (int y = 0; y + kWin <= pred.h; ++y) {
            for (int x = 0; x + kWin <= pred.w; ++x) {
                double mx = 0.0, my = 0.0;
                for (int i = 0; i < kWin; ++i)
                    for (int j = 0; j < kWin; ++j) {
                        mx += kernel[i][j] * pred.at(ch, y + i, x + j);
                        my += kernel[i][j] * gt.at(ch, y + i, x + j);
                    }
                double vx = 0.0, vy = 0.0, cov = 0.0;
                for (int i = 0; i < kWin; ++i)
                    for (int j = 0; j < kWin; ++j) {
                        const double a = pred.at(ch, y + i, x + j) - mx;
                        const double b = gt.at(ch, y + i, x + j) - my;
                        vx += kernel[i][j] * a * a;
                        vy += kernel[i][j] * b * b;
                        cov += kernel[i][j] * a * b;
                    }
                acc += ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) /
                       ((mx * mx + my * my + kC1) * (vx + vy + kC2));
                ++count;
            }
        }
        total += acc / count;
    }
    return total / pred.c;
}

double nrmse(const Frame& pred, const Frame& gt) {
    check_pair(pred, gt, "nrmse");
    double mse = 0.0;
    double mn = gt.data[0], mx = gt.data[0];
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - gt.data[i];
        mse += d * d;
        mn = std::min(mn, gt.data[i]);
        mx = std::max(mx, gt.data[i]);
    }
    mse /= static_cast<double>(pred.data.size());
    const double range = mx - mn > 0.0 ? mx - mn : 1.0;
    return std::sqrt(mse) / range;
}

namespace {

int quantize256(double v) {
    const int q = static_cast<int>(std::clamp(v, 0.0, 1.0) * 256.0);
    return std::min(q, 255);
}

}  // namespace

double vi(const Frame& pred, const Frame& gt) {
    check_pair(pred, gt, "vi");
    constexpr int kLevels = 256;
    std::vector<double> joint(static_cast<size_t>(kLevels) * kLevels, 0.0);
    std::vector<double> pa(kLevels, 0.0), pb(kLevels, 0.0);
    const double inv = 1.0 / static_cast<double>(pred.data.size());
    bool same_labels = true;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const int a = quantize256(pred.data[i]);
        const int b = quantize256(gt.data[i]);
        same_labels = same_labels && a == b;
        joint[static_cast<size_t>(a) * kLevels + b] += inv;
        pa[a] += inv;
        pb[b] += inv;
    }
    if (same_labels) return 0.0;
    auto term = [](double v) { return v > 0.0 ? -v * std::log(v) : 0.0; };
    auto entropy = [&](const std::vector<double>& p) {
        double h = 0.0;
        for (double v : p) h += term(v);
        return h;
    };
    // joint entropy summed over transposed pairs so vi(a,b) == vi(b,a)
    // bit-exactly (addition is commutative, not associative)
    double hab = 0.0;
    for (int i = 0; i < kLevels; ++i) {
        hab += term(joint[static_cast<size_t>(i) * kLevels + i]);
        for (int j = i + 1; j < kLevels; ++j)
            hab += term(joint[static_cast<size_t>(i) * kLevels + j]) +
                   term(joint[static_cast<size_t>(j) * kLevels + i]);
    }
    // VI = H(A) + H(B) - 2 I(A;B) = 2 H(A,B) - (H(A) + H(B))
    const double value = 2.0 * hab - (entropy(pa) + entropy(pb));
    return std::max(0.0, value);
}

Frame temporal_profile(const Sequence& seq, int column_index) {
    if (seq.length() < 1) throw std::invalid_argument("temporal_profile: empty sequence");
    if (column_index < 0 || column_index >= seq.w())
        throw std::invalid_argument("temporal_profile: column index out of range");
    Frame out(seq.length(), seq.h(), seq.c());
    for (int t = 0; t < seq.length(); ++t)
        for (int ch = 0; ch < seq.c(); ++ch)
            for (int y = 0; y < seq.h(); ++y)
                out.at(ch, t, y) = seq.frames[t].at(ch, y, column_index);
    return out;
}

double profile_instability(const Frame& profile) {
    if (profile.h < 2) return 0.0;
    double acc = 0.0;
    for (int ch = 0; ch < profile.c; ++ch)
        for (int t = 1; t < profile.h; ++t)
            for (int y = 0; y < profile.w; ++y)
                acc += std::abs(profile.at(ch, t, y) - profile.at(ch, t - 1, y));
    return acc / (static_cast<double>(profile.c) * (profile.h - 1) * profile.w);
}

}  // namespace dparnet
