#ifndef DPARNET_TESTS_HELPERS_HPP
#define DPARNET_TESTS_HELPERS_HPP

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "dparnet/autodiff.hpp"
#include "dparnet/image.hpp"
#include "dparnet/random_field.hpp"

namespace testutil {

// fresh directory under the build tree, wiped per call
inline std::string tmp_dir(const std::string& name) {
    const auto dir = std::filesystem::path(DPARNET_BINARY_DIR) / "test_tmp" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

inline std::string asset_path(const std::string& rel) {
    return (std::filesystem::path(DPARNET_SOURCE_DIR) / rel).string();
}

inline dparnet::Frame random_frame(int h, int w, int c, uint64_t seed) {
    dparnet::Rng rng(seed);
    dparnet::Frame f(h, w, c);
    for (double& v : f.data) v = rng.uniform();
    return f;
}

inline dparnet::Tensor random_tensor(std::vector<int> shape, uint64_t seed, double lo = -1.0,
                                     double hi = 1.0) {
    dparnet::Rng rng(seed);
    dparnet::Tensor t(std::move(shape));
    for (double& v : t.d) v = rng.uniform(lo, hi);
    return t;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

// central finite difference of a scalar-valued function wrt one entry of a
// parameter tensor
template <typename LossFn>
double fd_gradient(dparnet::Var param, int64_t index, LossFn loss_of_state, double eps = 1e-5) {
    const double saved = param->value[index];
    param->value[index] = saved + eps;
    const double up = loss_of_state();
    param->value[index] = saved - eps;
    const double down = loss_of_state();
    param->value[index] = saved;
    return (up - down) / (2.0 * eps);
}

// naive direct convolution used as the conv2d oracle
inline dparnet::Tensor conv2d_naive(const dparnet::Tensor& x, const dparnet::Tensor& w,
                                    const dparnet::Tensor& b, int stride, int pad) {
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), ww = x.dim(3);
    const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (ww + 2 * pad - kw) / stride + 1;
    dparnet::Tensor y({n, cout, ho, wo});
    for (int i = 0; i < n; ++i)
        for (int co = 0; co < cout; ++co)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    double acc = b[co];
                    for (int ci = 0; ci < cin; ++ci)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = oy * stride - pad + ky;
                                const int ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= ww) continue;
                                acc += x.at(i, ci, iy, ix) * w.at(co, ci, ky, kx);
                            }
                    y.at(i, co, oy, ox) = acc;
                }
    return y;
}

}  // namespace testutil

#endif
