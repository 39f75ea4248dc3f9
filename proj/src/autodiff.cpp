#include "dparnet/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace dparnet {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

Var make_param(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return n;
}

Var make_input(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return n;
}

Var detach(const Var& v) { return make_input(v->value); }

static Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(fn);
    }
    return n;
}

// accumulate helper: skip parents that do not take gradients
static bool wants_grad(const Var& p) {
    if (!p->requires_grad) return false;
    p->ensure_grad();
    return true;
}

void backward(const Var& root) {
    if (root->value.numel() != 1)
        throw std::invalid_argument("backward: root must be scalar");

    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* parent = node->parents[idx].get();
            ++idx;
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward_fn && node->grad_ready) node->backward_fn(*node);
    }
}

namespace ops {

namespace {

struct ConvDims {
    int n, cin, h, w, cout, kh, kw, ho, wo;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
    if (x.rank() != 4 || w.rank() != 4)
        throw std::invalid_argument("conv2d: need rank-4 input and weight");
    if (x.dim(1) != w.dim(1))
        throw std::invalid_argument("conv2d: channel mismatch, input " + x.shape_str() +
                                    " vs weight " + w.shape_str());
    ConvDims d;
    d.n = x.dim(0);
    d.cin = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
    d.cout = w.dim(0);
    d.kh = w.dim(2);
    d.kw = w.dim(3);
    d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
    d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
    if (d.ho <= 0 || d.wo <= 0) throw std::invalid_argument("conv2d: output would be empty");
    return d;
}

// col[(c*kh+ky)*kw+kx, py*wp+px] = img[c, py*stride-pad+ky, px*stride-pad+kx]
void im2col(const double* img, int c, int h, int w, int kh, int kw, int stride, int pad,
            int hp, int wp, double* col) {
    const int64_t npos = static_cast<int64_t>(hp) * wp;
    for (int ci = 0; ci < c; ++ci) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                double* row = col + (static_cast<int64_t>(ci) * kh * kw + ky * kw + kx) * npos;
                for (int py = 0; py < hp; ++py) {
                    const int iy = py * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        std::fill(row + static_cast<int64_t>(py) * wp,
                                  row + static_cast<int64_t>(py + 1) * wp, 0.0);
                        continue;
                    }
                    const double* src = img + (static_cast<int64_t>(ci) * h + iy) * w;
                    for (int px = 0; px < wp; ++px) {
                        const int ix = px * stride - pad + kx;
                        row[static_cast<int64_t>(py) * wp + px] =
                            (ix >= 0 && ix < w) ? src[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// adjoint of im2col: scatter-add back into the image
void col2im_add(const double* col, int c, int h, int w, int kh, int kw, int stride, int pad,
                int hp, int wp, double* img) {
    const int64_t npos = static_cast<int64_t>(hp) * wp;
    for (int ci = 0; ci < c; ++ci) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                const double* row = col + (static_cast<int64_t>(ci) * kh * kw + ky * kw + kx) * npos;
                for (int py = 0; py < hp; ++py) {
                    const int iy = py * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    double* dst = img + (static_cast<int64_t>(ci) * h + iy) * w;
                    for (int px = 0; px < wp; ++px) {
                        const int ix = px * stride - pad + kx;
                        if (ix >= 0 && ix < w) dst[ix] += row[static_cast<int64_t>(py) * wp + px];
                    }
                }
            }
        }
    }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const ConvDims d = conv_dims(x->value, w->value, stride, pad);
    if (b->value.numel() != d.cout) throw std::invalid_argument("conv2d: bias size mismatch");

    const int64_t k = static_cast<int64_t>(d.cin) * d.kh * d.kw;
    const int64_t npos = static_cast<int64_t>(d.ho) * d.wo;
    Tensor y({d.n, d.cout, d.ho, d.wo});
    AlignedDoubles col(static_cast<size_t>(k) * npos);
    MapConst wmat(w->value.data(), d.cout, k);
    for (int n = 0; n < d.n; ++n) {
        im2col(x->value.data() + static_cast<int64_t>(n) * d.cin * d.h * d.w, d.cin, d.h, d.w,
               d.kh, d.kw, stride, pad, d.ho, d.wo, col.data());
        MapMat ymat(y.data() + static_cast<int64_t>(n) * d.cout * npos, d.cout, npos);
        ymat.noalias() = wmat * MapConst(col.data(), k, npos);
        for (int co = 0; co < d.cout; ++co) ymat.row(co).array() += b->value[co];
    }

    return make_node(std::move(y), {x, w, b}, [d, stride, pad, k, npos](Node& self) {
        const Var& x = self.parents[0];
        const Var& w = self.parents[1];
        const Var& b = self.parents[2];
        const bool gx = wants_grad(x), gw = wants_grad(w), gb = wants_grad(b);
        AlignedDoubles col(static_cast<size_t>(k) * npos);
        AlignedDoubles dcol(gx ? static_cast<size_t>(k) * npos : 0);
        MapConst wmat(w->value.data(), d.cout, k);
        for (int n = 0; n < d.n; ++n) {
            MapConst dy(self.grad.data() + static_cast<int64_t>(n) * d.cout * npos, d.cout, npos);
            if (gw) {
                im2col(x->value.data() + static_cast<int64_t>(n) * d.cin * d.h * d.w, d.cin, d.h,
                       d.w, d.kh, d.kw, stride, pad, d.ho, d.wo, col.data());
                MapMat dwmat(w->grad.data(), d.cout, k);
                dwmat.noalias() += dy * MapConst(col.data(), k, npos).transpose();
            }
            if (gx) {
                MapMat dcolmat(dcol.data(), k, npos);
                dcolmat.noalias() = wmat.transpose() * dy;
                col2im_add(dcol.data(), d.cin, d.h, d.w, d.kh, d.kw, stride, pad, d.ho, d.wo,
                           x->grad.data() + static_cast<int64_t>(n) * d.cin * d.h * d.w);
            }
            if (gb)
                for (int co = 0; co < d.cout; ++co) b->grad[co] += dy.row(co).sum();
        }
    });
}

Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const Tensor& xv = x->value;
    const Tensor& wv = w->value;
    if (xv.rank() != 4 || wv.rank() != 4)
        throw std::invalid_argument("conv_transpose2d: need rank-4 input and weight");
    if (xv.dim(1) != wv.dim(0))
        throw std::invalid_argument("conv_transpose2d: channel mismatch, input " +
                                    xv.shape_str() + " vs weight " + wv.shape_str());
    const int n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), win = xv.dim(3);
    const int cout = wv.dim(1), kh = wv.dim(2), kw = wv.dim(3);
    const int ho = (h - 1) * stride - 2 * pad + kh;
    const int wo = (win - 1) * stride - 2 * pad + kw;
    if (ho <= 0 || wo <= 0) throw std::invalid_argument("conv_transpose2d: output would be empty");
    if (b->value.numel() != cout) throw std::invalid_argument("conv_transpose2d: bias size mismatch");

    const int64_t k2 = static_cast<int64_t>(cout) * kh * kw;
    const int64_t npos = static_cast<int64_t>(h) * win;   // positions on the input grid
    const int64_t ypix = static_cast<int64_t>(ho) * wo;

    Tensor y({n, cout, ho, wo});
    AlignedDoubles colY(static_cast<size_t>(k2) * npos);
    MapConst wmat(wv.data(), cin, k2);
    for (int i = 0; i < n; ++i) {
        MapConst xmat(xv.data() + static_cast<int64_t>(i) * cin * npos, cin, npos);
        MapMat colmat(colY.data(), k2, npos);
        colmat.noalias() = wmat.transpose() * xmat;
        double* ydst = y.data() + static_cast<int64_t>(i) * cout * ypix;
        col2im_add(colY.data(), cout, ho, wo, kh, kw, stride, pad, h, win, ydst);
        MapMat ymat(ydst, cout, ypix);
        for (int co = 0; co < cout; ++co) ymat.row(co).array() += b->value[co];
    }

    return make_node(std::move(y),
                     {x, w, b}, [n, cin, h, win, cout, kh, kw, ho, wo, stride, pad, k2, npos,
                                 ypix](Node& self) {
        const Var& x = self.parents[0];
        const Var& w = self.parents[1];
        const Var& b = self.parents[2];
        const bool gx = wants_grad(x), gw = wants_grad(w), gb = wants_grad(b);
        AlignedDoubles col(static_cast<size_t>(k2) * npos);
        MapConst wmat(w->value.data(), cin, k2);
        for (int i = 0; i < n; ++i) {
            const double* dy = self.grad.data() + static_cast<int64_t>(i) * cout * ypix;
            if (gx || gw)
                im2col(dy, cout, ho, wo, kh, kw, stride, pad, h, win, col.data());
            MapConst colmat(col.data(), k2, npos);
            if (gx) {
                MapMat dx(x->grad.data() + static_cast<int64_t>(i) * cin * npos, cin, npos);
                dx.noalias() += wmat * colmat;
            }
            if (gw) {
                MapConst xmat(x->value.data() + static_cast<int64_t>(i) * cin * npos, cin, npos);
                MapMat dw(w->grad.data(), cin, k2);
                dw.noalias() += xmat * colmat.transpose();
            }
            if (gb) {
                MapConst dymat(dy, cout, ypix);
                for (int co = 0; co < cout; ++co) b->grad[co] += dymat.row(co).sum();
            }
        }
    });
}

Var relu(const Var& x) {
    Tensor y = x->value;
    for (double& v : y.d) v = v > 0.0 ? v : 0.0;
    return make_node(std::move(y), {x}, [](Node& self) {
        const Var& x = self.parents[0];
        if (!wants_grad(x)) return;
        const int64_t n = self.value.numel();
        for (int64_t i = 0; i < n; ++i)
            if (x->value[i] > 0.0) x->grad[i] += self.grad[i];
    });
}

Var sigmoid(const Var& x) {
    Tensor y = x->value;
    for (double& v : y.d) v = 1.0 / (1.0 + std::exp(-v));
    return make_node(std::move(y), {x}, [](Node& self) {
        const Var& x = self.parents[0];
        if (!wants_grad(x)) return;
        const int64_t n = self.value.numel();
        for (int64_t i = 0; i < n; ++i) {
            const double s = self.value[i];
            x->grad[i] += self.grad[i] * s * (1.0 - s);
        }
    });
}

Var add(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value))
        throw std::invalid_argument("add: shape mismatch " + a->value.shape_str() + " vs " +
                                    b->value.shape_str());
    Tensor y = a->value;
    for (int64_t i = 0; i < y.numel(); ++i) y[i] += b->value[i];
    return make_node(std::move(y), {a, b}, [](Node& self) {
        for (const Var& p : self.parents) {
            if (!wants_grad(p)) continue;
            for (int64_t i = 0; i < self.value.numel(); ++i) p->grad[i] += self.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("sub: shape mismatch");
    Tensor y = a->value;
    for (int64_t i = 0; i < y.numel(); ++i) y[i] -= b->value[i];
    return make_node(std::move(y), {a, b}, [](Node& self) {
        const Var& a = self.parents[0];
        const Var& b = self.parents[1];
        if (wants_grad(a))
            for (int64_t i = 0; i < self.value.numel(); ++i) a->grad[i] += self.grad[i];
        if (wants_grad(b))
            for (int64_t i = 0; i < self.value.numel(); ++i) b->grad[i] -= self.grad[i];
    });
}

Var scale(const Var& x, double c) {
    Tensor y = x->value;
    for (double& v : y.d) v *= c;
    return make_node(std::move(y), {x}, [c](Node& self) {
        const Var& x = self.parents[0];
        if (!wants_grad(x)) return;
        for (int64_t i = 0; i < self.value.numel(); ++i) x->grad[i] += c * self.grad[i];
    });
}

Var concat_channels(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_channels: empty input list");
    const Tensor& first = xs[0]->value;
    int ctot = 0;
    for (const Var& v : xs) {
        const Tensor& t = v->value;
        if (t.rank() != 4 || t.dim(0) != first.dim(0) || t.dim(2) != first.dim(2) ||
            t.dim(3) != first.dim(3))
            throw std::invalid_argument("concat_channels: incompatible shapes");
        ctot += t.dim(1);
    }
    const int n = first.dim(0), h = first.dim(2), w = first.dim(3);
    const int64_t plane = static_cast<int64_t>(h) * w;
    Tensor y({n, ctot, h, w});
    for (int i = 0; i < n; ++i) {
        int64_t off = 0;
        for (const Var& v : xs) {
            const int64_t block = static_cast<int64_t>(v->value.dim(1)) * plane;
            std::copy_n(v->value.data() + static_cast<int64_t>(i) * block, block,
                        y.data() + (static_cast<int64_t>(i) * ctot) * plane + off);
            off += block;
        }
    }
    return make_node(std::move(y), xs, [n, ctot, plane](Node& self) {
        for (int i = 0; i < n; ++i) {
            int64_t off = 0;
            for (const Var& p : self.parents) {
                const int64_t block = static_cast<int64_t>(p->value.dim(1)) * plane;
                if (wants_grad(p)) {
                    const double* g = self.grad.data() + (static_cast<int64_t>(i) * ctot) * plane + off;
                    double* dst = p->grad.data() + static_cast<int64_t>(i) * block;
                    for (int64_t j = 0; j < block; ++j) dst[j] += g[j];
                }
                off += block;
            }
        }
    });
}

Var maxpool2(const Var& x) {
    const Tensor& xv = x->value;
    if (xv.rank() != 4 || xv.dim(2) % 2 || xv.dim(3) % 2)
        throw std::invalid_argument("maxpool2: need rank-4 input with even H, W");
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    Tensor y({n, c, h / 2, w / 2});
    auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(y.numel()));
    int64_t oi = 0;
    for (int i = 0; i < n; ++i) {
        for (int ci = 0; ci < c; ++ci) {
            for (int oy = 0; oy < h / 2; ++oy) {
                for (int ox = 0; ox < w / 2; ++ox, ++oi) {
                    int64_t best = -1;
                    double bv = -1e300;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const int64_t idx =
                                ((static_cast<int64_t>(i) * c + ci) * h + 2 * oy + dy) * w +
                                2 * ox + dx;
                            if (xv[idx] > bv) {
                                bv = xv[idx];
                                best = idx;
                            }
                        }
                    }
                    y[oi] = bv;
                    (*argmax)[static_cast<size_t>(oi)] = best;
                }
            }
        }
    }
    return make_node(std::move(y), {x}, [argmax](Node& self) {
        const Var& x = self.parents[0];
        if (!wants_grad(x)) return;
        for (int64_t i = 0; i < self.value.numel(); ++i)
            x->grad[(*argmax)[static_cast<size_t>(i)]] += self.grad[i];
    });
}

static int reflect101(int i, int n) {
    // valid for |overhang| < n
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

Var reflect_pad(const Var& x, int top, int bottom, int left, int right) {
    const Tensor& xv = x->value;
    if (xv.rank() != 4) throw std::invalid_argument("reflect_pad: need rank-4 input");
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    if (top >= h || bottom >= h || left >= w || right >= w)
        throw std::invalid_argument("reflect_pad: pad must be smaller than dimension");
    const int ho = h + top + bottom, wo = w + left + right;
    Tensor y({n, c, ho, wo});
    for (int i = 0; i < n; ++i)
        for (int ci = 0; ci < c; ++ci)
            for (int oy = 0; oy < ho; ++oy) {
                const int sy = reflect101(oy - top, h);
                for (int ox = 0; ox < wo; ++ox)
                    y.at(i, ci, oy, ox) = xv.at(i, ci, sy, reflect101(ox - left, w));
            }
    return make_node(std::move(y), {x}, [n, c, h, w, top, left, ho, wo](Node& self) {
        const Var& x = self.parents[0];
        if (!wants_grad(x)) return;
        for (int i = 0; i < n; ++i)
            for (int ci = 0; ci < c; ++ci)
                for (int oy = 0; oy < ho; ++oy) {
                    const int sy = reflect101(oy - top, h);
                    for (int ox = 0; ox < wo; ++ox)
                        x->grad.at(i, ci, sy, reflect101(ox - left, w)) +=
                            self.grad.at(i, ci, oy, ox);
                }
    });
}

Var crop(const Var& x, int top, int left, int h, int w) {
    const Tensor& xv = x->value;
    if (xv.rank() != 4) throw std::invalid_argument("crop: need rank-4 input");
    if (top < 0 || left < 0 || top + h > xv.dim(2) || left + w > xv.dim(3))
        throw std::invalid_argument("crop: window out of range");
    const int n = xv.dim(0), c = xv.dim(1);
    Tensor y({n, c, h, w});
    for (int i = 0; i < n; ++i)
        for (int ci = 0; ci < c; ++ci)
            for (int oy = 0; oy < h; ++oy)
                for (int ox = 0; ox < w; ++ox)
                    y.at(i, ci, oy, ox) = xv.at(i, ci, top + oy, left + ox);
    return make_node(std::move(y), {x}, [n, c, h, w, top, left](Node& self) {
        const Var& x = self.parents[0];
        if (!wants_grad(x)) return;
        for (int i = 0; i < n; ++i)
            for (int ci = 0; ci < c; ++ci)
                for (int oy = 0; oy < h; ++oy)
                    for (int ox = 0; ox < w; ++ox)
                        x->grad.at(i, ci, top + oy, left + ox) += self.grad.at(i, ci, oy, ox);
    });
}

Var mean_abs_diff(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value))
        throw std::invalid_argument("mean_abs_diff: shape mismatch " + a->value.shape_str() +
                                    " vs " + b->value.shape_str());
    const int64_t n = a->value.numel();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += std::abs(a->value[i] - b->value[i]);
    return make_node(Tensor::scalar(acc / static_cast<double>(n)), {a, b}, [n](Node& self) {
        const Var& a = self.parents[0];
        const Var& b = self.parents[1];
        const double g = self.grad[0] / static_cast<double>(n);
        const bool ga = wants_grad(a), gb = wants_grad(b);
        for (int64_t i = 0; i < n; ++i) {
            const double diff = a->value[i] - b->value[i];
            const double s = diff > 0.0 ? g : (diff < 0.0 ? -g : 0.0);
            if (ga) a->grad[i] += s;
            if (gb) b->grad[i] -= s;
        }
    });
}

}  // namespace ops

}  // namespace dparnet
