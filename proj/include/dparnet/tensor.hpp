#ifndef DPARNET_TENSOR_HPP
#define DPARNET_TENSOR_HPP

#include <cstdint>
#include <cstdlib>
#include <new>
#include <string>
#include <vector>

namespace dparnet {

// 64-byte-aligned allocator. SIMD kernels peel unaligned heads, so heap
// alignment would otherwise change accumulation order and break bitwise
// run-to-run determinism of training.
template <typename T>
struct AlignedAlloc {
    using value_type = T;
    static constexpr size_t kAlign = 64;

    AlignedAlloc() = default;
    template <typename U>
    AlignedAlloc(const AlignedAlloc<U>&) {}

    T* allocate(size_t n) {
        const size_t bytes = (n * sizeof(T) + kAlign - 1) / kAlign * kAlign;
        void* p = std::aligned_alloc(kAlign, bytes);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, size_t) { std::free(p); }

    template <typename U>
    bool operator==(const AlignedAlloc<U>&) const {
        return true;
    }
};

using AlignedDoubles = std::vector<double, AlignedAlloc<double>>;

// Dense double tensor, row-major. Rank 4 (N,C,H,W) for activations, any
// rank for weights. Compute runs in double so gradient checks are clean;
// checkpoints quantize to f32 at the serialization boundary.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0);

    static Tensor scalar(double v);

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int64_t numel() const { return static_cast<int64_t>(d.size()); }

    double* data() { return d.data(); }
    const double* data() const { return d.data(); }

    double& operator[](int64_t i) { return d[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return d[static_cast<size_t>(i)]; }

    // rank-4 accessor
    double& at(int n, int c, int y, int x) {
        return d[((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }
    double at(int n, int c, int y, int x) const {
        return d[((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

    AlignedDoubles d;

private:
    std::vector<int> shape_;
};

}  // namespace dparnet

#endif
