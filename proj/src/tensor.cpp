#include "dparnet/tensor.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dparnet {

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
    int64_t n = 1;
    for (int s : shape_) {
        if (s <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
        n *= s;
    }
    d.assign(static_cast<size_t>(n), fill);
}

Tensor Tensor::scalar(double v) {
    Tensor t(std::vector<int>{1});
    t.d[0] = v;
    return t;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ")";
    return os.str();
}

}  // namespace dparnet
