#ifndef DPARNET_AUTODIFF_HPP
#define DPARNET_AUTODIFF_HPP

#include <functional>
#include <memory>
#include <vector>

#include "dparnet/tensor.hpp"

namespace dparnet {

// Define-by-run reverse-mode graph. Nodes hold values; gradients are
// allocated during backward(). Graphs are acyclic and freed when the loss
// Var goes out of scope; parameter leaves persist inside layers.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (!grad_ready) {
            grad = Tensor(value.shape());
            grad_ready = true;
        }
    }
};

using Var = std::shared_ptr<Node>;

Var make_param(Tensor value);                  // requires_grad = true
Var make_input(Tensor value);                  // requires_grad = false
Var detach(const Var& v);                      // value copy, no history

// Runs reverse-mode accumulation from a scalar root.
void backward(const Var& root);

namespace ops {

// x: (N,Cin,H,W), w: (Cout,Cin,kh,kw), b: (Cout)
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);

// x: (N,Cin,H,W), w: (Cin,Cout,kh,kw), b: (Cout); Ho = (H-1)*stride - 2*pad + kh
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& x, double c);
Var concat_channels(const std::vector<Var>& xs);
Var maxpool2(const Var& x);  // 2x2, stride 2, dims must be even

// reflect padding (no edge duplication); pads must be < dim
Var reflect_pad(const Var& x, int top, int bottom, int left, int right);
Var crop(const Var& x, int top, int left, int h, int w);

// scalar-valued
Var mean_abs_diff(const Var& a, const Var& b);

}  // namespace ops

}  // namespace dparnet

#endif
