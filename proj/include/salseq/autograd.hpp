#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "salseq/fixdata.hpp"

namespace salseq::ag {

struct Shape {
    int n = 1, c = 1, h = 1, w = 1;

    std::size_t size() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Dense NCHW array of doubles.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(s.size(), fill) {}

    double& at(int n, int c, int y, int x) {
        return data[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) * shape.w + x];
    }
    double at(int n, int c, int y, int x) const {
        return data[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) * shape.w + x];
    }
};

/// Graph node; value filled at construction, grad filled by backward().
class Node {
public:
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_op;  // accumulates into parents' grads

    void zero_grad() { grad = Tensor(value.shape); }
};

using Var = std::shared_ptr<Node>;

Var leaf(Tensor t);      // participates in gradients
Var constant(Tensor t);  // does not

/// Reverse-mode sweep from a scalar root; grads of all reachable
/// requires_grad nodes are (re)computed.
void backward(const Var& root);

double scalar(const Var& v);  // value of a 1-element node

// elementwise; operands must have equal shapes, or one side scalar-shaped
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var emin(Var a, Var b);  // ties propagate to a

Var add_scalar(Var a, double s);
Var mul_scalar(Var a, double s);

Var relu(Var a);
Var vlog(Var a);
Var vsqrt(Var a);
Var neg(Var a);

Var sum(Var a);         // -> (1,1,1,1)
Var mean(Var a);        // -> (1,1,1,1)
Var reduce_min(Var a);  // subgradient to the first arg-extreme
Var reduce_max(Var a);

Var concat_channels(const std::vector<Var>& xs);
Var concat_batch(const std::vector<Var>& xs);
Var slice_channels(Var a, int start, int count);
Var slice_batch(Var a, int n);

/// 3x3 convolution, stride 1, zero padding 1. w: (out_c, in_c, 3, 3),
/// bias: (1, out_c, 1, 1).
Var conv2d(Var x, Var w, Var bias);

Var avgpool2(Var x);             // 2x2, stride 2
Var upsample_bilinear2(Var x);   // x2, half-pixel centers, edge clamped

/// Per-channel batch statistics with full backward through the statistics.
Var batchnorm_train(Var x, Var gamma, Var beta, double eps = 1e-5);
/// Fixed statistics (inference); a plain per-channel affine map.
Var batchnorm_infer(Var x, Var gamma, Var beta, const Tensor& running_mean,
                    const Tensor& running_var, double eps = 1e-5);

/// (x - min) / (max - min + eps); spans [0, ~1] and stays differentiable.
Var range_norm01(Var x, double eps = 1e-8);

}  // namespace salseq::ag
