#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "octave/tensor.hpp"

namespace octave::ad {

// Minimal reverse-mode autodiff over Tensor. A forward pass builds a DAG of
// Nodes; backward() walks it in reverse topological order. Single-threaded
// and double-precision throughout, so gradients are bit-reproducible.

struct Node {
    Tensor val;
    Tensor grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    Tensor& ensure_grad() {
        if (grad.numel() == 0) grad = Tensor::zeros(val.shape());
        return grad;
    }
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : node(std::move(n)) {}

    static Var constant(Tensor t);
    static Var param(Tensor t);

    bool defined() const { return node != nullptr; }
    const Tensor& val() const { return node->val; }
    Tensor& val() { return node->val; }
    Tensor& grad() { return node->ensure_grad(); }
    bool requires_grad() const { return node && node->requires_grad; }
    void reset_grad() {
        if (node && node->grad.numel() != 0) node->grad.fill(0.0);
    }
    double scalar() const { return node->val[0]; }

    std::shared_ptr<Node> node;
};

// While alive, ops record no graph: forward values only.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

// Seeds root (must be scalar) with gradient 1 and backpropagates.
void backward(const Var& root);

// Elementwise / scalar ops
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var log_eps(const Var& a, double eps);
Var square(const Var& a);
Var hadamard_const(const Var& a, const Tensor& m);
Var sum(const Var& a);
Var mean(const Var& a);

// NCHW ops
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var maxpool2(const Var& x);
Var upsample_nearest2(const Var& x);
Var upsample_bilinear(const Var& x, int64_t out_h, int64_t out_w);
Var concat_ch(const Var& a, const Var& b);
Var softmax_ch(const Var& x);
Var channel_slice(const Var& x, int64_t c0, int64_t c1);
Var channel_mean(const Var& x, int64_t c0, int64_t c1);
Var channel_sum(const Var& x);
Var mul_bcast_ch(const Var& x, const Var& m);
Var div_bcast_ch(const Var& x, const Var& s);
Var global_avg_pool(const Var& x);
Var linear(const Var& x, const Var& w, const Var& b);

}  // namespace octave::ad
