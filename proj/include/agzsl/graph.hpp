#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "agzsl/tensor.hpp"

namespace agzsl::num {

class Tape;

// Handle to a node on a tape. Only valid for the tape that created it.
struct Var {
    int id = -1;
};

// Reverse-mode differentiation tape. Nodes are recorded in construction
// order; backward() visits them exactly once in reverse. Single-threaded by
// contract.
//
// Broadcasting is restricted to scalar-vs-tensor and identical shapes.
class Tape {
public:
    Var constant(Tensor value);
    Var constant(double value) { return constant(Tensor::scalar(value)); }

    // Registers a leaf bound to an externally owned parameter tensor.
    // Binding the same tensor twice returns the same node.
    Var param(Tensor& p);

    // Arithmetic.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);

    // Elementwise functions.
    Var tanh_(Var a);
    Var relu_(Var a);
    Var sigmoid_(Var a);
    Var exp_(Var a);
    Var log_(Var a);
    Var sqrt_(Var a);
    Var softplus_(Var a);

    // Linear algebra.
    Var matmul(Var a, Var b);      // [r,k]x[k,c] -> [r,c]
    Var matmul_nt(Var a, Var b);   // [r,k]x[c,k]^T -> [r,c]
    Var matvec(Var a, Var x);      // [r,k]x[k] -> [r]
    Var dot(Var a, Var b);         // [k].[k] -> scalar
    Var outer_sq_norm(Var x);      // sum of squares -> scalar

    // Reductions / shape.
    Var sum_all(Var a);
    Var mean_all(Var a);
    Var sum_axis(Var a, std::size_t axis);   // 2-D only
    Var mean_axis(Var a, std::size_t axis);  // 2-D only
    Var slice_row(Var a, std::size_t row);   // 2-D -> 1-D
    Var slice_vec(Var a, std::size_t start, std::size_t len);  // 1-D sub-range
    Var concat_rows(const std::vector<Var>& rows);  // n x 1-D -> 2-D
    Var concat_vec(Var a, Var b);            // 1-D ++ 1-D

    // Softmax family.
    Var softmax(Var a, std::size_t axis = 0);  // 1-D, or 2-D along axis
    Var logsumexp(Var a);                      // 1-D -> scalar
    Var pick(Var a, std::size_t i);            // 1-D -> scalar

    // Max over the last axis with argmax routing; ties break to the lowest
    // index, gradient at a kink follows the argmax element.
    Var max_last(Var a);  // 1-D -> scalar, 2-D [r,c] -> [r]
    const std::vector<std::size_t>& argmax_of(Var max_node) const;

    // Row/column scaling for 2-D tensors.
    Var scale_rows(Var x, Var v);  // out_ij = x_ij * v_i
    Var scale_cols(Var x, Var v);  // out_ij = x_ij * v_j
    Var add_rowvec(Var x, Var b);  // out_ij = x_ij + b_j

    // Per-group two-layer block: for each of the r groups,
    // z_i = tanh(x_i . Wa_i) . Wb_i, with Wa [r,in,h] and Wb [r,h,out].
    // Equivalent to r independent two-layer networks with no weight sharing.
    Var grouped_two_layer(Var x, Var wa, Var wb);

    const Tensor& val(Var v) const;
    const Tensor& grad(Var v) const;

    // Backpropagates from a scalar root. Gradients of all reachable nodes are
    // populated; parameters not on the tape implicitly have zero gradient.
    void backward(Var root);

    // Gradient of a bound parameter after backward(); zeros if the parameter
    // never reached the root (or was never bound).
    Tensor grad_for(const Tensor& p) const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<int> inputs;
        std::function<void(Tape&, const Node&)> backprop;
        std::vector<std::size_t> argmax;  // only for max_last
    };

    Var emit(Tensor value, std::vector<int> inputs,
             std::function<void(Tape&, const Node&)> backprop);
    Node& node(Var v);
    const Node& node(Var v) const;
    void check_finite(const Tensor& t, const char* op) const;
    Tensor& grad_buf(int id);

    // deque keeps val()/grad() references stable while new nodes are emitted
    std::deque<Node> nodes_;
    std::unordered_map<const Tensor*, int> param_nodes_;
    bool backward_done_ = false;
};

// Max over all parameter coordinates of
// |analytic - central difference| / max(1, |analytic|) for a scalar function
// rebuilt on a fresh tape at every evaluation.
double grad_check(std::span<Tensor* const> params,
                  const std::function<Var(Tape&)>& build, double eps = 1e-5);

}  // namespace agzsl::num
