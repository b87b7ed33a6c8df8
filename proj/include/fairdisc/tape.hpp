#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fairdisc/tensor.hpp"

namespace fairdisc::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
    Tape* tape = nullptr;
    std::uint32_t id = 0;

    bool valid() const { return tape != nullptr; }
    const Tensor& value() const;
    const Tensor& grad() const;
};

enum class Activation { Relu, Tanh };
enum class ReduceOp { Sum, Mean };

Activation activation_from_string(const std::string& s);
const char* activation_name(Activation a);

// Reverse-mode tape over dense tensors. Records operations in topological
// order as the forward expressions are built; backward() sweeps the records
// once in reverse, accumulating gradients into every node that requires them.
// A tape is rebuilt per batch and is confined to a single thread.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requires_grad = false);

    // Elementwise; b may also be a rank-1 [cols] row vector broadcast over
    // the rows of a rank-2 a.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);

    Var scale(Var a, double k);
    Var add_const(Var a, double k);
    Var neg(Var a) { return scale(a, -1.0); }

    Var matmul(Var a, Var b);
    // out[i,j] = sum_k x[i,k] * w[k,j] + b[j]
    Var affine(Var x, Var w, Var b);

    Var activate(Var x, Activation kind);
    Var exp(Var x);
    // ln(max(x, lo)); gradient is zero on the clamped region.
    Var log_clamped(Var x, double lo = 1e-12);
    Var clamp(Var x, double lo, double hi);

    // Row-wise, max-subtracted. Inputs must be finite.
    Var softmax(Var logits);
    Var log_softmax(Var logits);

    // axis -1 reduces to a scalar; axis 0 reduces over rows, 1 over columns.
    Var reduce(Var x, ReduceOp op, int axis = -1);

    // out[i] = m[i, idx[i]]
    Var pick(Var m, std::vector<std::size_t> idx);

    // Same value, no gradient flow.
    Var detach(Var x);

    // Zeroes all gradients, seeds d(root)/d(root) = seed, then sweeps the
    // recorded operations once in reverse. root must be a scalar on this tape.
    void backward(Var root, double seed = 1.0);

    void zero_grad();

    const Tensor& value(Var v) const;
    const Tensor& grad(Var v) const;
    bool requires_grad(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad; // allocated iff requires_grad
        bool requires_grad = false;
        std::function<void(Tape&)> back; // accumulates into input grads
    };

    Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
    Node& node(std::uint32_t id) { return nodes_[id]; }
    const Node& node(std::uint32_t id) const { return nodes_[id]; }
    void check_owned(Var v, const char* op) const;

    std::vector<Node> nodes_;
};

// Free operators for readable model code. Both operands must share a tape.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator*(double k, Var a);

// Central-difference gradient verification.
//
// `forward` evaluates the objective at the current parameter values and must
// be deterministic (any noise frozen); `analytic` returns gradients in the
// order of `params`. Returns the max over all parameter elements of
// |analytic - central difference| / max(1, |analytic|).
double grad_check(const std::function<double()>& forward,
                  const std::function<std::vector<Tensor>()>& analytic,
                  const std::vector<Tensor*>& params, double eps);

} // namespace fairdisc::ad
