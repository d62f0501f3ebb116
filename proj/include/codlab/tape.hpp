#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "codlab/tensor.hpp"

namespace codlab::diff {

class Tape;

// Handle into a tape. Cheap to copy; owns nothing.
struct Var {
    int id = -1;
    Tape* tape = nullptr;
    bool valid() const { return id >= 0 && tape != nullptr; }
};

// Context handed to a node's backward rule. Adjoints for the current
// backward() call live in a scratch buffer, separate from the persistent
// per-node grad so repeated backward calls accumulate correctly.
struct BackCtx {
    const std::vector<Tensor>* values;
    std::vector<Tensor>* adj;
    std::vector<char>* touched;
    const std::vector<char>* needs_grad;
    int self_id;

    const Tensor& adjoint() const { return (*adj)[static_cast<size_t>(self_id)]; }
    const Tensor& val(int id) const { return (*values)[static_cast<size_t>(id)]; }
    bool needs(int id) const { return (*needs_grad)[static_cast<size_t>(id)] != 0; }

    // Adjoint accumulation buffer for a parent, lazily zero-initialized.
    Tensor& sink(int id) {
        Tensor& t = (*adj)[static_cast<size_t>(id)];
        if (!(*touched)[static_cast<size_t>(id)]) {
            t = Tensor::zeros_like(val(id));
            (*touched)[static_cast<size_t>(id)] = 1;
        }
        return t;
    }
};

using BackFn = std::function<void(BackCtx&)>;

// Append-only record of one forward computation. Node ids are dense indices
// and creation order is a valid topological order, which backward() walks in
// reverse. Tapes are single-threaded; independent tapes may run in parallel.
class Tape {
public:
    explicit Tape(uint64_t rng_seed = 0) : rng_seed_(rng_seed) {}

    Var leaf(Tensor value, bool requires_grad);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    const Tensor& value(Var v) const { return values_[static_cast<size_t>(v.id)]; }
    bool requires_grad(Var v) const { return needs_grad_[static_cast<size_t>(v.id)] != 0; }

    // Persistent gradient of a node; zeros if backward never reached it.
    Tensor grad(Var v) const;

    // Reverse accumulation from a scalar root. Each node is visited exactly
    // once per call; repeated calls without reset add into the stored grads.
    void backward(Var root);

    void zero_grad();

    size_t size() const { return values_.size(); }
    uint64_t rng_seed() const { return rng_seed_; }

    // Used by op implementations.
    Var emit(Tensor value, std::vector<int> parents, BackFn fn);

private:
    std::vector<Tensor> values_;
    std::vector<Tensor> grads_;      // empty tensor slot until first touch
    std::vector<char> grad_set_;
    std::vector<char> needs_grad_;
    std::vector<std::vector<int>> parents_;
    std::vector<BackFn> back_;
    uint64_t rng_seed_;
};

// ---- elementwise and structural ops -----------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);           // hadamard
Var relu(Var x);                 // relu'(0) = 0
Var tanh_(Var x);
Var exp_(Var x);
Var log_(Var x);                 // DomainError unless strictly positive
Var scale(Var x, double c);
Var neg(Var x);
Var softplus(Var x);             // log(1 + e^x), overflow-safe

Var matmul(Var a, Var b);        // (m,k)x(k,n); 1-D operands act as row/col
Var transpose(Var x);            // 2-D
Var concat(Var a, Var b);        // 1-D
Var sum(Var x);                  // -> scalar
Var mean(Var x);                 // -> scalar
Var mean_rows(Var x);            // (L,d) -> (d)
Var row(Var x, int r);           // (L,d) -> (d)
Var span_mean(Var x, int begin, int end);  // mean of rows [begin, end)
Var gather_rows(Var table, const std::vector<int>& idx);  // (V,d) -> (|idx|,d)
Var add_rowwise(Var x, Var bias);          // (L,d) + (d)
Var pick(Var x, int i);          // 1-D -> scalar
Var stack_scalars(const std::vector<Var>& xs);  // -> (n)

// ---- numerically careful reductions ------------------------------------

Var softmax(Var x);              // 1-D, max-shifted
Var softmax_rows(Var x);         // 2-D, rowwise
Var logsumexp(Var x);            // 1-D -> scalar, max-shifted

// ---- framework primitives ----------------------------------------------

// Forward identity that severs the node from its ancestry: the result has
// requires_grad = false and no parents, so no gradient ever crosses it.
Var stop_gradient(Var x);

// a.b / (|a||b|), differentiable in both arguments. ZeroNorm below 1e-12.
Var cosine_sim(Var a, Var b);

} // namespace codlab::diff
