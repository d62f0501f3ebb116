#include "codlab/tape.hpp"

#include <algorithm>
#include <cmath>

namespace codlab::diff {

namespace {

void require_same_tape(Var a, Var b) {
    check(a.tape == b.tape, "ShapeMismatch", "operands live on different tapes");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    check(a.same_shape(b), "ShapeMismatch",
          std::string(op) + " on shapes " + a.shape_str() + " vs " + b.shape_str());
}

} // namespace

Var Tape::leaf(Tensor value, bool requires_grad) {
    values_.push_back(std::move(value));
    grads_.emplace_back();
    grad_set_.push_back(0);
    needs_grad_.push_back(requires_grad ? 1 : 0);
    parents_.emplace_back();
    back_.emplace_back();
    return Var{static_cast<int>(values_.size()) - 1, this};
}

Var Tape::emit(Tensor value, std::vector<int> parents, BackFn fn) {
    bool needs = false;
    for (int p : parents)
        if (needs_grad_[static_cast<size_t>(p)]) needs = true;
    values_.push_back(std::move(value));
    grads_.emplace_back();
    grad_set_.push_back(0);
    needs_grad_.push_back(needs ? 1 : 0);
    parents_.push_back(std::move(parents));
    back_.push_back(needs ? std::move(fn) : BackFn{});
    return Var{static_cast<int>(values_.size()) - 1, this};
}

Tensor Tape::grad(Var v) const {
    size_t i = static_cast<size_t>(v.id);
    if (grad_set_[i]) return grads_[i];
    return Tensor::zeros_like(values_[i]);
}

void Tape::zero_grad() {
    for (size_t i = 0; i < grads_.size(); ++i) {
        grads_[i] = Tensor();
        grad_set_[i] = 0;
    }
}

void Tape::backward(Var root) {
    check(root.tape == this, "NonScalarRoot", "root from another tape");
    const Tensor& rv = values_[static_cast<size_t>(root.id)];
    check(rv.size() == 1 && rv.is_scalar(), "NonScalarRoot",
          "backward root must be scalar, got " + rv.shape_str());

    size_t n = static_cast<size_t>(root.id) + 1;
    std::vector<Tensor> adj(n);
    std::vector<char> touched(n, 0);
    adj[n - 1] = Tensor::scalar(1.0);
    touched[n - 1] = 1;

    BackCtx ctx{&values_, &adj, &touched, &needs_grad_, 0};
    for (int i = root.id; i >= 0; --i) {
        size_t ui = static_cast<size_t>(i);
        if (!touched[ui] || !needs_grad_[ui] || !back_[ui]) continue;
        ctx.self_id = i;
        back_[ui](ctx);
    }

    // Fold this call's adjoints into the persistent grads.
    for (size_t i = 0; i < n; ++i) {
        if (!touched[i] || !needs_grad_[i]) continue;
        if (!grad_set_[i]) {
            grads_[i] = std::move(adj[i]);
            grad_set_[i] = 1;
        } else {
            grads_[i] += adj[i];
        }
    }
}

// ---- elementwise -----------------------------------------------------

Var add(Var a, Var b) {
    require_same_tape(a, b);
    Tape& t = *a.tape;
    const Tensor &av = t.value(a), &bv = t.value(b);
    require_same_shape(av, bv, "add");
    Tensor out = av;
    for (int i = 0; i < out.size(); ++i) out[i] += bv[i];
    int ai = a.id, bi = b.id;
    return t.emit(std::move(out), {ai, bi}, [ai, bi](BackCtx& c) {
        const Tensor& d = c.adjoint();
        if (c.needs(ai)) c.sink(ai) += d;
        if (c.needs(bi)) c.sink(bi) += d;
    });
}

Var sub(Var a, Var b) {
    require_same_tape(a, b);
    Tape& t = *a.tape;
    const Tensor &av = t.value(a), &bv = t.value(b);
    require_same_shape(av, bv, "sub");
    Tensor out = av;
    for (int i = 0; i < out.size(); ++i) out[i] -= bv[i];
    int ai = a.id, bi = b.id;
    return t.emit(std::move(out), {ai, bi}, [ai, bi](BackCtx& c) {
        const Tensor& d = c.adjoint();
        if (c.needs(ai)) c.sink(ai) += d;
        if (c.needs(bi)) {
            Tensor& g = c.sink(bi);
            for (int i = 0; i < d.size(); ++i) g[i] -= d[i];
        }
    });
}

Var mul(Var a, Var b) {
    require_same_tape(a, b);
    Tape& t = *a.tape;
    const Tensor &av = t.value(a), &bv = t.value(b);
    require_same_shape(av, bv, "mul");
    Tensor out = av;
    for (int i = 0; i < out.size(); ++i) out[i] *= bv[i];
    int ai = a.id, bi = b.id;
    return t.emit(std::move(out), {ai, bi}, [ai, bi](BackCtx& c) {
        const Tensor& d = c.adjoint();
        if (c.needs(ai)) {
            Tensor& g = c.sink(ai);
            const Tensor& bv2 = c.val(bi);
            for (int i = 0; i < d.size(); ++i) g[i] += d[i] * bv2[i];
        }
        if (c.needs(bi)) {
            Tensor& g = c.sink(bi);
            const Tensor& av2 = c.val(ai);
            for (int i = 0; i < d.size(); ++i) g[i] += d[i] * av2[i];
        }
    });
}

Var relu(Var x) {
    Tape& t = *x.tape;
    Tensor out = t.value(x);
    for (int i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& d = c.adjoint();
        const Tensor& xv = c.val(xi);
        Tensor& g = c.sink(xi);
        for (int i = 0; i < d.size(); ++i)
            if (xv[i] > 0.0) g[i] += d[i];
    });
}

Var tanh_(Var x) {
    Tape& t = *x.tape;
    Tensor out = t.value(x);
    for (int i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& d = c.adjoint();
        const Tensor& y = c.val(c.self_id);
        Tensor& g = c.sink(xi);
        for (int i = 0; i < d.size(); ++i) g[i] += d[i] * (1.0 - y[i] * y[i]);
    });
}

Var exp_(Var x) {
    Tape& t = *x.tape;
    Tensor out = t.value(x);
    for (int i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& d = c.adjoint();
        const Tensor& y = c.val(c.self_id);
        Tensor& g = c.sink(xi);
        for (int i = 0; i < d.size(); ++i) g[i] += d[i] * y[i];
    });
}

Var log_(Var x) {
    Tape& t = *x.tape;
    Tensor out = t.value(x);
    for (int i = 0; i < out.size(); ++i) {
        check(out[i] > 0.0, "DomainError",
              "log of non-positive value " + std::to_string(out[i]));
        out[i] = std::log(out[i]);
    }
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& d = c.adjoint();
        const Tensor& xv = c.val(xi);
        Tensor& g = c.sink(xi);
        for (int i = 0; i < d.size(); ++i) g[i] += d[i] / xv[i];
    });
}

Var scale(Var x, double cfac) {
    Tape& t = *x.tape;
    Tensor out = t.value(x);
    for (int i = 0; i < out.size(); ++i) out[i] *= cfac;
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi, cfac](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& d = c.adjoint();
        Tensor& g = c.sink(xi);
        for (int i = 0; i < d.size(); ++i) g[i] += d[i] * cfac;
    });
}

Var neg(Var x) { return scale(x, -1.0); }

Var softplus(Var x) {
    Tape& t = *x.tape;
    Tensor out = t.value(x);
    for (int i = 0; i < out.size(); ++i) {
        double v = out[i];
        out[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
    }
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& d = c.adjoint();
        const Tensor& xv = c.val(xi);
        Tensor& g = c.sink(xi);
        for (int i = 0; i < d.size(); ++i) {
            double s = 1.0 / (1.0 + std::exp(-xv[i]));
            g[i] += d[i] * s;
        }
    });
}

// ---- linear algebra ----------------------------------------------------

namespace {

// View any 1-D or 2-D tensor as a matrix; 1-D x is a row for the left
// operand and a column for the right one.
struct MatView {
    int r, c;
    bool was_vec;
};

} // namespace

Var matmul(Var a, Var b) {
    require_same_tape(a, b);
    Tape& t = *a.tape;
    const Tensor &av = t.value(a), &bv = t.value(b);
    check(av.ndim() >= 1 && av.ndim() <= 2 && bv.ndim() >= 1 && bv.ndim() <= 2,
          "ShapeMismatch", "matmul needs rank 1 or 2 operands");

    MatView A{av.ndim() == 1 ? 1 : av.dim(0), av.ndim() == 1 ? av.dim(0) : av.dim(1),
              av.ndim() == 1};
    MatView B{bv.ndim() == 1 ? bv.dim(0) : bv.dim(0), bv.ndim() == 1 ? 1 : bv.dim(1),
              bv.ndim() == 1};
    check(A.c == B.r, "ShapeMismatch",
          "matmul inner dims " + av.shape_str() + " x " + bv.shape_str());

    std::vector<int> out_shape;
    if (!A.was_vec && !B.was_vec) out_shape = {A.r, B.c};
    else if (A.was_vec && !B.was_vec) out_shape = {B.c};
    else if (!A.was_vec && B.was_vec) out_shape = {A.r};
    // vec . vec -> scalar (empty shape)

    Tensor out = out_shape.empty() ? Tensor::scalar(0.0) : Tensor(out_shape);
    const double* ap = av.data();
    const double* bp = bv.data();
    double* op = out.data();
    for (int i = 0; i < A.r; ++i) {
        const double* arow = ap + static_cast<size_t>(i) * A.c;
        double* orow = op + static_cast<size_t>(i) * B.c;
        for (int k = 0; k < A.c; ++k) {
            double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = bp + static_cast<size_t>(k) * B.c;
            for (int j = 0; j < B.c; ++j) orow[j] += aik * brow[j];
        }
    }

    int ai = a.id, bi = b.id;
    int m = A.r, kk = A.c, nn = B.c;
    return t.emit(std::move(out), {ai, bi}, [ai, bi, m, kk, nn](BackCtx& c) {
        const Tensor& d = c.adjoint();
        const double* dp = d.data();
        if (c.needs(ai)) {
            // dA = dC . B^T
            const Tensor& bv2 = c.val(bi);
            const double* bp2 = bv2.data();
            Tensor& g = c.sink(ai);
            double* gp = g.data();
            for (int i = 0; i < m; ++i)
                for (int k = 0; k < kk; ++k) {
                    double acc = 0.0;
                    const double* drow = dp + static_cast<size_t>(i) * nn;
                    const double* brow = bp2 + static_cast<size_t>(k) * nn;
                    for (int j = 0; j < nn; ++j) acc += drow[j] * brow[j];
                    gp[static_cast<size_t>(i) * kk + k] += acc;
                }
        }
        if (c.needs(bi)) {
            // dB = A^T . dC
            const Tensor& av2 = c.val(ai);
            const double* ap2 = av2.data();
            Tensor& g = c.sink(bi);
            double* gp = g.data();
            for (int i = 0; i < m; ++i) {
                const double* arow = ap2 + static_cast<size_t>(i) * kk;
                const double* drow = dp + static_cast<size_t>(i) * nn;
                for (int k = 0; k < kk; ++k) {
                    double aik = arow[k];
                    if (aik == 0.0) continue;
                    double* grow = gp + static_cast<size_t>(k) * nn;
                    for (int j = 0; j < nn; ++j) grow[j] += aik * drow[j];
                }
            }
        }
    });
}

Var transpose(Var x) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    check(xv.ndim() == 2, "ShapeMismatch", "transpose needs a 2-D tensor");
    int r = xv.dim(0), cdim = xv.dim(1);
    Tensor out({cdim, r});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < cdim; ++j) out.at2(j, i) = xv.at2(i, j);
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi, r, cdim](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& d = c.adjoint();
        Tensor& g = c.sink(xi);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < cdim; ++j) g.at2(i, j) += d.at2(j, i);
    });
}

Var concat(Var a, Var b) {
    require_same_tape(a, b);
    Tape& t = *a.tape;
    const Tensor &av = t.value(a), &bv = t.value(b);
    check(av.ndim() == 1 && bv.ndim() == 1, "ShapeMismatch", "concat needs 1-D operands");
    int na = av.dim(0), nb = bv.dim(0);
    Tensor out({na + nb});
    for (int i = 0; i < na; ++i) out[i] = av[i];
    for (int i = 0; i < nb; ++i) out[na + i] = bv[i];
    int ai = a.id, bi = b.id;
    return t.emit(std::move(out), {ai, bi}, [ai, bi, na, nb](BackCtx& c) {
        const Tensor& d = c.adjoint();
        if (c.needs(ai)) {
            Tensor& g = c.sink(ai);
            for (int i = 0; i < na; ++i) g[i] += d[i];
        }
        if (c.needs(bi)) {
            Tensor& g = c.sink(bi);
            for (int i = 0; i < nb; ++i) g[i] += d[na + i];
        }
    });
}

Var sum(Var x) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    double acc = 0.0;
    for (int i = 0; i < xv.size(); ++i) acc += xv[i];
    int xi = x.id;
    return t.emit(Tensor::scalar(acc), {xi}, [xi](BackCtx& c) {
        if (!c.needs(xi)) return;
        double d = c.adjoint().item();
        Tensor& g = c.sink(xi);
        for (int i = 0; i < g.size(); ++i) g[i] += d;
    });
}

Var mean(Var x) {
    const Tensor& xv = x.tape->value(x);
    return scale(sum(x), 1.0 / xv.size());
}

Var mean_rows(Var x) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    check(xv.ndim() == 2, "ShapeMismatch", "mean_rows needs a 2-D tensor");
    int L = xv.dim(0), d = xv.dim(1);
    Tensor out({d});
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < d; ++j) out[j] += xv.at2(i, j);
    for (int j = 0; j < d; ++j) out[j] /= L;
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi, L, d](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& dj = c.adjoint();
        Tensor& g = c.sink(xi);
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < d; ++j) g.at2(i, j) += dj[j] / L;
    });
}

Var row(Var x, int r) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    check(xv.ndim() == 2, "ShapeMismatch", "row() needs a 2-D tensor");
    check(r >= 0 && r < xv.dim(0), "ShapeMismatch", "row index out of range");
    int d = xv.dim(1);
    Tensor out({d});
    for (int j = 0; j < d; ++j) out[j] = xv.at2(r, j);
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi, r, d](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& dj = c.adjoint();
        Tensor& g = c.sink(xi);
        for (int j = 0; j < d; ++j) g.at2(r, j) += dj[j];
    });
}

Var span_mean(Var x, int begin, int end) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    check(xv.ndim() == 2, "ShapeMismatch", "span_mean needs a 2-D tensor");
    check(begin >= 0 && begin < end && end <= xv.dim(0), "SpanOutOfRange",
          "span [" + std::to_string(begin) + "," + std::to_string(end) +
              ") outside 0.." + std::to_string(xv.dim(0)));
    int d = xv.dim(1), len = end - begin;
    Tensor out({d});
    for (int i = begin; i < end; ++i)
        for (int j = 0; j < d; ++j) out[j] += xv.at2(i, j);
    for (int j = 0; j < d; ++j) out[j] /= len;
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi, begin, end, d, len](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& dj = c.adjoint();
        Tensor& g = c.sink(xi);
        for (int i = begin; i < end; ++i)
            for (int j = 0; j < d; ++j) g.at2(i, j) += dj[j] / len;
    });
}

Var gather_rows(Var table, const std::vector<int>& idx) {
    Tape& t = *table.tape;
    const Tensor& tv = t.value(table);
    check(tv.ndim() == 2, "ShapeMismatch", "gather_rows needs a 2-D table");
    int V = tv.dim(0), d = tv.dim(1);
    int L = static_cast<int>(idx.size());
    check(L >= 1, "EmptySequence", "gather_rows on empty index list");
    Tensor out({L, d});
    for (int i = 0; i < L; ++i) {
        check(idx[static_cast<size_t>(i)] >= 0 && idx[static_cast<size_t>(i)] < V,
              "ShapeMismatch", "gather index out of range");
        for (int j = 0; j < d; ++j) out.at2(i, j) = tv.at2(idx[static_cast<size_t>(i)], j);
    }
    int ti = table.id;
    std::vector<int> idx_copy = idx;
    return t.emit(std::move(out), {ti}, [ti, idx_copy, d](BackCtx& c) {
        if (!c.needs(ti)) return;
        const Tensor& dj = c.adjoint();
        Tensor& g = c.sink(ti);
        for (size_t i = 0; i < idx_copy.size(); ++i)
            for (int j = 0; j < d; ++j)
                g.at2(idx_copy[i], j) += dj.at2(static_cast<int>(i), j);
    });
}

Var add_rowwise(Var x, Var bias) {
    require_same_tape(x, bias);
    Tape& t = *x.tape;
    const Tensor &xv = t.value(x), &bv = t.value(bias);
    check(xv.ndim() == 2 && bv.ndim() == 1 && xv.dim(1) == bv.dim(0), "ShapeMismatch",
          "add_rowwise " + xv.shape_str() + " + " + bv.shape_str());
    int L = xv.dim(0), d = xv.dim(1);
    Tensor out = xv;
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < d; ++j) out.at2(i, j) += bv[j];
    int xi = x.id, bi = bias.id;
    return t.emit(std::move(out), {xi, bi}, [xi, bi, L, d](BackCtx& c) {
        const Tensor& dj = c.adjoint();
        if (c.needs(xi)) c.sink(xi) += dj;
        if (c.needs(bi)) {
            Tensor& g = c.sink(bi);
            for (int i = 0; i < L; ++i)
                for (int j = 0; j < d; ++j) g[j] += dj.at2(i, j);
        }
    });
}

Var pick(Var x, int i) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    check(xv.ndim() == 1, "ShapeMismatch", "pick needs a 1-D tensor");
    check(i >= 0 && i < xv.dim(0), "LabelOutOfRange",
          "index " + std::to_string(i) + " outside vector of length " +
              std::to_string(xv.dim(0)));
    int xi = x.id;
    return t.emit(Tensor::scalar(xv[i]), {xi}, [xi, i](BackCtx& c) {
        if (!c.needs(xi)) return;
        c.sink(xi)[i] += c.adjoint().item();
    });
}

Var stack_scalars(const std::vector<Var>& xs) {
    check(!xs.empty(), "EmptyInput", "stack_scalars on empty list");
    Tape& t = *xs[0].tape;
    int n = static_cast<int>(xs.size());
    Tensor out({n});
    std::vector<int> parents(xs.size());
    for (int i = 0; i < n; ++i) {
        const Tensor& v = t.value(xs[static_cast<size_t>(i)]);
        check(v.size() == 1, "ShapeMismatch", "stack_scalars element is not scalar");
        out[i] = v[0];
        parents[static_cast<size_t>(i)] = xs[static_cast<size_t>(i)].id;
    }
    std::vector<int> ps = parents;
    return t.emit(std::move(out), std::move(parents), [ps](BackCtx& c) {
        const Tensor& d = c.adjoint();
        for (size_t i = 0; i < ps.size(); ++i)
            if (c.needs(ps[i])) c.sink(ps[i])[0] += d[static_cast<int>(i)];
    });
}

// ---- stable softmax family ----------------------------------------------

Var softmax(Var x) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    check(xv.ndim() == 1, "ShapeMismatch", "softmax needs a 1-D tensor");
    check(xv.dim(0) >= 1, "EmptyInput", "softmax on empty vector");
    int n = xv.dim(0);
    double mx = xv[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, xv[i]);
    Tensor out({n});
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(xv[i] - mx);
        z += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= z;
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi, n](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& d = c.adjoint();
        const Tensor& y = c.val(c.self_id);
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += d[i] * y[i];
        Tensor& g = c.sink(xi);
        for (int i = 0; i < n; ++i) g[i] += y[i] * (d[i] - dot);
    });
}

Var softmax_rows(Var x) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    check(xv.ndim() == 2, "ShapeMismatch", "softmax_rows needs a 2-D tensor");
    int L = xv.dim(0), n = xv.dim(1);
    check(n >= 1, "EmptyInput", "softmax_rows on empty rows");
    Tensor out({L, n});
    for (int r = 0; r < L; ++r) {
        double mx = xv.at2(r, 0);
        for (int i = 1; i < n; ++i) mx = std::max(mx, xv.at2(r, i));
        double z = 0.0;
        for (int i = 0; i < n; ++i) {
            out.at2(r, i) = std::exp(xv.at2(r, i) - mx);
            z += out.at2(r, i);
        }
        for (int i = 0; i < n; ++i) out.at2(r, i) /= z;
    }
    int xi = x.id;
    return t.emit(std::move(out), {xi}, [xi, L, n](BackCtx& c) {
        if (!c.needs(xi)) return;
        const Tensor& d = c.adjoint();
        const Tensor& y = c.val(c.self_id);
        Tensor& g = c.sink(xi);
        for (int r = 0; r < L; ++r) {
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += d.at2(r, i) * y.at2(r, i);
            for (int i = 0; i < n; ++i)
                g.at2(r, i) += y.at2(r, i) * (d.at2(r, i) - dot);
        }
    });
}

Var logsumexp(Var x) {
    Tape& t = *x.tape;
    const Tensor& xv = t.value(x);
    check(xv.ndim() == 1, "ShapeMismatch", "logsumexp needs a 1-D tensor");
    check(xv.dim(0) >= 1, "EmptyInput", "logsumexp on empty vector");
    int n = xv.dim(0);
    double mx = xv[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, xv[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += std::exp(xv[i] - mx);
    double val = mx + std::log(z);
    int xi = x.id;
    return t.emit(Tensor::scalar(val), {xi}, [xi, n, mx, z](BackCtx& c) {
        if (!c.needs(xi)) return;
        double d = c.adjoint().item();
        const Tensor& xv2 = c.val(xi);
        Tensor& g = c.sink(xi);
        for (int i = 0; i < n; ++i) g[i] += d * std::exp(xv2[i] - mx) / z;
    });
}

// ---- framework primitives ------------------------------------------------

Var stop_gradient(Var x) {
    Tape& t = *x.tape;
    return t.leaf(t.value(x), false);
}

Var cosine_sim(Var a, Var b) {
    require_same_tape(a, b);
    Tape& t = *a.tape;
    const Tensor &av = t.value(a), &bv = t.value(b);
    check(av.ndim() == 1 && bv.ndim() == 1 && av.dim(0) == bv.dim(0), "ShapeMismatch",
          "cosine_sim " + av.shape_str() + " vs " + bv.shape_str());
    int n = av.dim(0);
    double dot = 0.0, na2 = 0.0, nb2 = 0.0;
    for (int i = 0; i < n; ++i) {
        dot += av[i] * bv[i];
        na2 += av[i] * av[i];
        nb2 += bv[i] * bv[i];
    }
    double na = std::sqrt(na2), nb = std::sqrt(nb2);
    check(na >= 1e-12 && nb >= 1e-12, "ZeroNorm", "cosine_sim of near-zero vector");
    double cosv = dot / (na * nb);
    int ai = a.id, bi = b.id;
    return t.emit(Tensor::scalar(cosv), {ai, bi}, [ai, bi, n, na, nb, cosv](BackCtx& c) {
        double d = c.adjoint().item();
        const Tensor& av2 = c.val(ai);
        const Tensor& bv2 = c.val(bi);
        if (c.needs(ai)) {
            Tensor& g = c.sink(ai);
            for (int i = 0; i < n; ++i)
                g[i] += d * (bv2[i] / (na * nb) - cosv * av2[i] / (na * na));
        }
        if (c.needs(bi)) {
            Tensor& g = c.sink(bi);
            for (int i = 0; i < n; ++i)
                g[i] += d * (av2[i] / (na * nb) - cosv * bv2[i] / (nb * nb));
        }
    });
}

} // namespace codlab::diff
