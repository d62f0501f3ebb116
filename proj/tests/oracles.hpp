// Test-only reference implementations, independent of the library's
// autodiff path. Each oracle recomputes its quantity from scratch so the
// main code cannot agree with it by construction.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "codlab/rng.hpp"
#include "codlab/tape.hpp"
#include "codlab/tensor.hpp"

namespace oracles {

using codlab::Rng;
using codlab::Tensor;

// Builds a scalar expression over leaves bound to the given tensors.
using Builder =
    std::function<codlab::diff::Var(codlab::diff::Tape&, std::vector<codlab::diff::Var>&)>;

struct GradCheckResult {
    double max_rel_err = 0.0;
    int worst_input = -1;
    int worst_coord = -1;
};

inline double forward_value(const Builder& build, const std::vector<Tensor>& inputs) {
    codlab::diff::Tape tape;
    std::vector<codlab::diff::Var> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t, false));
    return tape.value(build(tape, leaves)).item();
}

// Central finite differences against reverse-mode gradients, the error
// metric being |ad - fd| / max(1, |fd|) per coordinate.
inline GradCheckResult grad_check(const Builder& build, const std::vector<Tensor>& inputs,
                                  double h = 1e-5) {
    codlab::diff::Tape tape;
    std::vector<codlab::diff::Var> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t, true));
    codlab::diff::Var root = build(tape, leaves);
    tape.backward(root);

    GradCheckResult res;
    for (size_t which = 0; which < inputs.size(); ++which) {
        Tensor ad = tape.grad(leaves[which]);
        for (int i = 0; i < inputs[which].size(); ++i) {
            std::vector<Tensor> plus = inputs, minus = inputs;
            plus[which][i] += h;
            minus[which][i] -= h;
            double fd = (forward_value(build, plus) - forward_value(build, minus)) / (2 * h);
            double err = std::fabs(ad[i] - fd) / std::max(1.0, std::fabs(fd));
            if (err > res.max_rel_err) {
                res.max_rel_err = err;
                res.worst_input = static_cast<int>(which);
                res.worst_coord = i;
            }
        }
    }
    return res;
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(std::move(shape));
    for (int i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// ---- plain-double contrastive co-distillation ------------------------------

// Re-implementation of the batch objective with no tape involved: cosine
// similarities, a max-shifted log-sum-exp denominator per anchor over the
// configured pool, and the 1/2-weighted bidirectional sum.
struct ScalarCoDConfig {
    double tau = 1.0;
    bool both_modalities = true;
    bool batch_mean = false;
};

inline double scalar_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double scalar_lcl(const std::vector<double>& anchor,
                         const std::vector<double>& positive,
                         const std::vector<std::vector<double>>& pool, double tau) {
    std::vector<double> sims;
    sims.reserve(pool.size());
    for (const auto& u : pool) sims.push_back(scalar_cosine(anchor, u) / tau);
    double mx = sims[0];
    for (double s : sims) mx = std::max(mx, s);
    double z = 0;
    for (double s : sims) z += std::exp(s - mx);
    double lse = mx + std::log(z);
    return lse - scalar_cosine(anchor, positive) / tau;
}

inline double scalar_cod_loss(const std::vector<std::vector<double>>& z_text,
                              const std::vector<std::vector<double>>& z_graph,
                              const ScalarCoDConfig& cfg) {
    size_t n = z_text.size();
    double acc = 0;
    for (size_t i = 0; i < n; ++i) {
        std::vector<std::vector<double>> pool;
        if (cfg.both_modalities)
            for (size_t j = 0; j < n; ++j)
                if (j != i) pool.push_back(z_text[j]);
        for (size_t j = 0; j < n; ++j) pool.push_back(z_graph[j]);
        acc += scalar_lcl(z_text[i], z_graph[i], pool, cfg.tau);

        pool.clear();
        if (cfg.both_modalities)
            for (size_t j = 0; j < n; ++j)
                if (j != i) pool.push_back(z_graph[j]);
        for (size_t j = 0; j < n; ++j) pool.push_back(z_text[j]);
        acc += scalar_lcl(z_graph[i], z_text[i], pool, cfg.tau);
    }
    return cfg.batch_mean ? 0.5 * acc / static_cast<double>(n) : 0.5 * acc;
}

// ---- dense eigensolver (power iteration with deflation) ----------------------

// Full spectrum of a symmetric matrix by repeated power iteration with
// Gram-Schmidt deflation; deliberately a different algorithm from the
// library's Jacobi sweep.
inline void brute_force_eigen(const Tensor& sym, std::vector<double>& eigvals,
                              std::vector<std::vector<double>>& eigvecs) {
    int n = sym.dim(0);
    eigvals.clear();
    eigvecs.clear();

    // Shift so all eigenvalues are positive and the dominant one is the
    // largest original eigenvalue.
    double shift = 0.0;
    for (int i = 0; i < n; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j < n; ++j) rowsum += std::fabs(sym.at2(i, j));
        shift = std::max(shift, rowsum);
    }

    Tensor a = sym;
    for (int i = 0; i < n; ++i) a.at2(i, i) += shift;

    Rng rng(1234567);
    for (int k = 0; k < n; ++k) {
        std::vector<double> v(static_cast<size_t>(n));
        for (double& x : v) x = rng.uniform(-1, 1);
        for (int iter = 0; iter < 20000; ++iter) {
            // project out found eigenvectors
            for (const auto& u : eigvecs) {
                double dot = 0;
                for (int i = 0; i < n; ++i) dot += v[static_cast<size_t>(i)] * u[static_cast<size_t>(i)];
                for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] -= dot * u[static_cast<size_t>(i)];
            }
            std::vector<double> w(static_cast<size_t>(n), 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    w[static_cast<size_t>(i)] += a.at2(i, j) * v[static_cast<size_t>(j)];
            double norm = 0;
            for (double x : w) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-300) break;
            double delta = 0;
            for (int i = 0; i < n; ++i) {
                double nw = w[static_cast<size_t>(i)] / norm;
                delta = std::max(delta, std::fabs(nw - v[static_cast<size_t>(i)]));
                v[static_cast<size_t>(i)] = nw;
            }
            if (delta < 1e-14 && iter > 3) break;
        }
        double lambda = 0;
        for (int i = 0; i < n; ++i) {
            double wi = 0;
            for (int j = 0; j < n; ++j) wi += a.at2(i, j) * v[static_cast<size_t>(j)];
            lambda += v[static_cast<size_t>(i)] * wi;
        }
        eigvals.push_back(lambda - shift);
        eigvecs.push_back(v);
    }
}

} // namespace oracles
