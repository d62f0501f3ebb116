#include "codlab/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace codlab::analysis {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues (descending) and matching unit eigenvectors as columns.
void jacobi_eigen(Tensor a, std::vector<double>& eigvals, Tensor& eigvecs) {
    int n = a.dim(0);
    eigvecs = Tensor({n, n});
    for (int i = 0; i < n; ++i) eigvecs.at2(i, i) = 1.0;

    const double tol = 1e-10;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a.at2(p, q) * a.at2(p, q);
        if (std::sqrt(off) < tol) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a.at2(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                double theta = (a.at2(q, q) - a.at2(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a.at2(k, p), akq = a.at2(k, q);
                    a.at2(k, p) = c * akp - s * akq;
                    a.at2(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a.at2(p, k), aqk = a.at2(q, k);
                    a.at2(p, k) = c * apk - s * aqk;
                    a.at2(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = eigvecs.at2(k, p), vkq = eigvecs.at2(k, q);
                    eigvecs.at2(k, p) = c * vkp - s * vkq;
                    eigvecs.at2(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    eigvals.resize(static_cast<size_t>(n));
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        eigvals[static_cast<size_t>(i)] = a.at2(i, i);
        order[static_cast<size_t>(i)] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return eigvals[static_cast<size_t>(x)] > eigvals[static_cast<size_t>(y)];
    });

    std::vector<double> sorted_vals(static_cast<size_t>(n));
    Tensor sorted_vecs({n, n});
    for (int j = 0; j < n; ++j) {
        sorted_vals[static_cast<size_t>(j)] = eigvals[static_cast<size_t>(order[static_cast<size_t>(j)])];
        for (int i = 0; i < n; ++i)
            sorted_vecs.at2(i, j) = eigvecs.at2(i, order[static_cast<size_t>(j)]);
    }
    eigvals = std::move(sorted_vals);
    eigvecs = std::move(sorted_vecs);
}

double cosine(const double* a, const double* b, int p, bool* zero = nullptr) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < p; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < 1e-12 || nb < 1e-12) {
        if (zero) *zero = true;
        return 0.0;
    }
    return dot / (na * nb);
}

} // namespace

Pca2Result pca2(const Tensor& points) {
    check(points.ndim() == 2, "ShapeMismatch", "pca2 needs an (M,p) matrix");
    int m = points.dim(0), p = points.dim(1);
    check(m >= 3, "DegenerateInput", "pca2 needs at least 3 points");
    check(p >= 2, "ShapeMismatch", "pca2 needs dimensionality >= 2");

    std::vector<double> mean(static_cast<size_t>(p), 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < p; ++j) mean[static_cast<size_t>(j)] += points.at2(i, j);
    for (double& v : mean) v /= m;

    Tensor centered({m, p});
    double spread = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < p; ++j) {
            centered.at2(i, j) = points.at2(i, j) - mean[static_cast<size_t>(j)];
            spread += centered.at2(i, j) * centered.at2(i, j);
        }

    Pca2Result res;
    res.projected = Tensor({m, 2});
    res.components = Tensor({p, 2});
    if (spread < 1e-24) {
        res.degenerate = true;
        res.explained = {0.0, 0.0};
        return res;
    }

    Tensor cov({p, p});
    for (int a = 0; a < p; ++a)
        for (int b = a; b < p; ++b) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += centered.at2(i, a) * centered.at2(i, b);
            acc /= (m - 1);
            cov.at2(a, b) = acc;
            cov.at2(b, a) = acc;
        }

    std::vector<double> eigvals;
    Tensor eigvecs;
    jacobi_eigen(cov, eigvals, eigvecs);

    double total = 0.0;
    for (double v : eigvals) total += std::max(v, 0.0);
    res.explained = {total > 0 ? std::max(eigvals[0], 0.0) / total : 0.0,
                     total > 0 ? std::max(eigvals.size() > 1 ? eigvals[1] : 0.0, 0.0) / total
                               : 0.0};

    for (int comp = 0; comp < 2; ++comp) {
        // Largest-|.| coordinate positive.
        int arg = 0;
        double best = 0.0;
        for (int i = 0; i < p; ++i) {
            double v = std::fabs(eigvecs.at2(i, comp));
            if (v > best) {
                best = v;
                arg = i;
            }
        }
        double sign = eigvecs.at2(arg, comp) >= 0.0 ? 1.0 : -1.0;
        for (int i = 0; i < p; ++i) res.components.at2(i, comp) = sign * eigvecs.at2(i, comp);
    }

    for (int i = 0; i < m; ++i)
        for (int comp = 0; comp < 2; ++comp) {
            double acc = 0.0;
            for (int j = 0; j < p; ++j) acc += centered.at2(i, j) * res.components.at2(j, comp);
            res.projected.at2(i, comp) = acc;
        }
    return res;
}

AlignmentMetrics alignment_metrics(const RepresentationSnapshot& snap,
                                   const AlignmentOptions& opts) {
    check(snap.z_text.ndim() == 2 && snap.z_graph.ndim() == 2, "ShapeMismatch",
          "snapshot must hold (N,p) matrices");
    check(snap.z_text.same_shape(snap.z_graph), "BatchLenMismatch",
          "z_text and z_graph shapes differ");
    int n_all = snap.z_text.dim(0), p = snap.z_text.dim(1);

    auto row_norm = [p](const Tensor& t, int i) {
        double acc = 0.0;
        for (int j = 0; j < p; ++j) acc += t.at2(i, j) * t.at2(i, j);
        return std::sqrt(acc);
    };

    AlignmentMetrics out;
    std::vector<int> keep;
    for (int i = 0; i < n_all; ++i) {
        if (row_norm(snap.z_text, i) < 1e-12 || row_norm(snap.z_graph, i) < 1e-12) {
            ++out.excluded_rows;
            continue;
        }
        keep.push_back(i);
    }
    int n = static_cast<int>(keep.size());
    check(n >= 2, "DegenerateInput", "fewer than 2 usable rows after zero-norm exclusion");

    const double* zt = snap.z_text.data();
    const double* zg = snap.z_graph.data();
    auto trow = [&](int i) { return zt + static_cast<size_t>(keep[static_cast<size_t>(i)]) * p; };
    auto grow = [&](int i) { return zg + static_cast<size_t>(keep[static_cast<size_t>(i)]) * p; };

    double paired = 0.0;
    for (int i = 0; i < n; ++i) paired += cosine(trow(i), grow(i), p);
    out.paired_cos = paired / n;

    auto within = [&](auto rowfn) {
        double acc = 0.0;
        int count = 0;
        for (int i = 0; i < n; ++i) {
            int j0 = opts.within_include_self ? i : i + 1;
            for (int j = j0; j < n; ++j) {
                acc += 1.0 - cosine(rowfn(i), rowfn(j), p);
                ++count;
            }
        }
        return count > 0 ? acc / count : 0.0;
    };
    out.within_text = within(trow);
    out.within_graph = within(grow);

    double acc = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (opts.between_exclude_diagonal && i == j) continue;
            acc += 1.0 - cosine(trow(i), grow(j), p);
            ++count;
        }
    out.between = count > 0 ? acc / count : 0.0;
    return out;
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::Complementarity: return "complementarity";
        case Regime::Partial: return "partial";
        case Regime::Complete: return "complete";
    }
    return "?";
}

RegimeVerdict regime_verdict(const std::vector<AlignmentMetrics>& trajectory,
                             const RegimeConfig& cfg) {
    check(trajectory.size() >= 3, "TooFewEpochs",
          "regime verdict needs at least 3 epochs, got " +
              std::to_string(trajectory.size()));

    size_t e = trajectory.size();
    auto ls_slope = [e](const std::vector<double>& y) {
        double xbar = (static_cast<double>(e) - 1) / 2.0;
        double ybar = 0.0;
        for (double v : y) ybar += v;
        ybar /= static_cast<double>(e);
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < e; ++i) {
            num += (static_cast<double>(i) - xbar) * (y[i] - ybar);
            den += (static_cast<double>(i) - xbar) * (static_cast<double>(i) - xbar);
        }
        return den > 0 ? num / den : 0.0;
    };
    // Fitted total change over the trajectory relative to the mean level.
    auto rel_growth = [&](const std::vector<double>& y) {
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(e);
        if (mean < 1e-12) return 0.0;
        return ls_slope(y) * (static_cast<double>(e) - 1) / mean;
    };

    std::vector<double> r(e), within(e), between(e);
    for (size_t i = 0; i < e; ++i) {
        r[i] = trajectory[i].ratio();
        within[i] = 0.5 * (trajectory[i].within_text + trajectory[i].within_graph);
        between[i] = trajectory[i].between;
    }

    RegimeVerdict v;
    v.slope = ls_slope(r);
    v.final_ratio = r.back();
    v.min_ratio = *std::min_element(r.begin(), r.end());
    v.within_growth = rel_growth(within);
    v.between_growth = rel_growth(between);

    // Trend over the later half: a sustained separation can relax downward
    // early on without being on its way to alignment.
    size_t half = e / 2;
    std::vector<double> tail(r.begin() + static_cast<long>(half), r.end());
    double tail_mean = 0.0;
    for (double x : tail) tail_mean += x;
    tail_mean /= static_cast<double>(tail.size());
    double tail_change = 0.0;
    if (tail.size() >= 2 && tail_mean > 1e-12) {
        double xb = (static_cast<double>(tail.size()) - 1) / 2.0;
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < tail.size(); ++i) {
            num += (static_cast<double>(i) - xb) * (tail[i] - tail_mean);
            den += (static_cast<double>(i) - xb) * (static_cast<double>(i) - xb);
        }
        tail_change = den > 0 ? (num / den) * (static_cast<double>(tail.size()) - 1) / tail_mean
                              : 0.0;
    }

    if (v.final_ratio <= 1.0 + cfg.eps_align && v.slope < 0.0)
        v.regime = Regime::Complete;
    else if (v.within_growth > cfg.growth_min && v.between_growth > cfg.growth_min)
        v.regime = Regime::Partial;  // distances still spreading on both axes
    else if (v.min_ratio >= 1.0 + cfg.eps_complement && tail_change >= -cfg.plateau_tolerance)
        v.regime = Regime::Complementarity;  // high and holding
    else
        v.regime = Regime::Partial;
    return v;
}

} // namespace codlab::analysis
