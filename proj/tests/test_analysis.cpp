#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "codlab/analysis.hpp"
#include "oracles.hpp"

using namespace codlab;
using analysis::AlignmentMetrics;
using analysis::RepresentationSnapshot;

namespace {

// Random rotation via Gram-Schmidt on a random square matrix.
Tensor random_rotation(int p, Rng& rng) {
    Tensor q({p, p});
    for (int col = 0; col < p; ++col) {
        std::vector<double> v(static_cast<size_t>(p));
        for (double& x : v) x = rng.uniform(-1, 1);
        for (int prev = 0; prev < col; ++prev) {
            double dot = 0;
            for (int i = 0; i < p; ++i) dot += v[static_cast<size_t>(i)] * q.at2(i, prev);
            for (int i = 0; i < p; ++i) v[static_cast<size_t>(i)] -= dot * q.at2(i, prev);
        }
        double norm = 0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (int i = 0; i < p; ++i) q.at2(i, col) = v[static_cast<size_t>(i)] / norm;
    }
    return q;
}

Tensor apply_rotation(const Tensor& points, const Tensor& rot) {
    int m = points.dim(0), p = points.dim(1);
    Tensor out({m, p});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < p; ++j) {
            double acc = 0;
            for (int k = 0; k < p; ++k) acc += points.at2(i, k) * rot.at2(k, j);
            out.at2(i, j) = acc;
        }
    return out;
}

} // namespace

TEST_CASE("pca2 collinear points") {
    Tensor pts({4, 2}, {1, 0, -1, 0, 2, 0, -2, 0});
    auto res = analysis::pca2(pts);
    CHECK(!res.degenerate);
    CHECK(res.explained[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.explained[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::fabs(res.components.at2(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.components.at2(0, 0) > 0);  // sign convention
}

TEST_CASE("pca2 isotropic four points") {
    Tensor pts({4, 2}, {1, 0, 0, 1, -1, 0, 0, -1});
    auto res = analysis::pca2(pts);
    CHECK(res.explained[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(res.explained[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("pca2 degenerate input flagged") {
    Tensor pts({5, 3});
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) pts.at2(i, j) = 7.5;
    auto res = analysis::pca2(pts);
    CHECK(res.degenerate);
    CHECK(res.explained[0] == 0.0);
    CHECK(res.explained[1] == 0.0);

    CHECK_THROWS_WITH_AS(analysis::pca2(Tensor({2, 4})), doctest::Contains("DegenerateInput"),
                         Error);
}

TEST_CASE("pca2 matches brute-force eigendecomposition") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed * 71 + 5);
        Tensor pts = oracles::random_tensor({20, 5}, rng, -2, 2);
        auto res = analysis::pca2(pts);

        // oracle: covariance of centered data, dense eigensolver
        int m = 20, p = 5;
        std::vector<double> mean(static_cast<size_t>(p), 0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < p; ++j) mean[static_cast<size_t>(j)] += pts.at2(i, j);
        for (double& v : mean) v /= m;
        Tensor cov({p, p});
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b) {
                double acc = 0;
                for (int i = 0; i < m; ++i)
                    acc += (pts.at2(i, a) - mean[static_cast<size_t>(a)]) *
                           (pts.at2(i, b) - mean[static_cast<size_t>(b)]);
                cov.at2(a, b) = acc / (m - 1);
            }
        std::vector<double> eigvals;
        std::vector<std::vector<double>> eigvecs;
        oracles::brute_force_eigen(cov, eigvals, eigvecs);

        double total = 0;
        for (double v : eigvals) total += std::max(v, 0.0);
        CAPTURE(seed);
        CHECK(res.explained[0] == doctest::Approx(eigvals[0] / total).epsilon(1e-8));
        CHECK(res.explained[1] == doctest::Approx(eigvals[1] / total).epsilon(1e-8));
        for (int comp = 0; comp < 2; ++comp) {
            double agree = 0;
            for (int i = 0; i < p; ++i)
                agree += res.components.at2(i, comp) *
                         eigvecs[static_cast<size_t>(comp)][static_cast<size_t>(i)];
            CHECK(std::fabs(agree) == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("pca2 rotation invariance of explained ratios") {
    Rng rng(2024);
    Tensor pts = oracles::random_tensor({30, 6}, rng);
    auto base = analysis::pca2(pts);
    Tensor rot = random_rotation(6, rng);
    auto rotated = analysis::pca2(apply_rotation(pts, rot));
    CHECK(base.explained[0] == doctest::Approx(rotated.explained[0]).epsilon(1e-9));
    CHECK(base.explained[1] == doctest::Approx(rotated.explained[1]).epsilon(1e-9));
}

TEST_CASE("alignment_metrics identity and negation cases") {
    // orthogonal rows, graph equal to text
    Tensor z({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    RepresentationSnapshot snap{0, z, z, "t"};
    AlignmentMetrics m = analysis::alignment_metrics(snap);
    CHECK(m.paired_cos == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.within_text == doctest::Approx(m.within_graph).epsilon(1e-12));
    // between over all ordered pairs includes the zero-distance diagonal
    CHECK(m.between == doctest::Approx(2.0 * m.within_text / 3.0).epsilon(1e-12));

    Tensor neg = z;
    for (int i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
    RepresentationSnapshot snap2{0, z, neg, "t"};
    CHECK(analysis::alignment_metrics(snap2).paired_cos == doctest::Approx(-1.0));
}

TEST_CASE("alignment_metrics N=2 hand computation") {
    Tensor zt({2, 2}, {1, 0, 0, 1});
    Tensor zg({2, 2}, {1, 1, 1, 0});
    RepresentationSnapshot snap{0, zt, zg, "t"};
    AlignmentMetrics m = analysis::alignment_metrics(snap);

    double s2 = 1.0 / std::sqrt(2.0);
    CHECK(m.paired_cos == doctest::Approx((s2 + 0.0) / 2).epsilon(1e-12));
    CHECK(m.within_text == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.within_graph == doctest::Approx(1.0 - s2).epsilon(1e-12));
    // cross pairs: (t0,g0)=s2, (t0,g1)=1, (t1,g0)=s2, (t1,g1)=0
    CHECK(m.between ==
          doctest::Approx(((1 - s2) + 0.0 + (1 - s2) + 1.0) / 4).epsilon(1e-12));
}

TEST_CASE("alignment_metrics excludes zero rows, errors when too few remain") {
    Tensor zt({3, 2}, {1, 0, 0, 0, 0, 1});
    Tensor zg({3, 2}, {1, 0, 1, 1, 0, 1});
    RepresentationSnapshot snap{0, zt, zg, "t"};
    AlignmentMetrics m = analysis::alignment_metrics(snap);
    CHECK(m.excluded_rows == 1);
    CHECK(m.paired_cos == doctest::Approx(1.0));

    Tensor zeros({3, 2});
    RepresentationSnapshot bad{0, zeros, zg, "t"};
    CHECK_THROWS_WITH_AS(analysis::alignment_metrics(bad),
                         doctest::Contains("DegenerateInput"), Error);
}

TEST_CASE("alignment_metrics invariances") {
    Rng rng(55);
    int n = 6, p = 5;
    Tensor zt = oracles::random_tensor({n, p}, rng, 0.1, 1.0);
    Tensor zg = oracles::random_tensor({n, p}, rng, 0.1, 1.0);
    AlignmentMetrics base = analysis::alignment_metrics({0, zt, zg, "t"});

    // positive per-row rescaling
    Tensor zt2 = zt, zg2 = zg;
    for (int i = 0; i < n; ++i) {
        double st = rng.uniform(0.3, 4.0), sg = rng.uniform(0.3, 4.0);
        for (int j = 0; j < p; ++j) {
            zt2.at2(i, j) *= st;
            zg2.at2(i, j) *= sg;
        }
    }
    AlignmentMetrics scaled = analysis::alignment_metrics({0, zt2, zg2, "t"});
    CHECK(scaled.paired_cos == doctest::Approx(base.paired_cos).epsilon(1e-12));
    CHECK(scaled.between == doctest::Approx(base.between).epsilon(1e-12));
    CHECK(scaled.within_text == doctest::Approx(base.within_text).epsilon(1e-12));

    // joint row permutation
    std::vector<int> perm = {3, 0, 5, 1, 4, 2};
    Tensor zt3({n, p}), zg3({n, p});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) {
            zt3.at2(i, j) = zt.at2(perm[static_cast<size_t>(i)], j);
            zg3.at2(i, j) = zg.at2(perm[static_cast<size_t>(i)], j);
        }
    AlignmentMetrics permuted = analysis::alignment_metrics({0, zt3, zg3, "t"});
    CHECK(permuted.paired_cos == doctest::Approx(base.paired_cos).epsilon(1e-12));
    CHECK(permuted.between == doctest::Approx(base.between).epsilon(1e-12));
    CHECK(permuted.within_graph == doctest::Approx(base.within_graph).epsilon(1e-12));
    CHECK(base.between >= 0.0);
}

TEST_CASE("regime_verdict rule application") {
    auto metrics_with_ratio = [](double within, double ratio) {
        AlignmentMetrics m;
        m.within_text = within;
        m.within_graph = within;
        m.between = ratio * within;
        return m;
    };

    // constant ratio 2.0 -> complementarity
    std::vector<AlignmentMetrics> flat(5, metrics_with_ratio(0.5, 2.0));
    CHECK(analysis::regime_verdict(flat).regime == analysis::Regime::Complementarity);

    // 2.0 -> 1.05 monotone -> complete
    std::vector<AlignmentMetrics> falling;
    for (double r : {2.0, 1.7, 1.4, 1.2, 1.05}) falling.push_back(metrics_with_ratio(0.5, r));
    CHECK(analysis::regime_verdict(falling).regime == analysis::Regime::Complete);

    // 1.4 -> 1.6 with rising within -> partial
    std::vector<AlignmentMetrics> mixed;
    double w = 0.3;
    for (double r : {1.4, 1.45, 1.5, 1.55, 1.6}) {
        mixed.push_back(metrics_with_ratio(w, r));
        w += 0.05;
    }
    CHECK(analysis::regime_verdict(mixed).regime == analysis::Regime::Partial);

    CHECK_THROWS_WITH_AS(analysis::regime_verdict({flat[0], flat[1]}),
                         doctest::Contains("TooFewEpochs"), Error);
}
