#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "codlab/objective.hpp"
#include "oracles.hpp"

using namespace codlab;
using diff::Tape;
using diff::Var;
using obj::CoDConfig;
using obj::FusionMode;

namespace {

std::vector<Var> as_vars(Tape& t, const std::vector<std::vector<double>>& rows,
                         bool requires_grad = false) {
    std::vector<Var> out;
    for (const auto& r : rows)
        out.push_back(t.leaf(Tensor({static_cast<int>(r.size())}, r), requires_grad));
    return out;
}

// The worked batch: two orthogonal unit pairs, text matching graph.
const std::vector<std::vector<double>> kT = {{1, 0}, {0, 1}};
const std::vector<std::vector<double>> kS = {{1, 0}, {0, 1}};

} // namespace

TEST_CASE("fuse variants") {
    Tape t;
    enc::BoundParams none;
    Var a = t.leaf(Tensor({2}, {1, 2}), false);
    Var b = t.leaf(Tensor({2}, {3, 4}), false);
    CHECK(t.value(obj::fuse(t, a, b, FusionMode::Concat, none)).flat() ==
          std::vector<double>{1, 2, 3, 4});

    enc::ParamSet ps;
    Tensor eye({2, 2});
    eye.at2(0, 0) = eye.at2(1, 1) = 1.0;
    ps.add("fuse.w", eye);
    enc::BoundParams bound = enc::bind(t, ps, false);
    Var zero = t.leaf(Tensor({2}), false);
    CHECK(t.value(obj::fuse(t, a, zero, FusionMode::Residual, bound)).flat() ==
          std::vector<double>{1, 2});

    // text-only ignores any h_graph perturbation
    Var b2 = t.leaf(Tensor({2}, {99, -99}), false);
    CHECK(t.value(obj::fuse(t, a, b, FusionMode::TextOnly, none)).flat() ==
          t.value(obj::fuse(t, a, b2, FusionMode::TextOnly, none)).flat());

    Var odd = t.leaf(Tensor({3}), false);
    CHECK_THROWS_WITH_AS(obj::fuse(t, a, odd, FusionMode::Residual, bound),
                         doctest::Contains("DimMismatch"), Error);
}

TEST_CASE("classification loss: uniform, saturated, bad label") {
    Tape t;
    Var logits = t.leaf(Tensor({3}, {0, 0, 0}), false);
    for (int y = 0; y < 3; ++y)
        CHECK(t.value(obj::classification_loss(t, logits, y)).item() ==
              doctest::Approx(std::log(3.0)).epsilon(1e-12));

    Var sharp = t.leaf(Tensor({3}, {50, 0, 0}), false);
    CHECK(t.value(obj::classification_loss(t, sharp, 0)).item() < 1e-10);

    CHECK_THROWS_WITH_AS(obj::classification_loss(t, logits, 3),
                         doctest::Contains("LabelOutOfRange"), Error);
}

TEST_CASE("ranking loss worked example") {
    Tape t;
    auto logit = [](double p) { return std::log(p / (1 - p)); };
    std::vector<Var> scores = {t.leaf(Tensor::scalar(logit(0.9)), false),
                               t.leaf(Tensor::scalar(logit(0.1)), false)};
    double loss = t.value(obj::ranking_loss(t, scores, {0})).item();
    CHECK(loss == doctest::Approx(-(std::log(0.9) + std::log(0.9)) / 2).epsilon(1e-12));

    CHECK_THROWS_WITH_AS(obj::ranking_loss(t, scores, {5}),
                         doctest::Contains("LabelOutOfRange"), Error);
}

TEST_CASE("contrastive_term worked value, singleton, temperature limit") {
    CoDConfig cfg;
    cfg.tau = 1.0;

    Tape t;
    std::vector<Var> tz = as_vars(t, kT);
    std::vector<Var> sz = as_vars(t, kS);
    // pool(t1) = {s1, t2, s2}
    std::vector<Var> pool = {sz[0], tz[1], sz[1]};
    double lcl = t.value(obj::contrastive_term(t, tz[0], sz[0], pool, cfg)).item();
    CHECK(lcl == doctest::Approx(std::log((std::exp(1.0) + 2.0) / std::exp(1.0)))
                     .epsilon(1e-12));  // ~0.5514

    // singleton pool: zero regardless of similarity
    std::vector<Var> single = {sz[0]};
    CHECK(t.value(obj::contrastive_term(t, tz[0], sz[0], single, cfg)).item() == 0.0);

    // tau -> large: softmax flattens to ln|pool|
    CoDConfig hot;
    hot.tau = 1e6;
    double flat = t.value(obj::contrastive_term(t, tz[0], sz[0], pool, hot)).item();
    CHECK(flat == doctest::Approx(std::log(3.0)).epsilon(1e-3));

    CHECK_THROWS_WITH_AS(obj::contrastive_term(t, tz[0], sz[0], {}, cfg),
                         doctest::Contains("EmptyPool"), Error);
}

TEST_CASE("cod_loss worked orthogonal-pairs value") {
    CoDConfig cfg;
    cfg.tau = 1.0;
    Tape t;
    std::vector<Var> tz = as_vars(t, kT);
    std::vector<Var> sz = as_vars(t, kS);
    double val = t.value(obj::cod_loss(t, tz, sz, cfg)).item();
    double expected = 2.0 * std::log((std::exp(1.0) + 2.0) / std::exp(1.0));
    CHECK(val == doctest::Approx(expected).epsilon(1e-9));  // ~1.1028

    CHECK_THROWS_WITH_AS(obj::cod_loss(t, tz, {sz[0]}, cfg),
                         doctest::Contains("BatchLenMismatch"), Error);
}

TEST_CASE("cod_loss N=1 opposite-only pool is zero") {
    CoDConfig cfg;
    cfg.tau = 0.3;
    cfg.negative_pool = obj::NegativePool::OppositeOnly;
    Tape t;
    std::vector<Var> tz = as_vars(t, {{0.5, 0.2}});
    std::vector<Var> sz = as_vars(t, {{-0.3, 0.9}});
    CHECK(t.value(obj::cod_loss(t, tz, sz, cfg)).item() == 0.0);
}

TEST_CASE("cod_loss matches the scalar oracle on random batches") {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed * 31 + 17);
        int n = rng.uniform_int(1, 8);
        int p = rng.uniform_int(2, 16);
        std::vector<std::vector<double>> zt, zg;
        for (int i = 0; i < n; ++i) {
            std::vector<double> a(static_cast<size_t>(p)), b(static_cast<size_t>(p));
            for (double& x : a) x = rng.uniform(-2, 2);
            for (double& x : b) x = rng.uniform(-2, 2);
            zt.push_back(a);
            zg.push_back(b);
        }

        CoDConfig cfg;
        cfg.tau = rng.uniform(0.05, 2.0);
        cfg.batch_mean = rng.coin();
        cfg.negative_pool =
            rng.coin() ? obj::NegativePool::BothModalities : obj::NegativePool::OppositeOnly;

        Tape t;
        double val = t.value(obj::cod_loss(t, as_vars(t, zt), as_vars(t, zg), cfg)).item();

        oracles::ScalarCoDConfig scfg;
        scfg.tau = cfg.tau;
        scfg.batch_mean = cfg.batch_mean;
        scfg.both_modalities = cfg.negative_pool == obj::NegativePool::BothModalities;
        double expected = oracles::scalar_cod_loss(zt, zg, scfg);
        CAPTURE(seed);
        CHECK(std::fabs(val - expected) <= 1e-9);
    }
}

TEST_CASE("stop-gradient contract: text-anchored half never touches graph side") {
    // l_cl(z_text, sg(z_graph)) must leave all graph-side inputs with
    // bit-zero gradients, and symmetrically.
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed + 500);
        int n = 4, p = 6;
        Tape t;
        std::vector<Var> zt, zg;
        for (int i = 0; i < n; ++i) {
            zt.push_back(t.leaf(oracles::random_tensor({p}, rng), true));
            zg.push_back(t.leaf(oracles::random_tensor({p}, rng), true));
        }
        CoDConfig cfg;
        cfg.tau = 0.2;

        // only the text-anchored halves
        std::vector<Var> sg_graph;
        for (Var z : zg) sg_graph.push_back(diff::stop_gradient(z));
        Var acc = t.constant(Tensor::scalar(0.0));
        for (int i = 0; i < n; ++i) {
            std::vector<Var> pool;
            for (int j = 0; j < n; ++j)
                if (j != i) pool.push_back(zt[static_cast<size_t>(j)]);
            for (int j = 0; j < n; ++j) pool.push_back(sg_graph[static_cast<size_t>(j)]);
            acc = diff::add(acc, obj::contrastive_term(t, zt[static_cast<size_t>(i)],
                                                       sg_graph[static_cast<size_t>(i)], pool, cfg));
        }
        t.backward(acc);
        for (int i = 0; i < n; ++i) {
            CHECK(t.grad(zg[static_cast<size_t>(i)]).flat() == std::vector<double>(static_cast<size_t>(p), 0.0));
            CHECK(t.grad(zt[static_cast<size_t>(i)]).flat() != std::vector<double>(static_cast<size_t>(p), 0.0));
        }
    }
}

TEST_CASE("cod_loss gradient equals the anchored-half gradient (isolation)") {
    Rng rng(321);
    int n = 3, p = 5;
    std::vector<Tensor> zt_v, zg_v;
    for (int i = 0; i < n; ++i) {
        zt_v.push_back(oracles::random_tensor({p}, rng));
        zg_v.push_back(oracles::random_tensor({p}, rng));
    }
    CoDConfig cfg;
    cfg.tau = 0.5;

    // gradient of the full loss w.r.t. graph inputs...
    Tape t1;
    std::vector<Var> zt1, zg1;
    for (int i = 0; i < n; ++i) {
        zt1.push_back(t1.leaf(zt_v[static_cast<size_t>(i)], true));
        zg1.push_back(t1.leaf(zg_v[static_cast<size_t>(i)], true));
    }
    t1.backward(diff::scale(obj::cod_loss(t1, zt1, zg1, cfg), 2.0));  // undo the 1/2

    // ...equals the gradient of only the graph-anchored terms.
    Tape t2;
    std::vector<Var> zt2, zg2;
    for (int i = 0; i < n; ++i) {
        zt2.push_back(t2.leaf(zt_v[static_cast<size_t>(i)], true));
        zg2.push_back(t2.leaf(zg_v[static_cast<size_t>(i)], true));
    }
    std::vector<Var> sg_text;
    for (Var z : zt2) sg_text.push_back(diff::stop_gradient(z));
    Var acc = t2.constant(Tensor::scalar(0.0));
    for (int i = 0; i < n; ++i) {
        std::vector<Var> pool;
        for (int j = 0; j < n; ++j)
            if (j != i) pool.push_back(zg2[static_cast<size_t>(j)]);
        for (int j = 0; j < n; ++j) pool.push_back(sg_text[static_cast<size_t>(j)]);
        acc = diff::add(acc, obj::contrastive_term(t2, zg2[static_cast<size_t>(i)],
                                                   sg_text[static_cast<size_t>(i)], pool, cfg));
    }
    t2.backward(acc);

    for (int i = 0; i < n; ++i)
        CHECK(t1.grad(zg1[static_cast<size_t>(i)]).flat() == t2.grad(zg2[static_cast<size_t>(i)]).flat());
}

TEST_CASE("cod_loss value symmetry under swapping modalities") {
    Rng rng(888);
    int n = 5, p = 7;
    std::vector<std::vector<double>> zt, zg;
    for (int i = 0; i < n; ++i) {
        std::vector<double> a(static_cast<size_t>(p)), b(static_cast<size_t>(p));
        for (double& x : a) x = rng.uniform(-1, 1);
        for (double& x : b) x = rng.uniform(-1, 1);
        zt.push_back(a);
        zg.push_back(b);
    }
    CoDConfig cfg;
    cfg.tau = 0.4;

    Tape t;
    double ab = t.value(obj::cod_loss(t, as_vars(t, zt), as_vars(t, zg), cfg)).item();
    double ba = t.value(obj::cod_loss(t, as_vars(t, zg), as_vars(t, zt), cfg)).item();
    CHECK(ab == doctest::Approx(ba).epsilon(1e-14));
}

TEST_CASE("positive-pair monotonicity") {
    // Rotating a graph vector toward its text partner strictly decreases
    // both of the pair's terms.
    CoDConfig cfg;
    cfg.tau = 0.7;
    auto pair_terms = [&](double angle) {
        Tape t;
        std::vector<Var> zt = as_vars(t, {{1, 0}, {-0.3, 0.8}});
        std::vector<Var> zg =
            as_vars(t, {{std::cos(angle), std::sin(angle)}, {0.6, -0.2}});
        std::vector<Var> pool_t = {diff::stop_gradient(zg[0]), zt[1],
                                   diff::stop_gradient(zg[1])};
        std::vector<Var> pool_g = {diff::stop_gradient(zt[0]), zg[1],
                                   diff::stop_gradient(zt[1])};
        double a =
            t.value(obj::contrastive_term(t, zt[0], diff::stop_gradient(zg[0]), pool_t, cfg))
                .item();
        double b =
            t.value(obj::contrastive_term(t, zg[0], diff::stop_gradient(zt[0]), pool_g, cfg))
                .item();
        return std::make_pair(a, b);
    };
    double prev_a = 1e9, prev_b = 1e9;
    for (double angle : {1.5, 1.0, 0.5, 0.1}) {  // decreasing angle = rising sim
        auto [a, b] = pair_terms(angle);
        CHECK(a < prev_a);
        CHECK(b < prev_b);
        prev_a = a;
        prev_b = b;
    }
}

TEST_CASE("total_loss reduction and gradient linearity") {
    CoDConfig cfg;
    cfg.lambda = 0.0;
    Tape t;
    Var task = t.leaf(Tensor::scalar(0.731), true);
    Var cod = t.leaf(Tensor::scalar(1.105), true);
    Var total = obj::total_loss(t, task, cod, cfg);
    CHECK(total.id == task.id);  // bitwise: the same node

    cfg.lambda = 1.0;
    CHECK(t.value(obj::total_loss(t, t.leaf(Tensor::scalar(0.5), false),
                                  t.leaf(Tensor::scalar(1.1028), false), cfg))
              .item() == doctest::Approx(1.6028).epsilon(1e-12));

    // gradient linearity: three backward passes
    Rng rng(21);
    Tensor x0 = oracles::random_tensor({4}, rng, 0.3, 1.2);
    double lambda = 0.7;
    auto grads_for = [&](int which) {  // 0: task, 1: cod, 2: total
        Tape tp;
        Var x = tp.leaf(x0, true);
        Var l_task = diff::sum(diff::mul(x, x));
        Var l_cod = diff::logsumexp(diff::scale(x, 3.0));
        CoDConfig c;
        c.lambda = lambda;
        Var root = which == 0 ? l_task : which == 1 ? l_cod : obj::total_loss(tp, l_task, l_cod, c);
        tp.backward(root);
        return tp.grad(x).flat();
    };
    auto gt = grads_for(0), gc = grads_for(1), gtot = grads_for(2);
    for (size_t i = 0; i < gt.size(); ++i)
        CHECK(gtot[i] == doctest::Approx(gt[i] + lambda * gc[i]).epsilon(1e-12));
}

TEST_CASE("projection heads produce the shared dimension") {
    CoDConfig cfg;
    cfg.shared_dim = 12;
    Rng rng(9);
    enc::ParamSet ps;
    obj::add_projection_params(ps, 8, cfg, rng);
    Tape t;
    enc::BoundParams bound = enc::bind(t, ps, false);
    Var h = t.leaf(oracles::random_tensor({8}, rng), false);
    CHECK(t.value(obj::project_text(t, h, bound)).shape() == std::vector<int>{12});
    CHECK(t.value(obj::project_graph(t, h, bound)).shape() == std::vector<int>{12});
}
