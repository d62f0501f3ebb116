#include "codlab/objective.hpp"

#include <cmath>

namespace codlab::obj {

using diff::Tape;
using diff::Var;

FusionMode fusion_mode_from_string(const std::string& s) {
    if (s == "concat") return FusionMode::Concat;
    if (s == "residual") return FusionMode::Residual;
    if (s == "text-only") return FusionMode::TextOnly;
    if (s == "graph-only") return FusionMode::GraphOnly;
    fail("InvalidConfig", "unknown fusion mode: " + s);
}

std::string to_string(FusionMode m) {
    switch (m) {
        case FusionMode::Concat: return "concat";
        case FusionMode::Residual: return "residual";
        case FusionMode::TextOnly: return "text-only";
        case FusionMode::GraphOnly: return "graph-only";
    }
    return "?";
}

void add_projection_params(enc::ParamSet& ps, int d_model, const CoDConfig& cfg, Rng& rng) {
    cfg.validate();
    int h = cfg.shared_dim;
    ps.add("proj.t.w1", enc::init_weight(d_model, h, rng));
    ps.add("proj.t.b1", enc::init_vector(h, rng));
    ps.add("proj.t.w2", enc::init_weight(h, cfg.shared_dim, rng));
    ps.add("proj.t.b2", enc::init_vector(cfg.shared_dim, rng));
    ps.add("proj.g.w1", enc::init_weight(d_model, h, rng));
    ps.add("proj.g.b1", enc::init_vector(h, rng));
    ps.add("proj.g.w2", enc::init_weight(h, cfg.shared_dim, rng));
    ps.add("proj.g.b2", enc::init_vector(cfg.shared_dim, rng));
}

namespace {

Var project(Tape&, Var h, const enc::BoundParams& params, const std::string& prefix) {
    Var z = diff::add(diff::matmul(h, params.at(prefix + "w1")), params.at(prefix + "b1"));
    z = diff::tanh_(z);
    return diff::add(diff::matmul(z, params.at(prefix + "w2")), params.at(prefix + "b2"));
}

} // namespace

Var project_text(Tape& tape, Var h, const enc::BoundParams& params) {
    return project(tape, h, params, "proj.t.");
}

Var project_graph(Tape& tape, Var h, const enc::BoundParams& params) {
    return project(tape, h, params, "proj.g.");
}

Var fuse(Tape&, Var h_text, Var h_graph, FusionMode mode, const enc::BoundParams& params) {
    switch (mode) {
        case FusionMode::Concat:
            return diff::concat(h_text, h_graph);
        case FusionMode::Residual: {
            const Tensor& ht = h_text.tape->value(h_text);
            const Tensor& hg = h_graph.tape->value(h_graph);
            check(ht.same_shape(hg), "DimMismatch",
                  "residual fusion needs equal dims, got " + ht.shape_str() + " vs " +
                      hg.shape_str());
            return diff::add(h_text, diff::matmul(h_graph, params.at("fuse.w")));
        }
        case FusionMode::TextOnly:
            return h_text;
        case FusionMode::GraphOnly:
            return h_graph;
    }
    fail("InvalidConfig", "bad fusion mode");
}

int fused_dim(int d_model, FusionMode mode) {
    return mode == FusionMode::Concat ? 2 * d_model : d_model;
}

void add_task_head_params(enc::ParamSet& ps, int in_dim, int hidden_dim, int out_dim,
                          Rng& rng) {
    if (hidden_dim > 0) {
        ps.add("head.w1", enc::init_weight(in_dim, hidden_dim, rng));
        ps.add("head.b1", enc::init_vector(hidden_dim, rng));
        ps.add("head.w2", enc::init_weight(hidden_dim, out_dim, rng));
        ps.add("head.b2", enc::init_vector(out_dim, rng));
    } else {
        ps.add("head.w2", enc::init_weight(in_dim, out_dim, rng));
        ps.add("head.b2", enc::init_vector(out_dim, rng));
    }
}

Var task_logits(Tape&, Var h, const enc::BoundParams& params) {
    Var x = h;
    if (params.vars.count("head.w1")) {
        x = diff::add(diff::matmul(x, params.at("head.w1")), params.at("head.b1"));
        x = diff::tanh_(x);
    }
    return diff::add(diff::matmul(x, params.at("head.w2")), params.at("head.b2"));
}

Var classification_loss(Tape&, Var logits, int label) {
    const Tensor& lv = logits.tape->value(logits);
    check(lv.ndim() == 1, "ShapeMismatch", "logits must be 1-D");
    check(label >= 0 && label < lv.dim(0), "LabelOutOfRange",
          "label " + std::to_string(label) + " outside " + std::to_string(lv.dim(0)) +
              " classes");
    return diff::sub(diff::logsumexp(logits), diff::pick(logits, label));
}

Var ranking_loss(Tape& tape, const std::vector<Var>& scores, const std::vector<int>& gold) {
    check(!scores.empty(), "EmptyInput", "ranking_loss with no candidates");
    int n = static_cast<int>(scores.size());
    std::vector<char> is_gold(static_cast<size_t>(n), 0);
    for (int g : gold) {
        check(g >= 0 && g < n, "LabelOutOfRange",
              "gold candidate " + std::to_string(g) + " outside " + std::to_string(n));
        is_gold[static_cast<size_t>(g)] = 1;
    }
    // mean over candidates of BCE(score, membership):
    //   softplus(s) - y*s  ==  -log sigmoid(s) for y=1, -log(1-sigmoid(s)) for y=0
    Var acc = tape.constant(Tensor::scalar(0.0));
    for (int i = 0; i < n; ++i) {
        Var term = diff::softplus(scores[static_cast<size_t>(i)]);
        if (is_gold[static_cast<size_t>(i)])
            term = diff::sub(term, scores[static_cast<size_t>(i)]);
        acc = diff::add(acc, term);
    }
    return diff::scale(acc, 1.0 / n);
}

Var contrastive_term(Tape&, Var anchor, Var positive, const std::vector<Var>& pool,
                     const CoDConfig& cfg) {
    cfg.validate();
    check(!pool.empty(), "EmptyPool", "contrastive pool is empty");
    std::vector<Var> sims;
    sims.reserve(pool.size());
    for (Var u : pool)
        sims.push_back(diff::scale(diff::cosine_sim(anchor, u), 1.0 / cfg.tau));
    Var denom = diff::logsumexp(diff::stack_scalars(sims));
    Var pos = diff::scale(diff::cosine_sim(anchor, positive), 1.0 / cfg.tau);
    return diff::sub(denom, pos);
}

Var cod_loss(Tape& tape, const std::vector<Var>& z_text, const std::vector<Var>& z_graph,
             const CoDConfig& cfg) {
    cfg.validate();
    check(z_text.size() == z_graph.size(), "BatchLenMismatch",
          "text batch " + std::to_string(z_text.size()) + " vs graph batch " +
              std::to_string(z_graph.size()));
    size_t n = z_text.size();
    check(n >= 1, "EmptyInput", "cod_loss on empty batch");

    // Detached views used wherever the opposite modality enters a pool.
    std::vector<Var> sg_text(n), sg_graph(n);
    for (size_t i = 0; i < n; ++i) {
        sg_text[i] = diff::stop_gradient(z_text[i]);
        sg_graph[i] = diff::stop_gradient(z_graph[i]);
    }
    auto opposite = [&](const std::vector<Var>& live, const std::vector<Var>& detached,
                        size_t j) { return cfg.stop_grad_negatives ? detached[j] : live[j]; };

    Var acc = tape.constant(Tensor::scalar(0.0));
    for (size_t i = 0; i < n; ++i) {
        // text anchor, graph positive
        std::vector<Var> pool;
        if (cfg.negative_pool == NegativePool::BothModalities) {
            for (size_t j = 0; j < n; ++j)
                if (j != i) pool.push_back(z_text[j]);
            for (size_t j = 0; j < n; ++j)
                pool.push_back(j == i ? sg_graph[i] : opposite(z_graph, sg_graph, j));
        } else {
            for (size_t j = 0; j < n; ++j)
                pool.push_back(j == i ? sg_graph[i] : opposite(z_graph, sg_graph, j));
        }
        acc = diff::add(acc, contrastive_term(tape, z_text[i], sg_graph[i], pool, cfg));

        // graph anchor, text positive
        pool.clear();
        if (cfg.negative_pool == NegativePool::BothModalities) {
            for (size_t j = 0; j < n; ++j)
                if (j != i) pool.push_back(z_graph[j]);
            for (size_t j = 0; j < n; ++j)
                pool.push_back(j == i ? sg_text[i] : opposite(z_text, sg_text, j));
        } else {
            for (size_t j = 0; j < n; ++j)
                pool.push_back(j == i ? sg_text[i] : opposite(z_text, sg_text, j));
        }
        acc = diff::add(acc, contrastive_term(tape, z_graph[i], sg_text[i], pool, cfg));
    }

    double factor = cfg.batch_mean ? 0.5 / static_cast<double>(n) : 0.5;
    return diff::scale(acc, factor);
}

Var total_loss(Tape&, Var l_task, Var l_cod, const CoDConfig& cfg) {
    cfg.validate();
    if (cfg.lambda == 0.0) return l_task;
    return diff::add(l_task, diff::scale(l_cod, cfg.lambda));
}

} // namespace codlab::obj
