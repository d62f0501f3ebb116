#include "codlab/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace codlab::enc {

using diff::Tape;
using diff::Var;

// ---- Vocab ----------------------------------------------------------------

Vocab Vocab::standard(int max_entities, int num_relations, int num_distractors) {
    Vocab v;
    v.add("<pad>");
    v.add("<unk>");
    v.max_entities_ = max_entities;
    for (int i = 0; i < max_entities; ++i) v.add(placeholder_token(i));
    v.add("|");
    for (int r = 0; r < num_relations; ++r) v.add("r" + std::to_string(r));
    v.add("m0");
    v.add("m1");
    for (int d = 0; d < num_distractors; ++d) v.add("d" + std::to_string(d));
    return v;
}

int Vocab::add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_[token] = id;
    return id;
}

int Vocab::id(const std::string& token, bool* oov) const {
    auto it = index_.find(token);
    if (it == index_.end()) {
        if (oov) *oov = true;
        return unk_id();
    }
    return it->second;
}

const std::string& Vocab::token(int id) const {
    check(id >= 0 && id < size(), "ShapeMismatch", "token id out of range");
    return tokens_[static_cast<size_t>(id)];
}

int Vocab::placeholder_id(int entity) const {
    check(entity >= 0 && entity < max_entities_, "TooManyEntities",
          "entity " + std::to_string(entity) + " exceeds placeholder budget " +
              std::to_string(max_entities_));
    return 2 + entity;
}

std::string Vocab::placeholder_token(int entity) {
    return "<E" + std::to_string(entity + 1) + ">";
}

// ---- RelGraph / config -----------------------------------------------------

void RelGraph::validate() const {
    check(num_nodes >= 1, "DanglingEdge", "graph must have at least one node");
    check(num_relations >= 1, "DanglingEdge", "num_relations must cover the self relation");
    for (const Edge& e : edges) {
        check(e.src >= 0 && e.src < num_nodes && e.dst >= 0 && e.dst < num_nodes,
              "DanglingEdge",
              "edge (" + std::to_string(e.src) + "," + std::to_string(e.rel) + "," +
                  std::to_string(e.dst) + ") references a missing node");
        check(e.rel >= 0 && e.rel < num_relations, "DanglingEdge",
              "edge relation " + std::to_string(e.rel) + " out of range");
    }
}

void EncoderConfig::validate() const {
    check(d_model > 0, "InvalidConfig", "d_model must be positive");
    check(gnn_layers >= 1 && gnn_layers <= 3, "InvalidConfig", "gnn_layers must be 1..3");
    check(text_layers >= 1, "InvalidConfig", "text_layers must be >= 1");
    check(d_in >= 1, "InvalidConfig", "d_in must be positive");
}

// ---- ParamSet ---------------------------------------------------------------

void ParamSet::add(const std::string& name, Tensor value) {
    check(values_.emplace(name, std::move(value)).second, "InvalidConfig",
          "duplicate parameter name " + name);
    names_.push_back(name);
}

Tensor& ParamSet::at(const std::string& name) {
    auto it = values_.find(name);
    check(it != values_.end(), "InvalidConfig", "unknown parameter " + name);
    return it->second;
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = values_.find(name);
    check(it != values_.end(), "InvalidConfig", "unknown parameter " + name);
    return it->second;
}

Var BoundParams::at(const std::string& name) const {
    auto it = vars.find(name);
    check(it != vars.end(), "InvalidConfig", "parameter not bound: " + name);
    return it->second;
}

BoundParams bind(Tape& tape, const ParamSet& params, bool requires_grad) {
    BoundParams b;
    for (const std::string& name : params.names())
        b.vars.emplace(name, tape.leaf(params.at(name), requires_grad));
    return b;
}

ParamSet collect_grads(Tape& tape, const ParamSet& params, const BoundParams& bound) {
    ParamSet grads;
    for (const std::string& name : params.names())
        grads.add(name, tape.grad(bound.at(name)));
    return grads;
}

Tensor init_weight(int rows, int cols, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    Tensor w({rows, cols});
    for (int i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    return w;
}

Tensor init_vector(int n, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(n));
    Tensor v({n});
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(-bound, bound);
    return v;
}

void add_text_params(ParamSet& ps, int vocab_size, const EncoderConfig& cfg, Rng& rng) {
    int d = cfg.d_model;
    ps.add("text.embed", init_weight(vocab_size, d, rng));
    for (int l = 0; l < cfg.text_layers; ++l) {
        std::string p = "text.l" + std::to_string(l) + ".";
        ps.add(p + "wq", init_weight(d, d, rng));
        ps.add(p + "wk", init_weight(d, d, rng));
        ps.add(p + "wv", init_weight(d, d, rng));
        ps.add(p + "wo", init_weight(d, d, rng));
        ps.add(p + "ff1", init_weight(d, cfg.ff_dim, rng));
        ps.add(p + "fb1", init_vector(cfg.ff_dim, rng));
        ps.add(p + "ff2", init_weight(cfg.ff_dim, d, rng));
        ps.add(p + "fb2", init_vector(d, rng));
    }
}

void add_graph_params(ParamSet& ps, int num_relations, const EncoderConfig& cfg, Rng& rng) {
    for (int l = 0; l < cfg.gnn_layers; ++l) {
        int din = (l == 0) ? cfg.d_in : cfg.d_model;
        std::string p = "graph.l" + std::to_string(l) + ".";
        ps.add(p + "self", init_weight(din, cfg.d_model, rng));
        for (int r = 1; r < num_relations; ++r)
            ps.add(p + "rel" + std::to_string(r), init_weight(din, cfg.d_model, rng));
    }
}

// ---- text encoder ------------------------------------------------------------

namespace {

Var apply_activation(Var x, Activation act) {
    switch (act) {
        case Activation::Tanh: return diff::tanh_(x);
        case Activation::Relu: return diff::relu(x);
        case Activation::Identity: return x;
    }
    return x;
}

Tensor sinusoidal_positions(int len, int d) {
    Tensor pos({len, d});
    for (int i = 0; i < len; ++i) {
        for (int j = 0; j < d; ++j) {
            double rate = std::pow(10000.0, -2.0 * (j / 2) / d);
            pos.at2(i, j) = (j % 2 == 0) ? std::sin(i * rate) : std::cos(i * rate);
        }
    }
    return pos;
}

} // namespace

TextEncoding encode_text(Tape& tape, const std::vector<int>& token_ids,
                         const BoundParams& params, const EncoderConfig& cfg,
                         int vocab_size, int* oov_count) {
    cfg.validate();
    int L = static_cast<int>(token_ids.size());
    check(L >= 1, "EmptySequence", "encode_text on empty token sequence");
    check(L <= cfg.max_len, "SequenceTooLong",
          "sequence length " + std::to_string(L) + " exceeds max_len " +
              std::to_string(cfg.max_len));

    std::vector<int> ids = token_ids;
    for (int& id : ids) {
        if (id < 0 || id >= vocab_size) {
            id = 1;  // UNK
            if (oov_count) ++*oov_count;
        }
    }

    int d = cfg.d_model;
    Var x = diff::gather_rows(params.at("text.embed"), ids);
    Var pos = tape.constant(sinusoidal_positions(L, d));
    x = diff::add(x, pos);

    double att_scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int l = 0; l < cfg.text_layers; ++l) {
        std::string p = "text.l" + std::to_string(l) + ".";
        Var q = diff::matmul(x, params.at(p + "wq"));
        Var k = diff::matmul(x, params.at(p + "wk"));
        Var v = diff::matmul(x, params.at(p + "wv"));
        Var scores = diff::scale(diff::matmul(q, diff::transpose(k)), att_scale);
        Var attn = diff::softmax_rows(scores);
        Var ctxv = diff::matmul(diff::matmul(attn, v), params.at(p + "wo"));
        x = apply_activation(diff::add(x, ctxv), cfg.activation);

        Var h = diff::add_rowwise(diff::matmul(x, params.at(p + "ff1")), params.at(p + "fb1"));
        h = apply_activation(h, cfg.activation);
        h = diff::add_rowwise(diff::matmul(h, params.at(p + "ff2")), params.at(p + "fb2"));
        x = apply_activation(diff::add(x, h), cfg.activation);
    }

    Var pooled = (cfg.pooling == Pooling::Cls) ? diff::row(x, 0) : diff::mean_rows(x);
    return TextEncoding{x, pooled};
}

// ---- graph encoder -------------------------------------------------------------

namespace {

// Mean-normalized typed adjacency: row i holds 1/|N_r(i)| at column j for
// each edge (j, r, i).
Tensor relation_adjacency(const RelGraph& g, int rel) {
    Tensor a({g.num_nodes, g.num_nodes});
    std::vector<int> indeg(static_cast<size_t>(g.num_nodes), 0);
    for (const Edge& e : g.edges)
        if (e.rel == rel) ++indeg[static_cast<size_t>(e.dst)];
    for (const Edge& e : g.edges)
        if (e.rel == rel) a.at2(e.dst, e.src) += 1.0 / indeg[static_cast<size_t>(e.dst)];
    return a;
}

} // namespace

GraphEncoding encode_graph(Tape& tape, const RelGraph& g, const BoundParams& params,
                           const EncoderConfig& cfg) {
    cfg.validate();
    g.validate();
    check(g.node_init.ndim() == 2 && g.node_init.dim(0) == g.num_nodes,
          "ShapeMismatch", "node_init must be (num_nodes, d_in)");
    check(g.node_init.dim(1) == cfg.d_in, "ShapeMismatch",
          "node_init width " + std::to_string(g.node_init.dim(1)) +
              " does not match configured d_in " + std::to_string(cfg.d_in));

    // Relations actually present; empty relations contribute nothing.
    std::vector<char> present(static_cast<size_t>(g.num_relations), 0);
    for (const Edge& e : g.edges) present[static_cast<size_t>(e.rel)] = 1;

    Var h = tape.constant(g.node_init);
    for (int l = 0; l < cfg.gnn_layers; ++l) {
        std::string p = "graph.l" + std::to_string(l) + ".";
        Var acc = diff::matmul(h, params.at(p + "self"));
        for (int r = 0; r < g.num_relations; ++r) {
            if (!present[static_cast<size_t>(r)]) continue;
            Var adj = tape.constant(relation_adjacency(g, r));
            std::string wname = (r == 0) ? p + "self" : p + "rel" + std::to_string(r);
            acc = diff::add(acc, diff::matmul(diff::matmul(adj, h), params.at(wname)));
        }
        h = apply_activation(acc, cfg.activation);
    }

    Var pooled = diff::mean_rows(h);
    return GraphEncoding{h, pooled};
}

Tensor structural_init(const RelGraph& g, int d_in) {
    g.validate();
    check(d_in >= 4, "InvalidConfig", "structural_init needs d_in >= 4");
    int n = g.num_nodes;
    std::vector<double> indeg(static_cast<size_t>(n), 0.0), outdeg(static_cast<size_t>(n), 0.0);
    std::vector<std::vector<int>> undirected(static_cast<size_t>(n));
    for (const Edge& e : g.edges) {
        outdeg[static_cast<size_t>(e.src)] += 1.0;
        indeg[static_cast<size_t>(e.dst)] += 1.0;
        undirected[static_cast<size_t>(e.src)].push_back(e.dst);
        undirected[static_cast<size_t>(e.dst)].push_back(e.src);
    }

    std::vector<int> depth(static_cast<size_t>(n), -1);
    std::queue<int> q;
    depth[0] = 0;
    q.push(0);
    int max_depth = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : undirected[static_cast<size_t>(u)]) {
            if (depth[static_cast<size_t>(v)] < 0) {
                depth[static_cast<size_t>(v)] = depth[static_cast<size_t>(u)] + 1;
                max_depth = std::max(max_depth, depth[static_cast<size_t>(v)]);
                q.push(v);
            }
        }
    }

    Tensor feats({n, d_in});
    for (int i = 0; i < n; ++i) {
        feats.at2(i, 0) = indeg[static_cast<size_t>(i)];
        feats.at2(i, 1) = outdeg[static_cast<size_t>(i)];
        int di = depth[static_cast<size_t>(i)];
        feats.at2(i, 2) = di < 0 ? -1.0 : (max_depth > 0 ? static_cast<double>(di) / max_depth : 0.0);
    }
    for (const Edge& e : g.edges) {
        int col = 3 + e.rel;
        if (col >= d_in) continue;  // histogram truncated to the feature budget
        feats.at2(e.src, col) += 1.0;
        feats.at2(e.dst, col) += 1.0;
    }
    return feats;
}

std::vector<Var> entity_span_pool(Tape& tape, Var per_token,
                                  const std::map<int, std::pair<int, int>>& spans) {
    (void)tape;
    const Tensor& x = per_token.tape->value(per_token);
    check(x.ndim() == 2, "ShapeMismatch", "entity_span_pool needs (L,d) input");
    int L = x.dim(0);
    std::vector<Var> out;
    out.reserve(spans.size());
    for (const auto& [entity, span] : spans) {
        auto [begin, end] = span;
        check(begin >= 0 && begin < end && end <= L, "SpanOutOfRange",
              "entity " + std::to_string(entity) + " span [" + std::to_string(begin) +
                  "," + std::to_string(end) + ") outside sequence of length " +
                  std::to_string(L));
        out.push_back(diff::span_mean(per_token, begin, end));
    }
    return out;
}

} // namespace codlab::enc
