#include "codlab/taskgen.hpp"

#include <algorithm>

namespace codlab::taskgen {

using sexpr::Pattern;
using sexpr::SExpr;

Family family_from_string(const std::string& s) {
    if (s == "complementary-xor") return Family::ComplementaryXor;
    if (s == "aligned-rank") return Family::AlignedRank;
    if (s == "pattern-predict") return Family::PatternPredict;
    fail("BadSpec", "unknown family '" + s + "'");
}

std::string to_string(Family f) {
    switch (f) {
        case Family::ComplementaryXor: return "complementary-xor";
        case Family::AlignedRank: return "aligned-rank";
        case Family::PatternPredict: return "pattern-predict";
    }
    return "?";
}

GeneratorKnobs GeneratorSpec::default_knobs(Family f) {
    switch (f) {
        case Family::ComplementaryXor: return {false, true, Scope::Global};
        case Family::AlignedRank: return {true, true, Scope::Local};
        case Family::PatternPredict: return {false, true, Scope::Global};
    }
    return {};
}

void GeneratorSpec::validate() const {
    check(n_instances >= 1, "BadSpec", "n_instances must be >= 1");
    switch (family) {
        case Family::ComplementaryXor:
            check(!knobs.correspondence, "BadSpec",
                  "complementary-xor has no token-node correspondence");
            break;
        case Family::AlignedRank:
            check(knobs.correspondence, "BadSpec",
                  "aligned-rank requires token-node correspondence");
            check(knobs.graph_encodes_target, "BadSpec",
                  "aligned-rank requires graph_encodes_target");
            check(knobs.scope == Scope::Local, "BadSpec", "aligned-rank is a local-scope task");
            break;
        case Family::PatternPredict:
            check(!knobs.correspondence, "BadSpec", "pattern-predict emits no spans");
            check(knobs.graph_encodes_target, "BadSpec",
                  "pattern-predict requires graph_encodes_target");
            check(knobs.scope == Scope::Global, "BadSpec", "pattern-predict is global-scope");
            break;
    }
}

const enc::Vocab& shared_vocab() {
    static const enc::Vocab v = enc::Vocab::standard(kMaxEntities, kNumRelations, kNumDistractors);
    return v;
}

TaskMeta meta_for(Family f, uint64_t seed) {
    TaskMeta m;
    m.family = to_string(f);
    m.vocab_size = shared_vocab().size();
    m.num_relations = kNumRelations;
    m.max_entities = kMaxEntities;
    m.seed = seed;
    switch (f) {
        case Family::ComplementaryXor:
            m.task_kind = "classification";
            m.num_classes = 2;
            break;
        case Family::AlignedRank:
            m.task_kind = "ranking";
            break;
        case Family::PatternPredict:
            m.task_kind = "classification";
            m.num_classes = 5;
            break;
    }
    return m;
}

// ---- query sampling helpers -------------------------------------------------

namespace {

std::string rel_name(int k) { return "r" + std::to_string(k); }

std::unique_ptr<SExpr> join(std::unique_ptr<SExpr> rel, std::unique_ptr<SExpr> sub,
                            bool inverse) {
    auto j = std::make_unique<SExpr>();
    j->kind = SExpr::Kind::Join;
    if (inverse) {
        auto r = std::make_unique<SExpr>();
        r->kind = SExpr::Kind::Rel;
        r->args.push_back(std::move(rel));
        j->args.push_back(std::move(r));
    } else {
        j->args.push_back(std::move(rel));
    }
    j->args.push_back(std::move(sub));
    return j;
}

std::unique_ptr<SExpr> and_(std::unique_ptr<SExpr> a, std::unique_ptr<SExpr> b) {
    auto n = std::make_unique<SExpr>();
    n->kind = SExpr::Kind::And;
    n->args.push_back(std::move(a));
    n->args.push_back(std::move(b));
    return n;
}

std::unique_ptr<SExpr> sample_query(Pattern p, Rng& rng, int rel_lo, int rel_hi) {
    auto rel = [&] { return SExpr::relation(rel_name(rng.uniform_int(rel_lo, rel_hi))); };
    auto ent = [&](int k) { return SExpr::entity("e" + std::to_string(k)); };
    bool inv1 = rng.coin(), inv2 = rng.coin(), inv3 = rng.coin();
    switch (p) {
        case Pattern::T0:
            return join(rel(), ent(0), inv1);
        case Pattern::T1:
            return join(rel(), join(rel(), ent(0), inv2), inv1);
        case Pattern::T2:
            return and_(join(rel(), ent(0), inv1), join(rel(), ent(1), inv2));
        case Pattern::T3:
            return and_(join(rel(), ent(0), inv1),
                        join(rel(), join(rel(), ent(1), inv3), inv2));
        case Pattern::T4:
            return join(rel(), and_(join(rel(), ent(0), inv2), join(rel(), ent(1), inv3)),
                        inv1);
        default:
            fail("BadSpec", "cannot sample OTHER pattern");
    }
}

// Per-instance graphs share one relation id space: the relation named
// "r<k>" always uses edge id k, so encoder weights mean the same thing in
// every instance.
void remap_relations(enc::RelGraph& g, const sexpr::GraphTables& local) {
    for (enc::Edge& e : g.edges) {
        const std::string& name = local.relation_names[static_cast<size_t>(e.rel)];
        check(name.size() >= 2 && name[0] == 'r', "BadSpec",
              "unexpected relation name " + name);
        e.rel = std::stoi(name.substr(1));
        check(e.rel >= 1 && e.rel < kNumRelations, "BadSpec", "relation id out of range");
    }
    g.num_relations = kNumRelations;
}

std::vector<int> encode_tokens(const std::vector<std::string>& words) {
    const enc::Vocab& v = shared_vocab();
    std::vector<int> out;
    out.reserve(words.size());
    for (const std::string& w : words) {
        bool oov = false;
        int id = v.id(w, &oov);
        check(!oov, "BadSpec", "generator produced out-of-vocabulary token '" + w + "'");
        out.push_back(id);
    }
    return out;
}

sexpr::GraphTables global_tables() {
    sexpr::GraphTables t;
    t.relation_names.push_back("<self>");
    for (int k = 1; k < kNumRelations; ++k) t.relation_names.push_back(rel_name(k));
    return t;
}

} // namespace

// ---- families ---------------------------------------------------------------

std::vector<Instance> gen_complementary_xor(const GeneratorSpec& spec) {
    spec.validate();
    Rng base(spec.seed);
    std::vector<Instance> out;
    out.reserve(static_cast<size_t>(spec.n_instances));

    for (int i = 0; i < spec.n_instances; ++i) {
        Rng rng = base.fork(static_cast<uint64_t>(i));
        bool a = rng.coin();
        bool b = rng.coin();

        Instance inst;
        inst.id = "xor-" + std::to_string(i);
        inst.label = (a != b) ? 1 : 0;

        // Text: one marker for a, hidden among distractors.
        int len = rng.uniform_int(8, 20);
        std::vector<std::string> words(static_cast<size_t>(len));
        for (auto& w : words) w = "d" + std::to_string(rng.uniform_int(0, kNumDistractors - 1));
        words[static_cast<size_t>(rng.uniform_int(0, len - 1))] = a ? "m1" : "m0";
        if (!spec.knobs.graph_encodes_target) {
            // Variant where the text alone is sufficient: append a second
            // marker that carries b, and leave the graph motif random.
            words.push_back(b ? "m1" : "m0");
        }
        inst.tokens = encode_tokens(words);

        // Graph: background edges of relation 1; the motif is one or two
        // relation-2 edges present iff b.
        enc::RelGraph g;
        g.num_nodes = rng.uniform_int(4, 8);
        g.num_relations = kNumRelations;
        for (int v2 = 0; v2 < g.num_nodes; ++v2) {
            int fanout = rng.uniform_int(1, 2);
            for (int k = 0; k < fanout; ++k)
                g.edges.push_back({v2, 1, rng.uniform_int(0, g.num_nodes - 1)});
        }
        bool motif = spec.knobs.graph_encodes_target ? b : rng.coin();
        if (motif) {
            int m = rng.uniform_int(1, 2);
            for (int k = 0; k < m; ++k)
                g.edges.push_back({rng.uniform_int(0, g.num_nodes - 1), 2,
                                   rng.uniform_int(0, g.num_nodes - 1)});
        }
        inst.graph = std::move(g);
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<Instance> gen_aligned_rank(const GeneratorSpec& spec) {
    spec.validate();
    Rng base(spec.seed);
    std::vector<Instance> out;
    out.reserve(static_cast<size_t>(spec.n_instances));
    sexpr::GraphTables gtab = global_tables();

    // Wide relation pool: instances stay individually recognizable, which
    // is the regime this family is meant to produce.
    const int rel_hi = kNumRelations - 1;

    for (int i = 0; i < spec.n_instances; ++i) {
        Rng rng = base.fork(static_cast<uint64_t>(i));
        Pattern p = static_cast<Pattern>(rng.uniform_int(0, 2));  // T0..T2
        auto expr = sample_query(p, rng, 1, rel_hi);
        sexpr::SExprGraph sg = to_relgraph(*expr);
        remap_relations(sg.graph, sg.tables);

        sexpr::Linearization lin = sexpr::linearize(sg.graph, gtab, kMaxEntities);

        Instance inst;
        inst.id = "rank-" + std::to_string(i);
        inst.tokens = encode_tokens(lin.tokens);
        inst.spans = lin.spans;
        inst.graph = std::move(sg.graph);
        inst.gold = {0};  // the answer variable
        inst.label = 0;
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<Instance> gen_pattern_predict(const GeneratorSpec& spec) {
    spec.validate();
    Rng base(spec.seed);
    std::vector<Instance> out;
    out.reserve(static_cast<size_t>(spec.n_instances));
    sexpr::GraphTables gtab = global_tables();

    // Redundant-global information structure: the label (the reasoning
    // topology) is readable from either side, but the relation vocabulary
    // appears only in the text while the graph carries the bare structure.
    // The global summary is shared; the local surface form is not.
    const int rel_hi = kNumRelations - 1;

    for (int i = 0; i < spec.n_instances; ++i) {
        Rng rng = base.fork(static_cast<uint64_t>(i));
        int cls = rng.uniform_int(0, 4);
        auto expr = sample_query(static_cast<Pattern>(cls), rng, 1, rel_hi);
        check(static_cast<int>(sexpr::classify_pattern(*expr)) == cls, "BadSpec",
              "sampled expression does not classify to the requested pattern");
        sexpr::SExprGraph sg = to_relgraph(*expr);
        remap_relations(sg.graph, sg.tables);
        rng.shuffle(sg.graph.edges);

        sexpr::Linearization lin = sexpr::linearize(sg.graph, gtab, kMaxEntities);

        Instance inst;
        inst.id = "pattern-" + std::to_string(i);
        inst.tokens = encode_tokens(lin.tokens);
        inst.graph = std::move(sg.graph);
        for (enc::Edge& e : inst.graph.edges) e.rel = 1;  // untyped topology
        inst.label = cls;
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<Instance> generate(const GeneratorSpec& spec) {
    switch (spec.family) {
        case Family::ComplementaryXor: return gen_complementary_xor(spec);
        case Family::AlignedRank: return gen_aligned_rank(spec);
        case Family::PatternPredict: return gen_pattern_predict(spec);
    }
    fail("BadSpec", "unknown family");
}

} // namespace codlab::taskgen
