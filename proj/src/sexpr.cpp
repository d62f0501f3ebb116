#include "codlab/sexpr.hpp"

#include <algorithm>
#include <cctype>

namespace codlab::sexpr {

std::unique_ptr<SExpr> SExpr::entity(std::string name) {
    auto e = std::make_unique<SExpr>();
    e->kind = Kind::Entity;
    e->symbol = std::move(name);
    return e;
}

std::unique_ptr<SExpr> SExpr::relation(std::string name) {
    auto e = std::make_unique<SExpr>();
    e->kind = Kind::Relation;
    e->symbol = std::move(name);
    return e;
}

// ---- parser -----------------------------------------------------------

namespace {

struct Token {
    std::string text;
    size_t offset;
};

std::vector<Token> tokenize(const std::string& s) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
        } else if (c == '(' || c == ')') {
            out.push_back({std::string(1, c), i});
            ++i;
        } else {
            size_t start = i;
            while (i < s.size() && s[i] != '(' && s[i] != ')' && !std::isspace(
                       static_cast<unsigned char>(s[i])))
                ++i;
            out.push_back({s.substr(start, i - start), start});
        }
    }
    return out;
}

struct Parser {
    const std::vector<Token>& toks;
    size_t pos = 0;
    size_t input_len;

    [[noreturn]] void unbalanced(size_t offset) {
        fail("UnbalancedParens", "unbalanced parentheses at offset " + std::to_string(offset));
    }

    const Token& peek() {
        if (pos >= toks.size()) unbalanced(input_len);
        return toks[pos];
    }

    Token take() {
        if (pos >= toks.size()) unbalanced(input_len);
        return toks[pos++];
    }

    // A relation argument: either a bare symbol or (R relation).
    std::unique_ptr<SExpr> parse_relation_arg() {
        const Token& t = peek();
        if (t.text == "(") {
            take();
            Token op = take();
            if (op.text != "R")
                fail("UnknownOperator",
                     "expected R at offset " + std::to_string(op.offset) + ", got '" +
                         op.text + "'");
            Token rel = take();
            if (rel.text == "(" || rel.text == ")")
                fail("ArityError", "R needs one relation symbol at offset " +
                                       std::to_string(rel.offset));
            Token close = take();
            if (close.text != ")")
                fail("ArityError",
                     "R takes exactly one argument; unexpected token at offset " +
                         std::to_string(close.offset));
            auto node = std::make_unique<SExpr>();
            node->kind = SExpr::Kind::Rel;
            node->args.push_back(SExpr::relation(rel.text));
            return node;
        }
        if (t.text == ")")
            fail("ArityError", "missing relation argument at offset " + std::to_string(t.offset));
        return SExpr::relation(take().text);
    }

    // An entity-denoting argument: entity leaf, JOIN or AND subexpression.
    std::unique_ptr<SExpr> parse_set_arg() {
        const Token& t = peek();
        if (t.text == "(") return parse_compound();
        if (t.text == ")")
            fail("ArityError", "missing argument at offset " + std::to_string(t.offset));
        return SExpr::entity(take().text);
    }

    std::unique_ptr<SExpr> parse_compound() {
        Token open = take();  // "("
        if (open.text != "(") unbalanced(open.offset);
        Token op = take();
        auto node = std::make_unique<SExpr>();
        if (op.text == "JOIN") {
            node->kind = SExpr::Kind::Join;
            node->args.push_back(parse_relation_arg());
            node->args.push_back(parse_set_arg());
        } else if (op.text == "AND") {
            node->kind = SExpr::Kind::And;
            node->args.push_back(parse_set_arg());
            node->args.push_back(parse_set_arg());
        } else if (op.text == "R") {
            fail("ArityError",
                 "R is only valid as the relation slot of JOIN, at offset " +
                     std::to_string(op.offset));
        } else {
            fail("UnknownOperator",
                 "unknown operator '" + op.text + "' at offset " + std::to_string(op.offset));
        }
        Token close = take();
        if (close.text != ")")
            fail("ArityError", "operator takes exactly two arguments; unexpected token at offset " +
                                   std::to_string(close.offset));
        return node;
    }

    std::unique_ptr<SExpr> parse_top() {
        const Token& t = peek();
        std::unique_ptr<SExpr> e =
            (t.text == "(") ? parse_compound() : SExpr::entity(take().text);
        if (pos != toks.size()) {
            const Token& extra = toks[pos];
            if (extra.text == ")") unbalanced(extra.offset);
            fail("ArityError",
                 "trailing token '" + extra.text + "' at offset " + std::to_string(extra.offset));
        }
        return e;
    }
};

} // namespace

std::unique_ptr<SExpr> parse_sexpr(const std::string& text) {
    std::vector<Token> toks = tokenize(text);
    check(!toks.empty(), "ArityError", "empty expression");
    Parser p{toks, 0, text.size()};
    return p.parse_top();
}

std::string print_sexpr(const SExpr& e) {
    switch (e.kind) {
        case SExpr::Kind::Entity:
        case SExpr::Kind::Relation:
            return e.symbol;
        case SExpr::Kind::Rel:
            return "(R " + print_sexpr(*e.args[0]) + ")";
        case SExpr::Kind::Join:
            return "(JOIN " + print_sexpr(*e.args[0]) + " " + print_sexpr(*e.args[1]) + ")";
        case SExpr::Kind::And:
            return "(AND " + print_sexpr(*e.args[0]) + " " + print_sexpr(*e.args[1]) + ")";
    }
    return "?";
}

// ---- pattern classification ------------------------------------------------

namespace {

struct PathShape {
    std::vector<int> hops;     // per constraint: hops from the constraint here
    int merges = 0;            // AND nodes in the subtree
    int hops_since_merge = -1; // hops from the topmost AND to this node
    bool valid = true;
};

PathShape shape_of(const SExpr& e) {
    PathShape s;
    switch (e.kind) {
        case SExpr::Kind::Entity:
            s.hops = {0};
            return s;
        case SExpr::Kind::Join: {
            PathShape sub = shape_of(*e.args[1]);
            for (int& h : sub.hops) ++h;
            if (sub.merges > 0)
                sub.hops_since_merge =
                    (sub.hops_since_merge < 0 ? 1 : sub.hops_since_merge + 1);
            return sub;
        }
        case SExpr::Kind::And: {
            PathShape a = shape_of(*e.args[0]);
            PathShape b = shape_of(*e.args[1]);
            PathShape s2;
            s2.valid = a.valid && b.valid && a.merges == 0 && b.merges == 0;
            s2.hops = a.hops;
            s2.hops.insert(s2.hops.end(), b.hops.begin(), b.hops.end());
            s2.merges = a.merges + b.merges + 1;
            s2.hops_since_merge = 0;
            return s2;
        }
        default:
            s.valid = false;
            return s;
    }
}

} // namespace

Pattern classify_pattern(const SExpr& e) {
    PathShape s = shape_of(e);
    if (!s.valid) return Pattern::Other;

    std::vector<int> hops = s.hops;
    std::sort(hops.begin(), hops.end());

    if (s.merges == 0 && hops.size() == 1) {
        if (hops[0] == 1) return Pattern::T0;
        if (hops[0] == 2) return Pattern::T1;
        return Pattern::Other;
    }
    if (s.merges == 1 && hops.size() == 2) {
        if (s.hops_since_merge == 0) {  // branches converge at the answer
            if (hops[0] == 1 && hops[1] == 1) return Pattern::T2;
            if (hops[0] == 1 && hops[1] == 2) return Pattern::T3;
            return Pattern::Other;
        }
        if (s.hops_since_merge == 1 && hops[0] == 2 && hops[1] == 2)
            return Pattern::T4;  // intermediate convergence one hop from the answer
    }
    return Pattern::Other;
}

std::string to_string(Pattern p) {
    switch (p) {
        case Pattern::T0: return "T0";
        case Pattern::T1: return "T1";
        case Pattern::T2: return "T2";
        case Pattern::T3: return "T3";
        case Pattern::T4: return "T4";
        case Pattern::Other: return "OTHER";
    }
    return "?";
}

// ---- graph construction -----------------------------------------------------

namespace {

struct GraphBuilder {
    enc::RelGraph g;
    GraphTables tables;
    std::map<std::string, int> entity_ids;
    std::map<std::string, int> relation_ids;
    int var_counter = 0;

    GraphBuilder() {
        g.num_relations = 1;
        tables.relation_names.push_back("<self>");
    }

    int fresh_var() {
        std::string name = "?x" + std::to_string(var_counter++);
        tables.node_names.push_back(name);
        return g.num_nodes++;
    }

    int entity_node(const std::string& name) {
        auto it = entity_ids.find(name);
        if (it != entity_ids.end()) return it->second;
        int id = g.num_nodes++;
        entity_ids[name] = id;
        tables.node_names.push_back(name);
        return id;
    }

    int relation_id(const std::string& name) {
        auto it = relation_ids.find(name);
        if (it != relation_ids.end()) return it->second;
        int id = g.num_relations++;
        relation_ids[name] = id;
        tables.relation_names.push_back(name);
        return id;
    }

    // Attach the constraints of e to the node denoting e's result set.
    void visit(const SExpr& e, int target) {
        switch (e.kind) {
            case SExpr::Kind::Join: {
                const SExpr& relpart = *e.args[0];
                const SExpr& sub = *e.args[1];
                bool inverse = relpart.kind == SExpr::Kind::Rel;
                int rel = relation_id(inverse ? relpart.args[0]->symbol : relpart.symbol);
                int child = (sub.kind == SExpr::Kind::Entity) ? entity_node(sub.symbol)
                                                              : fresh_var();
                if (inverse)
                    g.edges.push_back({child, rel, target});
                else
                    g.edges.push_back({target, rel, child});
                if (sub.kind != SExpr::Kind::Entity) visit(sub, child);
                break;
            }
            case SExpr::Kind::And:
                visit(*e.args[0], target);
                visit(*e.args[1], target);
                break;
            case SExpr::Kind::Entity:
                break;
            default:
                fail("ArityError", "relation in entity position");
        }
    }
};

} // namespace

SExprGraph to_relgraph(const SExpr& e) {
    GraphBuilder b;
    if (e.kind == SExpr::Kind::Entity) {
        b.entity_node(e.symbol);
    } else {
        b.tables.node_names.push_back("?answer");
        b.g.num_nodes = 1;
        b.visit(e, 0);
    }
    b.g.validate();
    return SExprGraph{std::move(b.g), std::move(b.tables)};
}

// ---- linearization -----------------------------------------------------------

Linearization linearize(const enc::RelGraph& g, const GraphTables& tables, int max_entities) {
    g.validate();
    check(g.num_nodes <= max_entities, "TooManyEntities",
          std::to_string(g.num_nodes) + " nodes exceed the placeholder budget of " +
              std::to_string(max_entities));

    Linearization lin;
    auto placeholder = [](int node) { return enc::Vocab::placeholder_token(node); };
    for (size_t k = 0; k < g.edges.size(); ++k) {
        const enc::Edge& e = g.edges[k];
        if (k > 0) lin.tokens.push_back("|");
        auto note = [&](int node) {
            int pos = static_cast<int>(lin.tokens.size());
            lin.tokens.push_back(placeholder(node));
            if (!lin.spans.count(node)) lin.spans[node] = {pos, pos + 1};
        };
        note(e.src);
        lin.tokens.push_back(tables.relation_names[static_cast<size_t>(e.rel)]);
        note(e.dst);
    }
    if (g.edges.empty()) {
        for (int i = 0; i < g.num_nodes; ++i) {
            if (i > 0) lin.tokens.push_back("|");
            int pos = static_cast<int>(lin.tokens.size());
            lin.tokens.push_back(placeholder(i));
            lin.spans[i] = {pos, pos + 1};
        }
    }
    return lin;
}

SExprGraph delinearize(const std::vector<std::string>& tokens) {
    SExprGraph out;
    out.tables.relation_names.push_back("<self>");
    out.graph.num_relations = 1;
    std::map<std::string, int> rel_ids;
    std::map<int, int> seen_nodes;

    auto parse_placeholder = [](const std::string& t) -> int {
        if (t.size() < 4 || t.substr(0, 2) != "<E" || t.back() != '>') return -1;
        int v = 0;
        for (size_t i = 2; i + 1 < t.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(t[i]))) return -1;
            v = v * 10 + (t[i] - '0');
        }
        return v - 1;
    };

    auto node_of = [&](int id) {
        if (!seen_nodes.count(id)) {
            seen_nodes[id] = 1;
            out.graph.num_nodes = std::max(out.graph.num_nodes, id + 1);
        }
        return id;
    };

    std::vector<std::vector<std::string>> triples(1);
    for (const std::string& t : tokens) {
        if (t == "|") triples.emplace_back();
        else triples.back().push_back(t);
    }
    for (const auto& tri : triples) {
        if (tri.empty()) continue;
        if (tri.size() == 1) {
            int n = parse_placeholder(tri[0]);
            check(n >= 0, "ArityError", "bad placeholder token '" + tri[0] + "'");
            node_of(n);
            continue;
        }
        check(tri.size() == 3, "ArityError", "linearized triple must have 3 tokens");
        int s = parse_placeholder(tri[0]);
        int d = parse_placeholder(tri[2]);
        check(s >= 0 && d >= 0, "ArityError", "triple endpoints must be placeholders");
        int rel;
        auto it = rel_ids.find(tri[1]);
        if (it == rel_ids.end()) {
            rel = out.graph.num_relations++;
            rel_ids[tri[1]] = rel;
            out.tables.relation_names.push_back(tri[1]);
        } else {
            rel = it->second;
        }
        out.graph.edges.push_back({node_of(s), rel, node_of(d)});
    }
    for (int i = 0; i < out.graph.num_nodes; ++i)
        out.tables.node_names.push_back("<E" + std::to_string(i + 1) + ">");
    out.graph.validate();
    return out;
}

// ---- generalization splits -----------------------------------------------------

bool TemplateKey::operator<(const TemplateKey& o) const {
    if (pattern != o.pattern) return pattern < o.pattern;
    return usage_counts < o.usage_counts;
}

std::vector<std::string> relations_of(const SExpr& e) {
    std::vector<std::string> rels;
    switch (e.kind) {
        case SExpr::Kind::Relation:
            rels.push_back(e.symbol);
            break;
        default:
            for (const auto& a : e.args) {
                auto sub = relations_of(*a);
                rels.insert(rels.end(), sub.begin(), sub.end());
            }
    }
    return rels;
}

TemplateKey template_key(const SExpr& e) {
    TemplateKey key;
    key.pattern = classify_pattern(e);
    std::map<std::string, int> counts;
    for (const std::string& r : relations_of(e)) ++counts[r];
    for (const auto& [rel, count] : counts) key.usage_counts.push_back(count);
    std::sort(key.usage_counts.begin(), key.usage_counts.end());
    return key;
}

void TrainCorpus::add(const SExpr& e) {
    for (const std::string& r : relations_of(e)) ++relations_[r];
    ++templates_[template_key(e)];
}

bool TrainCorpus::relation_seen(const std::string& rel) const {
    return relations_.count(rel) > 0;
}

bool TrainCorpus::template_seen(const TemplateKey& key) const {
    return templates_.count(key) > 0;
}

std::string to_string(Split s) {
    switch (s) {
        case Split::Iid: return "iid";
        case Split::Compositional: return "compositional";
        case Split::Zeroshot: return "zeroshot";
    }
    return "?";
}

Split label_split(const SExpr& test_query, const TrainCorpus& corpus) {
    for (const std::string& r : relations_of(test_query))
        if (!corpus.relation_seen(r)) return Split::Zeroshot;
    if (!corpus.template_seen(template_key(test_query))) return Split::Compositional;
    return Split::Iid;
}

} // namespace codlab::sexpr
