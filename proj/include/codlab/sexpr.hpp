#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "codlab/encoders.hpp"

namespace codlab::sexpr {

// AST of knowledge-base queries built from JOIN / AND / R over entity and
// relation symbols, e.g. "(JOIN (R location.country.currency_used) m.015fr)".
struct SExpr {
    enum class Kind { Join, And, Rel, Entity, Relation };

    Kind kind;
    std::string symbol;                         // Entity / Relation leaves
    std::vector<std::unique_ptr<SExpr>> args;   // Join: [rel, sub]; And: [a, b]; Rel: [relation]

    static std::unique_ptr<SExpr> entity(std::string name);
    static std::unique_ptr<SExpr> relation(std::string name);
};

// Parse with byte-offset diagnostics: UnbalancedParens, UnknownOperator,
// ArityError.
std::unique_ptr<SExpr> parse_sexpr(const std::string& text);

// Canonical single-space form; parse(print(e)) round-trips.
std::string print_sexpr(const SExpr& e);

enum class Pattern { T0, T1, T2, T3, T4, Other };

std::string to_string(Pattern p);

// Classify by constraint-to-answer path structure: hop counts per constraint
// branch and where the branches converge.
Pattern classify_pattern(const SExpr& e);

struct GraphTables {
    std::vector<std::string> node_names;      // node id -> entity/variable name
    std::vector<std::string> relation_names;  // relation id -> name; [0] is the self slot
};

struct SExprGraph {
    enc::RelGraph graph;
    GraphTables tables;
};

// Answer variable becomes node 0; remaining nodes number left to right.
// A JOIN on relation r adds result --r--> child, flipped when wrapped in R.
SExprGraph to_relgraph(const SExpr& e);

struct Linearization {
    std::vector<std::string> tokens;            // "<E1> rel <E2> | ..."
    std::map<int, std::pair<int, int>> spans;   // node id -> first placeholder span
};

// Serialize edges as placeholder triples. Node i appears as <E(i+1)>, the
// same identity the graph side uses, so spans line up with nodes.
Linearization linearize(const enc::RelGraph& g, const GraphTables& tables,
                        int max_entities = 64);

// Inverse of linearize up to the placeholder naming: tokens back to a graph.
SExprGraph delinearize(const std::vector<std::string>& tokens);

enum class Split { Iid, Compositional, Zeroshot };

std::string to_string(Split s);

// Template identity: reasoning pattern plus the multiset of per-relation
// usage counts. "written-by twice" and "written-by once" are different
// templates even over the same relation set.
struct TemplateKey {
    Pattern pattern;
    std::vector<int> usage_counts;  // sorted
    bool operator<(const TemplateKey& o) const;
};

TemplateKey template_key(const SExpr& e);
std::vector<std::string> relations_of(const SExpr& e);

class TrainCorpus {
public:
    void add(const SExpr& e);
    bool relation_seen(const std::string& rel) const;
    bool template_seen(const TemplateKey& key) const;

private:
    std::map<std::string, int> relations_;
    std::map<TemplateKey, int> templates_;
};

// zeroshot when any relation is unseen; compositional when all relations are
// seen but the template is new; iid otherwise.
Split label_split(const SExpr& test_query, const TrainCorpus& corpus);

} // namespace codlab::sexpr
