#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "codlab/rng.hpp"
#include "codlab/tape.hpp"
#include "codlab/tensor.hpp"

namespace codlab::enc {

// Token table with fixed reserved slots: PAD at 0, UNK at 1, then a
// contiguous block of entity placeholder tokens <E1>..<Emax>.
class Vocab {
public:
    Vocab() = default;

    // Canonical vocabulary shared by the synthetic task generators:
    // PAD, UNK, placeholders, "|", relation tokens r0..r{R-1}, markers
    // m0/m1, distractors d0..d{D-1}.
    static Vocab standard(int max_entities, int num_relations, int num_distractors);

    int add(const std::string& token);  // no-op if present
    int id(const std::string& token, bool* oov = nullptr) const;
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(tokens_.size()); }

    int pad_id() const { return 0; }
    int unk_id() const { return 1; }
    int max_entities() const { return max_entities_; }
    int placeholder_id(int entity) const;  // entity 0 -> <E1>
    static std::string placeholder_token(int entity);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    int max_entities_ = 0;
};

// Directed multigraph with typed edges. Relation id 0 is reserved for the
// implicit self relation; data edges normally use ids >= 1.
struct Edge {
    int src;
    int rel;
    int dst;
    bool operator==(const Edge&) const = default;
};

struct RelGraph {
    int num_nodes = 0;
    int num_relations = 1;
    std::vector<Edge> edges;
    Tensor node_init;  // (num_nodes, d_in); may be empty until initialized

    void validate() const;
};

enum class Activation { Tanh, Relu, Identity };
enum class Pooling { Mean, Cls, PerEntity };

struct EncoderConfig {
    int d_model = 32;
    int d_in = 8;          // structural feature width fed to the GNN
    int ff_dim = 64;
    int text_layers = 1;
    int gnn_layers = 2;
    int max_len = 128;
    Pooling pooling = Pooling::Mean;
    Activation activation = Activation::Tanh;
    uint64_t seed = 0;

    void validate() const;
};

// Ordered name -> tensor collection. Order is fixed at insertion so the
// optimizer walk and the serialized form are deterministic.
class ParamSet {
public:
    void add(const std::string& name, Tensor value);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool has(const std::string& name) const { return values_.count(name) > 0; }
    const std::vector<std::string>& names() const { return names_; }
    size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, Tensor> values_;
};

// Per-tape leaves for every parameter.
struct BoundParams {
    std::unordered_map<std::string, diff::Var> vars;
    diff::Var at(const std::string& name) const;
};

BoundParams bind(diff::Tape& tape, const ParamSet& params, bool requires_grad);

// Gradients in parameter order; zero tensors where backward never reached.
ParamSet collect_grads(diff::Tape& tape, const ParamSet& params, const BoundParams& bound);

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), seeded
Tensor init_weight(int rows, int cols, Rng& rng);
Tensor init_vector(int n, Rng& rng);

// Parameter blocks. Names are stable: "text.embed", "text.l0.wq", ...,
// "graph.l0.rel3", "graph.l1.self", ...
void add_text_params(ParamSet& ps, int vocab_size, const EncoderConfig& cfg, Rng& rng);
void add_graph_params(ParamSet& ps, int num_relations, const EncoderConfig& cfg, Rng& rng);

struct TextEncoding {
    diff::Var tokens;  // (L, d_model)
    diff::Var pooled;  // (d_model)
};

struct GraphEncoding {
    diff::Var nodes;   // (N, d_model)
    diff::Var pooled;  // (d_model)
};

// Token embedding + sinusoidal positions + single-head self-attention
// blocks with tanh-bounded residuals. Out-of-range token ids map to UNK and
// bump *oov_count when given.
TextEncoding encode_text(diff::Tape& tape, const std::vector<int>& token_ids,
                         const BoundParams& params, const EncoderConfig& cfg,
                         int vocab_size, int* oov_count = nullptr);

// Relational graph convolution: per-relation mean-normalized neighbor
// aggregation plus a self term, sigma-wrapped per layer.
GraphEncoding encode_graph(diff::Tape& tape, const RelGraph& g,
                           const BoundParams& params, const EncoderConfig& cfg);

// Deterministic topology features per node: in-degree, out-degree,
// BFS depth from node 0 normalized by the max finite depth (-1 when
// unreachable), then a histogram of incident relation types, padded or
// truncated to d_in columns.
Tensor structural_init(const RelGraph& g, int d_in);

// Mean-pool token vectors over each entity's span; output order follows
// ascending entity id. Spans are [begin, end) token index ranges.
std::vector<diff::Var> entity_span_pool(diff::Tape& tape, diff::Var per_token,
                                        const std::map<int, std::pair<int, int>>& spans);

} // namespace codlab::enc
