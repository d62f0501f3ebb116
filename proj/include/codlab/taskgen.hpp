#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "codlab/encoders.hpp"
#include "codlab/sexpr.hpp"

namespace codlab::taskgen {

enum class Family { ComplementaryXor, AlignedRank, PatternPredict };
enum class Scope { Global, Local };

Family family_from_string(const std::string& s);
std::string to_string(Family f);

// One supervised text-graph example. Labels are a class index for
// classification families and a gold entity set for ranking.
struct Instance {
    std::string id;
    std::vector<int> tokens;
    enc::RelGraph graph;  // node_init left empty; filled at load time
    std::map<int, std::pair<int, int>> spans;
    int label = 0;
    std::vector<int> gold;  // ranking only
};

struct GeneratorKnobs {
    bool correspondence = false;
    bool graph_encodes_target = true;
    Scope scope = Scope::Global;
};

struct GeneratorSpec {
    Family family = Family::ComplementaryXor;
    int n_instances = 2000;
    uint64_t seed = 0;
    GeneratorKnobs knobs;

    static GeneratorKnobs default_knobs(Family f);
    void validate() const;
};

// Dataset-level constants shared by every family so one vocabulary and one
// relation id space serve all generated files.
struct TaskMeta {
    std::string family;
    std::string task_kind;  // "classification" | "ranking"
    int num_classes = 0;    // classification only
    int vocab_size = 0;
    int num_relations = 0;
    int max_entities = 0;
    uint64_t seed = 0;
};

inline constexpr int kMaxEntities = 12;
inline constexpr int kNumRelations = 16;
inline constexpr int kNumDistractors = 16;

const enc::Vocab& shared_vocab();

TaskMeta meta_for(Family f, uint64_t seed);

// Latent bits (a, b): the marker token in the text carries only a, a
// relation motif in the graph carries only b, and the label is a XOR b, so
// neither modality alone beats chance.
std::vector<Instance> gen_complementary_xor(const GeneratorSpec& spec);

// Random T0..T2 query graph; the text is its placeholder linearization with
// spans recorded, the gold set is the answer node. Both modalities carry
// the full structure.
std::vector<Instance> gen_aligned_rank(const GeneratorSpec& spec);

// Uniform T0..T4 topologies with random symbols; the label is the pattern
// index. Triple order in the text is shuffled; no spans.
std::vector<Instance> gen_pattern_predict(const GeneratorSpec& spec);

std::vector<Instance> generate(const GeneratorSpec& spec);

} // namespace codlab::taskgen
