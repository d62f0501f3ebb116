#pragma once

#include <optional>
#include <string>
#include <vector>

#include "codlab/analysis.hpp"
#include "codlab/encoders.hpp"
#include "codlab/objective.hpp"
#include "codlab/taskgen.hpp"

namespace codlab::train {

enum class Arm { Text, Graph, Hybrid, HybridCod };

Arm arm_from_string(const std::string& s);
std::string to_string(Arm a);

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
    Arm arm = Arm::HybridCod;
    double lr = 3e-3;
    int batch_size = 8;
    int epochs = 30;
    Optimizer optimizer = Optimizer::Adam;
    uint64_t seed = 0;
    obj::CoDConfig cod;
    enc::EncoderConfig encoder;
    obj::FusionMode hybrid_fusion = obj::FusionMode::Concat;
    int head_hidden = 16;
    int snapshot_every = 1;   // 0 disables snapshots
    int probe_limit = 128;    // snapshot batch = first probe_limit probe rows
    bool log_cod_when_off = true;
    bool disable_cod_term = false;  // as if the objective had no CoD branch at all

    // Enforces the arm/lambda invariant: non-CoD arms run with lambda 0, the
    // CoD arm must have lambda > 0.
    void normalize();
    obj::FusionMode fusion() const;
};

struct Dataset {
    taskgen::TaskMeta meta;
    std::vector<taskgen::Instance> train;
    std::vector<taskgen::Instance> probe;
};

// Fill graph.node_init with structural features where missing.
void ensure_node_init(Dataset& data, int d_in);

struct EvalMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double hits_at_k = 0.0;
    // headline number: accuracy for classification, Hits@K for ranking
    double primary = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    double l_task = 0.0;
    double l_cod = 0.0;
    EvalMetrics eval;
    bool has_alignment = false;
    analysis::AlignmentMetrics alignment;
};

struct RunRecord {
    std::string run_id;
    std::vector<EpochRecord> epochs;
    std::optional<analysis::RegimeVerdict> verdict;
};

struct RunResult {
    RunRecord record;
    std::vector<analysis::RepresentationSnapshot> snapshots;
    enc::ParamSet params;
};

// Deterministic epoch shuffle; depends only on (n, epoch, seed) so every
// arm sees the same data order under the same seed.
std::vector<int> shuffle_order(int n, int epoch, uint64_t seed);

enc::ParamSet build_params(const taskgen::TaskMeta& meta, const TrainConfig& cfg);

// Mini-batch optimization of task + lambda * CoD with per-epoch probe
// evaluation and snapshot capture.
RunResult train(const Dataset& data, const TrainConfig& cfg);

EvalMetrics evaluate(const enc::ParamSet& params, const TrainConfig& cfg,
                     const taskgen::TaskMeta& meta,
                     const std::vector<taskgen::Instance>& data);

// Metric arithmetic, exposed for direct checking. Macro-F1 averages over
// classes that occur as gold or prediction; empty-denominator classes score
// zero. Hits@K ranks by score (ties by lower index) with K = |gold|.
EvalMetrics classification_metrics(const std::vector<int>& predictions,
                                   const std::vector<int>& golds, int num_classes);
double hits_at_k(const std::vector<double>& scores, const std::vector<int>& gold);

struct MatrixRow {
    Arm arm;
    std::vector<double> per_seed;  // final primary metric per seed
    double mean = 0.0;
    double sd = 0.0;
    bool best = false;
    bool second = false;
};

// All four arms x seeds. threads <= 0 picks COD_LAB_THREADS or the hardware
// count. Row order is fixed: text, graph, hybrid, hybrid+cod.
std::vector<MatrixRow> run_matrix(const Dataset& data, const TrainConfig& base,
                                  const std::vector<uint64_t>& seeds, int threads = 0);

} // namespace codlab::train
