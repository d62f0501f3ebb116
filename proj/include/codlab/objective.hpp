#pragma once

#include <string>
#include <vector>

#include "codlab/encoders.hpp"
#include "codlab/tape.hpp"

namespace codlab::obj {

enum class NegativePool { BothModalities, OppositeOnly };

// Hyperparameters of the co-distillation objective.
struct CoDConfig {
    double tau = 0.1;
    double lambda = 1.0;
    NegativePool negative_pool = NegativePool::BothModalities;
    bool batch_mean = false;          // 1/2 * sum by default
    bool stop_grad_negatives = true;  // detach every opposite-modality pool member
    int shared_dim = 64;

    void validate() const {
        check(tau > 0.0, "InvalidConfig", "tau must be positive");
        check(lambda >= 0.0, "InvalidConfig", "lambda must be non-negative");
        check(shared_dim > 0, "InvalidConfig", "shared_dim must be positive");
    }
};

enum class FusionMode { Concat, Residual, TextOnly, GraphOnly };

FusionMode fusion_mode_from_string(const std::string& s);
std::string to_string(FusionMode m);

// Two-layer perceptron heads mapping each modality into the shared space.
// Hidden width equals shared_dim; output is linear.
void add_projection_params(enc::ParamSet& ps, int d_model, const CoDConfig& cfg, Rng& rng);

diff::Var project_text(diff::Tape& tape, diff::Var h, const enc::BoundParams& params);
diff::Var project_graph(diff::Tape& tape, diff::Var h, const enc::BoundParams& params);

// h_hybrid from the two modality vectors. Residual fusion uses the "fuse.w"
// parameter; concat works for any dims, residual requires equal dims.
diff::Var fuse(diff::Tape& tape, diff::Var h_text, diff::Var h_graph, FusionMode mode,
               const enc::BoundParams& params);

int fused_dim(int d_model, FusionMode mode);

enum class TaskKind { Classification, Ranking };

// Task head: hidden tanh layer ("head.w1"/"head.b1") into logits
// ("head.w2"/"head.b2"). hidden_dim 0 selects a plain affine head.
void add_task_head_params(enc::ParamSet& ps, int in_dim, int hidden_dim, int out_dim,
                          Rng& rng);

diff::Var task_logits(diff::Tape& tape, diff::Var h, const enc::BoundParams& params);

// Cross-entropy over logits for classification. For ranking, scores come in
// per candidate and the loss is mean binary cross-entropy against the gold
// set membership.
diff::Var classification_loss(diff::Tape& tape, diff::Var logits, int label);
diff::Var ranking_loss(diff::Tape& tape, const std::vector<diff::Var>& scores,
                       const std::vector<int>& gold);

// -log softmax over {sim(t,u)/tau : u in pool} evaluated at the positive.
// The pool must contain the positive and exclude the anchor.
diff::Var contrastive_term(diff::Tape& tape, diff::Var anchor, diff::Var positive,
                           const std::vector<diff::Var>& pool, const CoDConfig& cfg);

// Bidirectional co-distillation over a batch of paired projections:
//   1/2 * sum_i [ l_cl(z_i_text, sg(z_i_graph)) + l_cl(z_i_graph, sg(z_i_text)) ]
// with negatives per cfg.negative_pool. Opposite-modality pool members are
// detached when cfg.stop_grad_negatives.
diff::Var cod_loss(diff::Tape& tape, const std::vector<diff::Var>& z_text,
                   const std::vector<diff::Var>& z_graph, const CoDConfig& cfg);

// l_task + lambda * l_cod. lambda == 0 returns l_task itself so the CoD
// branch stays entirely outside the gradient path.
diff::Var total_loss(diff::Tape& tape, diff::Var l_task, diff::Var l_cod,
                     const CoDConfig& cfg);

} // namespace codlab::obj
