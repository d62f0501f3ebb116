#pragma once

#include <array>
#include <string>
#include <vector>

#include "codlab/tensor.hpp"

namespace codlab::analysis {

// Frozen projection pairs for one probe batch at one epoch. Row i of both
// matrices belongs to the same instance.
struct RepresentationSnapshot {
    int epoch = 0;
    Tensor z_text;   // (N, p)
    Tensor z_graph;  // (N, p)
    std::string run_id;
};

struct Pca2Result {
    Tensor projected;                    // (M, 2)
    std::array<double, 2> explained;     // variance ratios of PC1, PC2
    Tensor components;                   // (p, 2), unit columns
    bool degenerate = false;             // all points identical
};

// Top-2 principal components via cyclic Jacobi on the sample covariance.
// Sign convention: each component's largest-magnitude coordinate is positive.
Pca2Result pca2(const Tensor& points);

struct AlignmentOptions {
    bool within_include_self = false;     // self-distances are always zero
    bool between_exclude_diagonal = false;
};

struct AlignmentMetrics {
    double paired_cos = 0.0;
    double within_text = 0.0;
    double within_graph = 0.0;
    double between = 0.0;
    int excluded_rows = 0;  // zero-norm rows dropped before computing

    double ratio() const {
        double w = 0.5 * (within_text + within_graph);
        return w > 0.0 ? between / w : 0.0;
    }
};

// Batch-level paired cosine similarity plus mean within/between-modality
// cosine distances. Rows with near-zero norm are excluded; fewer than two
// surviving rows is an error.
AlignmentMetrics alignment_metrics(const RepresentationSnapshot& snap,
                                   const AlignmentOptions& opts = {});

enum class Regime { Complementarity, Partial, Complete };

std::string to_string(Regime r);

struct RegimeConfig {
    double eps_align = 0.15;         // complete when final ratio <= 1 + eps_align
    double eps_complement = 0.25;    // complementarity when ratio >= 1 + eps_complement
    double growth_min = 0.15;        // relative growth marking a still-moving geometry
    double plateau_tolerance = 0.10; // max relative late-half ratio decline for a plateau
};

struct RegimeVerdict {
    Regime regime = Regime::Partial;
    double final_ratio = 0.0;
    double min_ratio = 0.0;
    double slope = 0.0;           // least-squares slope of ratio over epochs
    double within_growth = 0.0;   // relative growth of mean within-distance
    double between_growth = 0.0;  // relative growth of between-distance
};

// Decision rule over a trajectory of metrics (one entry per analyzed epoch):
//   complete        final ratio <= 1+eps_align and slope < 0
//   partial         within and between distances both grew by more than
//                   growth_min (geometry still spreading on both axes)
//   complementarity ratio >= 1+eps_complement at every epoch and the late
//                   half holds its level (no sustained decline)
//   partial         otherwise
RegimeVerdict regime_verdict(const std::vector<AlignmentMetrics>& trajectory,
                             const RegimeConfig& cfg = {});

} // namespace codlab::analysis
