#pragma once

#include <map>
#include <string>
#include <vector>

#include "codlab/analysis.hpp"
#include "codlab/taskgen.hpp"
#include "codlab/trainer.hpp"

namespace codlab::io {

// Flat key=value configuration files ('#' starts a comment). Unknown keys
// are rejected by the consumers, not the parser.
class KvConfig {
public:
    static KvConfig parse_file(const std::string& path);
    static KvConfig parse_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

// %.10g with "-0" normalized; stable across runs of the same binary.
std::string fmt_double(double v);

// ---- dataset files -----------------------------------------------------

std::string instance_to_jsonl(const taskgen::Instance& inst, const std::string& task_kind);
taskgen::Instance instance_from_jsonl(const std::string& line);

struct DatasetSpec {
    taskgen::GeneratorSpec gen;
    int n_train = 2000;
    int n_probe = 500;
};

DatasetSpec dataset_spec_from_config(const KvConfig& cfg);

// Writes train.jsonl, probe.jsonl and manifest.json into dir.
void write_dataset(const std::string& dir, const DatasetSpec& spec);

train::Dataset load_dataset(const std::string& dir);

// ---- training configuration & run artifacts ------------------------------

train::TrainConfig train_config_from_kv(const KvConfig& kv);

// run_record.json, metrics.csv and snapshots.jsonl under run_dir. Timings
// never enter these files so identical runs serialize identically.
void write_run(const std::string& run_dir, const train::TrainConfig& cfg,
               const train::RunResult& result);

std::vector<analysis::RepresentationSnapshot> load_snapshots(const std::string& run_dir);

struct AnalyzeOptions {
    bool svg = false;
    analysis::RegimeConfig regime;
};

// curves.csv, one pca_epoch_<e>.csv per snapshot, verdict.json, optional
// SVG scatters.
void write_analysis(const std::string& run_dir, const std::string& out_dir,
                    const AnalyzeOptions& opts);

void write_matrix(const std::string& out_dir, const std::vector<train::MatrixRow>& rows,
                  size_t n_seeds);

} // namespace codlab::io
