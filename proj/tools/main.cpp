#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "codlab/io.hpp"
#include "codlab/sexpr.hpp"

namespace fs = std::filesystem;
using namespace codlab;

namespace {

int cmd_generate(const std::string& spec_path, const std::string& out_dir,
                 long long seed_override) {
    io::KvConfig kv = io::KvConfig::parse_file(spec_path);
    io::DatasetSpec spec = io::dataset_spec_from_config(kv);
    if (seed_override >= 0) spec.gen.seed = static_cast<uint64_t>(seed_override);
    io::write_dataset(out_dir, spec);
    std::cout << "wrote dataset (" << taskgen::to_string(spec.gen.family) << ", "
              << spec.n_train << " train / " << spec.n_probe << " probe) to " << out_dir
              << "\n";
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_dir, const std::string& arm, double tau, double lambda,
              int epochs, long long seed) {
    io::KvConfig kv =
        config_path.empty() ? io::KvConfig::parse_string("") : io::KvConfig::parse_file(config_path);
    train::TrainConfig cfg = io::train_config_from_kv(kv);
    if (!arm.empty()) cfg.arm = train::arm_from_string(arm);
    if (tau > 0) cfg.cod.tau = tau;
    if (lambda >= 0) cfg.cod.lambda = lambda;
    if (epochs > 0) cfg.epochs = epochs;
    if (seed >= 0) {
        cfg.seed = static_cast<uint64_t>(seed);
        if (!kv.has("encoder_seed")) cfg.encoder.seed = cfg.seed;
    }
    cfg.normalize();

    train::Dataset data = io::load_dataset(data_dir);
    auto t0 = std::chrono::steady_clock::now();
    train::RunResult result = train::train(data, cfg);
    auto t1 = std::chrono::steady_clock::now();
    io::write_run(out_dir, cfg, result);

    double secs = std::chrono::duration<double>(t1 - t0).count();
    const train::EpochRecord& last = result.record.epochs.back();
    // Timing goes to the diagnostic stream only; run files stay byte-stable.
    std::cerr << "codlab: train " << result.record.run_id << " finished in " << secs
              << "s\n";
    std::cout << "run " << result.record.run_id << ": final task_metric "
              << io::fmt_double(last.eval.primary) << ", files in " << out_dir << "\n";
    return 0;
}

int cmd_analyze(const std::string& run_dir, const std::string& out_dir, bool svg,
                double eps_align, double eps_complement) {
    io::AnalyzeOptions opts;
    opts.svg = svg;
    if (eps_align > 0) opts.regime.eps_align = eps_align;
    if (eps_complement > 0) opts.regime.eps_complement = eps_complement;
    std::string dest = out_dir.empty() ? run_dir : out_dir;
    io::write_analysis(run_dir, dest, opts);
    std::cout << "analysis written to " << dest << "\n";
    return 0;
}

int cmd_matrix(const std::string& data_dir, const std::string& config_path,
               const std::string& out_dir, int n_seeds, long long seed, int epochs) {
    io::KvConfig kv =
        config_path.empty() ? io::KvConfig::parse_string("") : io::KvConfig::parse_file(config_path);
    train::TrainConfig base = io::train_config_from_kv(kv);
    if (epochs > 0) base.epochs = epochs;
    base.arm = train::Arm::HybridCod;  // per-arm override happens inside run_matrix
    if (base.cod.lambda <= 0) base.cod.lambda = 1.0;

    std::vector<uint64_t> seeds;
    uint64_t s0 = seed >= 0 ? static_cast<uint64_t>(seed) : base.seed;
    for (int i = 0; i < n_seeds; ++i) seeds.push_back(s0 + static_cast<uint64_t>(i));

    train::Dataset data = io::load_dataset(data_dir);
    std::vector<train::MatrixRow> rows = train::run_matrix(data, base, seeds);
    io::write_matrix(out_dir, rows, seeds.size());

    std::ifstream txt(out_dir + "/matrix.txt");
    std::cout << txt.rdbuf();
    return 0;
}

int cmd_classify(const std::string& in_path, const std::string& out_path) {
    std::istream* in = &std::cin;
    std::ifstream fin;
    if (!in_path.empty()) {
        fin.open(in_path);
        check(fin.good(), "IoError", "cannot open " + in_path);
        in = &fin;
    }
    std::ostream* out = &std::cout;
    std::ofstream fout;
    if (!out_path.empty()) {
        fout.open(out_path, std::ios::binary | std::ios::trunc);
        check(fout.good(), "IoError", "cannot write " + out_path);
        out = &fout;
    }
    std::string line;
    while (std::getline(*in, line)) {
        std::string trimmed = line;
        size_t a = trimmed.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        auto expr = sexpr::parse_sexpr(trimmed);
        *out << trimmed << "\t" << sexpr::to_string(sexpr::classify_pattern(*expr)) << "\n";
    }
    return 0;
}

int cmd_label_splits(const std::string& train_path, const std::string& test_path,
                     const std::string& out_path) {
    auto load = [](const std::string& path) {
        std::ifstream in(path);
        check(in.good(), "IoError", "cannot open " + path);
        std::vector<std::pair<std::string, std::string>> items;  // (id, sexpr)
        std::string line;
        int n = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line);
            std::string id = j.value("id", "q" + std::to_string(n));
            items.emplace_back(id, j.at("sexpr").get<std::string>());
            ++n;
        }
        return items;
    };

    sexpr::TrainCorpus corpus;
    for (const auto& [id, text] : load(train_path)) corpus.add(*sexpr::parse_sexpr(text));

    std::ostream* out = &std::cout;
    std::ofstream fout;
    if (!out_path.empty()) {
        fout.open(out_path, std::ios::binary | std::ios::trunc);
        check(fout.good(), "IoError", "cannot write " + out_path);
        out = &fout;
    }
    for (const auto& [id, text] : load(test_path)) {
        auto expr = sexpr::parse_sexpr(text);
        *out << id << "\t" << text << "\t"
             << sexpr::to_string(sexpr::label_split(*expr, corpus)) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"codlab: dual text-graph encoders with contrastive co-distillation"};
    app.require_subcommand(1);

    // generate
    std::string gen_spec, gen_out = "data";
    long long gen_seed = -1;
    auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
    gen->add_option("--spec", gen_spec, "key=value generator spec file")->required();
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--seed", gen_seed, "override the spec seed");

    // train
    std::string tr_data, tr_cfg, tr_out = "run", tr_arm;
    double tr_tau = -1, tr_lambda = -1;
    int tr_epochs = -1;
    long long tr_seed = -1;
    auto* tr = app.add_subcommand("train", "train one configuration");
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--config", tr_cfg, "key=value training config file");
    tr->add_option("--out", tr_out, "run output directory");
    tr->add_option("--arm", tr_arm, "text|graph|hybrid|hybrid+cod");
    tr->add_option("--tau", tr_tau, "CoD temperature");
    tr->add_option("--lambda", tr_lambda, "CoD weight");
    tr->add_option("--epochs", tr_epochs, "epoch count");
    tr->add_option("--seed", tr_seed, "run seed");

    // analyze
    std::string an_run, an_out;
    bool an_svg = false;
    double an_eps_a = -1, an_eps_c = -1;
    auto* an = app.add_subcommand("analyze", "emit PCA scatters, metric curves and verdict");
    an->add_option("--run", an_run, "run directory with snapshots.jsonl")->required();
    an->add_option("--out", an_out, "output directory (default: run dir)");
    an->add_flag("--svg", an_svg, "also write SVG scatters");
    an->add_option("--eps-align", an_eps_a, "complete-alignment ratio threshold");
    an->add_option("--eps-complement", an_eps_c, "complementarity ratio threshold");

    // matrix
    std::string mx_data, mx_cfg, mx_out = "matrix";
    int mx_seeds = 3, mx_epochs = -1;
    long long mx_seed = -1;
    auto* mx = app.add_subcommand("matrix", "run the four-arm comparison");
    mx->add_option("--data", mx_data, "dataset directory")->required();
    mx->add_option("--config", mx_cfg, "key=value training config file");
    mx->add_option("--out", mx_out, "output directory");
    mx->add_option("--seeds", mx_seeds, "number of seeds per arm");
    mx->add_option("--seed", mx_seed, "first seed");
    mx->add_option("--epochs", mx_epochs, "epoch count");

    // classify-pattern
    std::string cp_in, cp_out;
    auto* cp = app.add_subcommand("classify-pattern",
                                  "classify S-expressions (one per line) into T0..T4");
    cp->add_option("--in", cp_in, "input file (default: stdin)");
    cp->add_option("--out", cp_out, "output TSV (default: stdout)");

    // label-splits
    std::string ls_train, ls_test, ls_out;
    auto* ls = app.add_subcommand("label-splits",
                                  "label test queries iid/compositional/zeroshot");
    ls->add_option("--train", ls_train, "train JSONL with {\"sexpr\": ...}")->required();
    ls->add_option("--test", ls_test, "test JSONL")->required();
    ls->add_option("--out", ls_out, "output TSV (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(gen_spec, gen_out, gen_seed);
        if (tr->parsed())
            return cmd_train(tr_data, tr_cfg, tr_out, tr_arm, tr_tau, tr_lambda, tr_epochs,
                             tr_seed);
        if (an->parsed()) return cmd_analyze(an_run, an_out, an_svg, an_eps_a, an_eps_c);
        if (mx->parsed())
            return cmd_matrix(mx_data, mx_cfg, mx_out, mx_seeds, mx_seed, mx_epochs);
        if (cp->parsed()) return cmd_classify(cp_in, cp_out);
        if (ls->parsed()) return cmd_label_splits(ls_train, ls_test, ls_out);
    } catch (const Error& e) {
        std::cerr << "codlab: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "codlab: error: IoError: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
