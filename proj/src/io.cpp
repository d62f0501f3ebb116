#include "codlab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace codlab::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---- key=value config -----------------------------------------------------

KvConfig KvConfig::parse_string(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = line.find_last_not_of(" \t\r");
        line = line.substr(a, b - a + 1);
        size_t eq = line.find('=');
        check(eq != std::string::npos && eq > 0, "BadSpec",
              "line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            size_t x = s.find_first_not_of(" \t");
            size_t y = s.find_last_not_of(" \t");
            s = (x == std::string::npos) ? "" : s.substr(x, y - x + 1);
        };
        trim(key);
        trim(value);
        check(!key.empty(), "BadSpec", "line " + std::to_string(lineno) + ": empty key");
        cfg.entries_[key] = value;
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), "IoError", "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

bool KvConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KvConfig::get_str(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

int KvConfig::get_int(const std::string& key, int fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        size_t used = 0;
        int v = std::stoi(it->second, &used);
        check(used == it->second.size(), "BadSpec", "");
        return v;
    } catch (...) {
        fail("BadSpec", "field '" + key + "' expects an integer, got '" + it->second + "'");
    }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        size_t used = 0;
        double v = std::stod(it->second, &used);
        check(used == it->second.size(), "BadSpec", "");
        return v;
    } catch (...) {
        fail("BadSpec", "field '" + key + "' expects a number, got '" + it->second + "'");
    }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail("BadSpec", "field '" + key + "' expects a boolean, got '" + v + "'");
}

uint64_t KvConfig::get_u64(const std::string& key, uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        size_t used = 0;
        unsigned long long v = std::stoull(it->second, &used);
        check(used == it->second.size(), "BadSpec", "");
        return static_cast<uint64_t>(v);
    } catch (...) {
        fail("BadSpec", "field '" + key + "' expects an unsigned integer, got '" + it->second + "'");
    }
}

std::string fmt_double(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

// ---- instances --------------------------------------------------------------

std::string instance_to_jsonl(const taskgen::Instance& inst, const std::string& task_kind) {
    json j;
    j["id"] = inst.id;
    j["tokens"] = inst.tokens;
    json edges = json::array();
    for (const enc::Edge& e : inst.graph.edges) edges.push_back({e.src, e.rel, e.dst});
    j["edges"] = std::move(edges);
    j["num_nodes"] = inst.graph.num_nodes;
    json spans = json::object();
    for (const auto& [node, span] : inst.spans)
        spans[std::to_string(node)] = {span.first, span.second};
    j["spans"] = std::move(spans);
    if (task_kind == "ranking")
        j["label"] = inst.gold;
    else
        j["label"] = inst.label;
    j["task_kind"] = task_kind;
    return j.dump();
}

taskgen::Instance instance_from_jsonl(const std::string& line) {
    json j = json::parse(line);
    taskgen::Instance inst;
    inst.id = j.at("id").get<std::string>();
    inst.tokens = j.at("tokens").get<std::vector<int>>();
    inst.graph.num_nodes = j.at("num_nodes").get<int>();
    inst.graph.num_relations = taskgen::kNumRelations;
    for (const auto& e : j.at("edges"))
        inst.graph.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()});
    for (const auto& [key, value] : j.at("spans").items())
        inst.spans[std::stoi(key)] = {value.at(0).get<int>(), value.at(1).get<int>()};
    if (j.at("task_kind").get<std::string>() == "ranking") {
        inst.gold = j.at("label").get<std::vector<int>>();
        inst.label = inst.gold.empty() ? 0 : inst.gold[0];
    } else {
        inst.label = j.at("label").get<int>();
    }
    return inst;
}

// ---- dataset files ---------------------------------------------------------

DatasetSpec dataset_spec_from_config(const KvConfig& kv) {
    DatasetSpec spec;
    check(kv.has("family"), "BadSpec", "missing required field 'family'");
    spec.gen.family = taskgen::family_from_string(kv.get_str("family", ""));
    spec.gen.knobs = taskgen::GeneratorSpec::default_knobs(spec.gen.family);
    spec.n_train = kv.get_int("n_train", spec.n_train);
    spec.n_probe = kv.get_int("n_probe", spec.n_probe);
    spec.gen.seed = kv.get_u64("seed", 0);
    if (kv.has("correspondence"))
        spec.gen.knobs.correspondence = kv.get_bool("correspondence", false);
    if (kv.has("graph_encodes_target"))
        spec.gen.knobs.graph_encodes_target = kv.get_bool("graph_encodes_target", true);
    if (kv.has("scope")) {
        std::string s = kv.get_str("scope", "global");
        if (s == "global") spec.gen.knobs.scope = taskgen::Scope::Global;
        else if (s == "local") spec.gen.knobs.scope = taskgen::Scope::Local;
        else fail("BadSpec", "field 'scope' expects global|local, got '" + s + "'");
    }
    check(spec.n_train >= 1, "BadSpec", "field 'n_train' must be >= 1");
    check(spec.n_probe >= 1, "BadSpec", "field 'n_probe' must be >= 1");
    spec.gen.n_instances = spec.n_train;
    spec.gen.validate();
    return spec;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    check(out.good(), "IoError", "cannot write " + path);
    out << content;
    check(out.good(), "IoError", "write failed for " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), "IoError", "cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

} // namespace

void write_dataset(const std::string& dir, const DatasetSpec& spec) {
    fs::create_directories(dir);
    taskgen::TaskMeta meta = taskgen::meta_for(spec.gen.family, spec.gen.seed);

    taskgen::GeneratorSpec train_spec = spec.gen;
    train_spec.n_instances = spec.n_train;
    taskgen::GeneratorSpec probe_spec = spec.gen;
    probe_spec.n_instances = spec.n_probe;
    probe_spec.seed = spec.gen.seed ^ 0x70b3d5867aa11e55ULL;  // disjoint stream

    auto dump = [&](const std::string& name, const taskgen::GeneratorSpec& gs) {
        std::vector<taskgen::Instance> v = taskgen::generate(gs);
        std::string body;
        for (const taskgen::Instance& inst : v) {
            body += instance_to_jsonl(inst, meta.task_kind);
            body += "\n";
        }
        write_file(dir + "/" + name, body);
        return v.size();
    };
    size_t n_train = dump("train.jsonl", train_spec);
    size_t n_probe = dump("probe.jsonl", probe_spec);

    json manifest;
    manifest["family"] = meta.family;
    manifest["task_kind"] = meta.task_kind;
    manifest["num_classes"] = meta.num_classes;
    manifest["vocab_size"] = meta.vocab_size;
    manifest["num_relations"] = meta.num_relations;
    manifest["max_entities"] = meta.max_entities;
    manifest["seed"] = spec.gen.seed;
    manifest["n_train"] = n_train;
    manifest["n_probe"] = n_probe;
    manifest["knobs"] = {{"correspondence", spec.gen.knobs.correspondence},
                         {"graph_encodes_target", spec.gen.knobs.graph_encodes_target},
                         {"scope", spec.gen.knobs.scope == taskgen::Scope::Local ? "local"
                                                                                 : "global"}};
    write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

train::Dataset load_dataset(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    check(mf.good(), "IoError", "cannot open " + dir + "/manifest.json");
    json manifest = json::parse(mf);

    train::Dataset data;
    data.meta.family = manifest.at("family").get<std::string>();
    data.meta.task_kind = manifest.at("task_kind").get<std::string>();
    data.meta.num_classes = manifest.at("num_classes").get<int>();
    data.meta.vocab_size = manifest.at("vocab_size").get<int>();
    data.meta.num_relations = manifest.at("num_relations").get<int>();
    data.meta.max_entities = manifest.at("max_entities").get<int>();
    data.meta.seed = manifest.at("seed").get<uint64_t>();

    for (const std::string& line : read_lines(dir + "/train.jsonl"))
        data.train.push_back(instance_from_jsonl(line));
    for (const std::string& line : read_lines(dir + "/probe.jsonl"))
        data.probe.push_back(instance_from_jsonl(line));
    return data;
}

// ---- train config ------------------------------------------------------------

train::TrainConfig train_config_from_kv(const KvConfig& kv) {
    train::TrainConfig cfg;
    cfg.arm = train::arm_from_string(kv.get_str("arm", "hybrid+cod"));
    cfg.lr = kv.get_double("lr", cfg.lr);
    cfg.batch_size = kv.get_int("batch_size", cfg.batch_size);
    cfg.epochs = kv.get_int("epochs", cfg.epochs);
    std::string opt = kv.get_str("optimizer", "adam");
    if (opt == "adam") cfg.optimizer = train::Optimizer::Adam;
    else if (opt == "sgd") cfg.optimizer = train::Optimizer::Sgd;
    else fail("BadSpec", "field 'optimizer' expects adam|sgd, got '" + opt + "'");
    cfg.seed = kv.get_u64("seed", cfg.seed);

    cfg.cod.tau = kv.get_double("tau", cfg.cod.tau);
    cfg.cod.lambda = kv.get_double("lambda", cfg.cod.lambda);
    cfg.cod.batch_mean = kv.get_bool("batch_mean", cfg.cod.batch_mean);
    cfg.cod.stop_grad_negatives =
        kv.get_bool("stop_grad_negatives", cfg.cod.stop_grad_negatives);
    cfg.cod.shared_dim = kv.get_int("shared_dim", cfg.cod.shared_dim);
    std::string pool = kv.get_str("negative_pool", "both");
    if (pool == "both") cfg.cod.negative_pool = obj::NegativePool::BothModalities;
    else if (pool == "opposite") cfg.cod.negative_pool = obj::NegativePool::OppositeOnly;
    else fail("BadSpec", "field 'negative_pool' expects both|opposite, got '" + pool + "'");

    cfg.encoder.d_model = kv.get_int("d_model", cfg.encoder.d_model);
    cfg.encoder.d_in = kv.get_int("d_in", cfg.encoder.d_in);
    cfg.encoder.ff_dim = kv.get_int("ff_dim", cfg.encoder.ff_dim);
    cfg.encoder.text_layers = kv.get_int("text_layers", cfg.encoder.text_layers);
    cfg.encoder.gnn_layers = kv.get_int("gnn_layers", cfg.encoder.gnn_layers);
    cfg.encoder.max_len = kv.get_int("max_len", cfg.encoder.max_len);
    std::string poolv = kv.get_str("pooling", "mean");
    if (poolv == "mean") cfg.encoder.pooling = enc::Pooling::Mean;
    else if (poolv == "cls") cfg.encoder.pooling = enc::Pooling::Cls;
    else fail("BadSpec", "field 'pooling' expects mean|cls, got '" + poolv + "'");
    std::string act = kv.get_str("activation", "tanh");
    if (act == "tanh") cfg.encoder.activation = enc::Activation::Tanh;
    else if (act == "relu") cfg.encoder.activation = enc::Activation::Relu;
    else if (act == "identity") cfg.encoder.activation = enc::Activation::Identity;
    else fail("BadSpec", "field 'activation' expects tanh|relu|identity, got '" + act + "'");
    cfg.encoder.seed = kv.get_u64("encoder_seed", cfg.seed);

    cfg.hybrid_fusion = obj::fusion_mode_from_string(kv.get_str("fusion", "concat"));
    check(cfg.hybrid_fusion == obj::FusionMode::Concat ||
              cfg.hybrid_fusion == obj::FusionMode::Residual,
          "BadSpec", "field 'fusion' expects concat|residual");
    cfg.head_hidden = kv.get_int("head_hidden", cfg.head_hidden);
    cfg.snapshot_every = kv.get_int("snapshot_every", cfg.snapshot_every);
    cfg.probe_limit = kv.get_int("probe_limit", cfg.probe_limit);
    return cfg;
}

// ---- run artifacts --------------------------------------------------------------

namespace {

json config_echo(const train::TrainConfig& cfg) {
    json j;
    j["arm"] = train::to_string(cfg.arm);
    j["lr"] = cfg.lr;
    j["batch_size"] = cfg.batch_size;
    j["epochs"] = cfg.epochs;
    j["optimizer"] = cfg.optimizer == train::Optimizer::Adam ? "adam" : "sgd";
    j["seed"] = cfg.seed;
    j["tau"] = cfg.cod.tau;
    j["lambda"] = cfg.cod.lambda;
    j["negative_pool"] =
        cfg.cod.negative_pool == obj::NegativePool::BothModalities ? "both" : "opposite";
    j["batch_mean"] = cfg.cod.batch_mean;
    j["stop_grad_negatives"] = cfg.cod.stop_grad_negatives;
    j["shared_dim"] = cfg.cod.shared_dim;
    j["d_model"] = cfg.encoder.d_model;
    j["d_in"] = cfg.encoder.d_in;
    j["ff_dim"] = cfg.encoder.ff_dim;
    j["text_layers"] = cfg.encoder.text_layers;
    j["gnn_layers"] = cfg.encoder.gnn_layers;
    j["fusion"] = obj::to_string(cfg.hybrid_fusion);
    j["head_hidden"] = cfg.head_hidden;
    j["snapshot_every"] = cfg.snapshot_every;
    j["probe_limit"] = cfg.probe_limit;
    return j;
}

json verdict_json(const analysis::RegimeVerdict& v) {
    json j;
    j["regime"] = analysis::to_string(v.regime);
    j["final_ratio"] = v.final_ratio;
    j["min_ratio"] = v.min_ratio;
    j["slope"] = v.slope;
    return j;
}

json matrix_to_json(const Tensor& m) {
    json rows = json::array();
    for (int i = 0; i < m.dim(0); ++i) {
        json r = json::array();
        for (int j = 0; j < m.dim(1); ++j) r.push_back(m.at2(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

Tensor matrix_from_json(const json& rows) {
    int n = static_cast<int>(rows.size());
    check(n > 0, "MissingSnapshots", "empty matrix in snapshot");
    int p = static_cast<int>(rows.at(0).size());
    Tensor out({n, p});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) out.at2(i, j) = rows.at(static_cast<size_t>(i))
                                                        .at(static_cast<size_t>(j))
                                                        .get<double>();
    return out;
}

} // namespace

void write_run(const std::string& run_dir, const train::TrainConfig& cfg,
               const train::RunResult& result) {
    fs::create_directories(run_dir);

    json record;
    record["run_id"] = result.record.run_id;
    record["config"] = config_echo(cfg);
    json epochs = json::array();
    for (const train::EpochRecord& r : result.record.epochs) {
        json e;
        e["epoch"] = r.epoch;
        e["l_task"] = r.l_task;
        e["l_cod"] = r.l_cod;
        e["task_metric"] = r.eval.primary;
        e["accuracy"] = r.eval.accuracy;
        e["macro_f1"] = r.eval.macro_f1;
        e["hits_at_k"] = r.eval.hits_at_k;
        if (r.has_alignment) {
            e["paired_cos"] = r.alignment.paired_cos;
            e["within_text"] = r.alignment.within_text;
            e["within_graph"] = r.alignment.within_graph;
            e["between"] = r.alignment.between;
            e["ratio"] = r.alignment.ratio();
        }
        epochs.push_back(std::move(e));
    }
    record["epochs"] = std::move(epochs);
    record["verdict"] =
        result.record.verdict ? verdict_json(*result.record.verdict) : json(nullptr);
    write_file(run_dir + "/run_record.json", record.dump(2) + "\n");

    std::string csv =
        "epoch,task_metric,accuracy,macro_f1,hits_at_k,l_task,l_cod,"
        "paired_cos,within_text,within_graph,between,ratio\n";
    for (const train::EpochRecord& r : result.record.epochs) {
        csv += std::to_string(r.epoch) + "," + fmt_double(r.eval.primary) + "," +
               fmt_double(r.eval.accuracy) + "," + fmt_double(r.eval.macro_f1) + "," +
               fmt_double(r.eval.hits_at_k) + "," + fmt_double(r.l_task) + "," +
               fmt_double(r.l_cod) + ",";
        if (r.has_alignment) {
            csv += fmt_double(r.alignment.paired_cos) + "," +
                   fmt_double(r.alignment.within_text) + "," +
                   fmt_double(r.alignment.within_graph) + "," +
                   fmt_double(r.alignment.between) + "," + fmt_double(r.alignment.ratio());
        } else {
            csv += ",,,,";
        }
        csv += "\n";
    }
    write_file(run_dir + "/metrics.csv", csv);

    std::string snaps;
    for (const analysis::RepresentationSnapshot& s : result.snapshots) {
        json j;
        j["epoch"] = s.epoch;
        j["run_id"] = s.run_id;
        j["z_text"] = matrix_to_json(s.z_text);
        j["z_graph"] = matrix_to_json(s.z_graph);
        snaps += j.dump();
        snaps += "\n";
    }
    write_file(run_dir + "/snapshots.jsonl", snaps);
}

std::vector<analysis::RepresentationSnapshot> load_snapshots(const std::string& run_dir) {
    std::string path = run_dir + "/snapshots.jsonl";
    check(fs::exists(path), "MissingSnapshots", "no snapshots.jsonl under " + run_dir);
    std::vector<analysis::RepresentationSnapshot> out;
    for (const std::string& line : read_lines(path)) {
        json j = json::parse(line);
        analysis::RepresentationSnapshot s;
        s.epoch = j.at("epoch").get<int>();
        s.run_id = j.value("run_id", "");
        s.z_text = matrix_from_json(j.at("z_text"));
        s.z_graph = matrix_from_json(j.at("z_graph"));
        out.push_back(std::move(s));
    }
    check(!out.empty(), "MissingSnapshots", "snapshots.jsonl is empty under " + run_dir);
    return out;
}

namespace {

std::string pca_scatter_csv(const analysis::RepresentationSnapshot& s) {
    int n = s.z_text.dim(0), p = s.z_text.dim(1);
    Tensor joint({2 * n, p});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) {
            joint.at2(i, j) = s.z_text.at2(i, j);
            joint.at2(n + i, j) = s.z_graph.at2(i, j);
        }
    analysis::Pca2Result pca = analysis::pca2(joint);
    std::string csv = "# explained_variance_ratio," + fmt_double(pca.explained[0]) + "," +
                      fmt_double(pca.explained[1]) + "\n";
    csv += "x,y,modality,row\n";
    for (int i = 0; i < 2 * n; ++i) {
        csv += fmt_double(pca.projected.at2(i, 0)) + "," + fmt_double(pca.projected.at2(i, 1)) +
               "," + (i < n ? "text" : "graph") + "," + std::to_string(i < n ? i : i - n) + "\n";
    }
    return csv;
}

std::string pca_scatter_svg(const analysis::RepresentationSnapshot& s) {
    int n = s.z_text.dim(0), p = s.z_text.dim(1);
    Tensor joint({2 * n, p});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) {
            joint.at2(i, j) = s.z_text.at2(i, j);
            joint.at2(n + i, j) = s.z_graph.at2(i, j);
        }
    analysis::Pca2Result pca = analysis::pca2(joint);
    double mnx = 0, mxx = 0, mny = 0, mxy = 0;
    for (int i = 0; i < 2 * n; ++i) {
        mnx = std::min(mnx, pca.projected.at2(i, 0));
        mxx = std::max(mxx, pca.projected.at2(i, 0));
        mny = std::min(mny, pca.projected.at2(i, 1));
        mxy = std::max(mxy, pca.projected.at2(i, 1));
    }
    double w = std::max(mxx - mnx, 1e-9), h = std::max(mxy - mny, 1e-9);
    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" "
        "viewBox=\"0 0 480 480\">\n<rect width=\"480\" height=\"480\" fill=\"white\"/>\n";
    char buf[160];
    for (int i = 0; i < 2 * n; ++i) {
        double x = 20 + 440 * (pca.projected.at2(i, 0) - mnx) / w;
        double y = 460 - 440 * (pca.projected.at2(i, 1) - mny) / h;
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\" fill-opacity=\"0.7\"/>\n",
                      x, y, i < n ? "#1f77b4" : "#ff7f0e");
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace

void write_analysis(const std::string& run_dir, const std::string& out_dir,
                    const AnalyzeOptions& opts) {
    std::vector<analysis::RepresentationSnapshot> snaps = load_snapshots(run_dir);
    fs::create_directories(out_dir);

    std::vector<analysis::AlignmentMetrics> trajectory;
    std::string curves = "epoch,paired_cos,within_text,within_graph,between,ratio\n";
    for (const auto& s : snaps) {
        analysis::AlignmentMetrics m = analysis::alignment_metrics(s);
        trajectory.push_back(m);
        curves += std::to_string(s.epoch) + "," + fmt_double(m.paired_cos) + "," +
                  fmt_double(m.within_text) + "," + fmt_double(m.within_graph) + "," +
                  fmt_double(m.between) + "," + fmt_double(m.ratio()) + "\n";
        write_file(out_dir + "/pca_epoch_" + std::to_string(s.epoch) + ".csv",
                   pca_scatter_csv(s));
        if (opts.svg)
            write_file(out_dir + "/pca_epoch_" + std::to_string(s.epoch) + ".svg",
                       pca_scatter_svg(s));
    }
    write_file(out_dir + "/curves.csv", curves);

    json verdict;
    if (trajectory.size() >= 3) {
        verdict = verdict_json(analysis::regime_verdict(trajectory, opts.regime));
        verdict["epochs_analyzed"] = trajectory.size();
    } else {
        verdict["regime"] = nullptr;
        verdict["epochs_analyzed"] = trajectory.size();
    }
    write_file(out_dir + "/verdict.json", verdict.dump(2) + "\n");
}

void write_matrix(const std::string& out_dir, const std::vector<train::MatrixRow>& rows,
                  size_t n_seeds) {
    fs::create_directories(out_dir);
    std::string csv = "arm,mean,sd,marker\n";
    for (const train::MatrixRow& r : rows) {
        std::string marker = r.best ? "best" : (r.second ? "second" : "");
        csv += train::to_string(r.arm) + "," + fmt_double(r.mean) + "," + fmt_double(r.sd) +
               "," + marker + "\n";
    }
    write_file(out_dir + "/matrix.csv", csv);

    std::string txt = "arm          mean      sd        (" + std::to_string(n_seeds) + " seeds)\n";
    for (const train::MatrixRow& r : rows) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-12s %-9.4f %-9.4f %s\n",
                      train::to_string(r.arm).c_str(), r.mean, r.sd,
                      r.best ? "**" : (r.second ? "*" : ""));
        txt += buf;
    }
    write_file(out_dir + "/matrix.txt", txt);
}

} // namespace codlab::io
