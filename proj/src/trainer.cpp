#include "codlab/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace codlab::train {

using diff::Tape;
using diff::Var;
using taskgen::Instance;

Arm arm_from_string(const std::string& s) {
    if (s == "text") return Arm::Text;
    if (s == "graph") return Arm::Graph;
    if (s == "hybrid") return Arm::Hybrid;
    if (s == "hybrid+cod") return Arm::HybridCod;
    fail("InvalidConfig", "unknown arm '" + s + "'");
}

std::string to_string(Arm a) {
    switch (a) {
        case Arm::Text: return "text";
        case Arm::Graph: return "graph";
        case Arm::Hybrid: return "hybrid";
        case Arm::HybridCod: return "hybrid+cod";
    }
    return "?";
}

void TrainConfig::normalize() {
    encoder.validate();
    check(lr >= 0.0, "InvalidConfig", "lr must be non-negative");
    check(batch_size >= 1, "InvalidConfig", "batch_size must be >= 1");
    check(epochs >= 1, "InvalidConfig", "epochs must be >= 1");
    if (arm == Arm::HybridCod) {
        check(cod.lambda > 0.0, "InvalidConfig",
              "arm hybrid+cod requires lambda > 0 (got " + std::to_string(cod.lambda) + ")");
    } else {
        cod.lambda = 0.0;
    }
    cod.validate();
}

obj::FusionMode TrainConfig::fusion() const {
    switch (arm) {
        case Arm::Text: return obj::FusionMode::TextOnly;
        case Arm::Graph: return obj::FusionMode::GraphOnly;
        default: return hybrid_fusion;
    }
}

void ensure_node_init(Dataset& data, int d_in) {
    auto fill = [d_in](std::vector<Instance>& v) {
        for (Instance& inst : v)
            if (inst.graph.node_init.size() != inst.graph.num_nodes * d_in ||
                inst.graph.node_init.ndim() != 2)
                inst.graph.node_init = enc::structural_init(inst.graph, d_in);
    };
    fill(data.train);
    fill(data.probe);
}

std::vector<int> shuffle_order(int n, int epoch, uint64_t seed) {
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    Rng rng = Rng(seed).fork(0xe70c5ULL).fork(static_cast<uint64_t>(epoch));
    rng.shuffle(idx);
    return idx;
}

enc::ParamSet build_params(const taskgen::TaskMeta& meta, const TrainConfig& cfg) {
    Rng rng(cfg.encoder.seed);
    enc::ParamSet ps;
    enc::add_text_params(ps, meta.vocab_size, cfg.encoder, rng);
    enc::add_graph_params(ps, meta.num_relations, cfg.encoder, rng);
    obj::add_projection_params(ps, cfg.encoder.d_model, cfg.cod, rng);
    if (cfg.hybrid_fusion == obj::FusionMode::Residual)
        ps.add("fuse.w", enc::init_weight(cfg.encoder.d_model, cfg.encoder.d_model, rng));
    int in_dim = obj::fused_dim(cfg.encoder.d_model, cfg.fusion());
    int out_dim = (meta.task_kind == "ranking") ? 1 : meta.num_classes;
    check(out_dim >= 1, "InvalidConfig", "dataset metadata lacks a label space");
    obj::add_task_head_params(ps, in_dim, cfg.head_hidden, out_dim, rng);
    return ps;
}

// ---- forward pass ------------------------------------------------------------

namespace {

Var mean_of(Tape& tape, const std::vector<Var>& xs) {
    check(!xs.empty(), "EmptyInput", "mean over empty vector list");
    Var acc = xs[0];
    for (size_t i = 1; i < xs.size(); ++i) acc = diff::add(acc, xs[i]);
    (void)tape;
    return diff::scale(acc, 1.0 / static_cast<double>(xs.size()));
}

struct InstanceForward {
    Var h_text;     // pooled text representation
    Var h_graph;    // pooled graph representation
    Var task_term;  // per-instance task loss
    std::vector<double> scores;  // ranking eval only
    int argmax = -1;             // classification eval only
};

InstanceForward forward_instance(Tape& tape, const Instance& inst,
                                 const enc::BoundParams& bound, const TrainConfig& cfg,
                                 const taskgen::TaskMeta& meta, bool want_loss) {
    InstanceForward out;
    obj::FusionMode mode = cfg.fusion();
    bool ranking = meta.task_kind == "ranking";

    enc::TextEncoding text =
        enc::encode_text(tape, inst.tokens, bound, cfg.encoder, meta.vocab_size);
    enc::GraphEncoding graph = enc::encode_graph(tape, inst.graph, bound, cfg.encoder);

    if (ranking) {
        check(!inst.spans.empty(), "SpanOutOfRange",
              "ranking instance " + inst.id + " has no entity spans");
        std::vector<Var> text_e = enc::entity_span_pool(tape, text.tokens, inst.spans);
        std::vector<Var> node_e;
        node_e.reserve(static_cast<size_t>(inst.graph.num_nodes));
        for (int i = 0; i < inst.graph.num_nodes; ++i)
            node_e.push_back(diff::row(graph.nodes, i));
        check(text_e.size() == node_e.size(), "BatchLenMismatch",
              "span count does not match node count in " + inst.id);

        std::vector<Var> score_vars;
        out.scores.reserve(text_e.size());
        for (size_t i = 0; i < text_e.size(); ++i) {
            Var fused = obj::fuse(tape, text_e[i], node_e[i], mode, bound);
            Var s = diff::pick(obj::task_logits(tape, fused, bound), 0);
            score_vars.push_back(s);
            out.scores.push_back(tape.value(s).item());
        }
        if (want_loss) out.task_term = obj::ranking_loss(tape, score_vars, inst.gold);

        // Instance-level representations: mean over the aligned entity
        // vectors, keeping the modalities row-for-row comparable.
        out.h_text = mean_of(tape, text_e);
        out.h_graph = mean_of(tape, node_e);
    } else {
        out.h_text = text.pooled;
        out.h_graph = graph.pooled;
        Var fused = obj::fuse(tape, out.h_text, out.h_graph, mode, bound);
        Var logits = obj::task_logits(tape, fused, bound);
        const Tensor& lv = tape.value(logits);
        int arg = 0;
        for (int i = 1; i < lv.size(); ++i)
            if (lv[i] > lv[arg]) arg = i;
        out.argmax = arg;
        if (want_loss) out.task_term = obj::classification_loss(tape, logits, inst.label);
    }
    return out;
}

// ---- optimizers ----------------------------------------------------------------

struct AdamState {
    enc::ParamSet m, v;
    long long t = 0;
};

void apply_update(enc::ParamSet& params, const enc::ParamSet& grads, const TrainConfig& cfg,
                  AdamState& adam) {
    if (cfg.optimizer == Optimizer::Sgd) {
        for (const std::string& name : params.names()) {
            Tensor& p = params.at(name);
            const Tensor& g = grads.at(name);
            for (int i = 0; i < p.size(); ++i) p[i] -= cfg.lr * g[i];
        }
        return;
    }
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++adam.t;
    double bc1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));
    for (const std::string& name : params.names()) {
        Tensor& p = params.at(name);
        const Tensor& g = grads.at(name);
        Tensor& m = adam.m.at(name);
        Tensor& v = adam.v.at(name);
        for (int i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            p[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
}

analysis::RepresentationSnapshot take_snapshot(const enc::ParamSet& params,
                                               const TrainConfig& cfg,
                                               const taskgen::TaskMeta& meta,
                                               const std::vector<Instance>& probe,
                                               int epoch, const std::string& run_id) {
    int n = std::min<int>(cfg.probe_limit, static_cast<int>(probe.size()));
    int p = cfg.cod.shared_dim;
    analysis::RepresentationSnapshot snap;
    snap.epoch = epoch;
    snap.run_id = run_id;
    snap.z_text = Tensor({n, p});
    snap.z_graph = Tensor({n, p});
    for (int i = 0; i < n; ++i) {
        Tape tape(cfg.seed);
        enc::BoundParams bound = enc::bind(tape, params, false);
        InstanceForward fwd =
            forward_instance(tape, probe[static_cast<size_t>(i)], bound, cfg, meta, false);
        Var zt = obj::project_text(tape, fwd.h_text, bound);
        Var zg = obj::project_graph(tape, fwd.h_graph, bound);
        const Tensor& tv = tape.value(zt);
        const Tensor& gv = tape.value(zg);
        for (int j = 0; j < p; ++j) {
            snap.z_text.at2(i, j) = tv[j];
            snap.z_graph.at2(i, j) = gv[j];
        }
    }
    return snap;
}

} // namespace

EvalMetrics classification_metrics(const std::vector<int>& predictions,
                                   const std::vector<int>& golds, int num_classes) {
    check(predictions.size() == golds.size() && !golds.empty(), "EmptyData",
          "prediction/gold length mismatch");
    std::vector<long long> tp(static_cast<size_t>(num_classes), 0),
        fp(static_cast<size_t>(num_classes), 0), fn(static_cast<size_t>(num_classes), 0);
    long long correct = 0;
    for (size_t i = 0; i < golds.size(); ++i) {
        int pred = predictions[i], gold = golds[i];
        if (pred == gold) {
            ++correct;
            ++tp[static_cast<size_t>(pred)];
        } else {
            ++fp[static_cast<size_t>(pred)];
            ++fn[static_cast<size_t>(gold)];
        }
    }
    EvalMetrics out;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(golds.size());

    double f1_sum = 0.0;
    int f1_classes = 0;
    for (int c = 0; c < num_classes; ++c) {
        long long denom = 2 * tp[static_cast<size_t>(c)] + fp[static_cast<size_t>(c)] +
                          fn[static_cast<size_t>(c)];
        bool present = (tp[static_cast<size_t>(c)] + fp[static_cast<size_t>(c)] +
                        fn[static_cast<size_t>(c)]) > 0;
        if (!present) continue;
        ++f1_classes;
        if (denom > 0)
            f1_sum += 2.0 * static_cast<double>(tp[static_cast<size_t>(c)]) /
                      static_cast<double>(denom);
    }
    out.macro_f1 = f1_classes > 0 ? f1_sum / f1_classes : 0.0;
    out.primary = out.accuracy;
    return out;
}

double hits_at_k(const std::vector<double>& scores, const std::vector<int>& gold) {
    size_t k = gold.size();
    if (k == 0) return 0.0;
    std::vector<int> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[static_cast<size_t>(a)] >
                                                scores[static_cast<size_t>(b)]; });
    int hit = 0;
    for (size_t r = 0; r < k && r < order.size(); ++r)
        if (std::find(gold.begin(), gold.end(), order[r]) != gold.end()) ++hit;
    return static_cast<double>(hit) / static_cast<double>(k);
}

EvalMetrics evaluate(const enc::ParamSet& params, const TrainConfig& cfg,
                     const taskgen::TaskMeta& meta,
                     const std::vector<Instance>& data) {
    check(!data.empty(), "EmptyData", "evaluate on empty dataset");
    EvalMetrics out;

    if (meta.task_kind == "ranking") {
        double acc = 0.0;
        for (const Instance& inst : data) {
            Tape tape(cfg.seed);
            enc::BoundParams bound = enc::bind(tape, params, false);
            InstanceForward fwd = forward_instance(tape, inst, bound, cfg, meta, false);
            acc += hits_at_k(fwd.scores, inst.gold);
        }
        out.hits_at_k = acc / static_cast<double>(data.size());
        out.primary = out.hits_at_k;
        return out;
    }

    std::vector<int> preds, golds;
    preds.reserve(data.size());
    golds.reserve(data.size());
    for (const Instance& inst : data) {
        Tape tape(cfg.seed);
        enc::BoundParams bound = enc::bind(tape, params, false);
        InstanceForward fwd = forward_instance(tape, inst, bound, cfg, meta, false);
        preds.push_back(fwd.argmax);
        golds.push_back(inst.label);
    }
    return classification_metrics(preds, golds, meta.num_classes);
}

RunResult train(const Dataset& data_in, const TrainConfig& cfg_in) {
    TrainConfig cfg = cfg_in;
    cfg.normalize();
    check(!data_in.train.empty(), "EmptyData", "training split is empty");
    check(!data_in.probe.empty(), "EmptyData", "probe split is empty");

    Dataset data = data_in;
    ensure_node_init(data, cfg.encoder.d_in);

    RunResult res;
    res.params = build_params(data.meta, cfg);
    res.record.run_id = to_string(cfg.arm) + "-s" + std::to_string(cfg.seed);

    AdamState adam;
    if (cfg.optimizer == Optimizer::Adam) {
        for (const std::string& name : res.params.names()) {
            adam.m.add(name, Tensor::zeros_like(res.params.at(name)));
            adam.v.add(name, Tensor::zeros_like(res.params.at(name)));
        }
    }

    int n = static_cast<int>(data.train.size());
    bool compute_cod = !cfg.disable_cod_term && (cfg.cod.lambda > 0.0 || cfg.log_cod_when_off);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<int> order = shuffle_order(n, epoch, cfg.seed);
        double task_sum = 0.0, cod_sum = 0.0;
        int batches = 0;

        for (int start = 0; start < n; start += cfg.batch_size) {
            int end = std::min(n, start + cfg.batch_size);
            Tape tape(cfg.seed);
            enc::BoundParams bound = enc::bind(tape, res.params, true);

            std::vector<Var> task_terms, z_text, z_graph;
            for (int k = start; k < end; ++k) {
                const Instance& inst = data.train[static_cast<size_t>(order[static_cast<size_t>(k)])];
                InstanceForward fwd = forward_instance(tape, inst, bound, cfg, data.meta, true);
                task_terms.push_back(fwd.task_term);
                if (compute_cod) {
                    z_text.push_back(obj::project_text(tape, fwd.h_text, bound));
                    z_graph.push_back(obj::project_graph(tape, fwd.h_graph, bound));
                }
            }

            Var l_task = mean_of(tape, task_terms);
            double cod_value = 0.0;
            Var root = l_task;
            if (compute_cod) {
                Var l_cod = obj::cod_loss(tape, z_text, z_graph, cfg.cod);
                cod_value = tape.value(l_cod).item();
                root = obj::total_loss(tape, l_task, l_cod, cfg.cod);
            }

            double loss_value = tape.value(root).item();
            if (!std::isfinite(loss_value))
                fail("NonFiniteLoss", "non-finite loss in epoch " + std::to_string(epoch) +
                                          ", batch starting at " + std::to_string(start));

            tape.backward(root);
            enc::ParamSet grads = enc::collect_grads(tape, res.params, bound);
            apply_update(res.params, grads, cfg, adam);

            task_sum += tape.value(l_task).item();
            cod_sum += cod_value;
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.l_task = task_sum / batches;
        rec.l_cod = cod_sum / batches;
        rec.eval = evaluate(res.params, cfg, data.meta, data.probe);

        if (cfg.snapshot_every > 0 &&
            (epoch % cfg.snapshot_every == 0 || epoch == cfg.epochs)) {
            analysis::RepresentationSnapshot snap = take_snapshot(
                res.params, cfg, data.meta, data.probe, epoch, res.record.run_id);
            rec.alignment = analysis::alignment_metrics(snap);
            rec.has_alignment = true;
            res.snapshots.push_back(std::move(snap));
        }
        res.record.epochs.push_back(std::move(rec));
    }

    std::vector<analysis::AlignmentMetrics> trajectory;
    for (const EpochRecord& r : res.record.epochs)
        if (r.has_alignment) trajectory.push_back(r.alignment);
    if (trajectory.size() >= 3) res.record.verdict = analysis::regime_verdict(trajectory);
    return res;
}

std::vector<MatrixRow> run_matrix(const Dataset& data, const TrainConfig& base,
                                  const std::vector<uint64_t>& seeds, int threads) {
    check(!seeds.empty(), "InvalidConfig", "run_matrix needs at least one seed");
    const Arm arms[] = {Arm::Text, Arm::Graph, Arm::Hybrid, Arm::HybridCod};

    struct Job {
        Arm arm;
        uint64_t seed;
    };
    std::vector<Job> jobs;
    for (Arm a : arms)
        for (uint64_t s : seeds) jobs.push_back({a, s});

    if (threads <= 0) {
        if (const char* env = std::getenv("COD_LAB_THREADS")) threads = std::atoi(env);
        if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    threads = std::min<int>(threads, static_cast<int>(jobs.size()));

    std::vector<double> finals(jobs.size(), 0.0);
    std::atomic<size_t> next{0};
    std::vector<std::string> errors(jobs.size());

    auto worker = [&]() {
        for (;;) {
            size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            TrainConfig cfg = base;
            cfg.arm = jobs[j].arm;
            cfg.seed = jobs[j].seed;
            cfg.encoder.seed = jobs[j].seed;
            if (cfg.arm != Arm::HybridCod) cfg.cod.lambda = 0.0;
            try {
                RunResult r = train(data, cfg);
                finals[j] = r.record.epochs.back().eval.primary;
            } catch (const std::exception& e) {
                errors[j] = e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    for (const std::string& e : errors)
        if (!e.empty()) fail("NonFiniteLoss", "matrix run failed: " + e);

    std::vector<MatrixRow> rows;
    size_t j = 0;
    for (Arm a : arms) {
        MatrixRow row;
        row.arm = a;
        for (size_t s = 0; s < seeds.size(); ++s) row.per_seed.push_back(finals[j++]);
        double mean = 0.0;
        for (double v : row.per_seed) mean += v;
        mean /= static_cast<double>(row.per_seed.size());
        double var = 0.0;
        for (double v : row.per_seed) var += (v - mean) * (v - mean);
        row.mean = mean;
        row.sd = row.per_seed.size() > 1
                     ? std::sqrt(var / static_cast<double>(row.per_seed.size() - 1))
                     : 0.0;
        rows.push_back(std::move(row));
    }

    std::vector<int> order = {0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rows[static_cast<size_t>(a)].mean >
                                                rows[static_cast<size_t>(b)].mean; });
    rows[static_cast<size_t>(order[0])].best = true;
    rows[static_cast<size_t>(order[1])].second = true;
    return rows;
}

} // namespace codlab::train
