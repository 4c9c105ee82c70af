#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "supernorm/autodiff.hpp"
#include "supernorm/common.hpp"
#include "supernorm/datasets.hpp"
#include "supernorm/factor.hpp"
#include "supernorm/graph.hpp"
#include "supernorm/io.hpp"
#include "supernorm/layers.hpp"
#include "supernorm/losses.hpp"
#include "supernorm/metrics.hpp"
#include "supernorm/optim.hpp"
#include "supernorm/splits.hpp"

namespace supernorm {

struct TrainConfig {
    double lr = 1e-3;  // graph tasks; node tasks default to 1e-2
    int plateau_patience = 10;
    double lr_floor = 1e-5;
    int batch_size = 32;
    int max_epochs = 150;
    std::uint64_t seed = 0;
    int hidden_dim = 128;
    double dropout = 0.0;
    int num_seeds = 5;
    int warmup_epochs = 0;  // linear ramp from 0 to lr; off by default

    void validate() const {
        if (!(lr_floor < lr)) throw DataError("TrainConfig: lr_floor must be below lr");
        if (plateau_patience < 1) throw DataError("TrainConfig: patience must be >= 1");
        if (batch_size < 1 || max_epochs < 1 || hidden_dim < 1 || num_seeds < 1)
            throw DataError("TrainConfig: sizes must be positive");
        if (dropout < 0.0 || dropout >= 1.0) throw DataError("TrainConfig: dropout must be in [0,1)");
    }
};

// One metrics record; reports are row streams plus small summary structs.
struct MetricRow {
    std::string experiment;
    std::string model;
    std::string norm;
    int depth = 0;
    std::uint64_t seed = 0;
    int epoch = 0;
    std::string split;
    std::string metric;
    double value = 0.0;
};

inline std::string metrics_to_csv(const std::vector<MetricRow>& rows) {
    std::ostringstream out;
    out << "experiment,model,norm,depth,seed,epoch,split,metric,value\n";
    for (const MetricRow& r : rows) {
        out << r.experiment << ',' << r.model << ',' << r.norm << ',' << r.depth << ',' << r.seed
            << ',' << r.epoch << ',' << r.split << ',' << r.metric << ',' << format_double(r.value)
            << '\n';
    }
    return out.str();
}

namespace detail {

inline double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double std_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

inline double mean_abs(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data) s += std::abs(v);
    return m.data.empty() ? 0.0 : s / static_cast<double>(m.data.size());
}

// Precomputed per-graph pieces reused across epochs: factor values are fixed
// by the dataset, never touched by training.
struct PreparedGraphs {
    std::vector<Graph> graphs;
    std::vector<std::vector<double>> xi;    // per graph
    std::vector<double> labels;             // per graph

    static PreparedGraphs from(const std::vector<Graph>& gs, const FactorConfig& cfg) {
        PreparedGraphs p;
        p.graphs = gs;
        for (const Graph& g : gs) {
            std::vector<double> xs;
            for (int v = 0; v < g.num_nodes; ++v) xs.push_back(subgraph_factor(g, v, cfg));
            p.xi.push_back(std::move(xs));
            if (!g.label) throw DataError("graph classification requires labeled graphs");
            p.labels.push_back(*g.label);
        }
        return p;
    }
};

struct AssembledBatch {
    BatchedGraphs batched;
    NodeFactors factors;
    Matrix labels;  // m x 1
    std::vector<std::vector<int>> neighbors;
};

inline Matrix dropout_mask(int rows, int cols, double rate, RandomStream& rng) {
    Matrix mask(rows, cols, 1.0);
    double keep = 1.0 - rate;
    for (double& v : mask.data) v = rng.uniform() < rate ? 0.0 : 1.0 / keep;
    return mask;
}

inline AssembledBatch assemble(const PreparedGraphs& p, const std::vector<int>& indices) {
    std::vector<Graph> gs;
    std::vector<double> xi;
    Matrix labels(static_cast<int>(indices.size()), 1);
    for (int k = 0; k < static_cast<int>(indices.size()); ++k) {
        int i = indices[static_cast<std::size_t>(k)];
        gs.push_back(p.graphs[static_cast<std::size_t>(i)]);
        for (double x : p.xi[static_cast<std::size_t>(i)]) xi.push_back(x);
        labels(k, 0) = p.labels[static_cast<std::size_t>(i)];
    }
    AssembledBatch b;
    b.batched = batch(gs);
    b.factors = factors_from_xi(std::move(xi), b.batched.segment_offsets);
    b.labels = std::move(labels);
    b.neighbors = b.batched.adjacency_lists();
    return b;
}

}  // namespace detail

enum class NormKind { none, batchnorm, supernorm };

inline std::string norm_name(NormKind k) {
    switch (k) {
        case NormKind::none: return "none";
        case NormKind::batchnorm: return "batchnorm";
        default: return "supernorm";
    }
}

// One conv block (linear or GIN) -> optional norm -> ReLU -> mean pool -> head.
struct OneLayerGraphModel {
    enum class Backbone { mlp, gin };

    Backbone backbone;
    NormKind norm_kind;
    Mlp encoder;  // mlp: {d_in, hidden}; gin: internal MLP {d_in, hidden, hidden}
    SuperNormState norm;
    Mlp head;  // {hidden, 1}

    static OneLayerGraphModel make(Backbone bb, NormKind nk, int d_in, int hidden,
                                   RandomStream& rng) {
        Mlp encoder = bb == Backbone::mlp ? Mlp::make("encoder", {d_in, hidden}, rng)
                                          : Mlp::make("encoder", {d_in, hidden, hidden}, rng);
        return OneLayerGraphModel{bb, nk, std::move(encoder), SuperNormState(hidden),
                                  Mlp::make("head", {hidden, 1}, rng)};
    }

    void set_training(bool training) { norm.training = training; }

    DiffMatrix forward(Tape& tape, ParamBinding& params, const detail::AssembledBatch& b,
                       const Matrix* input_mask = nullptr) {
        if (!b.batched.features) throw DataError("graph model requires node features");
        DiffMatrix h = tape.constant(*b.batched.features);
        if (input_mask) h = tape.hadamard(h, tape.constant(*input_mask));
        if (backbone == Backbone::mlp) {
            h = encoder.forward(tape, params, h);
        } else {
            h = gin_conv(tape, params, h, b.neighbors, 0.0, encoder);
        }
        if (norm_kind == NormKind::batchnorm) {
            h = batchnorm(tape, params, h, norm);
        } else if (norm_kind == NormKind::supernorm) {
            h = supernorm(tape, params, h, b.factors, b.batched.segment_offsets, norm);
        }
        h = tape.relu(h);
        DiffMatrix pooled = mean_pool_readout(tape, h, b.batched.segment_offsets);
        return head.forward(tape, params, pooled);
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out = encoder.parameters();
        for (Parameter* p : head.parameters()) out.push_back(p);
        out.push_back(&norm.gamma);
        out.push_back(&norm.beta);
        out.push_back(&norm.w_rc);
        out.push_back(&norm.w_re);
        return out;
    }
};

struct FitGraphResult {
    double test_auc = 0.0;
    double test_acc = 0.0;
    double best_valid_auc = 0.0;
    int epochs = 0;
    double w_rc_start = 0.0, w_rc_end = 0.0;
    double w_re_start = 0.0, w_re_end = 0.0;
};

// Minibatch training loop for the graph classifiers. Deterministic given
// (model init, config, dataset); evaluation runs in eval mode.
inline FitGraphResult train_graph_classifier(OneLayerGraphModel& model,
                                             const detail::PreparedGraphs& prepared,
                                             const SplitResult& split, const TrainConfig& cfg,
                                             const std::string& experiment,
                                             const std::string& model_name,
                                             std::vector<MetricRow>* rows) {
    cfg.validate();
    RandomStream order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    Adam adam(cfg.lr);
    PlateauScheduler sched(cfg.lr, cfg.plateau_patience, cfg.lr_floor, /*maximize=*/true);

    detail::AssembledBatch valid_batch = detail::assemble(prepared, split.valid);
    detail::AssembledBatch test_batch = detail::assemble(prepared, split.test);

    auto evaluate = [&](const detail::AssembledBatch& b, double* auc, double* acc) {
        model.set_training(false);
        Tape tape;
        ParamBinding params(tape);
        DiffMatrix logits = model.forward(tape, params, b);
        const Matrix& z = tape.value(logits);
        std::vector<double> scores;
        std::vector<int> labels;
        std::vector<int> pred;
        for (int i = 0; i < z.rows; ++i) {
            scores.push_back(z(i, 0));
            labels.push_back(b.labels(i, 0) > 0.5 ? 1 : 0);
            pred.push_back(z(i, 0) > 0.0 ? 1 : 0);
        }
        *auc = roc_auc(scores, labels);
        *acc = accuracy(pred, labels);
        model.set_training(true);
    };

    FitGraphResult result;
    result.w_rc_start = detail::mean_abs(model.norm.w_rc.value);
    result.w_re_start = detail::mean_abs(model.norm.w_re.value);

    const std::string norm_label = norm_name(model.norm_kind);
    auto log = [&](int epoch, const std::string& split_name, const std::string& metric, double v) {
        if (rows)
            rows->push_back({experiment, model_name, norm_label, 1, cfg.seed, epoch, split_name,
                             metric, v});
    };
    log(0, "train", "mean_abs_w_rc", result.w_rc_start);
    log(0, "train", "mean_abs_w_re", result.w_re_start);

    std::vector<int> train_indices = split.train;
    RandomStream dropout_rng(cfg.seed ^ 0x5bd1e995u);
    bool stop = false;
    for (int epoch = 1; epoch <= cfg.max_epochs && !stop; ++epoch) {
        if (cfg.warmup_epochs > 0 && epoch <= cfg.warmup_epochs)
            adam.set_lr(cfg.lr * static_cast<double>(epoch) / static_cast<double>(cfg.warmup_epochs));
        order_rng.shuffle(train_indices);
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < train_indices.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t end = std::min(train_indices.size(),
                                       start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<int> chunk(train_indices.begin() + static_cast<long>(start),
                                   train_indices.begin() + static_cast<long>(end));
            detail::AssembledBatch b = detail::assemble(prepared, chunk);
            Tape tape;
            ParamBinding params(tape);
            Matrix mask;
            const Matrix* maskp = nullptr;
            if (cfg.dropout > 0.0) {
                mask = detail::dropout_mask(b.batched.features->rows, b.batched.features->cols,
                                            cfg.dropout, dropout_rng);
                maskp = &mask;
            }
            DiffMatrix logits = model.forward(tape, params, b, maskp);
            DiffMatrix loss = binary_cross_entropy(tape, logits, b.labels);
            loss_sum += tape.value(loss)(0, 0);
            ++batches;
            tape.backward(loss);
            adam.step(params.gradients());
        }
        double valid_auc = 0.0, valid_acc = 0.0, test_auc = 0.0, test_acc = 0.0;
        evaluate(valid_batch, &valid_auc, &valid_acc);
        evaluate(test_batch, &test_auc, &test_acc);
        log(epoch, "train", "loss", loss_sum / std::max(1, batches));
        log(epoch, "valid", "auc", valid_auc);
        log(epoch, "train", "mean_abs_w_rc", detail::mean_abs(model.norm.w_rc.value));
        log(epoch, "train", "mean_abs_w_re", detail::mean_abs(model.norm.w_re.value));
        if (valid_auc > result.best_valid_auc || epoch == 1) {
            result.best_valid_auc = valid_auc;
            result.test_auc = test_auc;
            result.test_acc = test_acc;
        }
        result.epochs = epoch;
        if (epoch > cfg.warmup_epochs) {
            auto decision = sched.observe(valid_auc);
            adam.set_lr(decision.lr);
            stop = decision.stop;
        }
    }
    result.w_rc_end = detail::mean_abs(model.norm.w_rc.value);
    result.w_re_end = detail::mean_abs(model.norm.w_re.value);
    log(result.epochs, "test", "auc", result.test_auc);
    log(result.epochs, "test", "accuracy", result.test_acc);
    return result;
}

// ---- regular-graph expressivity experiment ------------------------------------

struct RegularTaskConfig {
    TrainConfig train;
    int graphs_per_class = 300;  // 600 total -> 400/100/100 via hierarchical split
    int nodes = 12;
    int degree = 3;
    int feature_dim = 4;
    double factor_p = 0.05;

    RegularTaskConfig() {
        train.lr = 1e-3;
        train.hidden_dim = 64;
        train.max_epochs = 120;
    }
};

struct ModelSummary {
    std::string model;
    std::string norm;
    std::vector<double> test_auc;  // per seed
    std::vector<double> test_acc;
    std::vector<double> w_rc_start, w_rc_end, w_re_start, w_re_end;

    double mean_test_auc() const { return detail::mean_of(test_auc); }
    double std_test_auc() const { return detail::std_of(test_auc); }
};

struct RegularReport {
    std::vector<MetricRow> rows;
    std::vector<ModelSummary> models;

    const ModelSummary& summary(const std::string& name) const {
        for (const auto& m : models)
            if (m.model == name) return m;
        throw DataError("no summary for model " + name);
    }
};

namespace detail {

struct VariantSpec {
    std::string name;
    OneLayerGraphModel::Backbone backbone;
    NormKind norm;
    bool freeze_rc = false;
    bool freeze_re = false;
};

inline RegularReport run_graph_task(const RegularTaskConfig& cfg,
                                    const std::vector<VariantSpec>& variants,
                                    const std::string& experiment) {
    cfg.train.validate();
    FactorConfig fcfg;
    fcfg.p = cfg.factor_p;
    std::vector<Graph> dataset = make_triangle_task_dataset(
        cfg.graphs_per_class, cfg.nodes, cfg.degree, cfg.feature_dim, cfg.train.seed);
    SplitResult split = hierarchical_split(dataset, 1.0 / 6.0, 1.0 / 6.0);
    PreparedGraphs prepared = PreparedGraphs::from(dataset, fcfg);

    RegularReport report;
    for (const VariantSpec& spec : variants) {
        ModelSummary summary;
        summary.model = spec.name;
        summary.norm = norm_name(spec.norm);
        for (int s = 0; s < cfg.train.num_seeds; ++s) {
            TrainConfig tc = cfg.train;
            tc.seed = cfg.train.seed + static_cast<std::uint64_t>(s);
            RandomStream init_rng(tc.seed * 1000003ull + 17);
            OneLayerGraphModel model = OneLayerGraphModel::make(
                spec.backbone, spec.norm, cfg.feature_dim, tc.hidden_dim, init_rng);
            model.norm.w_rc.trainable = !spec.freeze_rc;
            model.norm.w_re.trainable = !spec.freeze_re;
            FitGraphResult fit = train_graph_classifier(model, prepared, split, tc, experiment,
                                                        spec.name, &report.rows);
            summary.test_auc.push_back(fit.test_auc);
            summary.test_acc.push_back(fit.test_acc);
            summary.w_rc_start.push_back(fit.w_rc_start);
            summary.w_rc_end.push_back(fit.w_rc_end);
            summary.w_re_start.push_back(fit.w_re_start);
            summary.w_re_end.push_back(fit.w_re_end);
        }
        report.models.push_back(std::move(summary));
    }
    return report;
}

}  // namespace detail

// Four one-layer models on the triangle task: plain MLP, MLP+BatchNorm,
// MLP+SuperNorm, and GIN. All graphs are k-regular with equal n, so the task
// isolates what the factor embedding adds over message passing.
inline RegularReport run_regular_graph_experiment(const RegularTaskConfig& cfg) {
    using BB = OneLayerGraphModel::Backbone;
    return detail::run_graph_task(
        cfg,
        {{"mlp", BB::mlp, NormKind::none},
         {"mlp_batchnorm", BB::mlp, NormKind::batchnorm},
         {"mlp_supernorm", BB::mlp, NormKind::supernorm},
         {"gin", BB::gin, NormKind::none}},
        "regular");
}

// SuperNorm component ablation on the same task: full layer, calibration only
// (w_re frozen at 0), enhancement only (w_rc frozen at 0), and neither.
inline RegularReport run_ablation(const RegularTaskConfig& cfg) {
    using BB = OneLayerGraphModel::Backbone;
    return detail::run_graph_task(
        cfg,
        {{"supernorm_full", BB::mlp, NormKind::supernorm, false, false},
         {"supernorm_rc_only", BB::mlp, NormKind::supernorm, false, true},
         {"supernorm_re_only", BB::mlp, NormKind::supernorm, true, false},
         {"supernorm_neither", BB::mlp, NormKind::supernorm, true, true}},
        "ablation");
}

// ---- oversmoothing experiment ---------------------------------------------------

struct OversmoothingConfig {
    TrainConfig train;
    SbmConfig sbm;
    std::vector<int> depths = {2, 4, 6, 8, 10, 12, 14, 16};
    double factor_p = 0.05;

    OversmoothingConfig() {
        train.lr = 1e-2;
        train.hidden_dim = 32;
        train.max_epochs = 120;
    }
};

// Deep GCN for node classification: depth x (conv -> norm -> ReLU), linear head.
struct GcnNodeModel {
    std::vector<Parameter> conv_weights;
    std::vector<SuperNormState> norms;
    NormKind norm_kind;
    Mlp head;  // {hidden, num_classes}

    static GcnNodeModel make(NormKind nk, int d_in, int hidden, int depth, int num_classes,
                             RandomStream& rng) {
        GcnNodeModel m;
        m.norm_kind = nk;
        for (int l = 0; l < depth; ++l) {
            int in = l == 0 ? d_in : hidden;
            m.conv_weights.emplace_back("conv" + std::to_string(l) + ".w",
                                        glorot_uniform(in, hidden, rng));
            m.norms.emplace_back(hidden, "norm" + std::to_string(l));
        }
        m.head = Mlp::make("head", {hidden, num_classes}, rng);
        return m;
    }

    void set_training(bool training) {
        for (auto& n : norms) n.training = training;
    }

    // returns (logits, final embeddings)
    std::pair<DiffMatrix, DiffMatrix> forward(Tape& tape, ParamBinding& params, const Matrix& a_sym,
                                              const Matrix& features, const NodeFactors& factors,
                                              const std::vector<int>& offsets,
                                              const Matrix* input_mask = nullptr) {
        DiffMatrix h = tape.constant(features);
        if (input_mask) h = tape.hadamard(h, tape.constant(*input_mask));
        for (std::size_t l = 0; l < conv_weights.size(); ++l) {
            DiffMatrix w = params.bind(conv_weights[l]);
            h = gcn_conv(tape, h, a_sym, w);
            if (norm_kind == NormKind::batchnorm) {
                h = batchnorm(tape, params, h, norms[l]);
            } else if (norm_kind == NormKind::supernorm) {
                h = supernorm(tape, params, h, factors, offsets, norms[l]);
            }
            h = tape.relu(h);
        }
        DiffMatrix logits = head.forward(tape, params, h);
        return {logits, h};
    }
};

struct OversmoothingCell {
    int depth = 0;
    std::string norm;
    std::vector<double> test_acc;   // per seed
    std::vector<double> intra;      // per seed
    std::vector<double> inter;      // per seed

    double mean_acc() const { return detail::mean_of(test_acc); }
    double mean_ratio() const {
        std::vector<double> r;
        for (std::size_t i = 0; i < intra.size(); ++i)
            r.push_back(intra[i] > 0.0 ? inter[i] / intra[i] : 0.0);
        return detail::mean_of(r);
    }
};

struct OversmoothingReport {
    std::vector<MetricRow> rows;
    std::vector<OversmoothingCell> cells;

    const OversmoothingCell& cell(int depth, const std::string& norm) const {
        for (const auto& c : cells)
            if (c.depth == depth && c.norm == norm) return c;
        throw DataError("no oversmoothing cell for depth " + std::to_string(depth) + " norm " + norm);
    }
};

// Vanilla GCN on a 2-block SBM, BatchNorm vs SuperNorm across depths.
// Accuracy and centroid distances are snapshotted at the best-valid epoch.
inline OversmoothingReport run_oversmoothing_experiment(const OversmoothingConfig& cfg) {
    cfg.train.validate();
    SbmData data = make_two_block_sbm(cfg.sbm, cfg.train.seed);
    FactorConfig fcfg;
    fcfg.p = cfg.factor_p;
    BatchedGraphs single = batch({data.graph});
    NodeFactors factors = batch_factors(single, fcfg);
    Matrix a_sym = normalized_adjacency(data.graph, AdjacencyMode::symmetric);
    const Matrix& features = *data.graph.features;
    const std::vector<int>& offsets = single.segment_offsets;

    std::vector<int> test_labels;
    for (int idx : data.test_nodes) test_labels.push_back(data.labels[static_cast<std::size_t>(idx)]);

    OversmoothingReport report;
    for (int depth : cfg.depths) {
        for (NormKind nk : {NormKind::batchnorm, NormKind::supernorm}) {
            OversmoothingCell cell;
            cell.depth = depth;
            cell.norm = norm_name(nk);
            for (int s = 0; s < cfg.train.num_seeds; ++s) {
                std::uint64_t seed = cfg.train.seed + static_cast<std::uint64_t>(s);
                RandomStream init_rng(seed * 1000003ull + 29);
                GcnNodeModel model =
                    GcnNodeModel::make(nk, features.cols, cfg.train.hidden_dim, depth, 2, init_rng);
                Adam adam(cfg.train.lr);
                PlateauScheduler sched(cfg.train.lr, cfg.train.plateau_patience, cfg.train.lr_floor,
                                       /*maximize=*/true);
                std::vector<int> train_classes, valid_classes;
                for (int idx : data.train_nodes) train_classes.push_back(data.labels[static_cast<std::size_t>(idx)]);
                for (int idx : data.valid_nodes) valid_classes.push_back(data.labels[static_cast<std::size_t>(idx)]);

                double best_valid = -1.0;
                double snap_acc = 0.0, snap_intra = 0.0, snap_inter = 0.0;
                RandomStream dropout_rng(seed ^ 0x5bd1e995u);
                for (int epoch = 1; epoch <= cfg.train.max_epochs; ++epoch) {
                    model.set_training(true);
                    Tape tape;
                    ParamBinding params(tape);
                    Matrix mask;
                    const Matrix* maskp = nullptr;
                    if (cfg.train.dropout > 0.0) {
                        mask = detail::dropout_mask(features.rows, features.cols, cfg.train.dropout,
                                                    dropout_rng);
                        maskp = &mask;
                    }
                    auto [logits, emb] = model.forward(tape, params, a_sym, features, factors,
                                                       offsets, maskp);
                    DiffMatrix train_logits = tape.select_rows(logits, data.train_nodes);
                    DiffMatrix loss = cross_entropy(tape, train_logits, train_classes);
                    double loss_value = tape.value(loss)(0, 0);
                    tape.backward(loss);
                    adam.step(params.gradients());

                    model.set_training(false);
                    Tape etape;
                    ParamBinding eparams(etape);
                    auto [elogits, eemb] = model.forward(etape, eparams, a_sym, features, factors, offsets);
                    const Matrix& z = etape.value(elogits);
                    auto acc_on = [&](const std::vector<int>& nodes, const std::vector<int>& classes) {
                        std::vector<int> pred;
                        for (int idx : nodes)
                            pred.push_back(z(idx, 0) >= z(idx, 1) ? 0 : 1);
                        return accuracy(pred, classes);
                    };
                    double valid_acc = acc_on(data.valid_nodes, valid_classes);
                    report.rows.push_back({"oversmoothing", "gcn", cell.norm, depth, seed, epoch,
                                           "train", "loss", loss_value});
                    report.rows.push_back({"oversmoothing", "gcn", cell.norm, depth, seed, epoch,
                                           "valid", "accuracy", valid_acc});
                    if (valid_acc > best_valid) {
                        best_valid = valid_acc;
                        snap_acc = acc_on(data.test_nodes, test_labels);
                        const Matrix& he = etape.value(eemb);
                        Matrix test_emb(static_cast<int>(data.test_nodes.size()), he.cols);
                        for (int i = 0; i < test_emb.rows; ++i)
                            for (int j = 0; j < he.cols; ++j)
                                test_emb(i, j) = he(data.test_nodes[static_cast<std::size_t>(i)], j);
                        auto [intra, inter] = class_distances(test_emb, test_labels);
                        snap_intra = intra;
                        snap_inter = inter;
                    }
                    auto decision = sched.observe(valid_acc);
                    adam.set_lr(decision.lr);
                    if (decision.stop) break;
                }
                cell.test_acc.push_back(snap_acc);
                cell.intra.push_back(snap_intra);
                cell.inter.push_back(snap_inter);
                report.rows.push_back({"oversmoothing", "gcn", cell.norm, depth, seed, 0, "test",
                                       "accuracy", snap_acc});
                report.rows.push_back({"oversmoothing", "gcn", cell.norm, depth, seed, 0, "test",
                                       "intra_class_distance", snap_intra});
                report.rows.push_back({"oversmoothing", "gcn", cell.norm, depth, seed, 0, "test",
                                       "inter_class_distance", snap_inter});
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

}  // namespace supernorm
