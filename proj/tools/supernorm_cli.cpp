// Command-line surface: dataset ingestion, factor caching, WL comparisons,
// the injectivity audit, structure-aware splits, the experiment pipelines,
// and the gradient suite. Exit codes: 0 success, 1 usage error, 2 data or
// validation error, 3 numerical or convergence error.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "supernorm/experiments.hpp"
#include "supernorm/gradcheck.hpp"
#include "supernorm/io.hpp"
#include "supernorm/wl.hpp"

namespace {

using namespace supernorm;

std::string join_doubles(const std::vector<double>& xs) {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out << ", ";
        out << format_double(xs[i]);
    }
    out << "]";
    return out.str();
}

int cmd_precompute_factors(const std::string& dataset_path, double p, const std::string& out_path) {
    std::string bytes = read_file(dataset_path);
    std::vector<Graph> graphs = load_dataset(dataset_path);
    FactorConfig cfg;
    cfg.p = p;
    cfg.validate();
    BatchedGraphs b = batch(graphs);
    NodeFactors factors = batch_factors(b, cfg);
    FactorCache cache;
    cache.p = cfg.p;
    cache.eig_quantum = cfg.eig_quantum;
    cache.content_hash = content_hash_hex(bytes);
    cache.xi = factors.xi;
    save_factor_cache(out_path, cache);
    std::cout << "wrote " << factors.xi.size() << " factors for " << graphs.size()
              << " graphs to " << out_path << " (content hash " << cache.content_hash << ")\n";
    return 0;
}

int cmd_wl_test(const std::string& path_a, const std::string& path_b, double p) {
    auto load_one = [](const std::string& path) {
        std::vector<Graph> gs = load_dataset(path);
        if (gs.empty()) throw DataError("no graphs in " + path);
        return gs.front();
    };
    Graph a = load_one(path_a);
    Graph b = load_one(path_b);
    FactorConfig cfg;
    cfg.p = p;
    cfg.validate();

    bool wl = wl_distinguish(a, b);
    std::vector<double> spec_a = symmetric_eigenvalues(adjacency(a), cfg);
    std::vector<double> spec_b = symmetric_eigenvalues(adjacency(b), cfg);
    std::vector<double> xi_a = node_factor_multiset(a, cfg);
    std::vector<double> xi_b = node_factor_multiset(b, cfg);
    auto quantized = [&](std::vector<double> v) {
        for (double& x : v) x = std::round(x / cfg.eig_quantum) * cfg.eig_quantum;
        return v;
    };
    bool xi_distinct = quantized(xi_a) != quantized(xi_b);

    std::cout << "graph A: " << path_a << " (n=" << a.num_nodes << ", m=" << a.num_edges() << ")\n";
    std::cout << "graph B: " << path_b << " (n=" << b.num_nodes << ", m=" << b.num_edges() << ")\n";
    std::cout << "spectrum A: " << join_doubles(spec_a) << "\n";
    std::cout << "spectrum B: " << join_doubles(spec_b) << "\n";
    std::cout << "xi multiset A: " << join_doubles(xi_a) << "\n";
    std::cout << "xi multiset B: " << join_doubles(xi_b) << "\n";
    std::cout << (wl ? "1-WL: distinguishable" : "1-WL: indistinguishable") << "; "
              << (xi_distinct ? "xi: distinct" : "xi: identical") << "\n";
    return 0;
}

int cmd_audit(int max_n, const std::string& out_path) {
    std::vector<AuditCollision> collisions = factor_injectivity_audit(max_n);
    nlohmann::json report = nlohmann::json::array();
    int connected_collisions = 0;
    for (const AuditCollision& c : collisions) {
        nlohmann::json entry;
        entry["graph_a"] = detail::graph_to_json(c.graph_a);
        entry["graph_b"] = detail::graph_to_json(c.graph_b);
        entry["n"] = c.n;
        entry["m"] = c.m;
        entry["spectrum"] = c.spectrum;
        report.push_back(std::move(entry));
        if (is_connected(c.graph_a) && is_connected(c.graph_b)) ++connected_collisions;
    }
    atomic_write(out_path, report.dump(2) + "\n");
    std::cout << "audited all non-isomorphic graphs with up to " << max_n << " nodes\n";
    std::cout << "collisions: " << collisions.size() << " (" << connected_collisions
              << " between connected graphs)\n";
    std::cout << "report written to " << out_path << "\n";
    return 0;
}

int cmd_split(const std::string& dataset_path, double valid_frac, double test_frac,
              std::string prefix) {
    std::vector<Graph> graphs = load_dataset(dataset_path);
    SplitResult split = hierarchical_split(graphs, valid_frac, test_frac);
    if (prefix.empty()) prefix = dataset_path;
    auto dump = [&](const std::string& name, const std::vector<int>& idx) {
        nlohmann::json j = idx;
        atomic_write(prefix + "." + name + ".json", j.dump() + "\n");
    };
    dump("train", split.train);
    dump("valid", split.valid);
    dump("test", split.test);
    std::cout << "split " << graphs.size() << " graphs into " << split.train.size() << "/"
              << split.valid.size() << "/" << split.test.size() << " (train/valid/test); wrote "
              << prefix << ".{train,valid,test}.json\n";
    return 0;
}

template <typename T>
void maybe_set(const std::map<std::string, std::string>& kv, const std::string& key, T* out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    std::istringstream ss(it->second);
    T value;
    if (!(ss >> value)) throw DataError("config key " + key + " has invalid value " + it->second);
    *out = value;
}

void apply_train_config(const std::map<std::string, std::string>& kv, TrainConfig* cfg) {
    maybe_set(kv, "lr", &cfg->lr);
    maybe_set(kv, "patience", &cfg->plateau_patience);
    maybe_set(kv, "lr_floor", &cfg->lr_floor);
    maybe_set(kv, "batch_size", &cfg->batch_size);
    maybe_set(kv, "max_epochs", &cfg->max_epochs);
    maybe_set(kv, "hidden_dim", &cfg->hidden_dim);
    maybe_set(kv, "dropout", &cfg->dropout);
    maybe_set(kv, "seeds", &cfg->num_seeds);
    maybe_set(kv, "warmup_epochs", &cfg->warmup_epochs);
}

nlohmann::json summarize_regular(const RegularReport& report) {
    nlohmann::json models;
    for (const ModelSummary& m : report.models) {
        nlohmann::json entry;
        entry["norm"] = m.norm;
        entry["test_auc"] = m.test_auc;
        entry["test_acc"] = m.test_acc;
        entry["mean_test_auc"] = m.mean_test_auc();
        entry["std_test_auc"] = m.std_test_auc();
        entry["w_rc_start"] = m.w_rc_start;
        entry["w_rc_end"] = m.w_rc_end;
        entry["w_re_start"] = m.w_re_start;
        entry["w_re_end"] = m.w_re_end;
        models[m.model] = std::move(entry);
    }
    return models;
}

int cmd_train(const std::string& experiment, const std::string& config_path, std::uint64_t seed,
              const std::string& out_dir) {
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) kv = load_config(config_path);
    std::filesystem::create_directories(out_dir);
    std::string csv_path = out_dir + "/" + experiment + "_metrics.csv";
    std::string json_path = out_dir + "/" + experiment + "_summary.json";
    nlohmann::json summary;
    summary["experiment"] = experiment;
    summary["seed"] = seed;
    std::vector<MetricRow> rows;

    if (experiment == "regular" || experiment == "ablation") {
        RegularTaskConfig cfg;
        apply_train_config(kv, &cfg.train);
        maybe_set(kv, "graphs_per_class", &cfg.graphs_per_class);
        maybe_set(kv, "nodes", &cfg.nodes);
        maybe_set(kv, "degree", &cfg.degree);
        maybe_set(kv, "feature_dim", &cfg.feature_dim);
        maybe_set(kv, "p", &cfg.factor_p);
        cfg.train.seed = seed;
        RegularReport report =
            experiment == "regular" ? run_regular_graph_experiment(cfg) : run_ablation(cfg);
        rows = report.rows;
        summary["models"] = summarize_regular(report);
    } else if (experiment == "oversmoothing") {
        OversmoothingConfig cfg;
        apply_train_config(kv, &cfg.train);
        maybe_set(kv, "nodes_a", &cfg.sbm.nodes_a);
        maybe_set(kv, "nodes_b", &cfg.sbm.nodes_b);
        maybe_set(kv, "p_in_a", &cfg.sbm.p_in_a);
        maybe_set(kv, "p_in_b", &cfg.sbm.p_in_b);
        maybe_set(kv, "p_cross", &cfg.sbm.p_cross);
        maybe_set(kv, "feature_dim", &cfg.sbm.feature_dim);
        maybe_set(kv, "mean_shift", &cfg.sbm.mean_shift);
        maybe_set(kv, "feature_noise", &cfg.sbm.feature_noise);
        maybe_set(kv, "p", &cfg.factor_p);
        if (auto it = kv.find("depths"); it != kv.end()) {
            cfg.depths.clear();
            std::istringstream ss(it->second);
            std::string token;
            while (std::getline(ss, token, ','))
                cfg.depths.push_back(std::stoi(token));
            if (cfg.depths.empty()) throw DataError("config key depths is empty");
        }
        cfg.train.seed = seed;
        OversmoothingReport report = run_oversmoothing_experiment(cfg);
        rows = report.rows;
        nlohmann::json cells = nlohmann::json::array();
        for (const OversmoothingCell& c : report.cells) {
            nlohmann::json entry;
            entry["depth"] = c.depth;
            entry["norm"] = c.norm;
            entry["test_accuracy"] = c.test_acc;
            entry["intra"] = c.intra;
            entry["inter"] = c.inter;
            entry["mean_test_accuracy"] = c.mean_acc();
            entry["mean_inter_intra_ratio"] = c.mean_ratio();
            cells.push_back(std::move(entry));
        }
        summary["cells"] = std::move(cells);
    } else {
        throw CLI::ValidationError("experiment must be one of: regular, oversmoothing, ablation");
    }

    atomic_write(csv_path, metrics_to_csv(rows));
    atomic_write(json_path, summary.dump(2) + "\n");
    std::cout << "wrote " << csv_path << " and " << json_path << "\n";
    return 0;
}

int cmd_gradcheck() {
    std::vector<GradcheckEntry> report = run_gradcheck();
    bool ok = gradcheck_passed(report);
    for (const GradcheckEntry& e : report) {
        std::cout << (e.pass ? "PASS" : "FAIL") << "  " << e.op << "  max_rel_err="
                  << format_double(e.max_rel_err) << "\n";
    }
    std::cout << (ok ? "gradient suite passed" : "gradient suite FAILED") << "\n";
    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"subgraph-factor normalization toolkit"};
    app.require_subcommand(1);

    std::string dataset, out_path, config_path, prefix;
    std::string graph_a, graph_b;
    double p = 0.05;
    double valid_frac = 0.1, test_frac = 0.1;
    int max_n = 5;
    std::uint64_t seed = 0;
    std::string experiment;
    std::string out_dir = "reports";

    auto* pre = app.add_subcommand("precompute-factors", "compute and cache per-node factors");
    pre->add_option("dataset", dataset, "JSONL graph dataset")->required();
    pre->add_option("--p", p, "hash base in (0,1)");
    pre->add_option("--out", out_path, "cache output path")->required();

    auto* wl = app.add_subcommand("wl-test", "compare two graphs: 1-WL verdict vs factor multisets");
    wl->add_option("graphA", graph_a, "JSONL file; first graph is used")->required();
    wl->add_option("graphB", graph_b, "JSONL file; first graph is used")->required();
    wl->add_option("--p", p, "hash base in (0,1)");

    auto* audit = app.add_subcommand("audit", "factor injectivity audit over small graphs");
    audit->add_option("--max-n", max_n, "maximum node count (<= 7)");
    audit->add_option("--out", out_path, "collision report path");

    auto* split = app.add_subcommand("split", "hierarchical density/degree split");
    split->add_option("dataset", dataset, "JSONL graph dataset")->required();
    split->add_option("--valid", valid_frac, "validation fraction")->required();
    split->add_option("--test", test_frac, "test fraction")->required();
    split->add_option("--out-prefix", prefix, "output prefix (default: dataset path)");

    auto* train = app.add_subcommand("train", "run an experiment pipeline");
    train->add_option("experiment", experiment, "regular | oversmoothing | ablation")->required();
    train->add_option("--config", config_path, "flat key=value config file");
    train->add_option("--seed", seed, "base seed");
    train->add_option("--out", out_dir, "report output directory");

    app.add_subcommand("gradcheck", "finite-difference validation of every autodiff op");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (pre->parsed()) {
            if (out_path.empty()) out_path = dataset + ".factors.json";
            return cmd_precompute_factors(dataset, p, out_path);
        }
        if (wl->parsed()) return cmd_wl_test(graph_a, graph_b, p);
        if (audit->parsed()) {
            if (out_path.empty()) out_path = "audit_report.json";
            return cmd_audit(max_n, out_path);
        }
        if (split->parsed()) return cmd_split(dataset, valid_frac, test_frac, prefix);
        if (train->parsed()) return cmd_train(experiment, config_path, seed, out_dir);
        return cmd_gradcheck();
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
