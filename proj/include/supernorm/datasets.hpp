#pragma once

#include <vector>

#include "supernorm/common.hpp"
#include "supernorm/graph.hpp"
#include "supernorm/matrix.hpp"
#include "supernorm/wl.hpp"

namespace supernorm {

inline int count_triangles(const Graph& g) {
    Matrix a = adjacency(g);
    int count = 0;
    for (int i = 0; i < g.num_nodes; ++i)
        for (int j = i + 1; j < g.num_nodes; ++j) {
            if (a(i, j) == 0.0) continue;
            for (int k = j + 1; k < g.num_nodes; ++k)
                if (a(i, k) != 0.0 && a(j, k) != 0.0) ++count;
        }
    return count;
}

// Binary classification dataset of k-regular graphs: class 0 is triangle-free,
// class 1 contains at least one triangle. All graphs share node count and
// degree, so 1-hop message passing with uniform inputs cannot separate the
// classes while the neighborhood spectra can. Features are all-ones (the
// structure-blind baselines then sit at chance exactly); optional noise is
// available for stress tests.
inline std::vector<Graph> make_triangle_task_dataset(int per_class, int nodes, int degree,
                                                     int feature_dim, std::uint64_t seed,
                                                     double feature_noise = 0.0) {
    if (per_class < 1) throw DataError("make_triangle_task_dataset: per_class must be >= 1");
    RandomStream rng(seed);
    std::vector<Graph> out;
    int made[2] = {0, 0};
    std::uint64_t graph_seed = seed * 7919u + 1;
    const int cap = 200000;
    int draws = 0;
    while (made[0] < per_class || made[1] < per_class) {
        if (++draws > cap)
            throw NumericError("make_triangle_task_dataset: rejection budget exhausted; retry with a new seed");
        Graph g = random_regular_graph(nodes, degree, graph_seed++);
        int label = count_triangles(g) > 0 ? 1 : 0;
        int want = made[0] <= made[1] ? 0 : 1;  // alternate 0,1,0,1,...
        if (label != want || made[label] >= per_class) continue;
        Matrix f(nodes, feature_dim, 1.0);
        if (feature_noise > 0.0)
            for (double& v : f.data) v += feature_noise * rng.normal();
        g.set_features(std::move(f));
        g.label = static_cast<double>(label);
        out.push_back(std::move(g));
        ++made[label];
    }
    rng.shuffle(out);  // decouple label order from structure-sorted splits
    return out;
}

// Two-community stochastic block model for node classification. The two
// blocks get different within-block densities, so the neighborhood subgraphs
// (and hence the per-node factors) are structurally class-correlated, as they
// are in citation graphs. Features are +/- mean_shift per class plus noise.
struct SbmData {
    Graph graph;
    std::vector<int> labels;
    std::vector<int> train_nodes;
    std::vector<int> valid_nodes;
    std::vector<int> test_nodes;
};

// Default block parameters are degree-matched: the small block is dense and
// the large block sparse, with nearly equal expected degrees, so neighborhood
// density (not degree) is what separates the communities structurally.
struct SbmConfig {
    int nodes_a = 30;
    int nodes_b = 120;
    double p_in_a = 0.50;
    double p_in_b = 0.152;
    double p_cross = 0.04;
    int feature_dim = 8;
    double mean_shift = 0.3;
    double feature_noise = 1.0;
    double train_frac = 0.5;
    double valid_frac = 0.25;
};

inline SbmData make_two_block_sbm(const SbmConfig& cfg, std::uint64_t seed) {
    if (cfg.nodes_a < 4 || cfg.nodes_b < 4) throw DataError("make_two_block_sbm: blocks too small");
    RandomStream rng(seed);
    const int n = cfg.nodes_a + cfg.nodes_b;
    SbmData data;
    data.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) data.labels[static_cast<std::size_t>(i)] = i < cfg.nodes_a ? 0 : 1;
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            int cu = data.labels[static_cast<std::size_t>(u)];
            int cv = data.labels[static_cast<std::size_t>(v)];
            double p = cu != cv ? cfg.p_cross : (cu == 0 ? cfg.p_in_a : cfg.p_in_b);
            if (rng.uniform() < p) edges.emplace_back(u, v);
        }
    }
    data.graph = Graph(n, std::move(edges));
    Matrix f(n, cfg.feature_dim);
    for (int i = 0; i < n; ++i) {
        double mu = data.labels[static_cast<std::size_t>(i)] == 0 ? cfg.mean_shift : -cfg.mean_shift;
        for (int j = 0; j < cfg.feature_dim; ++j)
            f(i, j) = mu + cfg.feature_noise * rng.normal();
    }
    data.graph.set_features(std::move(f));
    // stratified node split per block
    for (int block = 0; block < 2; ++block) {
        std::vector<int> ids;
        for (int i = 0; i < n; ++i)
            if (data.labels[static_cast<std::size_t>(i)] == block) ids.push_back(i);
        rng.shuffle(ids);
        int ntrain = static_cast<int>(std::llround(cfg.train_frac * static_cast<double>(ids.size())));
        int nvalid = static_cast<int>(std::llround(cfg.valid_frac * static_cast<double>(ids.size())));
        for (int k = 0; k < static_cast<int>(ids.size()); ++k) {
            int idx = ids[static_cast<std::size_t>(k)];
            if (k < ntrain) data.train_nodes.push_back(idx);
            else if (k < ntrain + nvalid) data.valid_nodes.push_back(idx);
            else data.test_nodes.push_back(idx);
        }
    }
    std::sort(data.train_nodes.begin(), data.train_nodes.end());
    std::sort(data.valid_nodes.begin(), data.valid_nodes.end());
    std::sort(data.test_nodes.begin(), data.test_nodes.end());
    return data;
}

}  // namespace supernorm
