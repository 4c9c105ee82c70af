#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "supernorm/common.hpp"
#include "supernorm/matrix.hpp"

namespace supernorm {

// Undirected simple graph. Edges are stored as a sorted unique list of
// (u, v) pairs with u < v; self-loops are rejected on construction.
struct Graph {
    int num_nodes = 0;
    std::vector<std::pair<int, int>> edges;
    std::optional<Matrix> features;  // num_nodes x d when present
    std::optional<double> label;

    Graph() = default;

    Graph(int n, std::vector<std::pair<int, int>> es) : num_nodes(n) {
        if (n < 0) throw DataError("Graph: negative node count");
        for (auto& [u, v] : es) {
            if (u == v) throw DataError("Graph: self-loop at node " + std::to_string(u));
            if (u < 0 || v < 0 || u >= n || v >= n)
                throw DataError("Graph: edge (" + std::to_string(u) + "," + std::to_string(v) +
                                ") out of range for " + std::to_string(n) + " nodes");
            if (u > v) std::swap(u, v);
        }
        std::sort(es.begin(), es.end());
        es.erase(std::unique(es.begin(), es.end()), es.end());
        edges = std::move(es);
    }

    int num_edges() const { return static_cast<int>(edges.size()); }

    void set_features(Matrix f) {
        if (f.rows != num_nodes)
            throw DataError("Graph: feature row count " + std::to_string(f.rows) +
                            " != num_nodes " + std::to_string(num_nodes));
        features = std::move(f);
    }
};

inline std::vector<int> degrees(const Graph& g) {
    std::vector<int> deg(static_cast<std::size_t>(g.num_nodes), 0);
    for (auto [u, v] : g.edges) {
        ++deg[static_cast<std::size_t>(u)];
        ++deg[static_cast<std::size_t>(v)];
    }
    return deg;
}

inline std::vector<std::vector<int>> adjacency_lists(const Graph& g) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.num_nodes));
    for (auto [u, v] : g.edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    return adj;
}

// Dense 0/1 adjacency without self-loops.
inline Matrix adjacency(const Graph& g) {
    Matrix a(g.num_nodes, g.num_nodes);
    for (auto [u, v] : g.edges) {
        a(u, v) = 1.0;
        a(v, u) = 1.0;
    }
    return a;
}

// 2|E| / (|V| (|V|-1)); graphs with fewer than two nodes have density 0.
inline double density(const Graph& g) {
    if (g.num_nodes <= 1) return 0.0;
    return 2.0 * static_cast<double>(g.num_edges()) /
           (static_cast<double>(g.num_nodes) * static_cast<double>(g.num_nodes - 1));
}

// Subgraph induced by the closed neighborhood N(v) u {v}, nodes relabeled
// 0..k-1 in ascending original index. Features and label are dropped.
inline Graph neighborhood_subgraph(const Graph& g, int v) {
    if (v < 0 || v >= g.num_nodes)
        throw DataError("neighborhood_subgraph: node index " + std::to_string(v) + " out of range");
    std::vector<int> members;
    members.push_back(v);
    for (auto [a, b] : g.edges) {
        if (a == v) members.push_back(b);
        if (b == v) members.push_back(a);
    }
    std::sort(members.begin(), members.end());
    std::vector<int> remap(static_cast<std::size_t>(g.num_nodes), -1);
    for (int i = 0; i < static_cast<int>(members.size()); ++i)
        remap[static_cast<std::size_t>(members[static_cast<std::size_t>(i)])] = i;
    std::vector<std::pair<int, int>> sub_edges;
    for (auto [a, b] : g.edges) {
        int ra = remap[static_cast<std::size_t>(a)];
        int rb = remap[static_cast<std::size_t>(b)];
        if (ra >= 0 && rb >= 0) sub_edges.emplace_back(ra, rb);
    }
    return Graph(static_cast<int>(members.size()), std::move(sub_edges));
}

enum class AdjacencyMode { symmetric, random_walk };

// D~^{-1/2} (A+I) D~^{-1/2} or D~^{-1} (A+I); the self-loop augmentation
// keeps every degree positive.
inline Matrix normalized_adjacency(const Graph& g, AdjacencyMode mode) {
    if (g.num_nodes < 1) throw DataError("normalized_adjacency: empty graph");
    Matrix a = adjacency(g);
    for (int i = 0; i < g.num_nodes; ++i) a(i, i) += 1.0;
    std::vector<int> deg = degrees(g);
    Matrix out(g.num_nodes, g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) {
        for (int j = 0; j < g.num_nodes; ++j) {
            if (a(i, j) == 0.0) continue;
            double di = static_cast<double>(deg[static_cast<std::size_t>(i)]) + 1.0;
            double dj = static_cast<double>(deg[static_cast<std::size_t>(j)]) + 1.0;
            out(i, j) = mode == AdjacencyMode::symmetric ? a(i, j) / std::sqrt(di * dj)
                                                         : a(i, j) / di;
        }
    }
    return out;
}

inline bool is_connected(const Graph& g) {
    if (g.num_nodes <= 1) return true;
    auto adj = adjacency_lists(g);
    std::vector<char> seen(static_cast<std::size_t>(g.num_nodes), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int w : adj[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                ++count;
                stack.push_back(w);
            }
        }
    }
    return count == g.num_nodes;
}

// Concatenation of graphs with segment offsets (prefix sums of node counts).
struct BatchedGraphs {
    std::vector<Graph> graphs;
    std::vector<int> segment_offsets;  // strictly increasing, last == total_nodes()
    std::optional<Matrix> features;    // n_total x d
    std::vector<double> labels;        // per-graph labels when every graph has one

    int total_nodes() const { return segment_offsets.empty() ? 0 : segment_offsets.back(); }
    int num_segments() const { return static_cast<int>(segment_offsets.size()); }

    int segment_begin(int s) const { return s == 0 ? 0 : segment_offsets[static_cast<std::size_t>(s - 1)]; }
    int segment_end(int s) const { return segment_offsets[static_cast<std::size_t>(s)]; }

    int segment_of(int row) const {
        for (int s = 0; s < num_segments(); ++s)
            if (row < segment_end(s)) return s;
        throw DataError("BatchedGraphs: row " + std::to_string(row) + " out of range");
    }

    // adjacency lists over batch-global node indices (block structure)
    std::vector<std::vector<int>> adjacency_lists() const {
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(total_nodes()));
        for (int s = 0; s < num_segments(); ++s) {
            int base = segment_begin(s);
            for (auto [u, v] : graphs[static_cast<std::size_t>(s)].edges) {
                adj[static_cast<std::size_t>(base + u)].push_back(base + v);
                adj[static_cast<std::size_t>(base + v)].push_back(base + u);
            }
        }
        return adj;
    }
};

inline BatchedGraphs batch(const std::vector<Graph>& graphs) {
    BatchedGraphs b;
    b.graphs = graphs;
    int total = 0;
    bool any_features = false;
    int feature_dim = -1;
    for (const Graph& g : graphs) {
        total += g.num_nodes;
        b.segment_offsets.push_back(total);
        if (g.features) {
            any_features = true;
            if (feature_dim < 0) feature_dim = g.features->cols;
            if (g.features->cols != feature_dim)
                throw DataError("batch: feature dimension mismatch (" +
                                std::to_string(g.features->cols) + " vs " +
                                std::to_string(feature_dim) + ")");
        }
    }
    if (any_features) {
        for (const Graph& g : graphs)
            if (!g.features) throw DataError("batch: some graphs lack features");
        Matrix f(total, feature_dim);
        int row = 0;
        for (const Graph& g : graphs) {
            for (int i = 0; i < g.num_nodes; ++i, ++row)
                for (int j = 0; j < feature_dim; ++j) f(row, j) = (*g.features)(i, j);
        }
        b.features = std::move(f);
    }
    bool all_labeled = !graphs.empty();
    for (const Graph& g : graphs)
        if (!g.label) all_labeled = false;
    if (all_labeled)
        for (const Graph& g : graphs) b.labels.push_back(*g.label);
    return b;
}

}  // namespace supernorm
