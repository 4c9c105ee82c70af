#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "supernorm/common.hpp"
#include "supernorm/factor.hpp"
#include "supernorm/graph.hpp"

namespace supernorm {

// Result of 1-WL color refinement. Colors are dense integers numbered by
// first occurrence, so the assignment is canonical for a fixed node order.
struct ColorAssignment {
    std::vector<int> colors;
    int round = 0;
    bool stable = false;

    int num_colors() const {
        int m = -1;
        for (int c : colors) m = std::max(m, c);
        return m + 1;
    }
};

// Iterated color refinement: the new color of v is the canonical id of
// (old color of v, sorted multiset of neighbor colors). Stops when the
// partition no longer refines or after num_nodes rounds.
inline ColorAssignment wl_refine(const Graph& g, const std::vector<int>* init = nullptr) {
    ColorAssignment ca;
    if (init) {
        if (static_cast<int>(init->size()) != g.num_nodes)
            throw DataError("wl_refine: init colors length " + std::to_string(init->size()) +
                            " != num_nodes " + std::to_string(g.num_nodes));
        ca.colors = *init;
    } else {
        ca.colors.assign(static_cast<std::size_t>(g.num_nodes), 0);
    }
    auto adj = adjacency_lists(g);
    int prev_classes = 0;
    {
        std::set<int> distinct(ca.colors.begin(), ca.colors.end());
        prev_classes = static_cast<int>(distinct.size());
    }
    for (int round = 0; round < g.num_nodes; ++round) {
        std::vector<std::pair<int, std::vector<int>>> sigs(static_cast<std::size_t>(g.num_nodes));
        for (int v = 0; v < g.num_nodes; ++v) {
            std::vector<int> nb;
            for (int u : adj[static_cast<std::size_t>(v)]) nb.push_back(ca.colors[static_cast<std::size_t>(u)]);
            std::sort(nb.begin(), nb.end());
            sigs[static_cast<std::size_t>(v)] = {ca.colors[static_cast<std::size_t>(v)], std::move(nb)};
        }
        std::map<std::pair<int, std::vector<int>>, int> ids;
        std::vector<int> next(static_cast<std::size_t>(g.num_nodes));
        for (int v = 0; v < g.num_nodes; ++v) {
            auto it = ids.find(sigs[static_cast<std::size_t>(v)]);
            if (it == ids.end())
                it = ids.emplace(sigs[static_cast<std::size_t>(v)], static_cast<int>(ids.size())).first;
            next[static_cast<std::size_t>(v)] = it->second;
        }
        int classes = static_cast<int>(ids.size());
        ca.round = round + 1;
        if (classes == prev_classes) {
            // refinement never merges classes, so an unchanged count means an
            // unchanged partition
            ca.colors = std::move(next);
            ca.stable = true;
            return ca;
        }
        ca.colors = std::move(next);
        prev_classes = classes;
    }
    ca.stable = prev_classes == g.num_nodes;  // discrete partition cannot refine further
    return ca;
}

// True iff the stable 1-WL color histograms differ under a joint canonical
// numbering (refinement runs on the disjoint union of the two graphs).
inline bool wl_distinguish(const Graph& g1, const Graph& g2) {
    std::vector<std::pair<int, int>> edges = g1.edges;
    for (auto [u, v] : g2.edges) edges.emplace_back(u + g1.num_nodes, v + g1.num_nodes);
    Graph joint(g1.num_nodes + g2.num_nodes, std::move(edges));
    ColorAssignment ca = wl_refine(joint);
    int k = ca.num_colors();
    std::vector<int> h1(static_cast<std::size_t>(k), 0), h2(static_cast<std::size_t>(k), 0);
    for (int v = 0; v < g1.num_nodes; ++v) ++h1[static_cast<std::size_t>(ca.colors[static_cast<std::size_t>(v)])];
    for (int v = 0; v < g2.num_nodes; ++v)
        ++h2[static_cast<std::size_t>(ca.colors[static_cast<std::size_t>(g1.num_nodes + v)])];
    return h1 != h2;
}

namespace detail {

inline std::vector<double> quantized_row(const Matrix& f, int row, double quantum = 1e-9) {
    std::vector<double> out(static_cast<std::size_t>(f.cols));
    for (int j = 0; j < f.cols; ++j)
        out[static_cast<std::size_t>(j)] = std::round(f(row, j) / quantum) * quantum;
    return out;
}

}  // namespace detail

// Operational form of subtree isomorphism between the closed neighborhoods of
// v1 and v2: equal center features, equal degrees, and matching multisets of
// neighbor feature rows. Feature rows are compared exactly after quantization
// to a 1e-9 grid.
inline bool subtree_isomorphic(const Graph& g1, int v1, const Graph& g2, int v2,
                               const Matrix& features1, const Matrix& features2) {
    if (v1 < 0 || v1 >= g1.num_nodes || v2 < 0 || v2 >= g2.num_nodes)
        throw DataError("subtree_isomorphic: node index out of range");
    if (features1.rows != g1.num_nodes || features2.rows != g2.num_nodes)
        throw DataError("subtree_isomorphic: feature row count mismatch");
    if (features1.cols != features2.cols) return false;
    if (detail::quantized_row(features1, v1) != detail::quantized_row(features2, v2)) return false;
    auto adj1 = adjacency_lists(g1);
    auto adj2 = adjacency_lists(g2);
    const auto& n1 = adj1[static_cast<std::size_t>(v1)];
    const auto& n2 = adj2[static_cast<std::size_t>(v2)];
    if (n1.size() != n2.size()) return false;
    std::vector<std::vector<double>> rows1, rows2;
    for (int u : n1) rows1.push_back(detail::quantized_row(features1, u));
    for (int u : n2) rows2.push_back(detail::quantized_row(features2, u));
    std::sort(rows1.begin(), rows1.end());
    std::sort(rows2.begin(), rows2.end());
    return rows1 == rows2;
}

// Uniform-ish random k-regular simple graph via the pairing model with
// rejection of self-loops and duplicate edges. Deterministic given the seed.
inline Graph random_regular_graph(int n, int k, std::uint64_t seed) {
    if (k < 0 || n < 1 || k >= n)
        throw DataError("random_regular_graph: need 0 <= k < n");
    if ((static_cast<long long>(n) * k) % 2 != 0)
        throw DataError("random_regular_graph: n*k must be even");
    RandomStream rng(seed);
    const int budget = 1000;
    for (int attempt = 0; attempt < budget; ++attempt) {
        std::vector<int> stubs;
        stubs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
        for (int v = 0; v < n; ++v)
            for (int i = 0; i < k; ++i) stubs.push_back(v);
        rng.shuffle(stubs);
        std::set<std::pair<int, int>> seen;
        bool ok = true;
        for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
            int u = stubs[i], v = stubs[i + 1];
            if (u == v) { ok = false; break; }
            auto e = std::minmax(u, v);
            if (!seen.emplace(e.first, e.second).second) { ok = false; break; }
        }
        if (ok)
            return Graph(n, std::vector<std::pair<int, int>>(seen.begin(), seen.end()));
    }
    throw NumericError("random_regular_graph: rejection budget of " + std::to_string(budget) +
                       " attempts exhausted for n=" + std::to_string(n) + " k=" + std::to_string(k));
}

// The 6-cycle and the disjoint union of two triangles: same size, both
// 2-regular, 1-WL-equivalent, spectrally distinct.
inline std::pair<Graph, Graph> canonical_pair_c6_vs_2c3() {
    Graph c6(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}});
    Graph two_c3(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
    return {c6, two_c3};
}

namespace detail {

inline int pair_bit(int u, int v, int n) {
    if (u > v) std::swap(u, v);
    // index of (u, v), u < v, in lexicographic pair order
    return u * n - u * (u + 1) / 2 + (v - u - 1);
}

inline std::uint64_t edge_mask(const Graph& g) {
    std::uint64_t mask = 0;
    for (auto [u, v] : g.edges) mask |= (std::uint64_t{1} << pair_bit(u, v, g.num_nodes));
    return mask;
}

inline std::vector<std::vector<int>> all_permutations(int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<int>> out;
    do {
        out.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

// Minimum edge bitmask over all node permutations; usable up to n = 7.
inline std::uint64_t canonical_key(const Graph& g, const std::vector<std::vector<int>>& perms) {
    std::uint64_t best = ~std::uint64_t{0};
    const int n = g.num_nodes;
    for (const auto& perm : perms) {
        std::uint64_t mask = 0;
        for (auto [u, v] : g.edges)
            mask |= (std::uint64_t{1} << pair_bit(perm[static_cast<std::size_t>(u)],
                                                  perm[static_cast<std::size_t>(v)], n));
        if (mask < best) best = mask;
    }
    return best;
}

}  // namespace detail

// Ground-truth isomorphism oracle by exhaustive permutation search (small n).
inline bool brute_force_isomorphic(const Graph& g1, const Graph& g2) {
    if (g1.num_nodes != g2.num_nodes || g1.num_edges() != g2.num_edges()) return false;
    if (g1.num_nodes > 10)
        throw DataError("brute_force_isomorphic: exhaustive search capped at 10 nodes");
    std::set<std::pair<int, int>> target(g2.edges.begin(), g2.edges.end());
    std::vector<int> perm(static_cast<std::size_t>(g1.num_nodes));
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (auto [u, v] : g1.edges) {
            auto e = std::minmax(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
            if (!target.count({e.first, e.second})) { ok = false; break; }
        }
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

// All non-isomorphic simple graphs with 1..max_n nodes. Graphs on n nodes are
// generated by extending every (n-1)-node representative with one new node and
// every possible neighbor set, then deduplicated by canonical form.
inline std::vector<Graph> enumerate_small_graphs(int max_n) {
    if (max_n < 1 || max_n > 7)
        throw DataError("enumerate_small_graphs: max_n must be in [1, 7]");
    std::vector<Graph> all;
    std::vector<Graph> prev;
    prev.emplace_back(1, std::vector<std::pair<int, int>>{});
    all.push_back(prev.front());
    for (int n = 2; n <= max_n; ++n) {
        auto perms = detail::all_permutations(n);
        std::map<std::uint64_t, Graph> reps;
        for (const Graph& base : prev) {
            for (std::uint64_t subset = 0; subset < (std::uint64_t{1} << (n - 1)); ++subset) {
                std::vector<std::pair<int, int>> edges = base.edges;
                for (int v = 0; v < n - 1; ++v)
                    if (subset & (std::uint64_t{1} << v)) edges.emplace_back(v, n - 1);
                Graph candidate(n, std::move(edges));
                std::uint64_t key = detail::canonical_key(candidate, perms);
                reps.emplace(key, std::move(candidate));
            }
        }
        prev.clear();
        for (auto& [key, g] : reps) {
            prev.push_back(g);
            all.push_back(std::move(g));
        }
    }
    return all;
}

// A pair of non-isomorphic graphs whose (density, node count, quantized
// spectrum) triples coincide; the factor construction cannot separate them.
struct AuditCollision {
    Graph graph_a;
    Graph graph_b;
    int n = 0;
    int m = 0;
    std::vector<double> spectrum;
};

// Exhaustive collision scan of the factor fingerprint over all non-isomorphic
// graph pairs up to max_n nodes. Also validates that every enumerated graph
// produces a strictly positive factor.
inline std::vector<AuditCollision> factor_injectivity_audit(int max_n,
                                                            const FactorConfig& cfg = FactorConfig{}) {
    cfg.validate();
    std::vector<Graph> graphs = enumerate_small_graphs(max_n);
    struct Entry {
        int n;
        int m;
        double dens;
        std::vector<double> spectrum;  // quantized
        std::size_t index;
    };
    std::vector<Entry> entries;
    entries.reserve(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        const Graph& g = graphs[i];
        std::vector<double> eigs = symmetric_eigenvalues(adjacency(g), cfg);
        for (double& e : eigs) e = detail::quantize(e, cfg.eig_quantum);
        double psi = ployhash(eigs, cfg.p);
        detail::combine_factor(density(g), g.num_nodes, psi, cfg);  // positivity check
        entries.push_back({g.num_nodes, g.num_edges(), density(g), std::move(eigs), i});
    }
    std::vector<AuditCollision> collisions;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            const Entry& a = entries[i];
            const Entry& b = entries[j];
            if (a.n != b.n || a.dens != b.dens || a.spectrum != b.spectrum) continue;
            collisions.push_back({graphs[a.index], graphs[b.index], a.n, a.m, a.spectrum});
        }
    }
    return collisions;
}

// Sorted multiset of per-node factors; the graph-level signature that the
// expressivity checks compare.
inline std::vector<double> node_factor_multiset(const Graph& g, const FactorConfig& cfg = FactorConfig{}) {
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(g.num_nodes));
    for (int v = 0; v < g.num_nodes; ++v) xs.push_back(subgraph_factor(g, v, cfg));
    std::sort(xs.begin(), xs.end());
    return xs;
}

}  // namespace supernorm
