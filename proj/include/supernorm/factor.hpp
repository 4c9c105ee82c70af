#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "supernorm/common.hpp"
#include "supernorm/eigen.hpp"
#include "supernorm/graph.hpp"

namespace supernorm {

// Polynomial rolling hash: sum_i values[i] * p^i. Order-sensitive, so callers
// fix a canonical ordering of the input sequence.
inline double ployhash(std::span<const double> values, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DataError("ployhash: p must lie in (0,1)");
    double acc = 0.0;
    double power = 1.0;
    for (double v : values) {
        acc += v * power;
        power *= p;
    }
    return acc;
}

namespace detail {

inline double quantize(double x, double quantum) {
    return std::round(x / quantum) * quantum;
}

// Hash of the adjacency spectrum: eigenvalues ascending, snapped to the
// quantization grid. Sorting makes the hash a function of the spectrum as a
// multiset, hence invariant under node relabeling.
inline double spectrum_hash(std::vector<double> eigs, const FactorConfig& cfg) {
    for (double& e : eigs) e = quantize(e, cfg.eig_quantum);
    return ployhash(eigs, cfg.p);
}

// Combine the (density, node count, spectrum hash) triple into the factor.
// Positive factors are a hard requirement of the normalization layer, so a
// nonpositive result is rejected rather than clamped.
inline double combine_factor(double dens, int num_nodes, double psi, const FactorConfig& cfg) {
    const double parts[3] = {dens, static_cast<double>(num_nodes), psi};
    double xi = ployhash(parts, cfg.p);
    if (!(xi > 0.0))
        throw NumericError("subgraph factor is nonpositive (" + std::to_string(xi) +
                           "); choose a smaller hash base p");
    return xi;
}

}  // namespace detail

// Subgraph-specific factor of node v: hash of the closed-neighborhood
// subgraph's density, node count, and quantized adjacency spectrum.
inline double subgraph_factor(const Graph& g, int v, const FactorConfig& cfg = FactorConfig{}) {
    cfg.validate();
    Graph sub = neighborhood_subgraph(g, v);
    double psi = detail::spectrum_hash(symmetric_eigenvalues(adjacency(sub), cfg), cfg);
    return detail::combine_factor(density(sub), sub.num_nodes, psi, cfg);
}

// Per-node factors of a batch plus the derived segment-normalized vectors.
//   m_sn: xi sum-normalized within each segment
//   m_rc: m_sn * xi elementwise
//   m_re: m_rc sum-normalized within each segment
struct NodeFactors {
    std::vector<double> xi;
    std::vector<double> m_sn;
    std::vector<double> m_rc;
    std::vector<double> m_re;

    std::size_t size() const { return xi.size(); }
};

// Derive m_sn / m_rc / m_re from raw xi values and segment offsets. Used both
// by batch_factors and when rehydrating a factor cache.
inline NodeFactors factors_from_xi(std::vector<double> xi, const std::vector<int>& offsets) {
    if (!offsets.empty() && static_cast<std::size_t>(offsets.back()) != xi.size())
        throw DataError("factors_from_xi: offsets do not cover the xi vector");
    NodeFactors f;
    f.xi = std::move(xi);
    f.m_sn.resize(f.xi.size());
    f.m_rc.resize(f.xi.size());
    f.m_re.resize(f.xi.size());
    int begin = 0;
    for (int end : offsets) {
        double sum_xi = 0.0;
        for (int i = begin; i < end; ++i) sum_xi += f.xi[static_cast<std::size_t>(i)];
        if (!(sum_xi > 0.0)) throw NumericError("factors_from_xi: nonpositive segment sum");
        double sum_rc = 0.0;
        for (int i = begin; i < end; ++i) {
            auto k = static_cast<std::size_t>(i);
            f.m_sn[k] = f.xi[k] / sum_xi;
            f.m_rc[k] = f.m_sn[k] * f.xi[k];
            sum_rc += f.m_rc[k];
        }
        for (int i = begin; i < end; ++i) {
            auto k = static_cast<std::size_t>(i);
            f.m_re[k] = f.m_rc[k] / sum_rc;
        }
        begin = end;
    }
    return f;
}

inline NodeFactors batch_factors(const BatchedGraphs& b, const FactorConfig& cfg = FactorConfig{}) {
    cfg.validate();
    std::vector<double> xi;
    xi.reserve(static_cast<std::size_t>(b.total_nodes()));
    for (const Graph& g : b.graphs)
        for (int v = 0; v < g.num_nodes; ++v) xi.push_back(subgraph_factor(g, v, cfg));
    return factors_from_xi(std::move(xi), b.segment_offsets);
}

}  // namespace supernorm
