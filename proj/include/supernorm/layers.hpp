#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "supernorm/autodiff.hpp"
#include "supernorm/common.hpp"
#include "supernorm/factor.hpp"
#include "supernorm/graph.hpp"
#include "supernorm/matrix.hpp"
#include "supernorm/params.hpp"

namespace supernorm {

// Learnable state of the normalization layers. The initialization recovers a
// vanilla BatchNorm: gamma = 1, beta = 0, w_rc = 0, w_re = 0, which makes the
// calibration term vanish and the enhancement blend equal 1.
struct SuperNormState {
    Parameter gamma;
    Parameter beta;
    Parameter w_rc;
    Parameter w_re;
    Matrix running_mean;
    Matrix running_var;
    double eps = 1e-5;
    double momentum = 0.1;
    bool training = true;

    explicit SuperNormState(int d, const std::string& prefix = "norm")
        : gamma(prefix + ".gamma", Matrix(1, d, 1.0)),
          beta(prefix + ".beta", Matrix(1, d, 0.0)),
          w_rc(prefix + ".w_rc", Matrix(1, d, 0.0)),
          w_re(prefix + ".w_re", Matrix(1, d, 0.0)),
          running_mean(1, d, 0.0),
          running_var(1, d, 1.0) {}
};

namespace detail {

// Centering & scaling plus the running-statistics bookkeeping shared by
// batchnorm and supernorm. In train mode statistics come from the current
// batch (biased variance) and the running buffers are updated in place.
inline DiffMatrix center_scale(Tape& tape, DiffMatrix h, SuperNormState& st) {
    const int n = tape.value(h).rows;
    DiffMatrix mean, var;
    if (st.training) {
        mean = tape.mean_over_rows(h);
        var = tape.var_over_rows(h);
        const Matrix& mv = tape.value(mean);
        const Matrix& vv = tape.value(var);
        for (int j = 0; j < st.running_mean.cols; ++j) {
            st.running_mean(0, j) = (1.0 - st.momentum) * st.running_mean(0, j) + st.momentum * mv(0, j);
            st.running_var(0, j) = (1.0 - st.momentum) * st.running_var(0, j) + st.momentum * vv(0, j);
        }
    } else {
        mean = tape.constant(st.running_mean);
        var = tape.constant(st.running_var);
    }
    DiffMatrix centered = tape.sub(h, tape.broadcast_row(mean, n));
    DiffMatrix scale = tape.broadcast_row(tape.sqrt_eps(var, st.eps), n);
    return tape.divide(centered, scale);
}

inline Matrix tile_column(std::span<const double> col, int d) {
    Matrix out(static_cast<int>(col.size()), d);
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < d; ++j) out(i, j) = col[static_cast<std::size_t>(i)];
    return out;
}

// Core graph builders over pre-bound parameter handles; the public wrappers
// below bind from SuperNormState. Keeping these separate lets the gradient
// checker perturb any single parameter.
inline DiffMatrix batchnorm_core(Tape& tape, DiffMatrix h, DiffMatrix gamma, DiffMatrix beta,
                                 SuperNormState& st) {
    const Matrix& hv = tape.value(h);
    if (hv.rows < 1) throw DataError("batchnorm: empty input");
    if (hv.cols != tape.value(gamma).cols)
        throw DataError("batchnorm: input has " + std::to_string(hv.cols) +
                        " columns, state expects " + std::to_string(tape.value(gamma).cols));
    const int n = hv.rows;
    DiffMatrix h_cs = detail::center_scale(tape, h, st);
    return tape.add(tape.hadamard(h_cs, tape.broadcast_row(gamma, n)),
                    tape.broadcast_row(beta, n));
}

inline DiffMatrix supernorm_core(Tape& tape, DiffMatrix h, const NodeFactors& factors,
                                 const std::vector<int>& offsets, DiffMatrix gamma,
                                 DiffMatrix beta, DiffMatrix w_rc, DiffMatrix w_re,
                                 SuperNormState& st) {
    const Matrix& hv = tape.value(h);
    const int n = hv.rows;
    const int d = hv.cols;
    if (d != tape.value(gamma).cols)
        throw DataError("supernorm: input has " + std::to_string(d) + " columns, state expects " +
                        std::to_string(tape.value(gamma).cols));
    if (factors.size() != static_cast<std::size_t>(n))
        throw DataError("supernorm: factors cover " + std::to_string(factors.size()) +
                        " nodes but batch has " + std::to_string(n) +
                        " rows; recompute factors for this batch");
    for (double m : factors.m_re)
        if (!(m > 0.0)) throw NumericError("supernorm: m_re entries must be strictly positive");

    // RC: inject graph instance statistics, weighted by the calibration factor
    DiffMatrix h_sa = tape.segment_mean(h, offsets);
    DiffMatrix m_rc_tile = tape.constant(detail::tile_column(factors.m_rc, d));
    DiffMatrix injection = tape.hadamard(tape.broadcast_row(w_rc, n), tape.hadamard(h_sa, m_rc_tile));
    DiffMatrix h_rc = tape.add(h, injection);

    DiffMatrix h_cs = detail::center_scale(tape, h_rc, st);

    // AT with the enhancement factor merged in: (gamma + m_re^w_re) / 2
    DiffMatrix m_re_tile = tape.constant(detail::tile_column(factors.m_re, d));
    DiffMatrix pow_term = tape.elementwise_pow(m_re_tile, w_re);
    DiffMatrix blend = tape.scalar_mul(tape.add(tape.broadcast_row(gamma, n), pow_term), 0.5);
    return tape.add(tape.hadamard(h_cs, blend), tape.broadcast_row(beta, n));
}

}  // namespace detail

// Standard BatchNorm: center & scale over all rows, then affine transform.
inline DiffMatrix batchnorm(Tape& tape, ParamBinding& params, DiffMatrix h, SuperNormState& st) {
    DiffMatrix gamma = params.bind(st.gamma);
    DiffMatrix beta = params.bind(st.beta);
    return detail::batchnorm_core(tape, h, gamma, beta, st);
}

// Factor-embedded normalization:
//   RC: h_rc = h + w_rc (.) (segment_mean(h) (.) m_rc)
//   CS: standard centering & scaling of h_rc
//   AT: h_cs (.) (gamma + m_re ^ w_re) / 2 + beta
// The factor columns are constants; gradients flow to the four parameter
// vectors and to h.
inline DiffMatrix supernorm(Tape& tape, ParamBinding& params, DiffMatrix h,
                            const NodeFactors& factors, const std::vector<int>& offsets,
                            SuperNormState& st) {
    DiffMatrix w_rc = params.bind(st.w_rc);
    DiffMatrix w_re = params.bind(st.w_re);
    DiffMatrix gamma = params.bind(st.gamma);
    DiffMatrix beta = params.bind(st.beta);
    return detail::supernorm_core(tape, h, factors, offsets, gamma, beta, w_rc, w_re, st);
}

// Plain-matrix form of the RC stage, used by the margin property checks.
inline Matrix rc_calibrate(const Matrix& h, std::span<const double> m_rc,
                           const std::vector<int>& offsets, const Matrix& w_rc) {
    Tape tape;
    DiffMatrix hh = tape.constant(h);
    DiffMatrix h_sa = tape.segment_mean(hh, offsets);
    Matrix out = h;
    const Matrix& sa = tape.value(h_sa);
    for (int i = 0; i < h.rows; ++i)
        for (int j = 0; j < h.cols; ++j)
            out(i, j) += w_rc(0, j) * sa(i, j) * m_rc[static_cast<std::size_t>(i)];
    return out;
}

// Standalone enhancement scaling (the pre-merge form): h (.) m_re ^ w_re.
inline Matrix re_scale(const Matrix& h, std::span<const double> m_re, const Matrix& w_re) {
    Matrix out = h;
    for (int i = 0; i < h.rows; ++i)
        for (int j = 0; j < h.cols; ++j)
            out(i, j) *= std::pow(m_re[static_cast<std::size_t>(i)], w_re(0, j));
    return out;
}

// ---- convolutions -------------------------------------------------------------

// a_sym h w with a constant (pre-normalized) adjacency.
inline DiffMatrix gcn_conv(Tape& tape, DiffMatrix h, const Matrix& a_sym, DiffMatrix w) {
    const Matrix& hv = tape.value(h);
    if (a_sym.rows != a_sym.cols || a_sym.cols != hv.rows)
        throw DataError("gcn_conv: adjacency " + a_sym.shape_str() + " incompatible with features " +
                        hv.shape_str());
    DiffMatrix a = tape.constant(a_sym);
    return tape.matmul(tape.matmul(a, h), w);
}

// Chain of linear layers with ReLU between them (none after the last).
struct Mlp {
    std::vector<Parameter> weights;
    std::vector<Parameter> biases;

    static Mlp make(const std::string& prefix, const std::vector<int>& dims, RandomStream& rng) {
        if (dims.size() < 2) throw DataError("Mlp: need at least input and output dims");
        Mlp m;
        for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
            m.weights.emplace_back(prefix + ".w" + std::to_string(i),
                                   glorot_uniform(dims[i], dims[i + 1], rng));
            m.biases.emplace_back(prefix + ".b" + std::to_string(i), Matrix(1, dims[i + 1]));
        }
        return m;
    }

    DiffMatrix forward(Tape& tape, ParamBinding& params, DiffMatrix x) {
        for (std::size_t i = 0; i < weights.size(); ++i) {
            DiffMatrix w = params.bind(weights[i]);
            DiffMatrix b = params.bind(biases[i]);
            x = tape.add(tape.matmul(x, w), tape.broadcast_row(b, tape.value(x).rows));
            if (i + 1 < weights.size()) x = tape.relu(x);
        }
        return x;
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out;
        for (auto& w : weights) out.push_back(&w);
        for (auto& b : biases) out.push_back(&b);
        return out;
    }
};

// GIN convolution: row v <- MLP((1 + eps) h_v + sum_{u in N(v)} h_u).
inline DiffMatrix gin_conv(Tape& tape, ParamBinding& params, DiffMatrix h,
                           const std::vector<std::vector<int>>& neighbors, double eps_gin,
                           Mlp& mlp) {
    const Matrix& hv = tape.value(h);
    if (static_cast<int>(neighbors.size()) != hv.rows)
        throw DataError("gin_conv: neighbor lists cover " + std::to_string(neighbors.size()) +
                        " nodes but features have " + std::to_string(hv.rows) + " rows");
    SparseSym agg = SparseSym::from_neighbor_lists(neighbors, 1.0 + eps_gin);
    DiffMatrix summed = tape.graph_propagate(h, agg);
    return mlp.forward(tape, params, summed);
}

// Per-segment mean of node rows: one row per graph.
inline DiffMatrix mean_pool_readout(Tape& tape, DiffMatrix h, const std::vector<int>& offsets) {
    return tape.segment_mean_pool(h, offsets);
}

}  // namespace supernorm
