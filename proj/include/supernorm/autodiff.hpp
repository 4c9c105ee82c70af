#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "supernorm/common.hpp"
#include "supernorm/matrix.hpp"

namespace supernorm {

class Tape;

// Handle to a node on a tape. Cheap to copy; the tape owns all storage.
struct DiffMatrix {
    int id = -1;
    Tape* tape = nullptr;

    bool valid() const { return id >= 0 && tape != nullptr; }
};

// Symmetric sparse matrix in adjacency-list form, used for message passing.
// Symmetry lets the backward pass reuse the same structure.
struct SparseSym {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;  // (col, weight)

    static SparseSym from_neighbor_lists(const std::vector<std::vector<int>>& adj,
                                         double self_weight) {
        SparseSym s;
        s.n = static_cast<int>(adj.size());
        s.rows.resize(adj.size());
        for (int i = 0; i < s.n; ++i) {
            auto k = static_cast<std::size_t>(i);
            if (self_weight != 0.0) s.rows[k].emplace_back(i, self_weight);
            for (int j : adj[k]) s.rows[k].emplace_back(j, 1.0);
        }
        return s;
    }
};

// Reverse-mode tape over dense matrices, rebuilt per forward pass
// (define-by-run). Node values are stored eagerly; gradients are allocated
// lazily during backward. Single-threaded by contract; independent tapes may
// run concurrently.
class Tape {
public:
    DiffMatrix leaf(Matrix value, bool requires_grad = false) {
        return push(std::move(value), requires_grad, {}, nullptr);
    }

    DiffMatrix constant(Matrix value) { return leaf(std::move(value), false); }

    const Matrix& value(DiffMatrix m) const { return node(m).value; }

    // Gradient of the last backward() target w.r.t. this node. Zero matrix if
    // the node was never reached.
    Matrix grad(DiffMatrix m) const {
        const Node& nd = node(m);
        if (nd.grad.rows == 0) return Matrix(nd.value.rows, nd.value.cols);
        return nd.grad;
    }

    std::size_t size() const { return nodes_.size(); }

    // ---- forward operations -------------------------------------------------

    DiffMatrix add(DiffMatrix a, DiffMatrix b) {
        const Matrix &va = value(a), &vb = value(b);
        require_same_shape(va, vb, "add");
        Matrix out = va;
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += vb.data[i];
        return push(std::move(out), needs(a) || needs(b), {a.id, b.id},
                    [](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        t.accumulate(t.parent(self, 0), g);
                        t.accumulate(t.parent(self, 1), g);
                    });
    }

    DiffMatrix sub(DiffMatrix a, DiffMatrix b) {
        const Matrix &va = value(a), &vb = value(b);
        require_same_shape(va, vb, "sub");
        Matrix out = va;
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= vb.data[i];
        return push(std::move(out), needs(a) || needs(b), {a.id, b.id},
                    [](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        t.accumulate(t.parent(self, 0), g);
                        Matrix neg = g;
                        for (double& v : neg.data) v = -v;
                        t.accumulate(t.parent(self, 1), neg);
                    });
    }

    DiffMatrix hadamard(DiffMatrix a, DiffMatrix b) {
        const Matrix &va = value(a), &vb = value(b);
        require_same_shape(va, vb, "hadamard");
        Matrix out = va;
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= vb.data[i];
        return push(std::move(out), needs(a) || needs(b), {a.id, b.id},
                    [](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        int pa = t.parent(self, 0), pb = t.parent(self, 1);
                        Matrix ga = g, gb = g;
                        const Matrix& va = t.nodes_[static_cast<std::size_t>(pa)].value;
                        const Matrix& vb = t.nodes_[static_cast<std::size_t>(pb)].value;
                        for (std::size_t i = 0; i < g.data.size(); ++i) {
                            ga.data[i] *= vb.data[i];
                            gb.data[i] *= va.data[i];
                        }
                        t.accumulate(pa, ga);
                        t.accumulate(pb, gb);
                    });
    }

    DiffMatrix matmul(DiffMatrix a, DiffMatrix b) {
        const Matrix &va = value(a), &vb = value(b);
        if (va.cols != vb.rows)
            throw DataError("matmul shape mismatch: " + va.shape_str() + " * " + vb.shape_str());
        return push(supernorm::matmul(va, vb), needs(a) || needs(b), {a.id, b.id},
                    [](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        int pa = t.parent(self, 0), pb = t.parent(self, 1);
                        const Matrix& va = t.nodes_[static_cast<std::size_t>(pa)].value;
                        const Matrix& vb = t.nodes_[static_cast<std::size_t>(pb)].value;
                        if (t.needs_id(pa)) t.accumulate(pa, supernorm::matmul(g, transpose(vb)));
                        if (t.needs_id(pb)) t.accumulate(pb, supernorm::matmul(transpose(va), g));
                    });
    }

    DiffMatrix scalar_mul(DiffMatrix a, double c) {
        Matrix out = value(a);
        for (double& v : out.data) v *= c;
        return push(std::move(out), needs(a), {a.id},
                    [c](Tape& t, int self) {
                        Matrix g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        for (double& v : g.data) v *= c;
                        t.accumulate(t.parent(self, 0), g);
                    });
    }

    // Tile a 1 x d row vector to n rows. Backward sums over the rows.
    DiffMatrix broadcast_row(DiffMatrix rowvec, int n) {
        const Matrix& v = value(rowvec);
        if (v.rows != 1) throw DataError("broadcast_row expects a 1xd row vector, got " + v.shape_str());
        Matrix out(n, v.cols);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < v.cols; ++j) out(i, j) = v(0, j);
        return push(std::move(out), needs(rowvec), {rowvec.id},
                    [](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        Matrix gr(1, g.cols);
                        for (int i = 0; i < g.rows; ++i)
                            for (int j = 0; j < g.cols; ++j) gr(0, j) += g(i, j);
                        t.accumulate(t.parent(self, 0), gr);
                    });
    }

    // out[i][j] = base[i][j] ^ exponents[0][j]; base entries must be strictly
    // positive so the exponent gradient (which uses ln base) is defined.
    DiffMatrix elementwise_pow(DiffMatrix base, DiffMatrix exponents) {
        const Matrix& vb = value(base);
        const Matrix& ve = value(exponents);
        if (ve.rows != 1 || ve.cols != vb.cols)
            throw DataError("elementwise_pow: exponent must be 1x" + std::to_string(vb.cols) +
                            ", got " + ve.shape_str());
        for (double x : vb.data)
            if (!(x > 0.0)) throw NumericError("elementwise_pow: base entries must be strictly positive");
        Matrix out(vb.rows, vb.cols);
        for (int i = 0; i < vb.rows; ++i)
            for (int j = 0; j < vb.cols; ++j) out(i, j) = std::pow(vb(i, j), ve(0, j));
        return push(std::move(out), needs(base) || needs(exponents), {base.id, exponents.id},
                    [](Tape& t, int self) {
                        const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
                        const Matrix& g = nd.grad;
                        int pb = t.parent(self, 0), pe = t.parent(self, 1);
                        const Matrix& vb = t.nodes_[static_cast<std::size_t>(pb)].value;
                        const Matrix& ve = t.nodes_[static_cast<std::size_t>(pe)].value;
                        if (t.needs_id(pb)) {
                            Matrix gb(vb.rows, vb.cols);
                            for (int i = 0; i < vb.rows; ++i)
                                for (int j = 0; j < vb.cols; ++j)
                                    gb(i, j) = g(i, j) * ve(0, j) * std::pow(vb(i, j), ve(0, j) - 1.0);
                            t.accumulate(pb, gb);
                        }
                        if (t.needs_id(pe)) {
                            Matrix ge(1, vb.cols);
                            for (int i = 0; i < vb.rows; ++i)
                                for (int j = 0; j < vb.cols; ++j)
                                    ge(0, j) += g(i, j) * nd.value(i, j) * std::log(vb(i, j));
                            t.accumulate(pe, ge);
                        }
                    });
    }

    // Subgradient 0 at exactly 0.
    DiffMatrix relu(DiffMatrix a) {
        Matrix out = value(a);
        for (double& v : out.data) v = v > 0.0 ? v : 0.0;
        return push(std::move(out), needs(a), {a.id},
                    [](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        int p = t.parent(self, 0);
                        const Matrix& va = t.nodes_[static_cast<std::size_t>(p)].value;
                        Matrix ga = g;
                        for (std::size_t i = 0; i < ga.data.size(); ++i)
                            if (!(va.data[i] > 0.0)) ga.data[i] = 0.0;
                        t.accumulate(p, ga);
                    });
    }

    DiffMatrix mean_over_rows(DiffMatrix a) {
        const Matrix& va = value(a);
        if (va.rows < 1) throw DataError("mean_over_rows: empty input");
        Matrix out(1, va.cols);
        for (int i = 0; i < va.rows; ++i)
            for (int j = 0; j < va.cols; ++j) out(0, j) += va(i, j);
        for (double& v : out.data) v /= static_cast<double>(va.rows);
        return push(std::move(out), needs(a), {a.id},
                    [](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        int p = t.parent(self, 0);
                        const Matrix& va = t.nodes_[static_cast<std::size_t>(p)].value;
                        Matrix ga(va.rows, va.cols);
                        double inv = 1.0 / static_cast<double>(va.rows);
                        for (int i = 0; i < va.rows; ++i)
                            for (int j = 0; j < va.cols; ++j) ga(i, j) = g(0, j) * inv;
                        t.accumulate(p, ga);
                    });
    }

    // Biased (divide-by-n) per-column variance.
    DiffMatrix var_over_rows(DiffMatrix a) {
        const Matrix& va = value(a);
        if (va.rows < 1) throw DataError("var_over_rows: empty input");
        Matrix mean(1, va.cols);
        for (int i = 0; i < va.rows; ++i)
            for (int j = 0; j < va.cols; ++j) mean(0, j) += va(i, j);
        for (double& v : mean.data) v /= static_cast<double>(va.rows);
        Matrix out(1, va.cols);
        for (int i = 0; i < va.rows; ++i)
            for (int j = 0; j < va.cols; ++j) {
                double d = va(i, j) - mean(0, j);
                out(0, j) += d * d;
            }
        for (double& v : out.data) v /= static_cast<double>(va.rows);
        return push(std::move(out), needs(a), {a.id},
                    [mean](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        int p = t.parent(self, 0);
                        const Matrix& va = t.nodes_[static_cast<std::size_t>(p)].value;
                        Matrix ga(va.rows, va.cols);
                        double inv = 2.0 / static_cast<double>(va.rows);
                        for (int i = 0; i < va.rows; ++i)
                            for (int j = 0; j < va.cols; ++j)
                                ga(i, j) = g(0, j) * inv * (va(i, j) - mean(0, j));
                        t.accumulate(p, ga);
                    });
    }

    // Per-segment column means broadcast back to each row of the segment.
    DiffMatrix segment_mean(DiffMatrix a, const std::vector<int>& offsets) {
        const Matrix& va = value(a);
        check_offsets(offsets, va.rows, "segment_mean");
        Matrix out(va.rows, va.cols);
        int begin = 0;
        for (int end : offsets) {
            int len = end - begin;
            for (int j = 0; j < va.cols; ++j) {
                double s = 0.0;
                for (int i = begin; i < end; ++i) s += va(i, j);
                s /= static_cast<double>(len);
                for (int i = begin; i < end; ++i) out(i, j) = s;
            }
            begin = end;
        }
        return push(std::move(out), needs(a), {a.id},
                    [offsets](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        Matrix ga(g.rows, g.cols);
                        int begin = 0;
                        for (int end : offsets) {
                            int len = end - begin;
                            for (int j = 0; j < g.cols; ++j) {
                                double s = 0.0;
                                for (int i = begin; i < end; ++i) s += g(i, j);
                                s /= static_cast<double>(len);
                                for (int i = begin; i < end; ++i) ga(i, j) = s;
                            }
                            begin = end;
                        }
                        t.accumulate(t.parent(self, 0), ga);
                    });
    }

    // Per-segment column means pooled to one row per segment (m x d).
    DiffMatrix segment_mean_pool(DiffMatrix a, const std::vector<int>& offsets) {
        const Matrix& va = value(a);
        check_offsets(offsets, va.rows, "segment_mean_pool");
        Matrix out(static_cast<int>(offsets.size()), va.cols);
        int begin = 0;
        for (int s = 0; s < static_cast<int>(offsets.size()); ++s) {
            int end = offsets[static_cast<std::size_t>(s)];
            for (int j = 0; j < va.cols; ++j) {
                double acc = 0.0;
                for (int i = begin; i < end; ++i) acc += va(i, j);
                out(s, j) = acc / static_cast<double>(end - begin);
            }
            begin = end;
        }
        return push(std::move(out), needs(a), {a.id},
                    [offsets](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        int p = t.parent(self, 0);
                        const Matrix& va = t.nodes_[static_cast<std::size_t>(p)].value;
                        Matrix ga(va.rows, va.cols);
                        int begin = 0;
                        for (int s = 0; s < static_cast<int>(offsets.size()); ++s) {
                            int end = offsets[static_cast<std::size_t>(s)];
                            double inv = 1.0 / static_cast<double>(end - begin);
                            for (int i = begin; i < end; ++i)
                                for (int j = 0; j < va.cols; ++j) ga(i, j) = g(s, j) * inv;
                            begin = end;
                        }
                        t.accumulate(p, ga);
                    });
    }

    // x / (per-segment column sum of x). Output sums to 1 per segment.
    DiffMatrix segment_sum_normalize(DiffMatrix a, const std::vector<int>& offsets) {
        const Matrix& va = value(a);
        check_offsets(offsets, va.rows, "segment_sum_normalize");
        Matrix sums(static_cast<int>(offsets.size()), va.cols);
        Matrix out(va.rows, va.cols);
        int begin = 0;
        for (int s = 0; s < static_cast<int>(offsets.size()); ++s) {
            int end = offsets[static_cast<std::size_t>(s)];
            for (int j = 0; j < va.cols; ++j) {
                double acc = 0.0;
                for (int i = begin; i < end; ++i) acc += va(i, j);
                if (acc == 0.0) throw NumericError("segment_sum_normalize: zero segment sum");
                sums(s, j) = acc;
                for (int i = begin; i < end; ++i) out(i, j) = va(i, j) / acc;
            }
            begin = end;
        }
        return push(std::move(out), needs(a), {a.id},
                    [offsets, sums](Tape& t, int self) {
                        const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
                        const Matrix& g = nd.grad;
                        int p = t.parent(self, 0);
                        Matrix ga(g.rows, g.cols);
                        int begin = 0;
                        for (int s = 0; s < static_cast<int>(offsets.size()); ++s) {
                            int end = offsets[static_cast<std::size_t>(s)];
                            for (int j = 0; j < g.cols; ++j) {
                                // d(x_i/S)/dx_k = delta_ik/S - x_i/S^2
                                double dot = 0.0;  // sum_i g_i * y_i
                                for (int i = begin; i < end; ++i) dot += g(i, j) * nd.value(i, j);
                                double inv = 1.0 / sums(s, j);
                                for (int i = begin; i < end; ++i)
                                    ga(i, j) = (g(i, j) - dot) * inv;
                            }
                            begin = end;
                        }
                        t.accumulate(p, ga);
                    });
    }

    // sqrt(x + eps), defined for x + eps > 0.
    DiffMatrix sqrt_eps(DiffMatrix a, double eps) {
        const Matrix& va = value(a);
        Matrix out = va;
        for (double& v : out.data) {
            if (!(v + eps > 0.0)) throw NumericError("sqrt_eps: argument " + std::to_string(v + eps) + " not positive");
            v = std::sqrt(v + eps);
        }
        return push(std::move(out), needs(a), {a.id},
                    [](Tape& t, int self) {
                        const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
                        Matrix ga = nd.grad;
                        for (std::size_t i = 0; i < ga.data.size(); ++i)
                            ga.data[i] *= 0.5 / nd.value.data[i];
                        t.accumulate(t.parent(self, 0), ga);
                    });
    }

    DiffMatrix divide(DiffMatrix a, DiffMatrix b) {
        const Matrix &va = value(a), &vb = value(b);
        require_same_shape(va, vb, "divide");
        Matrix out = va;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            if (vb.data[i] == 0.0) throw NumericError("divide: zero denominator");
            out.data[i] /= vb.data[i];
        }
        return push(std::move(out), needs(a) || needs(b), {a.id, b.id},
                    [](Tape& t, int self) {
                        const Node& nd = t.nodes_[static_cast<std::size_t>(self)];
                        const Matrix& g = nd.grad;
                        int pa = t.parent(self, 0), pb = t.parent(self, 1);
                        const Matrix& vb = t.nodes_[static_cast<std::size_t>(pb)].value;
                        if (t.needs_id(pa)) {
                            Matrix ga = g;
                            for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] /= vb.data[i];
                            t.accumulate(pa, ga);
                        }
                        if (t.needs_id(pb)) {
                            Matrix gb = g;
                            for (std::size_t i = 0; i < gb.data.size(); ++i)
                                gb.data[i] *= -nd.value.data[i] / vb.data[i];
                            t.accumulate(pb, gb);
                        }
                    });
    }

    DiffMatrix concat_rows(DiffMatrix a, DiffMatrix b) {
        const Matrix &va = value(a), &vb = value(b);
        if (va.cols != vb.cols)
            throw DataError("concat_rows: column mismatch " + va.shape_str() + " vs " + vb.shape_str());
        Matrix out(va.rows + vb.rows, va.cols);
        for (int i = 0; i < va.rows; ++i)
            for (int j = 0; j < va.cols; ++j) out(i, j) = va(i, j);
        for (int i = 0; i < vb.rows; ++i)
            for (int j = 0; j < vb.cols; ++j) out(va.rows + i, j) = vb(i, j);
        return push(std::move(out), needs(a) || needs(b), {a.id, b.id},
                    [](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        int pa = t.parent(self, 0), pb = t.parent(self, 1);
                        const Matrix& va = t.nodes_[static_cast<std::size_t>(pa)].value;
                        Matrix ga(va.rows, va.cols);
                        Matrix gb(g.rows - va.rows, g.cols);
                        for (int i = 0; i < ga.rows; ++i)
                            for (int j = 0; j < g.cols; ++j) ga(i, j) = g(i, j);
                        for (int i = 0; i < gb.rows; ++i)
                            for (int j = 0; j < g.cols; ++j) gb(i, j) = g(va.rows + i, j);
                        t.accumulate(pa, ga);
                        t.accumulate(pb, gb);
                    });
    }

    // Gather a subset of rows; backward scatters gradients back.
    DiffMatrix select_rows(DiffMatrix a, const std::vector<int>& indices) {
        const Matrix& va = value(a);
        Matrix out(static_cast<int>(indices.size()), va.cols);
        for (int i = 0; i < out.rows; ++i) {
            int src = indices[static_cast<std::size_t>(i)];
            if (src < 0 || src >= va.rows)
                throw DataError("select_rows: index " + std::to_string(src) + " out of range");
            for (int j = 0; j < va.cols; ++j) out(i, j) = va(src, j);
        }
        return push(std::move(out), needs(a), {a.id},
                    [indices](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        int p = t.parent(self, 0);
                        const Matrix& va = t.nodes_[static_cast<std::size_t>(p)].value;
                        Matrix ga(va.rows, va.cols);
                        for (int i = 0; i < g.rows; ++i) {
                            int dst = indices[static_cast<std::size_t>(i)];
                            for (int j = 0; j < g.cols; ++j) ga(dst, j) += g(i, j);
                        }
                        t.accumulate(p, ga);
                    });
    }

    // Sum of all entries, 1x1.
    DiffMatrix sum(DiffMatrix a) {
        const Matrix& va = value(a);
        double s = 0.0;
        for (double v : va.data) s += v;
        Matrix out(1, 1);
        out(0, 0) = s;
        return push(std::move(out), needs(a), {a.id},
                    [](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        int p = t.parent(self, 0);
                        const Matrix& va = t.nodes_[static_cast<std::size_t>(p)].value;
                        Matrix ga(va.rows, va.cols, g(0, 0));
                        t.accumulate(p, ga);
                    });
    }

    // out = W h for a symmetric sparse W; backward reuses W.
    DiffMatrix graph_propagate(DiffMatrix h, const SparseSym& w) {
        const Matrix& vh = value(h);
        if (vh.rows != w.n)
            throw DataError("graph_propagate: matrix has " + std::to_string(vh.rows) +
                            " rows but operator expects " + std::to_string(w.n));
        return push(apply_sparse(w, vh), needs(h), {h.id},
                    [w](Tape& t, int self) {
                        const Matrix& g = t.nodes_[static_cast<std::size_t>(self)].grad;
                        t.accumulate(t.parent(self, 0), apply_sparse(w, g));
                    });
    }

    // Extension point for composite primitives (losses live outside this
    // header). backward receives the tape and the node's own id.
    DiffMatrix record(Matrix value, std::vector<int> parents,
                      std::function<void(Tape&, int)> backward) {
        bool rg = false;
        for (int p : parents) rg = rg || needs_id(p);
        return push(std::move(value), rg, std::move(parents), std::move(backward));
    }

    void accumulate(int id, const Matrix& g) {
        Node& nd = nodes_[static_cast<std::size_t>(id)];
        if (!nd.requires_grad) return;
        if (nd.grad.rows == 0) nd.grad = Matrix(nd.value.rows, nd.value.cols);
        for (std::size_t i = 0; i < g.data.size(); ++i) nd.grad.data[i] += g.data[i];
    }

    bool needs_id(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
    int parent(int self, int k) const {
        return nodes_[static_cast<std::size_t>(self)].parents[static_cast<std::size_t>(k)];
    }

    // ---- backward -----------------------------------------------------------

    // Reverse-mode accumulation from a 1x1 loss. Gradients sum over all paths;
    // leaves without requires_grad are left untouched.
    void backward(DiffMatrix loss) {
        if (loss.tape != this) throw DataError("backward: loss belongs to another tape");
        const Node& ln = node(loss);
        if (ln.value.rows != 1 || ln.value.cols != 1)
            throw DataError("backward: loss must be 1x1, got " + ln.value.shape_str());
        if (backward_done_)
            throw DataError("backward already ran on this tape; call reset_grads() first");
        backward_done_ = true;
        Matrix seed(1, 1);
        seed(0, 0) = 1.0;
        if (node(loss).requires_grad) {
            nodes_[static_cast<std::size_t>(loss.id)].grad = seed;
        } else {
            return;  // nothing reachable requires a gradient
        }
        for (int i = loss.id; i >= 0; --i) {
            Node& nd = nodes_[static_cast<std::size_t>(i)];
            if (!nd.requires_grad || nd.grad.rows == 0 || !nd.back) continue;
            nd.back(*this, i);
        }
    }

    void reset_grads() {
        for (Node& nd : nodes_) nd.grad = Matrix();
        backward_done_ = false;
    }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        std::vector<int> parents;
        std::function<void(Tape&, int)> back;
    };

    std::vector<Node> nodes_;
    bool backward_done_ = false;

    const Node& node(DiffMatrix m) const {
        if (m.tape != this || m.id < 0 || m.id >= static_cast<int>(nodes_.size()))
            throw DataError("invalid DiffMatrix handle");
        return nodes_[static_cast<std::size_t>(m.id)];
    }

    bool needs(DiffMatrix m) const { return node(m).requires_grad; }

    DiffMatrix push(Matrix value, bool requires_grad, std::vector<int> parents,
                    std::function<void(Tape&, int)> back) {
        Node nd;
        nd.value = std::move(value);
        nd.requires_grad = requires_grad;
        nd.parents = std::move(parents);
        nd.back = std::move(back);
        nodes_.push_back(std::move(nd));
        return DiffMatrix{static_cast<int>(nodes_.size()) - 1, this};
    }

    static void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
        if (!a.same_shape(b))
            throw DataError(std::string(op) + " shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
    }

    static void check_offsets(const std::vector<int>& offsets, int rows, const char* op) {
        int prev = 0;
        for (int end : offsets) {
            if (end <= prev) throw DataError(std::string(op) + ": offsets must be strictly increasing");
            prev = end;
        }
        if (prev != rows)
            throw DataError(std::string(op) + ": offsets cover " + std::to_string(prev) +
                            " rows but matrix has " + std::to_string(rows));
    }

    static Matrix apply_sparse(const SparseSym& w, const Matrix& x) {
        Matrix out(x.rows, x.cols);
        for (int i = 0; i < w.n; ++i) {
            double* orow = &out.data[static_cast<std::size_t>(i) * static_cast<std::size_t>(x.cols)];
            for (auto [j, wij] : w.rows[static_cast<std::size_t>(i)]) {
                const double* xrow = &x.data[static_cast<std::size_t>(j) * static_cast<std::size_t>(x.cols)];
                for (int c = 0; c < x.cols; ++c) orow[c] += wij * xrow[c];
            }
        }
        return out;
    }
};

// ---- finite differences -----------------------------------------------------

struct FdReport {
    double max_rel_err = 0.0;
    bool pass = false;
};

// Central-difference check of d(loss)/dx against the tape gradient. The
// builder must construct the loss from the supplied leaf on the supplied
// tape. Relative error uses denominator max(1, |analytic|).
inline FdReport finite_difference_check(
    const std::function<DiffMatrix(Tape&, DiffMatrix)>& build, const Matrix& x0, double h,
    double tol) {
    if (!(h > 0.0)) throw DataError("finite_difference_check: h must be positive");
    Matrix analytic;
    {
        Tape tape;
        DiffMatrix x = tape.leaf(x0, true);
        DiffMatrix loss = build(tape, x);
        tape.backward(loss);
        analytic = tape.grad(x);
    }
    auto eval = [&](const Matrix& xv) {
        Tape tape;
        DiffMatrix x = tape.leaf(xv, true);
        DiffMatrix loss = build(tape, x);
        return tape.value(loss)(0, 0);
    };
    FdReport rep;
    Matrix xp = x0;
    for (std::size_t i = 0; i < x0.data.size(); ++i) {
        double orig = xp.data[i];
        xp.data[i] = orig + h;
        double up = eval(xp);
        xp.data[i] = orig - h;
        double down = eval(xp);
        xp.data[i] = orig;
        double fd = (up - down) / (2.0 * h);
        double a = analytic.data[i];
        double rel = std::abs(fd - a) / std::max(1.0, std::abs(a));
        if (rel > rep.max_rel_err) rep.max_rel_err = rel;
    }
    rep.pass = rep.max_rel_err < tol;
    return rep;
}

}  // namespace supernorm
