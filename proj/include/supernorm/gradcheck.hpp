#pragma once

#include <functional>
#include <string>
#include <vector>

#include "supernorm/autodiff.hpp"
#include "supernorm/common.hpp"
#include "supernorm/factor.hpp"
#include "supernorm/layers.hpp"
#include "supernorm/losses.hpp"
#include "supernorm/matrix.hpp"

namespace supernorm {

struct GradcheckEntry {
    std::string op;
    double max_rel_err = 0.0;
    bool pass = false;
};

namespace detail {

inline Matrix random_matrix(RandomStream& rng, int rows, int cols, double lo = -1.5,
                            double hi = 1.5) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

// push entries away from a kink at 0 so central differences stay valid
inline Matrix away_from_zero(Matrix m, double margin) {
    for (double& v : m.data)
        if (std::abs(v) < margin) v = v < 0.0 ? v - margin : v + margin;
    return m;
}

inline std::vector<int> random_offsets(RandomStream& rng, int rows) {
    std::vector<int> offsets;
    int at = 0;
    while (at < rows) {
        at += 1 + rng.below(std::min(3, rows - at));
        offsets.push_back(at);
    }
    return offsets;
}

}  // namespace detail

// Finite-difference validation of every tape operation, the losses, and the
// normalization layers: `instances` random shape/seed combinations each,
// central differences with the given h, pass iff max relative error < tol.
inline std::vector<GradcheckEntry> run_gradcheck(int instances = 20, double h = 1e-5,
                                                 double tol = 1e-4) {
    using Builder = std::function<DiffMatrix(Tape&, DiffMatrix)>;
    std::vector<GradcheckEntry> report;

    auto check = [&](const std::string& name,
                     const std::function<std::pair<Matrix, Builder>(RandomStream&, int)>& make) {
        GradcheckEntry entry;
        entry.op = name;
        for (int k = 0; k < instances; ++k) {
            RandomStream rng(0xC0FFEEull * 131 + static_cast<std::uint64_t>(k) * 7 +
                             static_cast<std::uint64_t>(std::hash<std::string>{}(name)));
            auto [x0, build] = make(rng, k);
            FdReport fd = finite_difference_check(build, x0, h, tol);
            entry.max_rel_err = std::max(entry.max_rel_err, fd.max_rel_err);
        }
        entry.pass = entry.max_rel_err < tol;
        report.push_back(std::move(entry));
    };

    // a generic loss head: weighted sum with a fixed random upstream pattern
    auto weighted_sum = [](Tape& t, DiffMatrix m, const Matrix& w) {
        return t.sum(t.hadamard(m, t.constant(w)));
    };

    check("add", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(4), c = 1 + rng.below(4);
        Matrix other = detail::random_matrix(rng, r, c);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::random_matrix(rng, r, c);
        return std::pair<Matrix, Builder>(x0, [other, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.add(x, t.leaf(other, true)), w);
        });
    });

    check("sub", [&](RandomStream& rng, int k) {
        int r = 2 + rng.below(4), c = 1 + rng.below(4);
        Matrix other = detail::random_matrix(rng, r, c);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::random_matrix(rng, r, c);
        bool left = k % 2 == 0;
        return std::pair<Matrix, Builder>(x0, [other, w, left, weighted_sum](Tape& t, DiffMatrix x) {
            DiffMatrix o = t.leaf(other, true);
            return weighted_sum(t, left ? t.sub(x, o) : t.sub(o, x), w);
        });
    });

    check("hadamard", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(4), c = 1 + rng.below(4);
        Matrix other = detail::random_matrix(rng, r, c);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::random_matrix(rng, r, c);
        return std::pair<Matrix, Builder>(x0, [other, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.hadamard(x, t.leaf(other, true)), w);
        });
    });

    check("matmul", [&](RandomStream& rng, int k) {
        int r = 2 + rng.below(3), mid = 1 + rng.below(3), c = 1 + rng.below(3);
        bool left = k % 2 == 0;
        Matrix other = left ? detail::random_matrix(rng, mid, c) : detail::random_matrix(rng, r, mid);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = left ? detail::random_matrix(rng, r, mid) : detail::random_matrix(rng, mid, c);
        return std::pair<Matrix, Builder>(x0, [other, w, left, weighted_sum](Tape& t, DiffMatrix x) {
            DiffMatrix o = t.leaf(other, true);
            return weighted_sum(t, left ? t.matmul(x, o) : t.matmul(o, x), w);
        });
    });

    check("scalar_mul", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(4), c = 1 + rng.below(4);
        double cmul = rng.uniform(-2.0, 2.0);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::random_matrix(rng, r, c);
        return std::pair<Matrix, Builder>(x0, [cmul, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.scalar_mul(x, cmul), w);
        });
    });

    check("broadcast_row", [&](RandomStream& rng, int) {
        int n = 2 + rng.below(4), c = 1 + rng.below(4);
        Matrix w = detail::random_matrix(rng, n, c);
        Matrix x0 = detail::random_matrix(rng, 1, c);
        return std::pair<Matrix, Builder>(x0, [n, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.broadcast_row(x, n), w);
        });
    });

    check("elementwise_pow.base", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(4), c = 1 + rng.below(3);
        Matrix exps = detail::random_matrix(rng, 1, c, -1.5, 1.5);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::random_matrix(rng, r, c, 0.3, 2.0);
        return std::pair<Matrix, Builder>(x0, [exps, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.elementwise_pow(x, t.leaf(exps, true)), w);
        });
    });

    check("elementwise_pow.exponent", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(4), c = 1 + rng.below(3);
        Matrix base = detail::random_matrix(rng, r, c, 0.3, 2.0);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::random_matrix(rng, 1, c, -1.5, 1.5);
        return std::pair<Matrix, Builder>(x0, [base, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.elementwise_pow(t.leaf(base, true), x), w);
        });
    });

    check("relu", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(4), c = 1 + rng.below(4);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::away_from_zero(detail::random_matrix(rng, r, c), 1e-3);
        return std::pair<Matrix, Builder>(x0, [w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.relu(x), w);
        });
    });

    check("mean_over_rows", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(5), c = 1 + rng.below(4);
        Matrix w = detail::random_matrix(rng, 1, c);
        Matrix x0 = detail::random_matrix(rng, r, c);
        return std::pair<Matrix, Builder>(x0, [w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.mean_over_rows(x), w);
        });
    });

    check("var_over_rows", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(5), c = 1 + rng.below(4);
        Matrix w = detail::random_matrix(rng, 1, c);
        Matrix x0 = detail::random_matrix(rng, r, c);
        return std::pair<Matrix, Builder>(x0, [w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.var_over_rows(x), w);
        });
    });

    check("segment_mean", [&](RandomStream& rng, int) {
        int r = 3 + rng.below(5), c = 1 + rng.below(3);
        auto offsets = detail::random_offsets(rng, r);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::random_matrix(rng, r, c);
        return std::pair<Matrix, Builder>(x0, [offsets, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.segment_mean(x, offsets), w);
        });
    });

    check("segment_mean_pool", [&](RandomStream& rng, int) {
        int r = 3 + rng.below(5), c = 1 + rng.below(3);
        auto offsets = detail::random_offsets(rng, r);
        Matrix w = detail::random_matrix(rng, static_cast<int>(offsets.size()), c);
        Matrix x0 = detail::random_matrix(rng, r, c);
        return std::pair<Matrix, Builder>(x0, [offsets, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.segment_mean_pool(x, offsets), w);
        });
    });

    check("segment_sum_normalize", [&](RandomStream& rng, int) {
        int r = 3 + rng.below(5), c = 1 + rng.below(3);
        auto offsets = detail::random_offsets(rng, r);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::random_matrix(rng, r, c, 0.5, 2.0);
        return std::pair<Matrix, Builder>(x0, [offsets, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.segment_sum_normalize(x, offsets), w);
        });
    });

    check("sqrt_eps", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(4), c = 1 + rng.below(4);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::random_matrix(rng, r, c, 0.1, 2.0);
        return std::pair<Matrix, Builder>(x0, [w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.sqrt_eps(x, 1e-5), w);
        });
    });

    check("divide", [&](RandomStream& rng, int k) {
        int r = 2 + rng.below(4), c = 1 + rng.below(4);
        bool numerator = k % 2 == 0;
        Matrix other = numerator ? detail::away_from_zero(detail::random_matrix(rng, r, c), 0.5)
                                 : detail::random_matrix(rng, r, c);
        Matrix w = detail::random_matrix(rng, r, c);
        Matrix x0 = numerator ? detail::random_matrix(rng, r, c)
                              : detail::away_from_zero(detail::random_matrix(rng, r, c), 0.5);
        return std::pair<Matrix, Builder>(
            x0, [other, w, numerator, weighted_sum](Tape& t, DiffMatrix x) {
                DiffMatrix o = t.leaf(other, true);
                return weighted_sum(t, numerator ? t.divide(x, o) : t.divide(o, x), w);
            });
    });

    check("concat_rows", [&](RandomStream& rng, int k) {
        int r1 = 1 + rng.below(3), r2 = 1 + rng.below(3), c = 1 + rng.below(4);
        bool top = k % 2 == 0;
        Matrix other = detail::random_matrix(rng, top ? r2 : r1, c);
        Matrix w = detail::random_matrix(rng, r1 + r2, c);
        Matrix x0 = detail::random_matrix(rng, top ? r1 : r2, c);
        return std::pair<Matrix, Builder>(x0, [other, w, top, weighted_sum](Tape& t, DiffMatrix x) {
            DiffMatrix o = t.leaf(other, true);
            return weighted_sum(t, top ? t.concat_rows(x, o) : t.concat_rows(o, x), w);
        });
    });

    check("select_rows", [&](RandomStream& rng, int) {
        int r = 3 + rng.below(4), c = 1 + rng.below(4);
        std::vector<int> idx;
        for (int i = 0; i < r; ++i)
            if (rng.uniform() < 0.7) idx.push_back(i);
        if (idx.empty()) idx.push_back(0);
        idx.push_back(rng.below(r));  // repeated rows must accumulate
        Matrix w = detail::random_matrix(rng, static_cast<int>(idx.size()), c);
        Matrix x0 = detail::random_matrix(rng, r, c);
        return std::pair<Matrix, Builder>(x0, [idx, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.select_rows(x, idx), w);
        });
    });

    check("sum", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(4), c = 1 + rng.below(4);
        Matrix x0 = detail::random_matrix(rng, r, c);
        return std::pair<Matrix, Builder>(x0, [](Tape& t, DiffMatrix x) { return t.sum(x); });
    });

    check("graph_propagate", [&](RandomStream& rng, int) {
        int n = 3 + rng.below(4), c = 1 + rng.below(3);
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.uniform() < 0.5) {
                    adj[static_cast<std::size_t>(i)].push_back(j);
                    adj[static_cast<std::size_t>(j)].push_back(i);
                }
        SparseSym w_op = SparseSym::from_neighbor_lists(adj, 1.0);
        Matrix w = detail::random_matrix(rng, n, c);
        Matrix x0 = detail::random_matrix(rng, n, c);
        return std::pair<Matrix, Builder>(x0, [w_op, w, weighted_sum](Tape& t, DiffMatrix x) {
            return weighted_sum(t, t.graph_propagate(x, w_op), w);
        });
    });

    check("binary_cross_entropy", [&](RandomStream& rng, int) {
        int n = 2 + rng.below(6);
        Matrix targets(n, 1);
        for (double& v : targets.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        Matrix x0 = detail::random_matrix(rng, n, 1, -2.0, 2.0);
        return std::pair<Matrix, Builder>(x0, [targets](Tape& t, DiffMatrix x) {
            return binary_cross_entropy(t, x, targets);
        });
    });

    check("cross_entropy", [&](RandomStream& rng, int) {
        int n = 2 + rng.below(5), c = 2 + rng.below(3);
        std::vector<int> classes;
        for (int i = 0; i < n; ++i) classes.push_back(rng.below(c));
        Matrix x0 = detail::random_matrix(rng, n, c, -2.0, 2.0);
        return std::pair<Matrix, Builder>(x0, [classes](Tape& t, DiffMatrix x) {
            return cross_entropy(t, x, classes);
        });
    });

    check("mean_absolute_error", [&](RandomStream& rng, int) {
        int r = 2 + rng.below(4), c = 1 + rng.below(3);
        Matrix target = detail::random_matrix(rng, r, c);
        Matrix x0 = detail::random_matrix(rng, r, c);
        // keep every residual away from the |.| kink
        for (std::size_t i = 0; i < x0.data.size(); ++i) {
            double d = x0.data[i] - target.data[i];
            if (std::abs(d) < 1e-3) x0.data[i] = target.data[i] + (d < 0.0 ? -1e-3 : 1e-3);
        }
        return std::pair<Matrix, Builder>(x0, [target](Tape& t, DiffMatrix x) {
            return mean_absolute_error(t, x, target);
        });
    });

    // full normalization layers, checked w.r.t. the input and every parameter
    struct LayerTarget {
        std::string name;
        int which;  // 0 input, 1 gamma, 2 beta, 3 w_rc, 4 w_re
    };
    const LayerTarget targets[] = {{"supernorm.input", 0},
                                   {"supernorm.gamma", 1},
                                   {"supernorm.beta", 2},
                                   {"supernorm.w_rc", 3},
                                   {"supernorm.w_re", 4}};
    for (const auto& target : targets) {
        check(target.name, [&, target](RandomStream& rng, int k) {
            int d = 2 + rng.below(3);
            int rows = 4 + rng.below(4);
            auto offsets = detail::random_offsets(rng, rows);
            std::vector<double> xi;
            for (int i = 0; i < rows; ++i) xi.push_back(rng.uniform(0.5, 2.0));
            NodeFactors factors = factors_from_xi(xi, offsets);
            Matrix hv = detail::random_matrix(rng, rows, d);
            Matrix gamma = detail::random_matrix(rng, 1, d, 0.5, 1.5);
            Matrix beta = detail::random_matrix(rng, 1, d, -0.5, 0.5);
            Matrix w_rc = detail::random_matrix(rng, 1, d, -0.8, 0.8);
            Matrix w_re = detail::random_matrix(rng, 1, d, -0.8, 0.8);
            bool train_mode = k % 2 == 0;
            Matrix running_mean = detail::random_matrix(rng, 1, d, -0.3, 0.3);
            Matrix running_var = detail::random_matrix(rng, 1, d, 0.5, 1.5);
            Matrix x0;
            switch (target.which) {
                case 0: x0 = hv; break;
                case 1: x0 = gamma; break;
                case 2: x0 = beta; break;
                case 3: x0 = w_rc; break;
                default: x0 = w_re; break;
            }
            Builder build = [=](Tape& t, DiffMatrix x) {
                SuperNormState st(d);
                st.training = train_mode;
                st.running_mean = running_mean;
                st.running_var = running_var;
                DiffMatrix hh = target.which == 0 ? x : t.leaf(hv, true);
                DiffMatrix g = target.which == 1 ? x : t.leaf(gamma, true);
                DiffMatrix b = target.which == 2 ? x : t.leaf(beta, true);
                DiffMatrix wrc = target.which == 3 ? x : t.leaf(w_rc, true);
                DiffMatrix wre = target.which == 4 ? x : t.leaf(w_re, true);
                DiffMatrix out = detail::supernorm_core(t, hh, factors, offsets, g, b, wrc, wre, st);
                return t.sum(out);
            };
            return std::pair<Matrix, Builder>(x0, build);
        });
    }

    check("batchnorm.input", [&](RandomStream& rng, int k) {
        int d = 2 + rng.below(3);
        int rows = 3 + rng.below(4);
        Matrix hv = detail::random_matrix(rng, rows, d);
        Matrix gamma = detail::random_matrix(rng, 1, d, 0.5, 1.5);
        Matrix beta = detail::random_matrix(rng, 1, d, -0.5, 0.5);
        bool train_mode = k % 2 == 0;
        Matrix running_mean = detail::random_matrix(rng, 1, d, -0.3, 0.3);
        Matrix running_var = detail::random_matrix(rng, 1, d, 0.5, 1.5);
        Builder build = [=](Tape& t, DiffMatrix x) {
            SuperNormState st(d);
            st.training = train_mode;
            st.running_mean = running_mean;
            st.running_var = running_var;
            DiffMatrix out = detail::batchnorm_core(t, x, t.leaf(gamma, true), t.leaf(beta, true), st);
            return t.sum(out);
        };
        return std::pair<Matrix, Builder>(hv, build);
    });

    return report;
}

inline bool gradcheck_passed(const std::vector<GradcheckEntry>& report) {
    for (const auto& e : report)
        if (!e.pass) return false;
    return !report.empty();
}

}  // namespace supernorm
