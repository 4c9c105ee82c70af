#pragma once

#include <cmath>
#include <vector>

#include "supernorm/autodiff.hpp"
#include "supernorm/common.hpp"
#include "supernorm/matrix.hpp"

namespace supernorm {

// Mean binary cross-entropy on raw logits, in the numerically stable
// max(z,0) - z*y + log(1 + exp(-|z|)) form. Targets are constants in {0,1}.
inline DiffMatrix binary_cross_entropy(Tape& tape, DiffMatrix logits, const Matrix& targets) {
    const Matrix& z = tape.value(logits);
    if (!z.same_shape(targets))
        throw DataError("binary_cross_entropy: logits " + z.shape_str() + " vs targets " +
                        targets.shape_str());
    if (z.data.empty()) throw DataError("binary_cross_entropy: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < z.data.size(); ++i) {
        double zi = z.data[i];
        double yi = targets.data[i];
        acc += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
    }
    Matrix out(1, 1);
    out(0, 0) = acc / static_cast<double>(z.data.size());
    return tape.record(std::move(out), {logits.id}, [targets](Tape& t, int self) {
        const Matrix& g = t.grad(DiffMatrix{self, &t});
        int p = t.parent(self, 0);
        const Matrix& z = t.value(DiffMatrix{p, &t});
        Matrix gz(z.rows, z.cols);
        double inv = 1.0 / static_cast<double>(z.data.size());
        for (std::size_t i = 0; i < z.data.size(); ++i) {
            double sigma = 1.0 / (1.0 + std::exp(-z.data[i]));
            gz.data[i] = g(0, 0) * (sigma - targets.data[i]) * inv;
        }
        t.accumulate(p, gz);
    });
}

// Mean softmax cross-entropy over rows; classes index the columns.
inline DiffMatrix cross_entropy(Tape& tape, DiffMatrix logits, const std::vector<int>& classes) {
    const Matrix& z = tape.value(logits);
    if (static_cast<int>(classes.size()) != z.rows)
        throw DataError("cross_entropy: " + std::to_string(classes.size()) + " labels for " +
                        std::to_string(z.rows) + " rows");
    if (z.rows < 1 || z.cols < 2) throw DataError("cross_entropy: need n>=1 rows and >=2 classes");
    double acc = 0.0;
    for (int i = 0; i < z.rows; ++i) {
        int c = classes[static_cast<std::size_t>(i)];
        if (c < 0 || c >= z.cols) throw DataError("cross_entropy: class index out of range");
        double zmax = z(i, 0);
        for (int j = 1; j < z.cols; ++j) zmax = std::max(zmax, z(i, j));
        double lse = 0.0;
        for (int j = 0; j < z.cols; ++j) lse += std::exp(z(i, j) - zmax);
        acc += zmax + std::log(lse) - z(i, c);
    }
    Matrix out(1, 1);
    out(0, 0) = acc / static_cast<double>(z.rows);
    return tape.record(std::move(out), {logits.id}, [classes](Tape& t, int self) {
        const Matrix& g = t.grad(DiffMatrix{self, &t});
        int p = t.parent(self, 0);
        const Matrix& z = t.value(DiffMatrix{p, &t});
        Matrix gz(z.rows, z.cols);
        double inv = 1.0 / static_cast<double>(z.rows);
        for (int i = 0; i < z.rows; ++i) {
            double zmax = z(i, 0);
            for (int j = 1; j < z.cols; ++j) zmax = std::max(zmax, z(i, j));
            double lse = 0.0;
            for (int j = 0; j < z.cols; ++j) lse += std::exp(z(i, j) - zmax);
            for (int j = 0; j < z.cols; ++j) {
                double soft = std::exp(z(i, j) - zmax) / lse;
                double onehot = j == classes[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
                gz(i, j) = g(0, 0) * (soft - onehot) * inv;
            }
        }
        t.accumulate(p, gz);
    });
}

// Mean absolute error; subgradient 0 where prediction equals target.
inline DiffMatrix mean_absolute_error(Tape& tape, DiffMatrix pred, const Matrix& target) {
    const Matrix& p = tape.value(pred);
    if (!p.same_shape(target))
        throw DataError("mean_absolute_error: pred " + p.shape_str() + " vs target " +
                        target.shape_str());
    if (p.data.empty()) throw DataError("mean_absolute_error: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.data.size(); ++i) acc += std::abs(p.data[i] - target.data[i]);
    Matrix out(1, 1);
    out(0, 0) = acc / static_cast<double>(p.data.size());
    return tape.record(std::move(out), {pred.id}, [target](Tape& t, int self) {
        const Matrix& g = t.grad(DiffMatrix{self, &t});
        int pid = t.parent(self, 0);
        const Matrix& pv = t.value(DiffMatrix{pid, &t});
        Matrix gp(pv.rows, pv.cols);
        double inv = 1.0 / static_cast<double>(pv.data.size());
        for (std::size_t i = 0; i < pv.data.size(); ++i) {
            double d = pv.data[i] - target.data[i];
            gp.data[i] = g(0, 0) * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv;
        }
        t.accumulate(pid, gp);
    });
}

}  // namespace supernorm
