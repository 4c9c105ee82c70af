#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "supernorm/common.hpp"
#include "supernorm/matrix.hpp"
#include "supernorm/params.hpp"

namespace supernorm {

inline void sgd_step(Parameter& p, const Matrix& grad, double lr) {
    if (!grad.same_shape(p.value))
        throw DataError("sgd_step: gradient shape " + grad.shape_str() + " != parameter shape " +
                        p.value.shape_str());
    for (std::size_t i = 0; i < p.value.data.size(); ++i) p.value.data[i] -= lr * grad.data[i];
}

// Adam with the standard bias-corrected update. Moment buffers are keyed by
// parameter name, so names must be unique within one optimizer's scope.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    void step(const std::vector<std::pair<Parameter*, Matrix>>& grads) {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (const auto& [p, g] : grads) {
            if (!p->trainable) continue;
            if (!g.same_shape(p->value))
                throw DataError("Adam: gradient shape " + g.shape_str() + " != parameter shape " +
                                p->value.shape_str());
            auto& [m, v] = state_[p->name];
            if (m.rows == 0) {
                m = Matrix(g.rows, g.cols);
                v = Matrix(g.rows, g.cols);
            }
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * g.data[i];
                v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * g.data[i] * g.data[i];
                double mhat = m.data[i] / bc1;
                double vhat = v.data[i] / bc2;
                p->value.data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    long t_ = 0;
    std::map<std::string, std::pair<Matrix, Matrix>> state_;
};

// ReduceLROnPlateau with termination: halves the learning rate when the
// tracked metric fails to improve for `patience` consecutive epochs, and
// signals stop once the rate falls below the floor.
class PlateauScheduler {
public:
    struct Decision {
        double lr;
        bool stop;
    };

    PlateauScheduler(double lr, int patience, double lr_floor, bool maximize)
        : lr_(lr), patience_(patience), floor_(lr_floor), maximize_(maximize) {
        if (patience < 1) throw DataError("PlateauScheduler: patience must be >= 1");
        if (!(lr_floor < lr)) throw DataError("PlateauScheduler: lr_floor must be below lr");
    }

    Decision observe(double metric) {
        bool improved = !has_best_ || (maximize_ ? metric > best_ : metric < best_);
        if (improved) {
            best_ = metric;
            has_best_ = true;
            bad_ = 0;
        } else if (++bad_ >= patience_) {
            lr_ *= 0.5;
            bad_ = 0;
        }
        return {lr_, lr_ < floor_};
    }

    double lr() const { return lr_; }

private:
    double lr_;
    int patience_;
    double floor_;
    bool maximize_;
    double best_ = 0.0;
    bool has_best_ = false;
    int bad_ = 0;
};

}  // namespace supernorm
