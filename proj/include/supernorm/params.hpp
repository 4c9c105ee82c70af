#pragma once

#include <string>
#include <utility>
#include <vector>

#include "supernorm/autodiff.hpp"
#include "supernorm/common.hpp"
#include "supernorm/matrix.hpp"

namespace supernorm {

// Named learnable matrix. Values live outside any tape; each forward pass
// binds them as fresh leaves. Frozen parameters keep their value but never
// receive gradients or updates.
struct Parameter {
    std::string name;
    Matrix value;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, Matrix v, bool t = true)
        : name(std::move(n)), value(std::move(v)), trainable(t) {}
};

// Records which parameters were bound to which tape leaves during one
// forward pass, so gradients can be routed back after backward().
class ParamBinding {
public:
    explicit ParamBinding(Tape& tape) : tape_(&tape) {}

    DiffMatrix bind(Parameter& p) {
        DiffMatrix dm = tape_->leaf(p.value, p.trainable);
        bound_.emplace_back(&p, dm);
        return dm;
    }

    // (parameter, gradient) pairs for the trainable bound parameters
    std::vector<std::pair<Parameter*, Matrix>> gradients() const {
        std::vector<std::pair<Parameter*, Matrix>> out;
        for (const auto& [p, dm] : bound_)
            if (p->trainable) out.emplace_back(p, tape_->grad(dm));
        return out;
    }

    const std::vector<std::pair<Parameter*, DiffMatrix>>& bound() const { return bound_; }

private:
    Tape* tape_;
    std::vector<std::pair<Parameter*, DiffMatrix>> bound_;
};

inline Matrix glorot_uniform(int fan_in, int fan_out, RandomStream& rng) {
    double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(fan_in, fan_out);
    for (double& v : m.data) v = rng.uniform(-s, s);
    return m;
}

}  // namespace supernorm
