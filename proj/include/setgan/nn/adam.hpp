#pragma once

#include <cmath>
#include <map>
#include <string>

#include "setgan/core/tensor.hpp"
#include "setgan/nn/layers.hpp"

namespace setgan::nn {

/// Adaptive-moment optimizer. State tensors are keyed by parameter name so
/// they can be checkpointed alongside the weights.
template <typename T>
class Adam {
public:
    Adam() = default;
    Adam(double lr, double beta1, double beta2, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void begin_step() { ++t_; }

    void update(const std::string& name, Param<T>& p) {
        auto& s = state_[name];
        if (s.m.size() != p.value.size()) {
            s.m = Tensor<T>(p.value.shape());
            s.v = Tensor<T>(p.value.shape());
        }
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            const double m = beta1_ * s.m[i] + (1.0 - beta1_) * g;
            const double v = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
            s.m[i] = static_cast<T>(m);
            s.v[i] = static_cast<T>(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p.value[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }

    long step_count() const { return t_; }
    void set_step_count(long t) { t_ = t; }
    double learning_rate() const { return lr_; }

    /// Visits moment tensors as "<param>.m" / "<param>.v" for checkpointing.
    template <typename F>
    void visit_state(F&& f) {
        for (auto& [name, s] : state_) {
            f(name + ".m", s.m);
            f(name + ".v", s.v);
        }
    }

    /// Pre-creates state slots so checkpoint loading can fill them by name.
    void ensure_slot(const std::string& name, const std::vector<std::size_t>& shape) {
        auto& s = state_[name];
        if (s.m.size() != Tensor<T>::count(shape)) {
            s.m = Tensor<T>(shape);
            s.v = Tensor<T>(shape);
        }
    }

private:
    struct Moments {
        Tensor<T> m, v;
    };

    double lr_ = 2e-4, beta1_ = 0.5, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::map<std::string, Moments> state_;
};

}  // namespace setgan::nn
