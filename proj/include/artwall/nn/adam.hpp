#pragma once

#include <cmath>
#include <vector>

#include "artwall/nn/tensor.hpp"

namespace artwall::nn {

// Adaptive moment estimation over a model's parameter list. State vectors
// are keyed by position, so the parameter list must be stable across steps.
template <typename T>
class Adam {
public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(std::vector<ParamRef<T>>& params) {
        if (m_.empty()) {
            m_.resize(params.size());
            v_.resize(params.size());
            for (size_t i = 0; i < params.size(); ++i) {
                if (!params[i].trainable) continue;
                m_[i].assign(params[i].value->size(), 0.0);
                v_[i].assign(params[i].value->size(), 0.0);
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(b1_, t_);
        const double c2 = 1.0 - std::pow(b2_, t_);
        for (size_t i = 0; i < params.size(); ++i) {
            if (!params[i].trainable || !params[i].grad) continue;
            auto& val = params[i].value->data;
            const auto& grad = params[i].grad->data;
            auto& m = m_[i];
            auto& v = v_[i];
            for (size_t k = 0; k < val.size(); ++k) {
                const double g = static_cast<double>(grad[k]);
                m[k] = b1_ * m[k] + (1 - b1_) * g;
                v[k] = b2_ * v[k] + (1 - b2_) * g * g;
                const double mh = m[k] / c1;
                const double vh = v[k] / c2;
                val[k] = static_cast<T>(val[k] - lr_ * mh / (std::sqrt(vh) + eps_));
            }
        }
    }

    void set_lr(double lr) { lr_ = lr; }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

} // namespace artwall::nn
