#pragma once

#include <cmath>

#include "artwall/nn/tensor.hpp"

namespace artwall::nn {

// Mean squared error over batch and pixels (uniform weighting).
template <typename T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - target.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.data.size());
}

template <typename T>
Tensor<T> mse_backward(const Tensor<T>& pred, const Tensor<T>& target) {
    Tensor<T> g = pred;
    const double inv = 2.0 / static_cast<double>(pred.data.size());
    for (size_t i = 0; i < g.data.size(); ++i)
        g.data[i] = static_cast<T>(inv * (static_cast<double>(pred.data[i]) - target.data[i]));
    return g;
}

// Mean absolute error.
template <typename T>
double l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i)
        acc += std::abs(static_cast<double>(pred.data[i]) - target.data[i]);
    return acc / static_cast<double>(pred.data.size());
}

template <typename T>
Tensor<T> l1_backward(const Tensor<T>& pred, const Tensor<T>& target) {
    Tensor<T> g = pred;
    const double inv = 1.0 / static_cast<double>(pred.data.size());
    for (size_t i = 0; i < g.data.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - target.data[i];
        g.data[i] = static_cast<T>(d > 0 ? inv : (d < 0 ? -inv : 0.0));
    }
    return g;
}

// Numerically stable mean sigmoid cross-entropy of logits against a
// constant 0/1 target.
template <typename T>
double sigmoid_ce(const Tensor<T>& logits, double target) {
    double acc = 0.0;
    for (const T& zv : logits.data) {
        const double z = static_cast<double>(zv);
        acc += std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)));
    }
    return acc / static_cast<double>(logits.data.size());
}

template <typename T>
Tensor<T> sigmoid_ce_backward(const Tensor<T>& logits, double target) {
    Tensor<T> g = logits;
    const double inv = 1.0 / static_cast<double>(logits.data.size());
    for (size_t i = 0; i < g.data.size(); ++i) {
        const double z = static_cast<double>(logits.data[i]);
        const double s = 1.0 / (1.0 + std::exp(-z));
        g.data[i] = static_cast<T>(inv * (s - target));
    }
    return g;
}

struct GeneratorLoss {
    double total = 0, gan = 0, l1 = 0;
};

// Gen_loss = lambda * gan_loss + L1_loss, where gan_loss is the sigmoid
// cross-entropy of the discriminator's fake logits against all-ones. With
// lambda = 0 this reduces to the mean absolute error exactly.
template <typename T>
GeneratorLoss generator_loss(const Tensor<T>& disc_fake_logits, const Tensor<T>& gen_img,
                             const Tensor<T>& target_img, double lambda) {
    GeneratorLoss out;
    out.gan = sigmoid_ce(disc_fake_logits, 1.0);
    out.l1 = l1_loss(gen_img, target_img);
    out.total = lambda * out.gan + out.l1;
    return out;
}

struct DiscriminatorLoss {
    double total = 0, real = 0, generated = 0;
};

// Dis_loss = real_loss + generated_loss: cross-entropy of real logits
// against ones plus cross-entropy of generated logits against zeros.
template <typename T>
DiscriminatorLoss discriminator_loss(const Tensor<T>& real_logits, const Tensor<T>& fake_logits) {
    DiscriminatorLoss out;
    out.real = sigmoid_ce(real_logits, 1.0);
    out.generated = sigmoid_ce(fake_logits, 0.0);
    out.total = out.real + out.generated;
    return out;
}

} // namespace artwall::nn
