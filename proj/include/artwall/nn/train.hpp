#pragma once

#include <algorithm>
#include <chrono>
#include <string>
#include <vector>

#include "artwall/nn/adam.hpp"
#include "artwall/nn/checkpoint.hpp"
#include "artwall/nn/discriminator.hpp"
#include "artwall/nn/loss.hpp"
#include "artwall/nn/unet.hpp"
#include "artwall/raster.hpp"

namespace artwall::nn {

enum class FieldKind { Stress, Strain };

inline const char* field_name(FieldKind k) { return k == FieldKind::Stress ? "stress" : "strain"; }

struct TrainConfig {
    int epochs = 500;
    int batch_size = 4;
    double lambda_gan = 0.01;  // weight on the adversarial generator term
    double lr = 1e-3;          // plain U-Net regression
    double beta1 = 0.9, beta2 = 0.999;
    double lr_gan = 2e-4;  // generator and discriminator of the cGAN
    double beta1_gan = 0.5, beta2_gan = 0.999;
    std::uint64_t seed = 0;
    bool validate_each_epoch = true;

    bool valid() const { return epochs >= 1 && batch_size >= 1 && lambda_gan >= 0; }
};

inline void to_json(json& j, const TrainConfig& c) {
    j = json{{"epochs", c.epochs},       {"batch_size", c.batch_size},
             {"lambda_gan", c.lambda_gan}, {"lr", c.lr},
             {"beta1", c.beta1},         {"beta2", c.beta2},
             {"lr_gan", c.lr_gan},       {"beta1_gan", c.beta1_gan},
             {"beta2_gan", c.beta2_gan}, {"seed", c.seed},
             {"validate_each_epoch", c.validate_each_epoch}};
}
inline void from_json(const json& j, TrainConfig& c) {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lambda_gan = j.value("lambda_gan", c.lambda_gan);
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.lr_gan = j.value("lr_gan", c.lr_gan);
    c.beta1_gan = j.value("beta1_gan", c.beta1_gan);
    c.beta2_gan = j.value("beta2_gan", c.beta2_gan);
    c.seed = j.value("seed", c.seed);
    c.validate_each_epoch = j.value("validate_each_epoch", c.validate_each_epoch);
}

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- sample <-> tensor plumbing ----

struct TensorDataset {
    Tensor<float> x;  // (N, 3, S, S) binary label channels
    Tensor<float> y;  // (N, 1, S, S) normalized field
};

inline TensorDataset build_tensors(const std::vector<const FieldSample*>& samples,
                                   FieldKind kind) {
    if (samples.empty()) throw std::invalid_argument("empty sample list");
    const int S = samples[0]->size;
    TensorDataset d;
    d.x.resize(static_cast<int>(samples.size()), 3, S, S);
    d.y.resize(static_cast<int>(samples.size()), 1, S, S);
    const size_t px = static_cast<size_t>(S) * S;
    for (size_t i = 0; i < samples.size(); ++i) {
        const FieldSample& s = *samples[i];
        if (s.size != S) throw std::invalid_argument("mixed sample sizes");
        for (size_t k = 0; k < 3 * px; ++k)
            d.x.data[i * 3 * px + k] = static_cast<float>(s.labels[k]);
        const std::vector<float>& f = (kind == FieldKind::Stress) ? s.stress : s.strain;
        std::copy(f.begin(), f.end(), d.y.data.begin() + static_cast<long>(i * px));
    }
    return d;
}

inline std::pair<Tensor<float>, Tensor<float>> gather_batch(const TensorDataset& d,
                                                            const std::vector<size_t>& order,
                                                            size_t lo, size_t hi) {
    const int S = d.x.h();
    Tensor<float> xb(static_cast<int>(hi - lo), 3, S, S);
    Tensor<float> yb(static_cast<int>(hi - lo), 1, S, S);
    const size_t px = static_cast<size_t>(S) * S;
    for (size_t i = lo; i < hi; ++i) {
        std::copy_n(d.x.data.begin() + static_cast<long>(order[i] * 3 * px), 3 * px,
                    xb.data.begin() + static_cast<long>((i - lo) * 3 * px));
        std::copy_n(d.y.data.begin() + static_cast<long>(order[i] * px), px,
                    yb.data.begin() + static_cast<long>((i - lo) * px));
    }
    return {std::move(xb), std::move(yb)};
}

// ---- prediction ----

// Deterministic by default: batch norm uses running statistics and dropout
// is off. A generator can instead realize its noise source by keeping
// dropout live through `stochastic_rng`.
template <typename T>
Tensor<T> predict(const UNet<T>& model, const Tensor<T>& labels, Rng* stochastic_rng = nullptr) {
    Tensor<T> y = model.infer(labels, stochastic_rng);
    for (auto& v : y.data) v = std::clamp(v, T(0), T(1));
    return y;
}

inline std::vector<float> predict_sample(const UNet<float>& model, const FieldSample& s,
                                         Rng* stochastic_rng = nullptr) {
    Tensor<float> x(1, 3, s.size, s.size);
    for (size_t k = 0; k < x.data.size(); ++k) x.data[k] = static_cast<float>(s.labels[k]);
    Tensor<float> y = predict(model, x, stochastic_rng);
    return std::move(y.data);
}

// ---- training loops ----

struct UNetTrainResult {
    Checkpoint best;
    json history = json::array();  // one entry per epoch
    int best_epoch = -1;
    double best_val = 0.0;
};

namespace detail {

inline double validate_mse(UNet<float>& model, const TensorDataset& val, int batch) {
    double acc = 0.0;
    size_t count = 0;
    const int N = val.x.n();
    std::vector<size_t> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    for (int lo = 0; lo < N; lo += batch) {
        const int hi = std::min(N, lo + batch);
        auto [xb, yb] = gather_batch(val, order, lo, hi);
        const Tensor<float> pred = model.infer(xb);
        acc += mse_loss(pred, yb) * (hi - lo);
        count += hi - lo;
    }
    return acc / static_cast<double>(count);
}

inline double validate_l1(UNet<float>& model, const TensorDataset& val, int batch) {
    double acc = 0.0;
    size_t count = 0;
    const int N = val.x.n();
    std::vector<size_t> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    for (int lo = 0; lo < N; lo += batch) {
        const int hi = std::min(N, lo + batch);
        auto [xb, yb] = gather_batch(val, order, lo, hi);
        const Tensor<float> pred = model.infer(xb);
        acc += l1_loss(pred, yb) * (hi - lo);
        count += hi - lo;
    }
    return acc / static_cast<double>(count);
}

inline void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
}

} // namespace detail

// Minimize the mean squared error of the field prediction; validation runs
// every epoch and the checkpoint with the lowest validation loss wins.
inline UNetTrainResult train_unet(const std::vector<const FieldSample*>& train_samples,
                                  const std::vector<const FieldSample*>& val_samples,
                                  const UNetConfig& cfg, const TrainConfig& tc, FieldKind kind) {
    if (!tc.valid()) throw std::invalid_argument("invalid train config");
    const TensorDataset train = build_tensors(train_samples, kind);
    const TensorDataset val = build_tensors(val_samples, kind);

    UNet<float> model(cfg, tc.seed);
    Adam<float> opt(tc.lr, tc.beta1, tc.beta2);
    Rng shuffle_rng(mix_seed(tc.seed, 0x73687566));

    UNetTrainResult out;
    std::vector<size_t> order(train.x.n());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        detail::shuffle_indices(order, shuffle_rng);
        double train_acc = 0.0;
        size_t seen = 0;
        for (size_t lo = 0; lo < order.size(); lo += tc.batch_size) {
            const size_t hi = std::min(order.size(), lo + tc.batch_size);
            auto [xb, yb] = gather_batch(train, order, lo, hi);
            const Tensor<float> pred = model.forward_train(xb);
            const double loss = mse_loss(pred, yb);
            if (!std::isfinite(loss))
                throw TrainingDiverged("non-finite training loss at epoch " +
                                       std::to_string(epoch));
            train_acc += loss * (hi - lo);
            seen += hi - lo;
            model.zero_grads();
            model.backward(mse_backward(pred, yb));
            auto params = model.params();
            opt.step(params);
        }
        const double train_mse = train_acc / static_cast<double>(seen);
        double val_mse = train_mse;
        if (tc.validate_each_epoch) val_mse = detail::validate_mse(model, val, tc.batch_size);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.history.push_back(json{{"epoch", epoch},
                                   {"train_mse", train_mse},
                                   {"val_mse", val_mse},
                                   {"seconds", secs}});
        if (out.best_epoch < 0 || val_mse < out.best_val) {
            out.best_val = val_mse;
            out.best_epoch = epoch;
            out.best = snapshot(model, json(cfg),
                                json{{"epoch", epoch},
                                     {"seed", tc.seed},
                                     {"target", field_name(kind)},
                                     {"val_mse", val_mse},
                                     {"model", "unet"}});
        }
    }
    out.best.meta["history"] = out.history;
    return out;
}

struct CganTrainResult {
    Checkpoint generator;
    Checkpoint discriminator;
    json history = json::array();
    int best_epoch = -1;
    double best_val_l1 = 0.0;
};

// Alternating per-batch updates: one discriminator step (real vs generated,
// plus its kernel L1 penalty), then one generator step driven by
// lambda * gan_loss + L1. With lambda = 0 the generator's trajectory is
// exactly L1 regression; the discriminator still trains but its gradients
// never reach the generator.
inline CganTrainResult train_cgan(const std::vector<const FieldSample*>& train_samples,
                                  const std::vector<const FieldSample*>& val_samples,
                                  const UNetConfig& gcfg, const DiscriminatorConfig& dcfg,
                                  const TrainConfig& tc, FieldKind kind) {
    if (!tc.valid()) throw std::invalid_argument("invalid train config");
    const TensorDataset train = build_tensors(train_samples, kind);
    const TensorDataset val = build_tensors(val_samples, kind);

    UNet<float> gen(gcfg, tc.seed);
    PatchDiscriminator<float> disc(dcfg, tc.seed + 1);
    Adam<float> opt_g(tc.lr_gan, tc.beta1_gan, tc.beta2_gan);
    Adam<float> opt_d(tc.lr_gan, tc.beta1_gan, tc.beta2_gan);
    Rng shuffle_rng(mix_seed(tc.seed, 0x73687566));

    CganTrainResult out;
    std::vector<size_t> order(train.x.n());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        detail::shuffle_indices(order, shuffle_rng);
        double acc_gan = 0, acc_l1 = 0, acc_disc = 0;
        size_t seen = 0;
        for (size_t lo = 0; lo < order.size(); lo += tc.batch_size) {
            const size_t hi = std::min(order.size(), lo + tc.batch_size);
            auto [xb, yb] = gather_batch(train, order, lo, hi);
            const int nb = static_cast<int>(hi - lo);

            const Tensor<float> fake = gen.forward_train(xb);

            // discriminator step
            disc.zero_grads();
            const Tensor<float> real_logits = disc.forward_train(xb, yb);
            disc.backward_to_field(sigmoid_ce_backward(real_logits, 1.0), nb, xb.h(), xb.w());
            const Tensor<float> fake_logits = disc.forward_train(xb, fake);
            disc.backward_to_field(sigmoid_ce_backward(fake_logits, 0.0), nb, xb.h(), xb.w());
            const DiscriminatorLoss dl = discriminator_loss(real_logits, fake_logits);
            const double l1_pen = disc.apply_kernel_l1();
            auto dparams = disc.params();
            opt_d.step(dparams);

            // generator step
            gen.zero_grads();
            const GeneratorLoss gl = [&] {
                GeneratorLoss g;
                g.l1 = l1_loss(fake, yb);
                Tensor<float> dfake = l1_backward(fake, yb);
                if (tc.lambda_gan > 0) {
                    disc.zero_grads();  // scratch; discarded
                    const Tensor<float> logits2 = disc.forward_train(xb, fake);
                    g.gan = sigmoid_ce(logits2, 1.0);
                    Tensor<float> dlog = sigmoid_ce_backward(logits2, 1.0);
                    for (auto& v : dlog.data) v = static_cast<float>(v * tc.lambda_gan);
                    const Tensor<float> dfield =
                        disc.backward_to_field(dlog, nb, xb.h(), xb.w());
                    for (size_t i = 0; i < dfake.data.size(); ++i)
                        dfake.data[i] += dfield.data[i];
                }
                g.total = tc.lambda_gan * g.gan + g.l1;
                gen.backward(dfake);
                return g;
            }();
            auto gparams = gen.params();
            opt_g.step(gparams);

            if (!std::isfinite(gl.total) || !std::isfinite(dl.total))
                throw TrainingDiverged("non-finite cGAN loss at epoch " + std::to_string(epoch));
            acc_gan += gl.gan * nb;
            acc_l1 += gl.l1 * nb;
            acc_disc += (dl.total + l1_pen) * nb;
            seen += nb;
        }
        const double mean_l1 = acc_l1 / static_cast<double>(seen);
        double val_l1 = mean_l1;
        if (tc.validate_each_epoch) val_l1 = detail::validate_l1(gen, val, tc.batch_size);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.history.push_back(json{{"epoch", epoch},
                                   {"gan_loss", acc_gan / static_cast<double>(seen)},
                                   {"l1_loss", mean_l1},
                                   {"disc_loss", acc_disc / static_cast<double>(seen)},
                                   {"val_l1", val_l1},
                                   {"seconds", secs}});
        if (out.best_epoch < 0 || val_l1 < out.best_val_l1) {
            out.best_val_l1 = val_l1;
            out.best_epoch = epoch;
            out.generator = snapshot(gen, json(gcfg),
                                     json{{"epoch", epoch},
                                          {"seed", tc.seed},
                                          {"target", field_name(kind)},
                                          {"val_l1", val_l1},
                                          {"lambda_gan", tc.lambda_gan},
                                          {"model", "cgan_generator"}});
        }
    }
    out.discriminator = snapshot(disc, json(dcfg),
                                 json{{"seed", tc.seed + 1},
                                      {"target", field_name(kind)},
                                      {"model", "cgan_discriminator"}});
    out.generator.meta["history"] = out.history;
    return out;
}

} // namespace artwall::nn
