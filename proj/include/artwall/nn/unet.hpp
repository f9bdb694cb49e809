#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "artwall/nn/layers.hpp"

namespace artwall::nn {

using json = nlohmann::json;

// Encoder: `depth` repeating blocks of [2x2 max-pool (absent in the first
// block), two 3x3 conv + batch norm + ReLU, dropout]. Decoder: depth-1
// blocks of [2x2 transpose-conv upsample, skip concatenation, two
// conv-norm-ReLU], a final two-conv block without a transpose, then a 1x1
// convolution down to `out_channels`. Channel widths double from
// base_channels and saturate at channel_cap. extra_stem_32 inserts a
// 32-channel conv block at the very beginning and end (the wider ensemble
// variant).
struct UNetConfig {
    int depth = 6;
    int base_channels = 64;
    int channel_cap = 512;
    double dropout_rate = 0.0;
    bool batch_norm = true;
    bool extra_stem_32 = false;
    int in_channels = 3;
    int out_channels = 1;

    int width(int level) const {
        long w = static_cast<long>(base_channels) << level;
        return static_cast<int>(std::min<long>(w, channel_cap));
    }

    bool valid() const {
        return depth >= 2 && base_channels >= 1 && channel_cap >= base_channels &&
               dropout_rate >= 0.0 && dropout_rate < 1.0 && in_channels >= 1 && out_channels == 1;
    }

    // Architecture-defining fields only (dropout is a training-time mask and
    // does not change tensor shapes, so checkpoints remain transferable
    // across rates).
    json arch_json() const {
        return json{{"type", "unet"},
                    {"depth", depth},
                    {"base_channels", base_channels},
                    {"channel_cap", channel_cap},
                    {"batch_norm", batch_norm},
                    {"extra_stem_32", extra_stem_32},
                    {"in_channels", in_channels},
                    {"out_channels", out_channels}};
    }
};

inline void to_json(json& j, const UNetConfig& c) {
    j = c.arch_json();
    j["dropout_rate"] = c.dropout_rate;
}
inline void from_json(const json& j, UNetConfig& c) {
    j.at("depth").get_to(c.depth);
    j.at("base_channels").get_to(c.base_channels);
    j.at("channel_cap").get_to(c.channel_cap);
    j.at("batch_norm").get_to(c.batch_norm);
    j.at("extra_stem_32").get_to(c.extra_stem_32);
    j.at("in_channels").get_to(c.in_channels);
    j.at("out_channels").get_to(c.out_channels);
    c.dropout_rate = j.value("dropout_rate", 0.0);
}

template <typename T>
class UNet {
public:
    // conv + optional norm + ReLU, twice, with optional trailing dropout
    struct DoubleConv {
        Conv2d<T> c1, c2;
        BatchNorm2d<T> b1, b2;
        ReLU<T> r1, r2;
        Dropout<T> drop;
        bool use_bn = true;

        Tensor<T> apply(const Tensor<T>& x, Rng* stochastic = nullptr) const {
            Tensor<T> t = c1.apply(x);
            if (use_bn) t = b1.apply(t);
            t = r1.apply(std::move(t));
            t = c2.apply(t);
            if (use_bn) t = b2.apply(t);
            t = r2.apply(std::move(t));
            if (stochastic && drop.active()) t = drop.apply_stochastic(t, *stochastic);
            return t;
        }
        Tensor<T> forward_train(const Tensor<T>& x, Rng& rng) {
            Tensor<T> t = c1.forward_train(x);
            if (use_bn) t = b1.forward_train(t);
            t = r1.forward_train(t);
            t = c2.forward_train(t);
            if (use_bn) t = b2.forward_train(t);
            t = r2.forward_train(t);
            return drop.forward_train(t, rng);
        }
        Tensor<T> backward(const Tensor<T>& dy) {
            Tensor<T> d = drop.backward(dy);
            d = r2.backward(d);
            if (use_bn) d = b2.backward(d);
            d = c2.backward(d);
            d = r1.backward(d);
            if (use_bn) d = b1.backward(d);
            return c1.backward(d);
        }
        void params(std::vector<ParamRef<T>>& out, const std::string& p) {
            c1.params(out, p + ".conv1");
            if (use_bn) b1.params(out, p + ".norm1");
            c2.params(out, p + ".conv2");
            if (use_bn) b2.params(out, p + ".norm2");
        }
    };

    struct Stem {  // single conv + norm + ReLU
        Conv2d<T> conv;
        BatchNorm2d<T> bn;
        ReLU<T> relu;
        bool use_bn = true;

        Tensor<T> apply(const Tensor<T>& x) const {
            Tensor<T> t = conv.apply(x);
            if (use_bn) t = bn.apply(t);
            return relu.apply(std::move(t));
        }
        Tensor<T> forward_train(const Tensor<T>& x) {
            Tensor<T> t = conv.forward_train(x);
            if (use_bn) t = bn.forward_train(t);
            return relu.forward_train(t);
        }
        Tensor<T> backward(const Tensor<T>& dy) {
            Tensor<T> d = relu.backward(dy);
            if (use_bn) d = bn.backward(d);
            return conv.backward(d);
        }
        void params(std::vector<ParamRef<T>>& out, const std::string& p) {
            conv.params(out, p + ".conv");
            if (use_bn) bn.params(out, p + ".norm");
        }
    };

    UNet(const UNetConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(mix_seed(seed, 0x756e6574)) {
        if (!cfg.valid()) throw std::invalid_argument("invalid U-Net config");
        const int d = cfg.depth;
        int cin = cfg.in_channels;
        if (cfg.extra_stem_32) {
            stem_in_ = Stem{Conv2d<T>(cin, 32, 3, 1, rng_), BatchNorm2d<T>(32), {}, cfg.batch_norm};
            cin = 32;
        }
        enc_.resize(d);
        pool_.resize(d);
        for (int l = 0; l < d; ++l) {
            const int w = cfg.width(l);
            const int in = (l == 0) ? cin : cfg.width(l - 1);
            enc_[l] = DoubleConv{Conv2d<T>(in, w, 3, 1, rng_),
                                 Conv2d<T>(w, w, 3, 1, rng_),
                                 BatchNorm2d<T>(w),
                                 BatchNorm2d<T>(w),
                                 {},
                                 {},
                                 Dropout<T>(cfg.dropout_rate),
                                 cfg.batch_norm};
        }
        up_.resize(d - 1);
        dec_.resize(d - 1);
        for (int l = d - 2; l >= 0; --l) {
            const int w = cfg.width(l);
            up_[l] = ConvTranspose2x2<T>(cfg.width(l + 1), w, rng_);
            // dropout in the two deepest decoder blocks
            const double rate = (l >= d - 3) ? cfg.dropout_rate : 0.0;
            dec_[l] = DoubleConv{Conv2d<T>(2 * w, w, 3, 1, rng_),
                                 Conv2d<T>(w, w, 3, 1, rng_),
                                 BatchNorm2d<T>(w),
                                 BatchNorm2d<T>(w),
                                 {},
                                 {},
                                 Dropout<T>(rate),
                                 cfg.batch_norm};
        }
        const int w0 = cfg.width(0);
        refine_ = DoubleConv{Conv2d<T>(w0, w0, 3, 1, rng_),
                             Conv2d<T>(w0, w0, 3, 1, rng_),
                             BatchNorm2d<T>(w0),
                             BatchNorm2d<T>(w0),
                             {},
                             {},
                             Dropout<T>(0.0),
                             cfg.batch_norm};
        int head_in = w0;
        if (cfg.extra_stem_32) {
            stem_out_ = Stem{Conv2d<T>(w0, 32, 3, 1, rng_), BatchNorm2d<T>(32), {}, cfg.batch_norm};
            head_in = 32;
        }
        head_ = Conv2d<T>(head_in, cfg.out_channels, 1, 1, rng_);
    }

    const UNetConfig& config() const { return cfg_; }

    void check_input(const Tensor<T>& x) const {
        const int div = 1 << cfg_.depth;
        if (x.c() != cfg_.in_channels)
            throw std::invalid_argument("U-Net input channel mismatch");
        if (x.h() % div != 0 || x.w() % div != 0)
            throw std::invalid_argument("U-Net input spatial size must be divisible by 2^depth");
    }

    // Deterministic inference; pass an Rng to keep dropout live (the
    // conditional-generator noise convention).
    Tensor<T> infer(const Tensor<T>& x, Rng* stochastic = nullptr) const {
        check_input(x);
        Tensor<T> t = x;
        if (cfg_.extra_stem_32) t = stem_in_->apply(t);
        std::vector<Tensor<T>> skips(cfg_.depth - 1);
        MaxPool2x2<T> pool;
        for (int l = 0; l < cfg_.depth; ++l) {
            if (l > 0) t = pool.apply(t);
            t = enc_[l].apply(t, stochastic);
            if (l < cfg_.depth - 1) skips[l] = t;
        }
        for (int l = cfg_.depth - 2; l >= 0; --l) {
            Tensor<T> u = up_[l].apply(t);
            t = dec_[l].apply(concat_channels(skips[l], u), stochastic);
        }
        t = refine_.apply(t);
        if (cfg_.extra_stem_32) t = stem_out_->apply(t);
        return head_.apply(t);
    }

    Tensor<T> forward_train(const Tensor<T>& x) {
        check_input(x);
        Tensor<T> t = x;
        if (cfg_.extra_stem_32) t = stem_in_->forward_train(t);
        skips_.assign(cfg_.depth - 1, Tensor<T>());
        for (int l = 0; l < cfg_.depth; ++l) {
            if (l > 0) t = pool_[l].forward_train(t);
            t = enc_[l].forward_train(t, rng_);
            if (l < cfg_.depth - 1) skips_[l] = t;
        }
        for (int l = cfg_.depth - 2; l >= 0; --l) {
            Tensor<T> u = up_[l].forward_train(t);
            t = dec_[l].forward_train(concat_channels(skips_[l], u), rng_);
        }
        t = refine_.forward_train(t, rng_);
        if (cfg_.extra_stem_32) t = stem_out_->forward_train(t);
        return head_.forward_train(t);
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> d = head_.backward(dy);
        if (cfg_.extra_stem_32) d = stem_out_->backward(d);
        d = refine_.backward(d);

        std::vector<Tensor<T>> dskip(cfg_.depth - 1);
        for (int l = 0; l <= cfg_.depth - 2; ++l) {
            Tensor<T> dcat = dec_[l].backward(d);
            const int w = cfg_.width(l);
            dskip[l] = Tensor<T>(dcat.n(), w, dcat.h(), dcat.w());
            Tensor<T> dup(dcat.n(), w, dcat.h(), dcat.w());
            split_channels(dcat, dskip[l], dup);
            d = up_[l].backward(dup);
        }

        for (int l = cfg_.depth - 1; l >= 0; --l) {
            if (l < cfg_.depth - 1)
                for (size_t i = 0; i < d.data.size(); ++i) d.data[i] += dskip[l].data[i];
            d = enc_[l].backward(d);
            if (l > 0) d = pool_[l].backward(d);
        }
        if (cfg_.extra_stem_32) d = stem_in_->backward(d);
        return d;
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        if (cfg_.extra_stem_32) stem_in_->params(out, "stem_in");
        for (int l = 0; l < cfg_.depth; ++l) enc_[l].params(out, "enc" + std::to_string(l));
        for (int l = 0; l < cfg_.depth - 1; ++l) {
            up_[l].params(out, "up" + std::to_string(l));
            dec_[l].params(out, "dec" + std::to_string(l));
        }
        refine_.params(out, "refine");
        if (cfg_.extra_stem_32) stem_out_->params(out, "stem_out");
        head_.params(out, "head");
        return out;
    }

    size_t param_count() {
        size_t n = 0;
        for (const auto& p : params())
            if (p.trainable) n += p.value->size();
        return n;
    }

    void zero_grads() {
        for (auto& p : params())
            if (p.grad) p.grad->zero();
    }

    Rng& rng() { return rng_; }

private:
    UNetConfig cfg_;
    Rng rng_;
    std::optional<Stem> stem_in_, stem_out_;
    std::vector<DoubleConv> enc_;
    std::vector<MaxPool2x2<T>> pool_;
    std::vector<ConvTranspose2x2<T>> up_;
    std::vector<DoubleConv> dec_;
    DoubleConv refine_;
    Conv2d<T> head_;
    std::vector<Tensor<T>> skips_;
};

} // namespace artwall::nn
