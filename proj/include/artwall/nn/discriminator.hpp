#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "artwall/nn/layers.hpp"

namespace artwall::nn {

using json = nlohmann::json;

// Patch discriminator: channel-concatenated (condition, field) input, five
// stride-2 convolutions with filter counts (64,128,256,512,1024) and leaky
// ReLU, then a 1-filter stride-1 convolution producing a grid of per-patch
// realness logits. All kernels are 4x4 ("same" padding), which is what puts
// the trainable weight count at ~11.2M.
struct DiscriminatorConfig {
    std::vector<int> filters{64, 128, 256, 512, 1024};
    int kernel = 4;
    int stride = 2;
    double leaky_slope = 0.25;
    double kernel_l1_reg = 1e-4;
    int cond_channels = 3;
    int field_channels = 1;

    json arch_json() const {
        return json{{"type", "patch_discriminator"}, {"filters", filters},
                    {"kernel", kernel},              {"stride", stride},
                    {"leaky_slope", leaky_slope},    {"cond_channels", cond_channels},
                    {"field_channels", field_channels}};
    }
};

inline void to_json(json& j, const DiscriminatorConfig& c) {
    j = c.arch_json();
    j["kernel_l1_reg"] = c.kernel_l1_reg;
}
inline void from_json(const json& j, DiscriminatorConfig& c) {
    j.at("filters").get_to(c.filters);
    j.at("kernel").get_to(c.kernel);
    j.at("stride").get_to(c.stride);
    j.at("leaky_slope").get_to(c.leaky_slope);
    j.at("cond_channels").get_to(c.cond_channels);
    j.at("field_channels").get_to(c.field_channels);
    c.kernel_l1_reg = j.value("kernel_l1_reg", 1e-4);
}

template <typename T>
class PatchDiscriminator {
public:
    PatchDiscriminator(const DiscriminatorConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), rng_(mix_seed(seed, 0x64697363)) {
        int cin = cfg.cond_channels + cfg.field_channels;
        for (int f : cfg.filters) {
            conv_.emplace_back(cin, f, cfg.kernel, cfg.stride, rng_);
            act_.emplace_back(cfg.leaky_slope);
            cin = f;
        }
        final_ = Conv2d<T>(cin, 1, cfg.kernel, 1, rng_);
    }

    const DiscriminatorConfig& config() const { return cfg_; }

    Tensor<T> infer(const Tensor<T>& cond, const Tensor<T>& field) const {
        Tensor<T> t = concat_channels(cond, field);
        for (size_t i = 0; i < conv_.size(); ++i) t = act_[i].apply(conv_[i].apply(t));
        return final_.apply(t);
    }

    Tensor<T> forward_train(const Tensor<T>& cond, const Tensor<T>& field) {
        Tensor<T> t = concat_channels(cond, field);
        for (size_t i = 0; i < conv_.size(); ++i)
            t = act_[i].forward_train(conv_[i].forward_train(t));
        return final_.forward_train(t);
    }

    // Backward through the whole stack; returns the gradient with respect to
    // the *field* input (the condition part is a constant label map).
    Tensor<T> backward_to_field(const Tensor<T>& dlogits, int n, int h, int w) {
        Tensor<T> d = final_.backward(dlogits);
        for (size_t i = conv_.size(); i-- > 0;) d = conv_[i].backward(act_[i].backward(d));
        Tensor<T> dcond(n, cfg_.cond_channels, h, w);
        Tensor<T> dfield(n, cfg_.field_channels, h, w);
        split_channels(d, dcond, dfield);
        return dfield;
    }

    // L1 kernel regularization: adds reg * sum |w| to the loss and the
    // matching subgradient to the kernel gradients (biases excluded).
    double apply_kernel_l1() {
        double penalty = 0.0;
        const T reg = static_cast<T>(cfg_.kernel_l1_reg);
        auto add = [&](Conv2d<T>& c) {
            Tensor<T>& w = c.weight();
            Tensor<T>& g = c.weight_grad();
            for (size_t i = 0; i < w.data.size(); ++i) {
                penalty += std::abs(static_cast<double>(w.data[i]));
                g.data[i] += w.data[i] > T(0) ? reg : (w.data[i] < T(0) ? -reg : T(0));
            }
        };
        for (auto& c : conv_) add(c);
        add(final_);
        return cfg_.kernel_l1_reg * penalty;
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        for (size_t i = 0; i < conv_.size(); ++i)
            conv_[i].params(out, "layer" + std::to_string(i));
        final_.params(out, "final");
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

private:
    DiscriminatorConfig cfg_;
    Rng rng_;
    std::vector<Conv2d<T>> conv_;
    std::vector<LeakyReLU<T>> act_;
    Conv2d<T> final_;
};

} // namespace artwall::nn
