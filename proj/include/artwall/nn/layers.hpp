#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "artwall/nn/tensor.hpp"

namespace artwall::nn {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatCM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

// Output size and padding that reproduce the "same" convention of the usual
// deep-learning frameworks: out = ceil(in / stride), extra padding goes to
// the bottom/right.
struct SamePad {
    int out, beg, end;
};
inline SamePad same_pad(int in, int k, int stride) {
    const int out = (in + stride - 1) / stride;
    const int total = std::max(0, (out - 1) * stride + k - in);
    return {out, total / 2, total - total / 2};
}

// 2D convolution ("same" padding) computed per sample by im2col + GEMM.
template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int k, int stride, Rng& rng)
        : in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride) {
        weight_.resize(out_ch, in_ch, k, k);
        bias_.resize(out_ch, 1, 1, 1);
        grad_w_.resize(out_ch, in_ch, k, k);
        grad_b_.resize(out_ch, 1, 1, 1);
        init_he_normal(weight_, in_ch * k * k, rng);
    }

    Tensor<T> apply(const Tensor<T>& x) const {
        Tensor<T> y = alloc_out(x);
        MatCM<T> col;
        for (int n = 0; n < x.n(); ++n) run_forward(x, y, n, col);
        return y;
    }

    Tensor<T> forward_train(const Tensor<T>& x) {
        cached_in_ = x;
        return apply(x);
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const Tensor<T>& x = cached_in_;
        Tensor<T> dx(x.n(), x.c(), x.h(), x.w());
        const auto [oh, pb_, pe_] = same_pad(x.h(), k_, stride_);
        const auto [ow, pl_, pr_] = same_pad(x.w(), k_, stride_);
        const int hw = oh * ow;
        const int ck2 = in_ch_ * k_ * k_;

        Eigen::Map<MatRM<T>> W(weight_.data.data(), out_ch_, ck2);
        Eigen::Map<MatRM<T>> dW(grad_w_.data.data(), out_ch_, ck2);
        MatCM<T> col(ck2, hw);
        for (int n = 0; n < x.n(); ++n) {
            im2col(x, n, col);
            Eigen::Map<const MatRM<T>> dY(dy.plane(n, 0), out_ch_, hw);
            dW.noalias() += dY * col.transpose();
            for (int o = 0; o < out_ch_; ++o) grad_b_.data[o] += dY.row(o).sum();
            MatCM<T> dcol = W.transpose() * dY;
            col2im(dcol, n, dx);
        }
        return dx;
    }

    void params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".weight", &weight_, &grad_w_, true});
        out.push_back({prefix + ".bias", &bias_, &grad_b_, true});
    }

    Tensor<T>& weight() { return weight_; }
    Tensor<T>& weight_grad() { return grad_w_; }
    size_t param_count() const { return weight_.size() + bias_.size(); }
    void release_cache() { cached_in_ = Tensor<T>(); }

private:
    Tensor<T> alloc_out(const Tensor<T>& x) const {
        const auto ph = same_pad(x.h(), k_, stride_);
        const auto pw = same_pad(x.w(), k_, stride_);
        return Tensor<T>(x.n(), out_ch_, ph.out, pw.out);
    }

    void run_forward(const Tensor<T>& x, Tensor<T>& y, int n, MatCM<T>& col) const {
        const int oh = y.h(), ow = y.w();
        const int hw = oh * ow;
        const int ck2 = in_ch_ * k_ * k_;
        col.resize(ck2, hw);
        im2col(x, n, col);
        Eigen::Map<const MatRM<T>> W(weight_.data.data(), out_ch_, ck2);
        Eigen::Map<MatRM<T>> Y(y.plane(n, 0), out_ch_, hw);
        Y.noalias() = W * col;
        for (int o = 0; o < out_ch_; ++o) Y.row(o).array() += bias_.data[o];
    }

    void im2col(const Tensor<T>& x, int n, MatCM<T>& col) const {
        const auto ph = same_pad(x.h(), k_, stride_);
        const auto pw = same_pad(x.w(), k_, stride_);
        const int oh = ph.out, ow = pw.out;
        const int H = x.h(), W = x.w();
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                T* dst = col.data() + static_cast<size_t>(oy * ow + ox) * (in_ch_ * k_ * k_);
                const int iy0 = oy * stride_ - ph.beg;
                const int ix0 = ox * stride_ - pw.beg;
                for (int c = 0; c < in_ch_; ++c) {
                    const T* src = x.plane(n, c);
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = iy0 + ky;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ix0 + kx;
                            *dst++ = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                                         ? src[static_cast<size_t>(iy) * W + ix]
                                         : T(0);
                        }
                    }
                }
            }
        }
    }

    void col2im(const MatCM<T>& dcol, int n, Tensor<T>& dx) const {
        const auto ph = same_pad(dx.h(), k_, stride_);
        const auto pw = same_pad(dx.w(), k_, stride_);
        const int oh = ph.out, ow = pw.out;
        const int H = dx.h(), W = dx.w();
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const T* src =
                    dcol.data() + static_cast<size_t>(oy * ow + ox) * (in_ch_ * k_ * k_);
                const int iy0 = oy * stride_ - ph.beg;
                const int ix0 = ox * stride_ - pw.beg;
                for (int c = 0; c < in_ch_; ++c) {
                    T* dst = dx.plane(n, c);
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = iy0 + ky;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ix0 + kx;
                            if (iy >= 0 && iy < H && ix >= 0 && ix < W)
                                dst[static_cast<size_t>(iy) * W + ix] += *src;
                            ++src;
                        }
                    }
                }
            }
        }
    }

    int in_ch_ = 0, out_ch_ = 0, k_ = 3, stride_ = 1;
    Tensor<T> weight_, bias_, grad_w_, grad_b_;
    Tensor<T> cached_in_;
};

// Transpose convolution with a 2x2 kernel and stride 2: exact x2 upsampling
// where every output pixel receives one kernel tap.
template <typename T>
class ConvTranspose2x2 {
public:
    ConvTranspose2x2() = default;
    ConvTranspose2x2(int in_ch, int out_ch, Rng& rng) : in_ch_(in_ch), out_ch_(out_ch) {
        weight_.resize(in_ch, out_ch, 2, 2);
        bias_.resize(out_ch, 1, 1, 1);
        grad_w_.resize(in_ch, out_ch, 2, 2);
        grad_b_.resize(out_ch, 1, 1, 1);
        init_he_normal(weight_, in_ch, rng);
    }

    Tensor<T> apply(const Tensor<T>& x) const {
        Tensor<T> y(x.n(), out_ch_, 2 * x.h(), 2 * x.w());
        const int H = x.h(), W = x.w();
        for (int n = 0; n < x.n(); ++n) {
            for (int o = 0; o < out_ch_; ++o) {
                T* yp = y.plane(n, o);
                const T b = bias_.data[o];
                for (size_t i = 0; i < static_cast<size_t>(4) * H * W; ++i) yp[i] = b;
            }
            for (int c = 0; c < in_ch_; ++c) {
                const T* xp = x.plane(n, c);
                for (int o = 0; o < out_ch_; ++o) {
                    const T* w = &weight_.data[(static_cast<size_t>(c) * out_ch_ + o) * 4];
                    T* yp = y.plane(n, o);
                    for (int iy = 0; iy < H; ++iy) {
                        const T* xrow = xp + static_cast<size_t>(iy) * W;
                        T* y0 = yp + static_cast<size_t>(2 * iy) * 2 * W;
                        T* y1 = y0 + 2 * W;
                        for (int ix = 0; ix < W; ++ix) {
                            const T v = xrow[ix];
                            y0[2 * ix] += w[0] * v;
                            y0[2 * ix + 1] += w[1] * v;
                            y1[2 * ix] += w[2] * v;
                            y1[2 * ix + 1] += w[3] * v;
                        }
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> forward_train(const Tensor<T>& x) {
        cached_in_ = x;
        return apply(x);
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const Tensor<T>& x = cached_in_;
        Tensor<T> dx(x.n(), in_ch_, x.h(), x.w());
        const int H = x.h(), W = x.w();
        for (int n = 0; n < x.n(); ++n) {
            for (int o = 0; o < out_ch_; ++o) {
                const T* dyp = dy.plane(n, o);
                double acc = 0;
                for (size_t i = 0; i < static_cast<size_t>(4) * H * W; ++i) acc += dyp[i];
                grad_b_.data[o] += static_cast<T>(acc);
            }
            for (int c = 0; c < in_ch_; ++c) {
                const T* xp = x.plane(n, c);
                T* dxp = dx.plane(n, c);
                for (int o = 0; o < out_ch_; ++o) {
                    const T* w = &weight_.data[(static_cast<size_t>(c) * out_ch_ + o) * 4];
                    T* gw = &grad_w_.data[(static_cast<size_t>(c) * out_ch_ + o) * 4];
                    const T* dyp = dy.plane(n, o);
                    for (int iy = 0; iy < H; ++iy) {
                        const T* xrow = xp + static_cast<size_t>(iy) * W;
                        T* dxrow = dxp + static_cast<size_t>(iy) * W;
                        const T* d0 = dyp + static_cast<size_t>(2 * iy) * 2 * W;
                        const T* d1 = d0 + 2 * W;
                        for (int ix = 0; ix < W; ++ix) {
                            const T g0 = d0[2 * ix], g1 = d0[2 * ix + 1];
                            const T g2 = d1[2 * ix], g3 = d1[2 * ix + 1];
                            dxrow[ix] += w[0] * g0 + w[1] * g1 + w[2] * g2 + w[3] * g3;
                            const T v = xrow[ix];
                            gw[0] += v * g0;
                            gw[1] += v * g1;
                            gw[2] += v * g2;
                            gw[3] += v * g3;
                        }
                    }
                }
            }
        }
        return dx;
    }

    void params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".weight", &weight_, &grad_w_, true});
        out.push_back({prefix + ".bias", &bias_, &grad_b_, true});
    }
    size_t param_count() const { return weight_.size() + bias_.size(); }
    void release_cache() { cached_in_ = Tensor<T>(); }

private:
    int in_ch_ = 0, out_ch_ = 0;
    Tensor<T> weight_, bias_, grad_w_, grad_b_;
    Tensor<T> cached_in_;
};

// 2x2 max pooling, stride 2.
template <typename T>
class MaxPool2x2 {
public:
    Tensor<T> apply(const Tensor<T>& x, Tensor<std::uint8_t>* argmax = nullptr) const {
        const int oh = x.h() / 2, ow = x.w() / 2;
        Tensor<T> y(x.n(), x.c(), oh, ow);
        if (argmax) argmax->resize(x.n(), x.c(), oh, ow);
        for (int n = 0; n < x.n(); ++n)
            for (int c = 0; c < x.c(); ++c) {
                const T* xp = x.plane(n, c);
                T* yp = y.plane(n, c);
                std::uint8_t* ap = argmax ? argmax->plane(n, c) : nullptr;
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        const int iy = 2 * oy, ix = 2 * ox;
                        const T v00 = xp[static_cast<size_t>(iy) * x.w() + ix];
                        const T v01 = xp[static_cast<size_t>(iy) * x.w() + ix + 1];
                        const T v10 = xp[static_cast<size_t>(iy + 1) * x.w() + ix];
                        const T v11 = xp[static_cast<size_t>(iy + 1) * x.w() + ix + 1];
                        int best = 0;
                        T bv = v00;
                        if (v01 > bv) { bv = v01; best = 1; }
                        if (v10 > bv) { bv = v10; best = 2; }
                        if (v11 > bv) { bv = v11; best = 3; }
                        yp[static_cast<size_t>(oy) * ow + ox] = bv;
                        if (ap) ap[static_cast<size_t>(oy) * ow + ox] = static_cast<std::uint8_t>(best);
                    }
            }
        return y;
    }

    Tensor<T> forward_train(const Tensor<T>& x) {
        in_h_ = x.h();
        in_w_ = x.w();
        return apply(x, &argmax_);
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.n(), dy.c(), in_h_, in_w_);
        const int oh = dy.h(), ow = dy.w();
        for (int n = 0; n < dy.n(); ++n)
            for (int c = 0; c < dy.c(); ++c) {
                const T* dyp = dy.plane(n, c);
                const std::uint8_t* ap = argmax_.plane(n, c);
                T* dxp = dx.plane(n, c);
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        const int k = ap[static_cast<size_t>(oy) * ow + ox];
                        const int iy = 2 * oy + (k >> 1), ix = 2 * ox + (k & 1);
                        dxp[static_cast<size_t>(iy) * in_w_ + ix] +=
                            dyp[static_cast<size_t>(oy) * ow + ox];
                    }
            }
        return dx;
    }

private:
    Tensor<std::uint8_t> argmax_;
    int in_h_ = 0, in_w_ = 0;
};

// Per-channel batch normalization over (N, H, W).
template <typename T>
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels) : ch_(channels) {
        gamma_.resize(channels, 1, 1, 1);
        beta_.resize(channels, 1, 1, 1);
        grad_gamma_.resize(channels, 1, 1, 1);
        grad_beta_.resize(channels, 1, 1, 1);
        running_mean_.resize(channels, 1, 1, 1);
        running_var_.resize(channels, 1, 1, 1);
        for (int c = 0; c < channels; ++c) {
            gamma_.data[c] = T(1);
            running_var_.data[c] = T(1);
        }
    }

    Tensor<T> apply(const Tensor<T>& x) const {  // inference: running stats
        Tensor<T> y = x;
        for (int c = 0; c < ch_; ++c) {
            const T m = running_mean_.data[c];
            const T inv = T(1) / std::sqrt(running_var_.data[c] + T(kEps));
            const T g = gamma_.data[c], b = beta_.data[c];
            for (int n = 0; n < x.n(); ++n) {
                T* yp = y.plane(n, c);
                const T* xp = x.plane(n, c);
                const size_t hw = static_cast<size_t>(x.h()) * x.w();
                for (size_t i = 0; i < hw; ++i) yp[i] = g * (xp[i] - m) * inv + b;
            }
        }
        return y;
    }

    Tensor<T> forward_train(const Tensor<T>& x) {
        const size_t hw = static_cast<size_t>(x.h()) * x.w();
        const size_t m = static_cast<size_t>(x.n()) * hw;
        xhat_.resize(x.n(), x.c(), x.h(), x.w());
        invstd_.assign(ch_, T(0));
        Tensor<T> y(x.n(), x.c(), x.h(), x.w());
        for (int c = 0; c < ch_; ++c) {
            double sum = 0, sq = 0;
            for (int n = 0; n < x.n(); ++n) {
                const T* xp = x.plane(n, c);
                for (size_t i = 0; i < hw; ++i) {
                    sum += xp[i];
                    sq += static_cast<double>(xp[i]) * xp[i];
                }
            }
            const double mean = sum / static_cast<double>(m);
            const double var = std::max(0.0, sq / static_cast<double>(m) - mean * mean);
            const T inv = static_cast<T>(1.0 / std::sqrt(var + kEps));
            invstd_[c] = inv;
            running_mean_.data[c] =
                static_cast<T>((1 - kMomentum) * running_mean_.data[c] + kMomentum * mean);
            running_var_.data[c] =
                static_cast<T>((1 - kMomentum) * running_var_.data[c] + kMomentum * var);
            const T g = gamma_.data[c], b = beta_.data[c];
            for (int n = 0; n < x.n(); ++n) {
                const T* xp = x.plane(n, c);
                T* hp = xhat_.plane(n, c);
                T* yp = y.plane(n, c);
                for (size_t i = 0; i < hw; ++i) {
                    hp[i] = static_cast<T>((xp[i] - mean) * inv);
                    yp[i] = g * hp[i] + b;
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const size_t hw = static_cast<size_t>(dy.h()) * dy.w();
        const double m = static_cast<double>(dy.n()) * hw;
        Tensor<T> dx(dy.n(), dy.c(), dy.h(), dy.w());
        for (int c = 0; c < ch_; ++c) {
            double sum_dy = 0, sum_dy_xhat = 0;
            for (int n = 0; n < dy.n(); ++n) {
                const T* dyp = dy.plane(n, c);
                const T* hp = xhat_.plane(n, c);
                for (size_t i = 0; i < hw; ++i) {
                    sum_dy += dyp[i];
                    sum_dy_xhat += static_cast<double>(dyp[i]) * hp[i];
                }
            }
            grad_gamma_.data[c] += static_cast<T>(sum_dy_xhat);
            grad_beta_.data[c] += static_cast<T>(sum_dy);
            const double g_inv_m = gamma_.data[c] * invstd_[c] / m;
            for (int n = 0; n < dy.n(); ++n) {
                const T* dyp = dy.plane(n, c);
                const T* hp = xhat_.plane(n, c);
                T* dxp = dx.plane(n, c);
                for (size_t i = 0; i < hw; ++i)
                    dxp[i] = static_cast<T>(g_inv_m * (m * dyp[i] - sum_dy - hp[i] * sum_dy_xhat));
            }
        }
        return dx;
    }

    void params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".gamma", &gamma_, &grad_gamma_, true});
        out.push_back({prefix + ".beta", &beta_, &grad_beta_, true});
        out.push_back({prefix + ".running_mean", &running_mean_, nullptr, false});
        out.push_back({prefix + ".running_var", &running_var_, nullptr, false});
    }
    size_t param_count() const { return gamma_.size() + beta_.size(); }

    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.1;

private:
    int ch_ = 0;
    Tensor<T> gamma_, beta_, grad_gamma_, grad_beta_;
    Tensor<T> running_mean_, running_var_;
    Tensor<T> xhat_;
    std::vector<T> invstd_;
};

template <typename T>
class ReLU {
public:
    Tensor<T> apply(const Tensor<T>& x) const {
        Tensor<T> y = x;
        for (auto& v : y.data) v = v > T(0) ? v : T(0);
        return y;
    }
    Tensor<T> forward_train(const Tensor<T>& x) {
        mask_.assign(x.size(), 0);
        Tensor<T> y = x;
        for (size_t i = 0; i < y.data.size(); ++i) {
            if (y.data[i] > T(0))
                mask_[i] = 1;
            else
                y.data[i] = T(0);
        }
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (size_t i = 0; i < dx.data.size(); ++i)
            if (!mask_[i]) dx.data[i] = T(0);
        return dx;
    }

private:
    std::vector<std::uint8_t> mask_;
};

template <typename T>
class LeakyReLU {
public:
    LeakyReLU() = default;
    explicit LeakyReLU(double slope) : slope_(static_cast<T>(slope)) {}
    Tensor<T> apply(const Tensor<T>& x) const {
        Tensor<T> y = x;
        for (auto& v : y.data) v = v > T(0) ? v : slope_ * v;
        return y;
    }
    Tensor<T> forward_train(const Tensor<T>& x) {
        mask_.assign(x.size(), 0);
        Tensor<T> y = x;
        for (size_t i = 0; i < y.data.size(); ++i) {
            if (y.data[i] > T(0))
                mask_[i] = 1;
            else
                y.data[i] = slope_ * y.data[i];
        }
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (size_t i = 0; i < dx.data.size(); ++i)
            if (!mask_[i]) dx.data[i] *= slope_;
        return dx;
    }

private:
    T slope_ = T(0.25);
    std::vector<std::uint8_t> mask_;
};

// Inverted dropout. Active in training and, when a generator is asked for
// stochastic output, during prediction with a caller-provided stream.
template <typename T>
class Dropout {
public:
    Dropout() = default;
    explicit Dropout(double rate) : rate_(rate) {}

    bool active() const { return rate_ > 0.0; }

    Tensor<T> apply_stochastic(const Tensor<T>& x, Rng& rng) const {
        Tensor<T> y = x;
        const T scale = static_cast<T>(1.0 / (1.0 - rate_));
        for (auto& v : y.data) v = (rng.uniform() < rate_) ? T(0) : v * scale;
        return y;
    }

    Tensor<T> forward_train(const Tensor<T>& x, Rng& rng) {
        if (!active()) return x;
        mask_.assign(x.size(), 0);
        Tensor<T> y = x;
        const T scale = static_cast<T>(1.0 / (1.0 - rate_));
        for (size_t i = 0; i < y.data.size(); ++i) {
            if (rng.uniform() < rate_)
                y.data[i] = T(0);
            else {
                y.data[i] *= scale;
                mask_[i] = 1;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        if (!active()) return dy;
        Tensor<T> dx = dy;
        const T scale = static_cast<T>(1.0 / (1.0 - rate_));
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] = mask_[i] ? dx.data[i] * scale : T(0);
        return dx;
    }

private:
    double rate_ = 0.0;
    std::vector<std::uint8_t> mask_;
};

// Channel concatenation (a first, then b) and its gradient split.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> y(a.n(), a.c() + b.c(), a.h(), a.w());
    const size_t hw = static_cast<size_t>(a.h()) * a.w();
    for (int n = 0; n < a.n(); ++n) {
        for (int c = 0; c < a.c(); ++c)
            std::copy_n(a.plane(n, c), hw, y.plane(n, c));
        for (int c = 0; c < b.c(); ++c)
            std::copy_n(b.plane(n, c), hw, y.plane(n, a.c() + c));
    }
    return y;
}

template <typename T>
void split_channels(const Tensor<T>& dy, Tensor<T>& da, Tensor<T>& db) {
    const size_t hw = static_cast<size_t>(dy.h()) * dy.w();
    for (int n = 0; n < dy.n(); ++n) {
        for (int c = 0; c < da.c(); ++c)
            std::copy_n(dy.plane(n, c), hw, da.plane(n, c));
        for (int c = 0; c < db.c(); ++c)
            std::copy_n(dy.plane(n, da.c() + c), hw, db.plane(n, c));
    }
}

} // namespace artwall::nn
