#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "artwall/rng.hpp"

namespace artwall::nn {

// Dense NCHW tensor. Lower-rank data uses trailing singleton dimensions.
template <typename T>
struct Tensor {
    std::array<int, 4> shape{0, 0, 0, 0};  // n, c, h, w
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n, int c, int h, int w) { resize(n, c, h, w); }

    void resize(int n, int c, int h, int w) {
        shape = {n, c, h, w};
        data.assign(static_cast<size_t>(n) * c * h * w, T(0));
    }

    size_t size() const { return data.size(); }
    int n() const { return shape[0]; }
    int c() const { return shape[1]; }
    int h() const { return shape[2]; }
    int w() const { return shape[3]; }

    T* plane(int in, int ic) {
        return data.data() + (static_cast<size_t>(in) * shape[1] + ic) * shape[2] * shape[3];
    }
    const T* plane(int in, int ic) const {
        return data.data() + (static_cast<size_t>(in) * shape[1] + ic) * shape[2] * shape[3];
    }

    T& at(int in, int ic, int iy, int ix) {
        return data[((static_cast<size_t>(in) * shape[1] + ic) * shape[2] + iy) * shape[3] + ix];
    }
    T at(int in, int ic, int iy, int ix) const {
        return data[((static_cast<size_t>(in) * shape[1] + ic) * shape[2] + iy) * shape[3] + ix];
    }

    void zero() { std::fill(data.begin(), data.end(), T(0)); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

// He-normal initialization for convolution kernels.
template <typename T>
void init_he_normal(Tensor<T>& w, int fan_in, Rng& rng) {
    const double std = std::sqrt(2.0 / fan_in);
    for (auto& v : w.data) v = static_cast<T>(std * rng.normal());
}

// Named view of a parameter (or persistent buffer) for optimizers and
// checkpoints.
template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value = nullptr;
    Tensor<T>* grad = nullptr;  // null for non-trainable buffers
    bool trainable = true;
};

} // namespace artwall::nn
