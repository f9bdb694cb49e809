#pragma once

#include <string>
#include <vector>

#include "artwall/nn/train.hpp"

namespace artwall {

// Two averaging strategies:
//   same-arch-dropouts: one architecture trained at dropout 0.2 and 0.35
//     (2 members);
//   two-arch-dropouts: base architecture and its extra_stem_32 variant, each
//     trained at dropout 0.2, 0.3 and 0.35 (6 members).
enum class EnsembleStrategy { SameArchDropouts, TwoArchDropouts };

inline const char* strategy_name(EnsembleStrategy s) {
    return s == EnsembleStrategy::SameArchDropouts ? "same-arch-dropouts" : "two-arch-dropouts";
}

inline EnsembleStrategy strategy_from_name(const std::string& s) {
    if (s == "same-arch-dropouts") return EnsembleStrategy::SameArchDropouts;
    if (s == "two-arch-dropouts") return EnsembleStrategy::TwoArchDropouts;
    throw std::invalid_argument("unknown ensemble strategy: " + s);
}

inline int expected_member_count(EnsembleStrategy s) {
    return s == EnsembleStrategy::SameArchDropouts ? 2 : 6;
}

inline std::vector<nn::UNetConfig> build_ensemble_variants(EnsembleStrategy strategy,
                                                           const nn::UNetConfig& base) {
    std::vector<nn::UNetConfig> out;
    if (strategy == EnsembleStrategy::SameArchDropouts) {
        for (double rate : {0.2, 0.35}) {
            nn::UNetConfig c = base;
            c.dropout_rate = rate;
            out.push_back(c);
        }
    } else {
        for (bool wide : {false, true}) {
            for (double rate : {0.2, 0.3, 0.35}) {
                nn::UNetConfig c = base;
                c.extra_stem_32 = wide;
                c.dropout_rate = rate;
                out.push_back(c);
            }
        }
    }
    return out;
}

// Pixelwise arithmetic mean of the member predictions, clipped to [0,1].
template <typename T>
nn::Tensor<T> ensemble_predict(const std::vector<const nn::UNet<T>*>& members,
                               const nn::Tensor<T>& labels) {
    if (members.empty()) throw std::invalid_argument("ensemble needs at least one member");
    nn::Tensor<double> acc;
    for (size_t i = 0; i < members.size(); ++i) {
        const nn::Tensor<T> p = nn::predict(*members[i], labels);
        if (i == 0) {
            acc.shape = p.shape;
            acc.data.assign(p.data.size(), 0.0);
        }
        for (size_t k = 0; k < p.data.size(); ++k) acc.data[k] += p.data[k];
    }
    nn::Tensor<T> out;
    out.shape = acc.shape;
    out.data.resize(acc.data.size());
    const double inv = 1.0 / static_cast<double>(members.size());
    for (size_t k = 0; k < acc.data.size(); ++k)
        out.data[k] = static_cast<T>(std::clamp(acc.data[k] * inv, 0.0, 1.0));
    return out;
}

// Serialized ensemble: strategy plus member checkpoint paths.
struct EnsembleSpec {
    EnsembleStrategy strategy = EnsembleStrategy::SameArchDropouts;
    std::vector<std::string> checkpoint_paths;

    bool valid() const {
        return static_cast<int>(checkpoint_paths.size()) == expected_member_count(strategy);
    }
};

inline void to_json(json& j, const EnsembleSpec& e) {
    j = json{{"strategy", strategy_name(e.strategy)}, {"checkpoints", e.checkpoint_paths}};
}
inline void from_json(const json& j, EnsembleSpec& e) {
    e.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    j.at("checkpoints").get_to(e.checkpoint_paths);
}

} // namespace artwall
