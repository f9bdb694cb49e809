#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "artwall/io_util.hpp"
#include "artwall/nn/tensor.hpp"

namespace artwall::nn {

// Checkpoint container: named float32 tensors plus an architecture
// fingerprint and free-form training metadata. Payload is the concatenated
// little-endian float32 data in header order.
struct Checkpoint {
    std::string fingerprint;
    json config;
    json meta;
    std::vector<std::pair<std::string, Tensor<float>>> tensors;

    const Tensor<float>* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }
};

inline std::string arch_fingerprint(const json& arch) { return json_hash(arch); }

class FingerprintMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Snapshot every named tensor (weights and persistent buffers) as float32.
template <typename Model>
Checkpoint snapshot(Model& model, const json& config, const json& meta) {
    Checkpoint ck;
    ck.config = config;
    ck.fingerprint = arch_fingerprint(model.config().arch_json());
    ck.meta = meta;
    for (auto& p : model.params())
        ck.tensors.emplace_back(p.name, p.value->template cast<float>());
    return ck;
}

// Restore weights from a checkpoint; fingerprints must match and every model
// tensor must be present with identical shape. Weight bits are copied
// verbatim for float models.
template <typename Model>
void transfer_init(Model& model, const Checkpoint& ck) {
    const std::string fp = arch_fingerprint(model.config().arch_json());
    if (fp != ck.fingerprint)
        throw FingerprintMismatch("architecture fingerprint mismatch: model " + fp +
                                  " vs checkpoint " + ck.fingerprint);
    for (auto& p : model.params()) {
        const Tensor<float>* src = ck.find(p.name);
        if (!src) throw FingerprintMismatch("checkpoint is missing tensor " + p.name);
        if (src->shape != p.value->shape)
            throw FingerprintMismatch("checkpoint tensor shape mismatch for " + p.name);
        for (size_t i = 0; i < src->data.size(); ++i) p.value->data[i] = src->data[i];
    }
}

inline constexpr char kCheckpointMagic[8] = {'A', 'W', 'C', 'K', 'P', 'T', '0', '1'};

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    json tensors = json::array();
    ByteWriter w;
    for (const auto& [name, t] : ck.tensors) {
        tensors.push_back(json{{"name", name}, {"shape", t.shape}});
        w.pod_array(t.data.data(), t.data.size());
    }
    json header{{"fingerprint", ck.fingerprint},
                {"config", ck.config},
                {"meta", ck.meta},
                {"tensors", tensors}};
    write_container(path, kCheckpointMagic, header, w.bytes());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Container c = read_container(path, kCheckpointMagic);
    Checkpoint ck;
    ck.fingerprint = c.header.at("fingerprint").get<std::string>();
    ck.config = c.header.at("config");
    ck.meta = c.header.at("meta");
    ByteReader r(c.payload);
    for (const auto& tj : c.header.at("tensors")) {
        Tensor<float> t;
        const auto shape = tj.at("shape").get<std::array<int, 4>>();
        t.resize(shape[0], shape[1], shape[2], shape[3]);
        r.pod_array(t.data.data(), t.data.size());
        ck.tensors.emplace_back(tj.at("name").get<std::string>(), std::move(t));
    }
    return ck;
}

} // namespace artwall::nn
