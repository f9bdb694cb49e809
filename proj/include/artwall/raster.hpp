#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artwall/geometry.hpp"
#include "artwall/io/png.hpp"
#include "artwall/io_util.hpp"
#include "artwall/mesher.hpp"
#include "artwall/rng.hpp"

namespace artwall {

inline constexpr double kStressCapKpa = 300.0;
inline constexpr double kStrainCap = 0.45;

// One dataset unit: a 3-channel binary tissue map (calcium, lumen, fibrous;
// artery and exterior are all-zero pixels) paired with stress/strain rasters
// normalized to [0,1] by the fixed caps. Pixel (0,0) is the top-left corner
// of the physical square [-R,R]^2 (row index decreases y).
struct FieldSample {
    std::string sample_id;
    int size = 256;
    std::vector<std::uint8_t> labels;  // 3 * size * size, channel-major
    std::vector<float> stress;         // size * size
    std::vector<float> strain;         // size * size
    double stress_cap_kpa = kStressCapKpa;
    double strain_cap = kStrainCap;
    std::string augmentation = "none";  // none | h | v | hv
};

inline std::vector<std::uint8_t> render_label_map(const PointClassifier& classify, double R,
                                                  int size = 256) {
    std::vector<std::uint8_t> img(3u * size * size, 0);
    const double h = 2.0 * R / size;
    for (int row = 0; row < size; ++row) {
        const double y = R - (row + 0.5) * h;
        for (int col = 0; col < size; ++col) {
            const double x = -R + (col + 0.5) * h;
            const TissueLabel t = classify(x, y);
            const size_t px = static_cast<size_t>(row) * size + col;
            if (t == TissueLabel::Calcium)
                img[px] = 1;
            else if (t == TissueLabel::Lumen)
                img[static_cast<size_t>(size) * size + px] = 1;
            else if (t == TissueLabel::Fibrous)
                img[2u * size * size + px] = 1;
        }
    }
    return img;
}

inline std::vector<std::uint8_t> render_label_map(const GeometrySpec& spec, int size = 256) {
    return render_label_map(PointClassifier(spec), spec.R, size);
}

// Rasterize a per-element scalar field: pixel value = min(value/cap, 1) of
// the element containing the pixel center, 0 over removed regions.
inline std::vector<float> render_field_map(const Mesh& mesh, const std::vector<double>& values,
                                           double cap, int size = 256) {
    if (values.size() != mesh.elements.size())
        throw std::invalid_argument("render_field_map: one value per element required");
    std::vector<float> img(static_cast<size_t>(size) * size, 0.0f);
    const double R = mesh.half_extent;
    const int n = mesh.grid_resolution;
    const double cell = mesh.cell_size();
    const double h = 2.0 * R / size;
    for (int row = 0; row < size; ++row) {
        const double y = R - (row + 0.5) * h;
        const int cj = static_cast<int>((y + R) / cell);
        if (cj < 0 || cj >= n) continue;
        for (int col = 0; col < size; ++col) {
            const double x = -R + (col + 0.5) * h;
            const int ci = static_cast<int>((x + R) / cell);
            if (ci < 0 || ci >= n) continue;
            const std::int32_t e = mesh.cell_to_element[static_cast<size_t>(cj) * n + ci];
            if (e < 0) continue;
            img[static_cast<size_t>(row) * size + col] =
                static_cast<float>(std::min(values[e] / cap, 1.0));
        }
    }
    return img;
}

// ---- flips ----

template <typename T>
inline std::vector<T> flip_image(const std::vector<T>& img, int size, int channels, bool horiz,
                                 bool vert) {
    std::vector<T> out(img.size());
    for (int c = 0; c < channels; ++c) {
        const size_t base = static_cast<size_t>(c) * size * size;
        for (int row = 0; row < size; ++row) {
            const int sr = vert ? size - 1 - row : row;
            for (int col = 0; col < size; ++col) {
                const int sc = horiz ? size - 1 - col : col;
                out[base + static_cast<size_t>(row) * size + col] =
                    img[base + static_cast<size_t>(sr) * size + sc];
            }
        }
    }
    return out;
}

inline FieldSample flip_sample(const FieldSample& s, bool horiz, bool vert) {
    FieldSample out = s;
    out.labels = flip_image(s.labels, s.size, 3, horiz, vert);
    out.stress = flip_image(s.stress, s.size, 1, horiz, vert);
    out.strain = flip_image(s.strain, s.size, 1, horiz, vert);
    const char* tag = horiz ? (vert ? "hv" : "h") : (vert ? "v" : "none");
    out.augmentation = tag;
    if (horiz || vert) out.sample_id = s.sample_id + "-" + tag;
    return out;
}

// Physics-grounded 4-fold augmentation: identity, horizontal, vertical and
// combined flips applied consistently to the label and field maps.
inline std::vector<FieldSample> augment_flips(const FieldSample& s) {
    return {flip_sample(s, false, false), flip_sample(s, true, false), flip_sample(s, false, true),
            flip_sample(s, true, true)};
}

// ---- split ----

struct DatasetSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

// Split per base geometry BEFORE augmentation; augmented variants inherit
// the base split so no flipped near-duplicate of a test geometry leaks into
// train.
inline DatasetSplit split_dataset(std::vector<std::string> base_ids, double ratio,
                                  std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("split ratio must be in (0,1): both splits must be non-empty");
    Rng rng(mix_seed(seed, 0x73706c69));
    for (size_t i = base_ids.size(); i > 1; --i)
        std::swap(base_ids[i - 1],
                  base_ids[static_cast<size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    size_t n_train = static_cast<size_t>(std::llround(ratio * static_cast<double>(base_ids.size())));
    n_train = std::min(std::max<size_t>(n_train, 1), base_ids.size() - 1);
    DatasetSplit out;
    out.train_ids.assign(base_ids.begin(), base_ids.begin() + static_cast<long>(n_train));
    out.test_ids.assign(base_ids.begin() + static_cast<long>(n_train), base_ids.end());
    return out;
}

// ---- manifest + persistence ----
// Directory layout:
//   manifest.json
//   samples/<id>.<kind>.f32   raw little-endian float32, row-major
//   previews/<id>.<kind>.png  8-bit preview (not read back by training)

struct ManifestEntry {
    std::string sample_id;
    std::string base_id;
    std::uint64_t geometry_seed = 0;
    std::string split;         // train | test
    std::string augmentation;  // none | h | v | hv
};

struct DatasetManifest {
    int size = 256;
    double stress_cap_kpa = kStressCapKpa;
    double strain_cap = kStrainCap;
    std::string config_hash;
    std::vector<ManifestEntry> entries;
};

inline void to_json(json& j, const ManifestEntry& e) {
    j = json{{"sample_id", e.sample_id},
             {"base_id", e.base_id},
             {"geometry_seed", e.geometry_seed},
             {"split", e.split},
             {"augmentation", e.augmentation}};
}
inline void from_json(const json& j, ManifestEntry& e) {
    j.at("sample_id").get_to(e.sample_id);
    j.at("base_id").get_to(e.base_id);
    j.at("geometry_seed").get_to(e.geometry_seed);
    j.at("split").get_to(e.split);
    j.at("augmentation").get_to(e.augmentation);
}
inline void to_json(json& j, const DatasetManifest& m) {
    j = json{{"size", m.size},
             {"stress_cap_kpa", m.stress_cap_kpa},
             {"strain_cap", m.strain_cap},
             {"config_hash", m.config_hash},
             {"entries", m.entries}};
}
inline void from_json(const json& j, DatasetManifest& m) {
    j.at("size").get_to(m.size);
    j.at("stress_cap_kpa").get_to(m.stress_cap_kpa);
    j.at("strain_cap").get_to(m.strain_cap);
    j.at("config_hash").get_to(m.config_hash);
    j.at("entries").get_to(m.entries);
}

inline void write_f32(const std::filesystem::path& path, const float* data, size_t count) {
    write_file_bytes(path, data, count * sizeof(float));
}

inline std::vector<float> read_f32(const std::filesystem::path& path, size_t expect) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() != expect * sizeof(float))
        throw std::runtime_error("f32 blob size mismatch: " + path.string());
    std::vector<float> out(expect);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

inline void save_sample(const std::filesystem::path& dir, const FieldSample& s,
                        bool previews = true) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "samples");
    const size_t px = static_cast<size_t>(s.size) * s.size;
    std::vector<float> labels_f(3 * px);
    for (size_t i = 0; i < 3 * px; ++i) labels_f[i] = static_cast<float>(s.labels[i]);
    write_f32(dir / "samples" / (s.sample_id + ".labels.f32"), labels_f.data(), labels_f.size());
    write_f32(dir / "samples" / (s.sample_id + ".stress.f32"), s.stress.data(), s.stress.size());
    write_f32(dir / "samples" / (s.sample_id + ".strain.f32"), s.strain.data(), s.strain.size());
    if (previews) {
        fs::create_directories(dir / "previews");
        std::vector<std::uint8_t> rgb(3 * px);
        for (size_t i = 0; i < px; ++i) {
            rgb[3 * i] = s.labels[i] ? 255 : 0;
            rgb[3 * i + 1] = s.labels[px + i] ? 255 : 0;
            rgb[3 * i + 2] = s.labels[2 * px + i] ? 255 : 0;
        }
        write_png(dir / "previews" / (s.sample_id + ".labels.png"), rgb, s.size, s.size, 3);
        auto gray = [&](const std::vector<float>& f) {
            std::vector<std::uint8_t> g(px);
            for (size_t i = 0; i < px; ++i)
                g[i] = static_cast<std::uint8_t>(std::clamp(f[i], 0.0f, 1.0f) * 255.0f + 0.5f);
            return g;
        };
        write_png(dir / "previews" / (s.sample_id + ".stress.png"), gray(s.stress), s.size, s.size, 1);
        write_png(dir / "previews" / (s.sample_id + ".strain.png"), gray(s.strain), s.size, s.size, 1);
    }
}

inline void save_manifest(const std::filesystem::path& dir, const DatasetManifest& m) {
    write_json_file(dir / "manifest.json", json(m));
}

inline DatasetManifest load_manifest(const std::filesystem::path& dir) {
    return read_json_file(dir / "manifest.json").get<DatasetManifest>();
}

struct LoadedDataset {
    DatasetManifest manifest;
    std::vector<FieldSample> samples;  // order matches manifest entries
    std::vector<std::string> warnings;
};

inline FieldSample load_sample(const std::filesystem::path& dir, const DatasetManifest& m,
                               const ManifestEntry& e) {
    FieldSample s;
    s.sample_id = e.sample_id;
    s.size = m.size;
    s.stress_cap_kpa = m.stress_cap_kpa;
    s.strain_cap = m.strain_cap;
    s.augmentation = e.augmentation;
    const size_t px = static_cast<size_t>(m.size) * m.size;
    const auto base = dir / "samples";
    try {
        const auto labels_f = read_f32(base / (e.sample_id + ".labels.f32"), 3 * px);
        s.labels.resize(3 * px);
        for (size_t i = 0; i < 3 * px; ++i) s.labels[i] = labels_f[i] != 0.0f ? 1 : 0;
        s.stress = read_f32(base / (e.sample_id + ".stress.f32"), px);
        s.strain = read_f32(base / (e.sample_id + ".strain.f32"), px);
    } catch (const std::exception& ex) {
        throw std::runtime_error("sample '" + e.sample_id + "': " + ex.what());
    }
    return s;
}

inline LoadedDataset load_dataset(const std::filesystem::path& dir,
                                  const std::string& expected_config_hash = {}) {
    LoadedDataset out;
    out.manifest = load_manifest(dir);
    if (!expected_config_hash.empty() && out.manifest.config_hash != expected_config_hash)
        out.warnings.push_back("manifest config hash " + out.manifest.config_hash +
                               " does not match expected " + expected_config_hash);
    out.samples.reserve(out.manifest.entries.size());
    for (const auto& e : out.manifest.entries)
        out.samples.push_back(load_sample(dir, out.manifest, e));
    return out;
}

} // namespace artwall
