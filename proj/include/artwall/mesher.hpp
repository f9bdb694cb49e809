#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "artwall/geometry.hpp"
#include "artwall/io_util.hpp"

namespace artwall {

// Structured voxel-style quad mesh over [-R,R]^2. Cells whose centroid
// classifies as Lumen or Exterior are removed; the rest become bilinear
// quad elements labeled by tissue. Lumen boundary edges are oriented with
// the solid on the left, so the inward normal points into the lumen void.
struct Mesh {
    std::vector<Vec2> nodes;  // mm
    std::vector<std::array<std::uint32_t, 4>> elements;  // counterclockwise
    std::vector<TissueLabel> element_labels;
    std::vector<std::array<std::uint32_t, 2>> lumen_boundary_edges;
    std::vector<std::uint32_t> outer_fixed_nodes;
    int grid_resolution = 0;   // n: cells per side
    double half_extent = 2.0;  // R

    double cell_size() const { return 2.0 * half_extent / grid_resolution; }

    // n*n lookup: cell -> element index, or -1 where removed. Rebuilt on
    // load; not part of the serialized form.
    std::vector<std::int32_t> cell_to_element;

    void rebuild_cell_lookup() {
        const int n = grid_resolution;
        cell_to_element.assign(static_cast<size_t>(n) * n, -1);
        const double h = cell_size();
        for (size_t e = 0; e < elements.size(); ++e) {
            const Vec2 p = nodes[elements[e][0]];  // lower-left corner
            const int i = static_cast<int>(std::lround((p.x + half_extent) / h));
            const int j = static_cast<int>(std::lround((p.y + half_extent) / h));
            cell_to_element[static_cast<size_t>(j) * n + i] = static_cast<std::int32_t>(e);
        }
    }
};

class DisconnectedSolidError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Mesh build_grid_mesh(const GeometrySpec& spec, int n) {
    if (n < 16) throw std::invalid_argument("mesh resolution must be >= 16");
    const double R = spec.R;
    const double h = 2.0 * R / n;
    PointClassifier classify(spec);

    // Cell labels at centroids. Out-of-grid counts as Exterior.
    std::vector<TissueLabel> cell(static_cast<size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        const double y = -R + (j + 0.5) * h;
        for (int i = 0; i < n; ++i) {
            const double x = -R + (i + 0.5) * h;
            cell[static_cast<size_t>(j) * n + i] = classify(x, y);
        }
    }
    auto solid = [&](int i, int j) {
        if (i < 0 || j < 0 || i >= n || j >= n) return false;
        const TissueLabel t = cell[static_cast<size_t>(j) * n + i];
        return t == TissueLabel::Artery || t == TissueLabel::Fibrous || t == TissueLabel::Calcium;
    };
    auto label_at = [&](int i, int j) {
        if (i < 0 || j < 0 || i >= n || j >= n) return TissueLabel::Exterior;
        return cell[static_cast<size_t>(j) * n + i];
    };

    Mesh mesh;
    mesh.grid_resolution = n;
    mesh.half_extent = R;

    // Compress grid nodes used by solid cells.
    const int nn = n + 1;
    std::vector<std::int32_t> node_id(static_cast<size_t>(nn) * nn, -1);
    auto node = [&](int i, int j) -> std::uint32_t {
        std::int32_t& id = node_id[static_cast<size_t>(j) * nn + i];
        if (id < 0) {
            id = static_cast<std::int32_t>(mesh.nodes.size());
            mesh.nodes.push_back({-R + i * h, -R + j * h});
        }
        return static_cast<std::uint32_t>(id);
    };

    std::vector<char> fixed_flag;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (!solid(i, j)) continue;
            const std::uint32_t a = node(i, j);
            const std::uint32_t b = node(i + 1, j);
            const std::uint32_t c = node(i + 1, j + 1);
            const std::uint32_t d = node(i, j + 1);
            mesh.elements.push_back({a, b, c, d});
            mesh.element_labels.push_back(label_at(i, j));

            // Element boundary traversed counterclockwise keeps the solid on
            // the left of every emitted edge.
            struct Side { int di, dj; std::uint32_t s, t; };
            const Side sides[4] = {
                {0, -1, a, b},  // bottom
                {1, 0, b, c},   // right
                {0, 1, c, d},   // top
                {-1, 0, d, a},  // left
            };
            for (const Side& sd : sides) {
                const TissueLabel nb = label_at(i + sd.di, j + sd.dj);
                if (nb == TissueLabel::Lumen) {
                    mesh.lumen_boundary_edges.push_back({sd.s, sd.t});
                } else if (nb == TissueLabel::Exterior) {
                    fixed_flag.resize(std::max(fixed_flag.size(), static_cast<size_t>(std::max(sd.s, sd.t)) + 1), 0);
                    fixed_flag[sd.s] = 1;
                    fixed_flag[sd.t] = 1;
                }
            }
        }
    }
    for (std::uint32_t v = 0; v < fixed_flag.size(); ++v)
        if (fixed_flag[v]) mesh.outer_fixed_nodes.push_back(v);

    if (mesh.elements.empty()) throw DisconnectedSolidError("no solid elements");

    // Connectivity: 4-neighbor flood fill from the solid cell nearest (R, 0).
    mesh.rebuild_cell_lookup();
    {
        int seed_i = -1, seed_j = n / 2;
        for (int i = n - 1; i >= 0; --i)
            if (solid(i, seed_j)) { seed_i = i; break; }
        if (seed_i < 0) throw DisconnectedSolidError("no solid cell on the +x ray");
        std::vector<char> seen(static_cast<size_t>(n) * n, 0);
        std::vector<std::pair<int, int>> stack{{seed_i, seed_j}};
        seen[static_cast<size_t>(seed_j) * n + seed_i] = 1;
        size_t count = 0;
        while (!stack.empty()) {
            auto [ci, cj] = stack.back();
            stack.pop_back();
            ++count;
            const int di[4] = {1, -1, 0, 0};
            const int dj[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const int ni = ci + di[k], nj = cj + dj[k];
                if (!solid(ni, nj)) continue;
                char& s = seen[static_cast<size_t>(nj) * n + ni];
                if (!s) {
                    s = 1;
                    stack.push_back({ni, nj});
                }
            }
        }
        if (count != mesh.elements.size())
            throw DisconnectedSolidError("solid region is not a single connected component");
    }
    return mesh;
}

// Group the mesh's lumen boundary edges into ordered closed loops (node
// paths; last edge returns to the first node). At pinch nodes with two
// outgoing edges the walk prefers the one not immediately reversing.
inline std::vector<std::vector<std::uint32_t>> extract_lumen_boundary(const Mesh& mesh) {
    std::multimap<std::uint32_t, size_t> by_start;
    for (size_t e = 0; e < mesh.lumen_boundary_edges.size(); ++e)
        by_start.insert({mesh.lumen_boundary_edges[e][0], e});
    std::vector<char> used(mesh.lumen_boundary_edges.size(), 0);

    std::vector<std::vector<std::uint32_t>> loops;
    for (size_t e0 = 0; e0 < mesh.lumen_boundary_edges.size(); ++e0) {
        if (used[e0]) continue;
        std::vector<std::uint32_t> loop;
        size_t e = e0;
        const std::uint32_t start = mesh.lumen_boundary_edges[e0][0];
        while (true) {
            used[e] = 1;
            const auto& edge = mesh.lumen_boundary_edges[e];
            loop.push_back(edge[0]);
            const std::uint32_t head = edge[1];
            if (head == start) break;
            auto [lo, hi] = by_start.equal_range(head);
            size_t next = SIZE_MAX;
            for (auto it = lo; it != hi; ++it) {
                if (used[it->second]) continue;
                if (mesh.lumen_boundary_edges[it->second][1] == edge[0] && std::distance(lo, hi) > 1)
                    continue;  // avoid doubling straight back at a pinch
                next = it->second;
                break;
            }
            if (next == SIZE_MAX) break;  // open chain; should not happen on voxel boundaries
            e = next;
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

// Nodes on edges shared between a solid element and removed Exterior space.
inline std::vector<std::uint32_t> extract_outer_boundary(const Mesh& mesh) {
    return mesh.outer_fixed_nodes;
}

// Edges owned by exactly one element that are not lumen boundary edges,
// oriented with the solid on the left (same convention as the lumen set).
inline std::vector<std::array<std::uint32_t, 2>> outer_boundary_edges(const Mesh& mesh) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> count;
    for (const auto& el : mesh.elements) {
        for (int s = 0; s < 4; ++s) {
            std::uint32_t a = el[s], b = el[(s + 1) % 4];
            count[{std::min(a, b), std::max(a, b)}]++;
        }
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> lumen;
    for (const auto& ed : mesh.lumen_boundary_edges)
        lumen.insert({std::min(ed[0], ed[1]), std::max(ed[0], ed[1])});
    std::vector<std::array<std::uint32_t, 2>> out;
    for (const auto& el : mesh.elements) {
        for (int s = 0; s < 4; ++s) {
            std::uint32_t a = el[s], b = el[(s + 1) % 4];
            const auto key = std::make_pair(std::min(a, b), std::max(a, b));
            if (count[key] == 1 && !lumen.count(key)) out.push_back({a, b});
        }
    }
    return out;
}

// ---- serialization ----
// Container payload, little-endian:
//   float64 x,y per node; per element 4x uint32 + uint8 label;
//   per lumen edge 2x uint32; per fixed node uint32.
inline constexpr char kMeshMagic[8] = {'A', 'W', 'M', 'E', 'S', 'H', '0', '1'};

inline void save_mesh(const std::filesystem::path& path, const Mesh& mesh) {
    json header{{"node_count", mesh.nodes.size()},
                {"element_count", mesh.elements.size()},
                {"lumen_edge_count", mesh.lumen_boundary_edges.size()},
                {"fixed_node_count", mesh.outer_fixed_nodes.size()},
                {"grid_resolution", mesh.grid_resolution},
                {"half_extent", mesh.half_extent}};
    ByteWriter w;
    for (const Vec2& p : mesh.nodes) {
        w.pod(p.x);
        w.pod(p.y);
    }
    for (size_t e = 0; e < mesh.elements.size(); ++e) {
        w.pod_array(mesh.elements[e].data(), 4);
        w.pod(static_cast<std::uint8_t>(mesh.element_labels[e]));
    }
    for (const auto& ed : mesh.lumen_boundary_edges) w.pod_array(ed.data(), 2);
    w.pod_array(mesh.outer_fixed_nodes.data(), mesh.outer_fixed_nodes.size());
    write_container(path, kMeshMagic, header, w.bytes());
}

inline Mesh load_mesh(const std::filesystem::path& path) {
    Container c = read_container(path, kMeshMagic);
    Mesh mesh;
    mesh.grid_resolution = c.header.at("grid_resolution").get<int>();
    mesh.half_extent = c.header.at("half_extent").get<double>();
    const auto nodes = c.header.at("node_count").get<size_t>();
    const auto elems = c.header.at("element_count").get<size_t>();
    const auto ledges = c.header.at("lumen_edge_count").get<size_t>();
    const auto fixed = c.header.at("fixed_node_count").get<size_t>();
    ByteReader r(c.payload);
    mesh.nodes.resize(nodes);
    for (auto& p : mesh.nodes) {
        p.x = r.pod<double>();
        p.y = r.pod<double>();
    }
    mesh.elements.resize(elems);
    mesh.element_labels.resize(elems);
    for (size_t e = 0; e < elems; ++e) {
        r.pod_array(mesh.elements[e].data(), 4);
        mesh.element_labels[e] = static_cast<TissueLabel>(r.pod<std::uint8_t>());
    }
    mesh.lumen_boundary_edges.resize(ledges);
    for (auto& ed : mesh.lumen_boundary_edges) r.pod_array(ed.data(), 2);
    mesh.outer_fixed_nodes.resize(fixed);
    r.pod_array(mesh.outer_fixed_nodes.data(), fixed);
    mesh.rebuild_cell_lookup();
    return mesh;
}

} // namespace artwall
