#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "artwall/mesher.hpp"

using namespace artwall;

namespace {

GeometrySpec concentric_spec() {
    GeometrySpec s;
    s.R = 2.0;
    s.r = 1.75;
    s.Lr = 0.75;
    s.Lx = 0.0;
    s.Ly = 0.0;
    return s;
}

double element_area(const Mesh& m, size_t e) {
    std::vector<Vec2> pts;
    for (auto v : m.elements[e]) pts.push_back(m.nodes[v]);
    return polygon_signed_area(pts);
}

} // namespace

TEST_CASE("element count matches the centroid classification oracle") {
    const GeometrySpec s = concentric_spec();
    const int n = 64;
    const Mesh m = build_grid_mesh(s, n);
    const double h = 2.0 * s.R / n;
    size_t expect = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = -s.R + (i + 0.5) * h;
            const double y = -s.R + (j + 0.5) * h;
            const double rr = std::hypot(x, y);
            if (rr >= s.Lr && rr <= s.R) ++expect;
        }
    REQUIRE(m.elements.size() == expect);
}

TEST_CASE("all elements are uniform squares with positive orientation") {
    const Mesh m = build_grid_mesh(sample_geometry(2, GeometryRanges{}), 32);
    const double cell = m.cell_size() * m.cell_size();
    for (size_t e = 0; e < m.elements.size(); ++e) {
        REQUIRE(element_area(m, e) == Catch::Approx(cell).epsilon(1e-12));
        REQUIRE(element_area(m, e) > 0);  // counterclockwise
    }
    for (TissueLabel t : m.element_labels) {
        REQUIRE(t != TissueLabel::Lumen);
        REQUIRE(t != TissueLabel::Exterior);
    }
}

TEST_CASE("mesh resolution below 16 is rejected") {
    REQUIRE_THROWS(build_grid_mesh(concentric_spec(), 8));
}

TEST_CASE("lumen boundary forms one closed loop on the default spec") {
    const GeometrySpec s = sample_geometry(0, GeometryRanges{});
    const Mesh m = build_grid_mesh(s, 16);
    const auto loops = extract_lumen_boundary(m);
    REQUIRE(loops.size() == 1);
    size_t edge_total = 0;
    for (const auto& l : loops) edge_total += l.size();
    REQUIRE(edge_total == m.lumen_boundary_edges.size());
}

TEST_CASE("lumen loop length matches the staircase perimeter estimate") {
    const GeometrySpec s = concentric_spec();
    const int n = 64;
    const Mesh m = build_grid_mesh(s, n);
    const auto loops = extract_lumen_boundary(m);
    REQUIRE(loops.size() == 1);
    const double est = 8.0 * std::ceil(s.Lr * n / (2.0 * s.R));
    REQUIRE(std::abs(static_cast<double>(loops[0].size()) - est) <= 8.0);
}

TEST_CASE("every lumen edge belongs to exactly one solid element") {
    const Mesh m = build_grid_mesh(sample_geometry(4, GeometryRanges{}), 48);
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> owners;
    for (const auto& el : m.elements)
        for (int sside = 0; sside < 4; ++sside) {
            auto a = el[sside], b = el[(sside + 1) % 4];
            owners[{std::min(a, b), std::max(a, b)}]++;
        }
    for (const auto& ed : m.lumen_boundary_edges) {
        const auto key = std::make_pair(std::min(ed[0], ed[1]), std::max(ed[0], ed[1]));
        REQUIRE(owners.at(key) == 1);
    }
}

TEST_CASE("outer boundary nodes sit near the outer radius") {
    const GeometrySpec s = concentric_spec();
    const Mesh m = build_grid_mesh(s, 64);
    const double diag = m.cell_size() * std::sqrt(2.0);
    for (auto v : extract_outer_boundary(m)) {
        const double rr = std::hypot(m.nodes[v].x, m.nodes[v].y);
        REQUIRE(rr > s.R - diag);
        REQUIRE(rr < s.R + diag);
    }
}

TEST_CASE("mirrored specs give mirrored meshes") {
    const GeometrySpec s = sample_geometry(8, GeometryRanges{});
    const Mesh a = build_grid_mesh(s, 32);
    const Mesh b = build_grid_mesh(mirror_x(s), 32);
    REQUIRE(a.elements.size() == b.elements.size());

    auto coord_set = [](const Mesh& m, bool flip) {
        std::set<std::pair<long, long>> out;
        for (const auto& el : m.elements) {
            double cx = 0, cy = 0;
            for (auto v : el) {
                cx += m.nodes[v].x;
                cy += m.nodes[v].y;
            }
            cx *= (flip ? -0.25 : 0.25);
            cy *= 0.25;
            out.insert({std::lround(cx * 1e6), std::lround(cy * 1e6)});
        }
        return out;
    };
    REQUIRE(coord_set(a, true) == coord_set(b, false));

    auto fixed_set = [](const Mesh& m, bool flip) {
        std::set<std::pair<long, long>> out;
        for (auto v : m.outer_fixed_nodes)
            out.insert({std::lround((flip ? -m.nodes[v].x : m.nodes[v].x) * 1e6),
                        std::lround(m.nodes[v].y * 1e6)});
        return out;
    };
    REQUIRE(fixed_set(a, true) == fixed_set(b, false));

    auto lumen_edge_set = [](const Mesh& m, bool flip) {
        std::set<std::array<long, 4>> out;
        for (const auto& ed : m.lumen_boundary_edges) {
            const Vec2 pa = m.nodes[ed[0]], pb = m.nodes[ed[1]];
            const double s0 = flip ? -1.0 : 1.0;
            std::array<long, 4> key{std::lround(s0 * pa.x * 1e6), std::lround(pa.y * 1e6),
                                    std::lround(s0 * pb.x * 1e6), std::lround(pb.y * 1e6)};
            // mirroring reverses edge orientation; normalize endpoint order
            if (std::tie(key[0], key[1]) > std::tie(key[2], key[3]))
                key = {key[2], key[3], key[0], key[1]};
            out.insert(key);
        }
        return out;
    };
    REQUIRE(lumen_edge_set(a, true) == lumen_edge_set(b, false));
}

TEST_CASE("labeled area converges to the analytic region area") {
    const GeometrySpec s = concentric_spec();
    const double exact = kPi * (s.R * s.R - s.Lr * s.Lr);
    double prev_err = -1.0;
    for (int n : {64, 128, 256}) {
        const Mesh m = build_grid_mesh(s, n);
        const double area = static_cast<double>(m.elements.size()) * m.cell_size() * m.cell_size();
        const double err = std::abs(area - exact);
        if (prev_err >= 0) REQUIRE(err <= 0.5 * prev_err + 1e-12);
        prev_err = err;
    }
}

TEST_CASE("mesh construction is deterministic") {
    const GeometrySpec s = sample_geometry(10, GeometryRanges{});
    const Mesh a = build_grid_mesh(s, 32);
    const Mesh b = build_grid_mesh(s, 32);
    REQUIRE(a.nodes.size() == b.nodes.size());
    REQUIRE(a.elements == b.elements);
    REQUIRE(a.element_labels == b.element_labels);
    REQUIRE(a.lumen_boundary_edges == b.lumen_boundary_edges);
    REQUIRE(a.outer_fixed_nodes == b.outer_fixed_nodes);
}

TEST_CASE("mesh serialization round-trips") {
    const Mesh a = build_grid_mesh(sample_geometry(12, GeometryRanges{}), 24);
    const auto path = std::filesystem::temp_directory_path() / "artwall_mesh_test.bin";
    save_mesh(path, a);
    const Mesh b = load_mesh(path);
    REQUIRE(a.elements == b.elements);
    REQUIRE(a.element_labels == b.element_labels);
    REQUIRE(a.lumen_boundary_edges == b.lumen_boundary_edges);
    REQUIRE(a.outer_fixed_nodes == b.outer_fixed_nodes);
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (size_t i = 0; i < a.nodes.size(); ++i) {
        REQUIRE(a.nodes[i].x == b.nodes[i].x);
        REQUIRE(a.nodes[i].y == b.nodes[i].y);
    }
    std::filesystem::remove(path);
}

TEST_CASE("a lumen smaller than a cell leaves no lumen boundary") {
    GeometrySpec s = concentric_spec();
    s.Lr = 0.1;  // no centroid falls inside; callers must treat this as an error
    const Mesh m = build_grid_mesh(s, 16);
    REQUIRE(m.lumen_boundary_edges.empty());
    REQUIRE(extract_lumen_boundary(m).empty());
    for (const auto& ed : outer_boundary_edges(m)) {
        const double rr = std::hypot(m.nodes[ed[0]].x, m.nodes[ed[0]].y);
        REQUIRE(rr > s.R - 2 * m.cell_size());
    }
}
