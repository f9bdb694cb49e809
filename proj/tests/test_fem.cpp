#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "artwall/fem/solve.hpp"
#include "artwall/rng.hpp"

using namespace artwall;
using namespace artwall::fem;

namespace {

// 3x3 grid of unit cells with the center removed as a square lumen: 8
// elements, 4 lumen edges, outer frame fixed.
Mesh make_ring_mesh() {
    Mesh ring;
    ring.grid_resolution = 3;
    ring.half_extent = 1.5;
    const int nn = 4;
    for (int j = 0; j < nn; ++j)
        for (int i = 0; i < nn; ++i) ring.nodes.push_back({-1.5 + i * 1.0, -1.5 + j * 1.0});
    auto id = [&](int i, int j) { return static_cast<std::uint32_t>(j * nn + i); };
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
            if (i == 1 && j == 1) continue;
            ring.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
            ring.element_labels.push_back(TissueLabel::Artery);
        }
    // lumen edges around the removed center cell, solid on the left
    ring.lumen_boundary_edges = {
        {id(2, 1), id(1, 1)},  // below void, top edge of lower-middle element
        {id(2, 2), id(2, 1)},  // right of void
        {id(1, 2), id(2, 2)},  // above void
        {id(1, 1), id(1, 2)},  // left of void
    };
    for (int j = 0; j < nn; ++j)
        for (int i = 0; i < nn; ++i)
            if (i == 0 || j == 0 || i == nn - 1 || j == nn - 1)
                ring.outer_fixed_nodes.push_back(id(i, j));
    ring.rebuild_cell_lookup();
    return ring;
}

GeometrySpec annulus_spec(double a) {
    GeometrySpec s;
    s.R = 2.0;
    s.r = 1.9;
    s.Lr = a;
    s.Lx = 0.0;
    s.Ly = 0.0;
    return s;
}

// Plane-strain thick-walled cylinder with internal pressure and free outer
// boundary: u_r = p a^2 (1+nu) / (E (b^2-a^2)) * ((1-2 nu) r + b^2 / r).
double lame_radial_displacement(double p, double a, double b, double E, double nu, double r) {
    return p * a * a * (1 + nu) / (E * (b * b - a * a)) * ((1 - 2 * nu) * r + b * b / r);
}

GeometrySpec rotate90(const GeometrySpec& s) {
    GeometrySpec r = s;
    r.Lx = -s.Ly;
    r.Ly = s.Lx;
    for (auto& c : r.calcifications) {
        c.angular_position_deg = std::fmod(c.angular_position_deg + 90.0, 360.0);
        c.outline = build_calcification_outline(c.inner_radius_mm, c.outer_radius_mm,
                                                c.angular_span_deg, c.angular_position_deg);
    }
    return r;
}

} // namespace

TEST_CASE("zero pressure and zero displacement give zero residual") {
    const Mesh m = make_ring_mesh();
    const MaterialSet mats;
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * m.nodes.size());
    REQUIRE(assemble_residual(m, mats, 0.0, u).norm() == 0.0);
}

TEST_CASE("residual vector sizing on free DOFs") {
    const Mesh m = make_ring_mesh();
    const DofMap dofs = DofMap::fix_nodes(m.nodes.size(), m.outer_fixed_nodes);
    const size_t free_nodes = m.nodes.size() - m.outer_fixed_nodes.size();
    REQUIRE(dofs.n_free == static_cast<int>(2 * free_nodes));
    const MaterialSet mats;
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * m.nodes.size());
    REQUIRE(dofs.reduce(assemble_residual(m, mats, 0.0, u)).size() ==
            static_cast<Eigen::Index>(2 * free_nodes));
}

TEST_CASE("internal forces are the gradient of the strain energy") {
    const Mesh m = make_ring_mesh();
    const MaterialSet mats;
    Rng rng(3);
    Eigen::VectorXd u(2 * m.nodes.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = 0.05 * (rng.uniform() - 0.5);

    const Eigen::VectorXd f = assemble_internal_forces(m, mats, u);
    const double h = 1e-7;
    double max_rel = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        Eigen::VectorXd up = u, um = u;
        up[i] += h;
        um[i] -= h;
        const double fd =
            (total_strain_energy(m, mats, up) - total_strain_energy(m, mats, um)) / (2 * h);
        max_rel = std::max(max_rel, std::abs(fd - f[i]) / (f.lpNorm<Eigen::Infinity>() + 1e-12));
    }
    REQUIRE(max_rel < 1e-5);
}

TEST_CASE("pressure load is the gradient of p times the void area") {
    const Mesh m = make_ring_mesh();
    const double p = 0.02;
    Rng rng(5);
    Eigen::VectorXd u(2 * m.nodes.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = 0.05 * (rng.uniform() - 0.5);

    const Eigen::VectorXd fext = apply_pressure_load(m, p, u);
    const double h = 1e-7;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        Eigen::VectorXd up = u, um = u;
        up[i] += h;
        um[i] -= h;
        const double fd = p * (void_area(m, up) - void_area(m, um)) / (2 * h);
        REQUIRE(std::abs(fd - fext[i]) < 1e-8);
    }
}

TEST_CASE("pressure load basics") {
    const Mesh m = make_ring_mesh();
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * m.nodes.size());
    REQUIRE(apply_pressure_load(m, 0.0, u).norm() == 0.0);

    // closed contour: forces sum to zero
    const Eigen::VectorXd f = apply_pressure_load(m, 1.0, u);
    double sx = 0, sy = 0;
    for (size_t v = 0; v < m.nodes.size(); ++v) {
        sx += f[2 * v];
        sy += f[2 * v + 1];
    }
    REQUIRE(std::abs(sx) < 1e-14);
    REQUIRE(std::abs(sy) < 1e-14);

    // unit square void at unit pressure: each face carries total force 1,
    // directed from the void into the solid
    auto node_at = [&](double x, double y) {
        for (size_t v = 0; v < m.nodes.size(); ++v)
            if (std::abs(m.nodes[v].x - x) < 1e-12 && std::abs(m.nodes[v].y - y) < 1e-12)
                return v;
        FAIL("node not found");
        return size_t{0};
    };
    // bottom face of the void: nodes (-0.5,-0.5) and (0.5,-0.5) receive the
    // halves of the downward unit force
    const double total_down = f[2 * node_at(-0.5, -0.5) + 1] + f[2 * node_at(0.5, -0.5) + 1];
    REQUIRE(total_down == Catch::Approx(-1.0).epsilon(1e-12));
    const double total_up = f[2 * node_at(-0.5, 0.5) + 1] + f[2 * node_at(0.5, 0.5) + 1];
    REQUIRE(total_up == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tangent matches finite differences of the residual") {
    const Mesh m = make_ring_mesh();
    const MaterialSet mats;
    const DofMap dofs = DofMap::fix_nodes(m.nodes.size(), m.outer_fixed_nodes);
    const double p = 0.015;
    Rng rng(9);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * m.nodes.size());
    for (size_t v = 0; v < m.nodes.size(); ++v)
        for (int c = 0; c < 2; ++c)
            if (dofs.dof[2 * v + c] >= 0) u[2 * v + c] = 0.04 * (rng.uniform() - 0.5);

    const SparseMat K = tangent_stiffness(m, mats, p, u, dofs);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(dofs.n_free);
        for (int i = 0; i < dofs.n_free; ++i) dir[i] = rng.uniform() - 0.5;
        dir.normalize();
        Eigen::VectorXd dfull = Eigen::VectorXd::Zero(u.size());
        dofs.expand_into(dir, dfull);
        const double h = 1e-7;
        const Eigen::VectorXd rp = dofs.reduce(assemble_residual(m, mats, p, u + h * dfull));
        const Eigen::VectorXd rm = dofs.reduce(assemble_residual(m, mats, p, u - h * dfull));
        const Eigen::VectorXd fd = (rp - rm) / (2 * h);
        const Eigen::VectorXd kv = K * dir;
        REQUIRE((fd - kv).norm() / (kv.norm() + 1e-12) < 1e-5);
    }
}

TEST_CASE("tangent at rest with zero pressure is symmetric positive definite") {
    const Mesh m = make_ring_mesh();
    const MaterialSet mats;
    const DofMap dofs = DofMap::fix_nodes(m.nodes.size(), m.outer_fixed_nodes);
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * m.nodes.size());
    const Eigen::MatrixXd K = Eigen::MatrixXd(tangent_stiffness(m, mats, 0.0, u, dofs));
    REQUIRE((K - K.transpose()).norm() < 1e-12 * K.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    REQUIRE(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("tangent couples only nodes sharing an element") {
    const Mesh m = make_ring_mesh();
    const MaterialSet mats;
    const DofMap dofs = DofMap::fix_nodes(m.nodes.size(), m.outer_fixed_nodes);
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * m.nodes.size());
    const Eigen::MatrixXd K = Eigen::MatrixXd(tangent_stiffness(m, mats, 0.01, u, dofs));

    std::set<std::pair<int, int>> share;
    for (const auto& el : m.elements)
        for (auto a : el)
            for (auto b : el) share.insert({static_cast<int>(a), static_cast<int>(b)});

    for (size_t va = 0; va < m.nodes.size(); ++va)
        for (size_t vb = 0; vb < m.nodes.size(); ++vb) {
            bool coupled = false;
            for (int ca = 0; ca < 2; ++ca)
                for (int cb = 0; cb < 2; ++cb) {
                    const int ia = dofs.dof[2 * va + ca], ib = dofs.dof[2 * vb + cb];
                    if (ia >= 0 && ib >= 0 && K(ia, ib) != 0.0) coupled = true;
                }
            if (coupled) REQUIRE(share.count({static_cast<int>(va), static_cast<int>(vb)}) == 1);
        }
}

TEST_CASE("zero pressure solve returns zero fields") {
    const Mesh m = build_grid_mesh(annulus_spec(0.75), 24);
    LoadCase load;
    load.lumen_pressure_kpa = 0.0;
    const SolutionField sol = solve_static(m, MaterialSet{}, load);
    REQUIRE(sol.converged);
    for (const Vec2& d : sol.displacement) {
        REQUIRE(d.x == 0.0);
        REQUIRE(d.y == 0.0);
    }
    for (double v : sol.von_mises_kpa) REQUIRE(std::abs(v) < 1e-12);
}

TEST_CASE("fixed nodes stay put and fields stay finite") {
    const GeometrySpec s = sample_geometry(1, GeometryRanges{});
    const Mesh m = build_grid_mesh(s, 32);
    const SolutionField sol = solve_static(m, MaterialSet{}, LoadCase{});
    REQUIRE(sol.converged);
    for (auto v : m.outer_fixed_nodes) {
        REQUIRE(sol.displacement[v].x == 0.0);
        REQUIRE(sol.displacement[v].y == 0.0);
    }
    for (size_t e = 0; e < sol.von_mises_kpa.size(); ++e) {
        REQUIRE(std::isfinite(sol.von_mises_kpa[e]));
        REQUIRE(sol.von_mises_kpa[e] >= 0.0);
        REQUIRE(std::isfinite(sol.eq_strain[e]));
        REQUIRE(sol.eq_strain[e] >= 0.0);
    }
    for (const auto& hist : sol.residual_history) REQUIRE(hist.back() < LoadCase{}.newton_tol);
}

TEST_CASE("linear elastic annulus reproduces the thick-wall solution") {
    const double a = 1.0, b = 2.0, E = 1.0, nu = 0.3;
    const double p_kpa = 18.665;
    const Mesh m = build_grid_mesh(annulus_spec(a), 64);
    const SolutionField sol = linear_elastic_solve(m, E, nu, p_kpa, m.lumen_boundary_edges,
                                                   OuterBC::FreeSymmetryPins);
    const double p = kpa_to_mpa(p_kpa);
    double max_err = 0.0, max_u = 0.0;
    for (size_t v = 0; v < m.nodes.size(); ++v) {
        const double r = std::hypot(m.nodes[v].x, m.nodes[v].y);
        if (r < a * 1.05) continue;  // skip staircase-adjacent nodes of the inner rim
        const double ur_exact = lame_radial_displacement(p, a, b, E, nu, r);
        const double ur = (sol.displacement[v].x * m.nodes[v].x + sol.displacement[v].y * m.nodes[v].y) / r;
        max_err = std::max(max_err, std::abs(ur - ur_exact));
        max_u = std::max(max_u, std::abs(ur_exact));
    }
    REQUIRE(max_err / max_u < 0.08);
}

TEST_CASE("linear solve scales linearly with pressure") {
    const Mesh m = build_grid_mesh(annulus_spec(1.0), 32);
    const SolutionField s1 =
        linear_elastic_solve(m, 1.0, 0.3, 10.0, m.lumen_boundary_edges, OuterBC::Fixed);
    const SolutionField s2 =
        linear_elastic_solve(m, 1.0, 0.3, 20.0, m.lumen_boundary_edges, OuterBC::Fixed);
    double max_rel = 0.0, scale = 0.0;
    for (size_t v = 0; v < m.nodes.size(); ++v) {
        scale = std::max(scale, std::abs(s2.displacement[v].x));
        max_rel = std::max(max_rel, std::abs(s2.displacement[v].x - 2 * s1.displacement[v].x));
        max_rel = std::max(max_rel, std::abs(s2.displacement[v].y - 2 * s1.displacement[v].y));
    }
    REQUIRE(max_rel < 1e-12 * std::max(scale, 1e-30) + 1e-18);
}

TEST_CASE("hydrostatic compression of a near-incompressible disk") {
    // Solid disk loaded by external pressure on its rim: uniform in-plane
    // compression, so von Mises stays near p(1-2nu).
    GeometrySpec s;
    s.R = 2.0;
    s.r = 1.99;
    s.Lr = 0.02;  // too small to remove any cell
    const Mesh m = build_grid_mesh(s, 64);
    REQUIRE(m.lumen_boundary_edges.empty());
    const double p_kpa = 10.0;
    const SolutionField sol = linear_elastic_solve(m, 1.0, 0.49, p_kpa, outer_boundary_edges(m),
                                                   OuterBC::FreeSymmetryPins);
    // interior elements only; the staircase rim is noisy
    double worst = 0.0;
    for (size_t e = 0; e < m.elements.size(); ++e) {
        double cx = 0, cy = 0;
        for (auto v : m.elements[e]) {
            cx += 0.25 * m.nodes[v].x;
            cy += 0.25 * m.nodes[v].y;
        }
        if (std::hypot(cx, cy) > 0.6 * s.R) continue;
        worst = std::max(worst, sol.von_mises_kpa[e]);
    }
    REQUIRE(worst < 0.1 * p_kpa);
}

TEST_CASE("mirrored geometry solves to the mirrored solution") {
    const GeometrySpec s = sample_geometry(6, GeometryRanges{});
    const GeometrySpec ms = mirror_x(s);
    const Mesh m1 = build_grid_mesh(s, 32);
    const Mesh m2 = build_grid_mesh(ms, 32);
    const SolutionField f1 = solve_static(m1, MaterialSet{}, LoadCase{});
    const SolutionField f2 = solve_static(m2, MaterialSet{}, LoadCase{});

    std::map<std::pair<long, long>, Vec2> disp2;
    for (size_t v = 0; v < m2.nodes.size(); ++v)
        disp2[{std::lround(m2.nodes[v].x * 1e6), std::lround(m2.nodes[v].y * 1e6)}] =
            f2.displacement[v];
    double max_u = 0.0, max_diff = 0.0;
    for (size_t v = 0; v < m1.nodes.size(); ++v) {
        const auto it =
            disp2.find({std::lround(-m1.nodes[v].x * 1e6), std::lround(m1.nodes[v].y * 1e6)});
        REQUIRE(it != disp2.end());
        max_u = std::max(max_u, norm(f1.displacement[v]));
        max_diff = std::max(max_diff, std::abs(it->second.x + f1.displacement[v].x));
        max_diff = std::max(max_diff, std::abs(it->second.y - f1.displacement[v].y));
    }
    REQUIRE(max_diff < 1e-5 * max_u);
}

TEST_CASE("rotating the problem by 90 degrees rotates the solution") {
    const GeometrySpec s = sample_geometry(13, GeometryRanges{});
    const GeometrySpec rs = rotate90(s);
    const Mesh m1 = build_grid_mesh(s, 32);
    const Mesh m2 = build_grid_mesh(rs, 32);
    const SolutionField f1 = solve_static(m1, MaterialSet{}, LoadCase{});
    const SolutionField f2 = solve_static(m2, MaterialSet{}, LoadCase{});

    std::map<std::pair<long, long>, Vec2> disp2;
    for (size_t v = 0; v < m2.nodes.size(); ++v)
        disp2[{std::lround(m2.nodes[v].x * 1e6), std::lround(m2.nodes[v].y * 1e6)}] =
            f2.displacement[v];
    double max_u = 0.0, max_diff = 0.0;
    for (size_t v = 0; v < m1.nodes.size(); ++v) {
        // (x,y) -> (-y,x); displacement rotates the same way
        const auto it =
            disp2.find({std::lround(-m1.nodes[v].y * 1e6), std::lround(m1.nodes[v].x * 1e6)});
        REQUIRE(it != disp2.end());
        max_u = std::max(max_u, norm(f1.displacement[v]));
        max_diff = std::max(max_diff, std::abs(it->second.x + f1.displacement[v].y));
        max_diff = std::max(max_diff, std::abs(it->second.y - f1.displacement[v].x));
    }
    REQUIRE(max_diff < 1e-5 * max_u);
}

TEST_CASE("solution serialization round-trips") {
    const Mesh m = build_grid_mesh(annulus_spec(0.75), 24);
    LoadCase load;
    load.lumen_pressure_kpa = 5.0;
    const SolutionField sol = solve_static(m, MaterialSet{}, load);
    const auto path = std::filesystem::temp_directory_path() / "artwall_sol_test.bin";
    save_solution(path, sol);
    const SolutionField back = load_solution(path);
    REQUIRE(back.displacement.size() == sol.displacement.size());
    REQUIRE(back.von_mises_kpa.size() == sol.von_mises_kpa.size());
    for (size_t e = 0; e < sol.von_mises_kpa.size(); ++e)
        REQUIRE(back.von_mises_kpa[e] == Catch::Approx(sol.von_mises_kpa[e]).epsilon(1e-6));
    REQUIRE(back.residual_history == sol.residual_history);
    std::filesystem::remove(path);
}
