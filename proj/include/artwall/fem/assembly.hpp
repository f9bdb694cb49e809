#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "artwall/fem/material.hpp"
#include "artwall/mesher.hpp"

namespace artwall::fem {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Per-DOF constraint map. dof[2*node + comp] is the free-DOF index or -1.
struct DofMap {
    std::vector<std::int32_t> dof;
    int n_free = 0;

    static DofMap all_free(size_t node_count) {
        DofMap m;
        m.dof.resize(2 * node_count);
        for (size_t i = 0; i < m.dof.size(); ++i) m.dof[i] = static_cast<std::int32_t>(i);
        m.n_free = static_cast<int>(m.dof.size());
        return m;
    }

    static DofMap fix_nodes(size_t node_count, const std::vector<std::uint32_t>& fixed) {
        DofMap m;
        m.dof.assign(2 * node_count, 0);
        for (std::uint32_t v : fixed) {
            m.dof[2 * v] = -1;
            m.dof[2 * v + 1] = -1;
        }
        m.renumber();
        return m;
    }

    void fix(std::uint32_t node, int comp) { dof[2 * node + comp] = -1; }

    void renumber() {
        n_free = 0;
        for (auto& d : dof)
            if (d >= 0) d = n_free++;
    }

    Eigen::VectorXd reduce(const Eigen::VectorXd& full) const {
        Eigen::VectorXd out(n_free);
        for (size_t i = 0; i < dof.size(); ++i)
            if (dof[i] >= 0) out[dof[i]] = full[static_cast<Eigen::Index>(i)];
        return out;
    }

    void expand_into(const Eigen::VectorXd& free, Eigen::VectorXd& full) const {
        for (size_t i = 0; i < dof.size(); ++i)
            if (dof[i] >= 0) full[static_cast<Eigen::Index>(i)] = free[dof[i]];
    }
};

namespace quad {

// 2x2 Gauss points on the bilinear reference square, weight 1 each.
inline constexpr double kG = 0.57735026918962576451;  // 1/sqrt(3)
inline constexpr double kXi[4] = {-kG, kG, kG, -kG};
inline constexpr double kEta[4] = {-kG, -kG, kG, kG};

inline void shape_grad(double xi, double eta, double dN[4][2]) {
    dN[0][0] = -0.25 * (1 - eta); dN[0][1] = -0.25 * (1 - xi);
    dN[1][0] = 0.25 * (1 - eta);  dN[1][1] = -0.25 * (1 + xi);
    dN[2][0] = 0.25 * (1 + eta);  dN[2][1] = 0.25 * (1 + xi);
    dN[3][0] = -0.25 * (1 + eta); dN[3][1] = 0.25 * (1 - xi);
}

} // namespace quad

// Reference-configuration shape-function gradients and Jacobian determinant
// at one quadrature point of one element.
struct QuadPointGeom {
    double gradN[4][2];
    double detJ;
};

inline QuadPointGeom qp_geometry(const Mesh& mesh, size_t elem, int qp) {
    double dN[4][2];
    quad::shape_grad(quad::kXi[qp], quad::kEta[qp], dN);
    Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
    const auto& conn = mesh.elements[elem];
    for (int a = 0; a < 4; ++a) {
        const Vec2 X = mesh.nodes[conn[a]];
        J(0, 0) += X.x * dN[a][0];
        J(0, 1) += X.x * dN[a][1];
        J(1, 0) += X.y * dN[a][0];
        J(1, 1) += X.y * dN[a][1];
    }
    QuadPointGeom g;
    g.detJ = J.determinant();
    if (!(g.detJ > 0.0)) throw ElementInversion("reference element has non-positive Jacobian");
    const Eigen::Matrix2d Jinv = J.inverse();
    for (int a = 0; a < 4; ++a) {
        g.gradN[a][0] = Jinv(0, 0) * dN[a][0] + Jinv(1, 0) * dN[a][1];
        g.gradN[a][1] = Jinv(0, 1) * dN[a][0] + Jinv(1, 1) * dN[a][1];
    }
    return g;
}

inline Eigen::Matrix2d deformation_gradient(const Mesh& mesh, size_t elem, const QuadPointGeom& g,
                                            const Eigen::VectorXd& u_full) {
    Eigen::Matrix2d F = Eigen::Matrix2d::Identity();
    const auto& conn = mesh.elements[elem];
    for (int a = 0; a < 4; ++a) {
        const double ux = u_full[2 * conn[a]];
        const double uy = u_full[2 * conn[a] + 1];
        F(0, 0) += ux * g.gradN[a][0];
        F(0, 1) += ux * g.gradN[a][1];
        F(1, 0) += uy * g.gradN[a][0];
        F(1, 1) += uy * g.gradN[a][1];
    }
    return F;
}

inline double total_strain_energy(const Mesh& mesh, const MaterialSet& mats,
                                  const Eigen::VectorXd& u_full) {
    double W = 0.0;
    for (size_t e = 0; e < mesh.elements.size(); ++e) {
        const MaterialModel& mat = mats.for_label(mesh.element_labels[e]);
        for (int qp = 0; qp < 4; ++qp) {
            const QuadPointGeom g = qp_geometry(mesh, e, qp);
            const Eigen::Matrix2d F = deformation_gradient(mesh, e, g, u_full);
            const Eigen::Matrix2d C = F.transpose() * F;
            const auto ev = evaluate_plane_strain(mat, C(0, 0), C(1, 1), C(0, 1));
            W += ev.W * g.detJ;
        }
    }
    return W;
}

// Internal nodal forces (full-size vector, MPa*mm = N/mm per unit thickness).
inline Eigen::VectorXd assemble_internal_forces(const Mesh& mesh, const MaterialSet& mats,
                                                const Eigen::VectorXd& u_full) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(mesh.nodes.size()));
    for (size_t e = 0; e < mesh.elements.size(); ++e) {
        const MaterialModel& mat = mats.for_label(mesh.element_labels[e]);
        const auto& conn = mesh.elements[e];
        for (int qp = 0; qp < 4; ++qp) {
            const QuadPointGeom g = qp_geometry(mesh, e, qp);
            const Eigen::Matrix2d F = deformation_gradient(mesh, e, g, u_full);
            const Eigen::Matrix2d C = F.transpose() * F;
            const auto ev = evaluate_plane_strain(mat, C(0, 0), C(1, 1), C(0, 1));
            Eigen::Matrix2d S;
            S << ev.S11, ev.S12, ev.S12, ev.S22;
            const Eigen::Matrix2d P = F * S;  // first Piola-Kirchhoff
            for (int a = 0; a < 4; ++a) {
                f[2 * conn[a]] += (P(0, 0) * g.gradN[a][0] + P(0, 1) * g.gradN[a][1]) * g.detJ;
                f[2 * conn[a] + 1] += (P(1, 0) * g.gradN[a][0] + P(1, 1) * g.gradN[a][1]) * g.detJ;
            }
        }
    }
    return f;
}

// Follower pressure on the lumen boundary: each oriented edge (solid on the
// left) contributes p * perp(x_b - x_a) split equally between its nodes.
// For closed loops this is exactly the gradient of p * enclosed void area,
// so the load is conservative and its tangent is symmetric.
inline void add_pressure_forces(const std::vector<std::array<std::uint32_t, 2>>& edges,
                                double pressure_mpa, const std::vector<Vec2>& nodes,
                                const Eigen::VectorXd& u_full, Eigen::VectorXd& f_ext) {
    for (const auto& ed : edges) {
        const std::uint32_t a = ed[0], b = ed[1];
        const double ax = nodes[a].x + u_full[2 * a], ay = nodes[a].y + u_full[2 * a + 1];
        const double bx = nodes[b].x + u_full[2 * b], by = nodes[b].y + u_full[2 * b + 1];
        const double ex = bx - ax, ey = by - ay;
        const double fx = 0.5 * pressure_mpa * (-ey);
        const double fy = 0.5 * pressure_mpa * ex;
        f_ext[2 * a] += fx;
        f_ext[2 * a + 1] += fy;
        f_ext[2 * b] += fx;
        f_ext[2 * b + 1] += fy;
    }
}

inline Eigen::VectorXd apply_pressure_load(const Mesh& mesh, double pressure_mpa,
                                           const Eigen::VectorXd& u_full) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(mesh.nodes.size()));
    add_pressure_forces(mesh.lumen_boundary_edges, pressure_mpa, mesh.nodes, u_full, f);
    return f;
}

// Signed area enclosed by the deformed lumen boundary edges. Edges traverse
// the void clockwise (solid on the left), so the shoelace sum is negated.
inline double void_area(const Mesh& mesh, const Eigen::VectorXd& u_full) {
    double s = 0.0;
    for (const auto& ed : mesh.lumen_boundary_edges) {
        const std::uint32_t a = ed[0], b = ed[1];
        const double ax = mesh.nodes[a].x + u_full[2 * a], ay = mesh.nodes[a].y + u_full[2 * a + 1];
        const double bx = mesh.nodes[b].x + u_full[2 * b], by = mesh.nodes[b].y + u_full[2 * b + 1];
        s += ax * by - bx * ay;
    }
    return -0.5 * s;
}

// Residual R(u) = f_int(u) - f_ext(u) (full-size).
inline Eigen::VectorXd assemble_residual(const Mesh& mesh, const MaterialSet& mats,
                                         double pressure_mpa, const Eigen::VectorXd& u_full) {
    Eigen::VectorXd r = assemble_internal_forces(mesh, mats, u_full);
    r -= apply_pressure_load(mesh, pressure_mpa, u_full);
    return r;
}

// Consistent tangent dR/du on the free DOFs, including the follower-load
// stiffness (symmetric, since the closed-loop pressure load is
// conservative).
inline SparseMat tangent_stiffness(const Mesh& mesh, const MaterialSet& mats, double pressure_mpa,
                                   const Eigen::VectorXd& u_full, const DofMap& dofs) {
    std::vector<Triplet> trip;
    trip.reserve(mesh.elements.size() * 64 + mesh.lumen_boundary_edges.size() * 16);

    auto ridx = [](int I, int J) { return I == J ? I : 2; };

    for (size_t e = 0; e < mesh.elements.size(); ++e) {
        const MaterialModel& mat = mats.for_label(mesh.element_labels[e]);
        const auto& conn = mesh.elements[e];
        double Ke[8][8] = {};
        for (int qp = 0; qp < 4; ++qp) {
            const QuadPointGeom g = qp_geometry(mesh, e, qp);
            const Eigen::Matrix2d F = deformation_gradient(mesh, e, g, u_full);
            const Eigen::Matrix2d C = F.transpose() * F;
            const auto ev = evaluate_plane_strain(mat, C(0, 0), C(1, 1), C(0, 1));
            const double S[2][2] = {{ev.S11, ev.S12}, {ev.S12, ev.S22}};

            // A_iJkL = d P_iJ / d F_kL
            double A[2][2][2][2];
            for (int i = 0; i < 2; ++i)
                for (int J = 0; J < 2; ++J)
                    for (int k = 0; k < 2; ++k)
                        for (int L = 0; L < 2; ++L) {
                            double v = (i == k) ? S[J][L] : 0.0;
                            for (int I = 0; I < 2; ++I)
                                for (int M = 0; M < 2; ++M) {
                                    const double h =
                                        ev.H[ridx(I, J)][ridx(M, L)] * ((M != L) ? 0.5 : 1.0);
                                    v += 2.0 * F(i, I) * h * F(k, M);
                                }
                            A[i][J][k][L] = v;
                        }

            for (int a = 0; a < 4; ++a)
                for (int i = 0; i < 2; ++i)
                    for (int b = 0; b < 4; ++b)
                        for (int k = 0; k < 2; ++k) {
                            double v = 0.0;
                            for (int J = 0; J < 2; ++J)
                                for (int L = 0; L < 2; ++L)
                                    v += g.gradN[a][J] * A[i][J][k][L] * g.gradN[b][L];
                            Ke[2 * a + i][2 * b + k] += v * g.detJ;
                        }
        }
        for (int a = 0; a < 4; ++a)
            for (int i = 0; i < 2; ++i) {
                const int ra = dofs.dof[2 * conn[a] + i];
                if (ra < 0) continue;
                for (int b = 0; b < 4; ++b)
                    for (int k = 0; k < 2; ++k) {
                        const int rb = dofs.dof[2 * conn[b] + k];
                        if (rb < 0) continue;
                        trip.emplace_back(ra, rb, Ke[2 * a + i][2 * b + k]);
                    }
            }
    }

    // Load stiffness: each edge applies f = h * Rot * (x_b - x_a) at both of
    // its nodes, h = p/2, Rot = [[0,-1],[1,0]]. K subtracts d f_ext/du, so
    // every row node gets +h*Rot in the x_a column block and -h*Rot in the
    // x_b column block.
    if (pressure_mpa != 0.0) {
        const double h = 0.5 * pressure_mpa;
        for (const auto& ed : mesh.lumen_boundary_edges) {
            const std::uint32_t nd[2] = {ed[0], ed[1]};
            for (int rn = 0; rn < 2; ++rn) {
                const int r0 = dofs.dof[2 * nd[rn]];
                const int r1 = dofs.dof[2 * nd[rn] + 1];
                for (int cn = 0; cn < 2; ++cn) {
                    const double s = (cn == 0) ? h : -h;
                    const int c0 = dofs.dof[2 * nd[cn]];
                    const int c1 = dofs.dof[2 * nd[cn] + 1];
                    if (r0 >= 0 && c1 >= 0) trip.emplace_back(r0, c1, -s);  // s * Rot(0,1)
                    if (r1 >= 0 && c0 >= 0) trip.emplace_back(r1, c0, s);   // s * Rot(1,0)
                }
            }
        }
    }

    SparseMat K(dofs.n_free, dofs.n_free);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

} // namespace artwall::fem
