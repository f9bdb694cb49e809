#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "artwall/fem/assembly.hpp"
#include "artwall/io_util.hpp"

namespace artwall::fem {

struct LoadCase {
    double lumen_pressure_kpa = mmhg_to_kpa(140.0);  // 18.665 kPa
    int load_steps = 10;
    double newton_tol = 1e-8;  // relative residual
    int max_newton_iters = 30;

    bool valid() const {
        return lumen_pressure_kpa >= 0 && load_steps >= 1 && newton_tol > 0 &&
               max_newton_iters >= 1;
    }
};

struct SolutionField {
    std::vector<Vec2> displacement;        // per node, mm
    std::vector<double> von_mises_kpa;     // per element
    std::vector<double> eq_strain;         // per element
    std::vector<std::vector<double>> residual_history;  // per load step, relative norms
    bool converged = false;
};

class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& msg, std::vector<std::vector<double>> history)
        : std::runtime_error(msg), residual_history(std::move(history)) {}
    std::vector<std::vector<double>> residual_history;
};

namespace detail {

class LinearSolver {
public:
    void analyze(const SparseMat& K) {
        ldlt_.analyzePattern(K);
        analyzed_ = true;
    }
    Eigen::VectorXd solve(const SparseMat& K, const Eigen::VectorXd& rhs) {
        if (!analyzed_) analyze(K);
        ldlt_.factorize(K);
        if (ldlt_.info() == Eigen::Success) {
            Eigen::VectorXd x = ldlt_.solve(rhs);
            if (ldlt_.info() == Eigen::Success) return x;
        }
        // Indefinite or otherwise LDLT-hostile systems fall back to LU.
        Eigen::SparseLU<SparseMat> lu;
        lu.compute(K);
        if (lu.info() != Eigen::Success) throw std::runtime_error("linear solve failed");
        return lu.solve(rhs);
    }

private:
    Eigen::SimplicialLDLT<SparseMat> ldlt_;
    bool analyzed_ = false;
};

// Mean of von Mises stress (kPa) and equivalent log strain over the
// quadrature points of every element.
inline void extract_fields(const Mesh& mesh, const MaterialSet& mats,
                           const Eigen::VectorXd& u_full, SolutionField& out) {
    out.von_mises_kpa.assign(mesh.elements.size(), 0.0);
    out.eq_strain.assign(mesh.elements.size(), 0.0);
    for (size_t e = 0; e < mesh.elements.size(); ++e) {
        const MaterialModel& mat = mats.for_label(mesh.element_labels[e]);
        double vm = 0.0, eq = 0.0;
        for (int qp = 0; qp < 4; ++qp) {
            const QuadPointGeom g = qp_geometry(mesh, e, qp);
            const Eigen::Matrix2d F = deformation_gradient(mesh, e, g, u_full);
            double s33 = 0.0;
            const Eigen::Matrix2d sig = cauchy_stress(mat, F, &s33);
            vm += von_mises_stress(sig(0, 0), sig(1, 1), s33, sig(0, 1));
            const Eigen::Vector3d ls = log_strain(F);
            eq += equivalent_strain(ls(0), ls(1), 0.0, ls(2));
        }
        out.von_mises_kpa[e] = mpa_to_kpa(vm / 4.0);
        out.eq_strain[e] = eq / 4.0;
    }
    out.displacement.resize(mesh.nodes.size());
    for (size_t v = 0; v < mesh.nodes.size(); ++v)
        out.displacement[v] = {u_full[2 * v], u_full[2 * v + 1]};
}

} // namespace detail

// Static solve by Newton-Raphson under uniform load stepping with a
// backtracking line search on the residual norm. A step that fails to
// converge is bisected (up to 4 levels) before giving up.
inline SolutionField solve_static(const Mesh& mesh, const MaterialSet& mats,
                                  const LoadCase& load) {
    if (!load.valid()) throw std::invalid_argument("invalid load case");
    const DofMap dofs = DofMap::fix_nodes(mesh.nodes.size(), mesh.outer_fixed_nodes);
    const double p_total = kpa_to_mpa(load.lumen_pressure_kpa);

    Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(mesh.nodes.size()));
    std::vector<std::vector<double>> history;
    detail::LinearSolver solver;

    auto residual_free = [&](const Eigen::VectorXd& u_full, double p) {
        return dofs.reduce(assemble_residual(mesh, mats, p, u_full));
    };

    // Returns true if Newton converged for pressure p starting from u.
    auto newton = [&](double p) -> bool {
        std::vector<double> hist;
        const Eigen::VectorXd fext = dofs.reduce(apply_pressure_load(mesh, p, u));
        const double scale = std::max(fext.norm(), 1e-12);
        Eigen::VectorXd r = residual_free(u, p);
        double rnorm = r.norm();
        hist.push_back(rnorm / scale);
        bool ok = false;
        for (int it = 0; it < load.max_newton_iters; ++it) {
            if (rnorm / scale < load.newton_tol) {
                ok = true;
                break;
            }
            const SparseMat K = tangent_stiffness(mesh, mats, p, u, dofs);
            const Eigen::VectorXd du = solver.solve(K, -r);

            // Backtracking: accept the first trial that reduces the residual
            // norm; element inversion in a trial just shortens the step.
            double alpha = 1.0;
            bool accepted = false;
            for (int ls = 0; ls <= 8; ++ls) {
                Eigen::VectorXd u_try = u;
                Eigen::VectorXd du_full =
                    Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(mesh.nodes.size()));
                Eigen::VectorXd du_scaled = alpha * du;
                dofs.expand_into(du_scaled, du_full);
                u_try += du_full;
                try {
                    Eigen::VectorXd r_try = residual_free(u_try, p);
                    const double rn = r_try.norm();
                    if (rn < rnorm || rn / scale < load.newton_tol) {
                        u = u_try;
                        r = r_try;
                        rnorm = rn;
                        accepted = true;
                        break;
                    }
                } catch (const ElementInversion&) {
                    // retry shorter
                }
                alpha *= 0.5;
            }
            hist.push_back(rnorm / scale);
            if (!accepted) break;
        }
        if (!ok && rnorm / scale < load.newton_tol) ok = true;
        history.push_back(std::move(hist));
        return ok;
    };

    // Bisect [p_lo, p_hi] until Newton succeeds at p_hi.
    std::function<bool(double, double, int)> advance = [&](double p_lo, double p_hi,
                                                           int depth) -> bool {
        const Eigen::VectorXd u_save = u;
        if (newton(p_hi)) return true;
        if (depth >= 4) return false;
        u = u_save;
        const double mid = 0.5 * (p_lo + p_hi);
        if (!advance(p_lo, mid, depth + 1)) return false;
        return advance(mid, p_hi, depth + 1);
    };

    for (int step = 1; step <= load.load_steps; ++step) {
        const double p_lo = p_total * (step - 1) / load.load_steps;
        const double p_hi = p_total * step / load.load_steps;
        if (!advance(p_lo, p_hi, 0))
            throw SolveError("Newton failed to converge at pressure step " + std::to_string(step),
                             history);
    }

    SolutionField sol;
    detail::extract_fields(mesh, mats, u, sol);
    sol.residual_history = std::move(history);
    sol.converged = true;
    return sol;
}

enum class OuterBC {
    Fixed,             // clamp nodes adjacent to the exterior
    FreeSymmetryPins,  // traction-free outside; rigid modes removed by pins
};

// Small-strain plane-strain solve with the same mesh/load machinery; used
// to validate the pipeline against closed-form solutions. Pressure acts on
// `edges` as a dead load in the reference configuration.
inline SolutionField linear_elastic_solve(const Mesh& mesh, double E_mpa, double nu,
                                          double pressure_kpa,
                                          const std::vector<std::array<std::uint32_t, 2>>& edges,
                                          OuterBC bc) {
    DofMap dofs;
    if (bc == OuterBC::Fixed) {
        dofs = DofMap::fix_nodes(mesh.nodes.size(), mesh.outer_fixed_nodes);
    } else {
        dofs = DofMap::all_free(mesh.nodes.size());
        const double tol = 1e-9 * mesh.half_extent;
        for (size_t v = 0; v < mesh.nodes.size(); ++v) {
            if (std::abs(mesh.nodes[v].y) < tol) dofs.fix(static_cast<std::uint32_t>(v), 1);
            if (std::abs(mesh.nodes[v].x) < tol) dofs.fix(static_cast<std::uint32_t>(v), 0);
        }
        dofs.renumber();
    }

    const double lam = E_mpa * nu / ((1 + nu) * (1 - 2 * nu));
    const double mu = E_mpa / (2 * (1 + nu));

    std::vector<Triplet> trip;
    trip.reserve(mesh.elements.size() * 64);
    for (size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto& conn = mesh.elements[e];
        double Ke[8][8] = {};
        for (int qp = 0; qp < 4; ++qp) {
            const QuadPointGeom g = qp_geometry(mesh, e, qp);
            // sigma_ij = lam delta_ij e_kk + 2 mu e_ij
            for (int a = 0; a < 4; ++a)
                for (int i = 0; i < 2; ++i)
                    for (int b = 0; b < 4; ++b)
                        for (int k = 0; k < 2; ++k) {
                            double v = lam * g.gradN[a][i] * g.gradN[b][k] +
                                       mu * g.gradN[a][k] * g.gradN[b][i];
                            if (i == k)
                                for (int j = 0; j < 2; ++j)
                                    v += mu * g.gradN[a][j] * g.gradN[b][j];
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
    SparseMat K(dofs.n_free, dofs.n_free);
    K.setFromTriplets(trip.begin(), trip.end());

    Eigen::VectorXd fext =
        Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(mesh.nodes.size()));
    add_pressure_forces(edges, kpa_to_mpa(pressure_kpa), mesh.nodes,
                        Eigen::VectorXd::Zero(fext.size()), fext);

    detail::LinearSolver solver;
    const Eigen::VectorXd u_free = solver.solve(K, dofs.reduce(fext));
    Eigen::VectorXd u = Eigen::VectorXd::Zero(fext.size());
    dofs.expand_into(u_free, u);

    SolutionField sol;
    sol.displacement.resize(mesh.nodes.size());
    for (size_t v = 0; v < mesh.nodes.size(); ++v)
        sol.displacement[v] = {u[2 * v], u[2 * v + 1]};
    sol.von_mises_kpa.assign(mesh.elements.size(), 0.0);
    sol.eq_strain.assign(mesh.elements.size(), 0.0);
    for (size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto& conn = mesh.elements[e];
        double vm = 0.0, eq = 0.0;
        for (int qp = 0; qp < 4; ++qp) {
            const QuadPointGeom g = qp_geometry(mesh, e, qp);
            double e11 = 0, e22 = 0, e12 = 0;
            for (int a = 0; a < 4; ++a) {
                const double ux = u[2 * conn[a]], uy = u[2 * conn[a] + 1];
                e11 += ux * g.gradN[a][0];
                e22 += uy * g.gradN[a][1];
                e12 += 0.5 * (ux * g.gradN[a][1] + uy * g.gradN[a][0]);
            }
            const double tr = e11 + e22;
            const double s11 = lam * tr + 2 * mu * e11;
            const double s22 = lam * tr + 2 * mu * e22;
            const double s12 = 2 * mu * e12;
            const double s33 = nu * (s11 + s22);
            vm += von_mises_stress(s11, s22, s33, s12);
            eq += equivalent_strain(e11, e22, 0.0, e12);
        }
        sol.von_mises_kpa[e] = mpa_to_kpa(vm / 4.0);
        sol.eq_strain[e] = eq / 4.0;
    }
    sol.residual_history = {{0.0}};
    sol.converged = true;
    return sol;
}

// ---- serialization ----
// Container payload: float32 blocks, little-endian: displacements (2 per
// node), per-element von Mises stress (kPa), per-element equivalent strain.
inline constexpr char kSolutionMagic[8] = {'A', 'W', 'S', 'O', 'L', '0', '1', '\0'};

inline void save_solution(const std::filesystem::path& path, const SolutionField& sol) {
    json header{{"node_count", sol.displacement.size()},
                {"element_count", sol.von_mises_kpa.size()},
                {"converged", sol.converged},
                {"residual_history", sol.residual_history},
                {"units", {{"displacement", "mm"}, {"stress", "kPa"}, {"strain", "1"}}}};
    ByteWriter w;
    for (const Vec2& d : sol.displacement) {
        w.pod(static_cast<float>(d.x));
        w.pod(static_cast<float>(d.y));
    }
    for (double v : sol.von_mises_kpa) w.pod(static_cast<float>(v));
    for (double v : sol.eq_strain) w.pod(static_cast<float>(v));
    write_container(path, kSolutionMagic, header, w.bytes());
}

inline SolutionField load_solution(const std::filesystem::path& path) {
    Container c = read_container(path, kSolutionMagic);
    SolutionField sol;
    const auto nodes = c.header.at("node_count").get<size_t>();
    const auto elems = c.header.at("element_count").get<size_t>();
    sol.converged = c.header.at("converged").get<bool>();
    sol.residual_history = c.header.at("residual_history").get<std::vector<std::vector<double>>>();
    ByteReader r(c.payload);
    sol.displacement.resize(nodes);
    for (auto& d : sol.displacement) {
        d.x = r.pod<float>();
        d.y = r.pod<float>();
    }
    sol.von_mises_kpa.resize(elems);
    for (auto& v : sol.von_mises_kpa) v = r.pod<float>();
    sol.eq_strain.resize(elems);
    for (auto& v : sol.eq_strain) v = r.pod<float>();
    return sol;
}

} // namespace artwall::fem
