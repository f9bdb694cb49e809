#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "artwall/geometry.hpp"

namespace artwall::fem {

class ElementInversion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Generalized polynomial strain energy on isochoric invariants,
//   W = sum_ij C_ij (I1b-3)^i (I2b-3)^j + K/2 (J-1)^2,
// with I1b = J^(-2/3) I1 and I2b = J^(-4/3) I2. Coefficients in MPa.
// The isochoric split makes the undeformed state stress-free for any
// coefficient table.
struct MaterialModel {
    double C[4][4] = {};     // C[i][j], i+j >= 1, i,j <= 3
    double bulk_penalty_K = 0.0;  // MPa

    // Quasi-incompressible penalty two decades above the small-strain shear
    // modulus mu0 = 2 (C10 + C01).
    static double default_bulk_penalty(double c10, double c01) {
        return 100.0 * 2.0 * (c10 + c01);
    }

    static MaterialModel artery() {
        MaterialModel m;
        m.C[1][0] = 0.108;
        m.C[0][1] = -0.101;
        m.C[1][1] = -0.179;
        m.C[2][0] = 0.088;
        m.C[0][2] = 0.062;
        m.bulk_penalty_K = default_bulk_penalty(m.C[1][0], m.C[0][1]);
        return m;
    }
    static MaterialModel fibrous() {
        MaterialModel m;
        m.C[1][0] = 0.040;
        m.C[0][2] = 0.003;
        m.C[0][3] = 0.0297;
        m.bulk_penalty_K = default_bulk_penalty(m.C[1][0], m.C[0][1]);
        return m;
    }
    static MaterialModel calcium() {
        MaterialModel m;
        m.C[1][0] = -0.495;
        m.C[0][1] = 0.506;
        m.C[1][1] = 1.193;
        m.C[2][0] = 3.637;
        m.C[3][0] = 4.737;
        m.bulk_penalty_K = default_bulk_penalty(m.C[1][0], m.C[0][1]);
        return m;
    }
};

struct MaterialSet {
    MaterialModel artery = MaterialModel::artery();
    MaterialModel fibrous = MaterialModel::fibrous();
    MaterialModel calcium = MaterialModel::calcium();

    const MaterialModel& for_label(TissueLabel t) const {
        switch (t) {
            case TissueLabel::Artery: return artery;
            case TissueLabel::Fibrous: return fibrous;
            case TissueLabel::Calcium: return calcium;
            default: throw std::invalid_argument("no material for removed region");
        }
    }
};

namespace detail {

struct PolyDerivs {
    double W = 0, Wx = 0, Wy = 0, Wxx = 0, Wxy = 0, Wyy = 0;
};

inline PolyDerivs poly_derivs(const MaterialModel& m, double x, double y) {
    double xp[4] = {1, x, x * x, x * x * x};
    double yp[4] = {1, y, y * y, y * y * y};
    PolyDerivs d;
    for (int i = 0; i <= 3; ++i) {
        for (int j = 0; j <= 3; ++j) {
            const double c = m.C[i][j];
            if (c == 0.0 || (i == 0 && j == 0)) continue;
            d.W += c * xp[i] * yp[j];
            if (i >= 1) d.Wx += c * i * xp[i - 1] * yp[j];
            if (j >= 1) d.Wy += c * j * xp[i] * yp[j - 1];
            if (i >= 2) d.Wxx += c * i * (i - 1) * xp[i - 2] * yp[j];
            if (i >= 1 && j >= 1) d.Wxy += c * i * j * xp[i - 1] * yp[j - 1];
            if (j >= 2) d.Wyy += c * j * (j - 1) * xp[i] * yp[j - 2];
        }
    }
    return d;
}

} // namespace detail

inline double strain_energy(const MaterialModel& m, double I1bar, double I2bar, double J) {
    if (!(J > 0.0)) throw ElementInversion("strain_energy: J <= 0");
    const auto p = detail::poly_derivs(m, I1bar - 3.0, I2bar - 3.0);
    const double dJ = J - 1.0;
    return p.W + 0.5 * m.bulk_penalty_K * dJ * dJ;
}

// Constitutive evaluation at one material point under plane strain,
// parameterized by the in-plane right Cauchy-Green tensor
// [[c11, c12], [c12, c22]] (out-of-plane stretch is 1).
//
// S holds the in-plane second Piola-Kirchhoff stress; H is the Jacobian of
// (S11, S22, S12) with respect to (c11, c22, c12), from which the material
// tangent is recovered with the usual factor 1/2 on the shear column.
struct ConstitutiveEval {
    double W = 0;  // MPa
    double S11 = 0, S22 = 0, S12 = 0, S33 = 0;
    double H[3][3] = {};
};

inline ConstitutiveEval evaluate_plane_strain(const MaterialModel& m, double c11, double c22,
                                              double c12) {
    const double a = c11 + c22;
    const double d = c11 * c22 - c12 * c12;
    if (!(d > 0.0)) throw ElementInversion("element inversion: det C <= 0");

    const double J = std::sqrt(d);
    const double dinv = 1.0 / d;
    const double dm13 = std::pow(d, -1.0 / 3.0);
    const double dm23 = dm13 * dm13;
    const double dm43 = dm13 * dinv;
    const double dm53 = dm23 * dinv;
    const double dm73 = dm43 * dinv;
    const double dm83 = dm53 * dinv;

    const double I1 = a + 1.0;
    const double I2 = d + a;
    const double I1b = dm13 * I1;
    const double I2b = dm23 * I2;

    const auto p = detail::poly_derivs(m, I1b - 3.0, I2b - 3.0);
    const double K = m.bulk_penalty_K;
    const double Up = K * (J - 1.0);  // dU/dJ

    const double da[3] = {1.0, 1.0, 0.0};
    const double dd[3] = {c22, c11, -2.0 * c12};
    const double d2d[3][3] = {{0, 1, 0}, {1, 0, 0}, {0, 0, -2}};

    double g1[3], g2[3], gJ[3];
    for (int q = 0; q < 3; ++q) {
        g1[q] = dm13 * da[q] - (1.0 / 3.0) * dm43 * I1 * dd[q];
        g2[q] = dm23 * (dd[q] + da[q]) - (2.0 / 3.0) * dm53 * I2 * dd[q];
        gJ[q] = 0.5 / J * dd[q];
    }

    ConstitutiveEval out;
    out.W = p.W + 0.5 * K * (J - 1.0) * (J - 1.0);

    double Wq[3];
    for (int q = 0; q < 3; ++q) Wq[q] = p.Wx * g1[q] + p.Wy * g2[q] + Up * gJ[q];
    out.S11 = 2.0 * Wq[0];
    out.S22 = 2.0 * Wq[1];
    out.S12 = Wq[2];
    out.S33 = 2.0 * p.Wx * dm13 * (1.0 - I1 / 3.0) +
              2.0 * p.Wy * dm23 * (I1 - 1.0 - (2.0 / 3.0) * I2) + Up * J;

    const double jm32 = dinv / J;  // d^(-3/2)
    for (int q = 0; q < 3; ++q) {
        for (int s = 0; s < 3; ++s) {
            const double H1 = -(1.0 / 3.0) * dm43 * (dd[s] * da[q] + da[s] * dd[q]) +
                              (4.0 / 9.0) * dm73 * I1 * dd[q] * dd[s] -
                              (1.0 / 3.0) * dm43 * I1 * d2d[q][s];
            const double H2 = dm23 * d2d[q][s] -
                              (2.0 / 3.0) * dm53 *
                                  (dd[s] * (dd[q] + da[q]) + dd[q] * (dd[s] + da[s]) +
                                   I2 * d2d[q][s]) +
                              (10.0 / 9.0) * dm83 * I2 * dd[q] * dd[s];
            const double HJ = -0.25 * jm32 * dd[q] * dd[s] + 0.5 / J * d2d[q][s];
            const double Wqq = p.Wxx * g1[q] * g1[s] + p.Wxy * (g1[q] * g2[s] + g2[q] * g1[s]) +
                               p.Wyy * g2[q] * g2[s] + p.Wx * H1 + p.Wy * H2 + K * gJ[q] * gJ[s] +
                               Up * HJ;
            out.H[q][s] = (q == 2 ? 1.0 : 2.0) * Wqq;
        }
    }
    return out;
}

// Cauchy stress from the in-plane deformation gradient (plane strain,
// F33 = 1). Returns the in-plane 2x2 block; sigma33 optionally.
inline Eigen::Matrix2d cauchy_stress(const MaterialModel& m, const Eigen::Matrix2d& F,
                                     double* sigma33 = nullptr) {
    const double J = F.determinant();
    if (!(J > 0.0)) throw ElementInversion("element inversion: det F <= 0");
    const Eigen::Matrix2d C = F.transpose() * F;
    const auto ev = evaluate_plane_strain(m, C(0, 0), C(1, 1), C(0, 1));
    Eigen::Matrix2d S;
    S << ev.S11, ev.S12, ev.S12, ev.S22;
    if (sigma33) *sigma33 = ev.S33 / J;
    return (F * S * F.transpose()) / J;
}

inline double von_mises_stress(double s11, double s22, double s33, double s12) {
    return std::sqrt(s11 * s11 + s22 * s22 + s33 * s33 - s11 * s22 - s22 * s33 - s33 * s11 +
                     3.0 * s12 * s12);
}

// Deviatoric norm sqrt(2/3 e:e) of a symmetric strain tensor given by
// (e11, e22, e33, e12).
inline double equivalent_strain(double e11, double e22, double e33, double e12) {
    const double tr = (e11 + e22 + e33) / 3.0;
    const double d11 = e11 - tr, d22 = e22 - tr, d33 = e33 - tr;
    return std::sqrt((2.0 / 3.0) * (d11 * d11 + d22 * d22 + d33 * d33 + 2.0 * e12 * e12));
}

// Logarithmic strain from the in-plane deformation gradient; out-of-plane
// log stretch is zero under plane strain. Returns (e11, e22, e12).
inline Eigen::Vector3d log_strain(const Eigen::Matrix2d& F) {
    const Eigen::Matrix2d C = F.transpose() * F;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(C);
    const Eigen::Vector2d lam = eig.eigenvalues();
    if (!(lam(0) > 0.0)) throw ElementInversion("log_strain: non-positive stretch");
    const Eigen::Vector2d logs = 0.5 * lam.array().log();
    const Eigen::Matrix2d E =
        eig.eigenvectors() * logs.asDiagonal() * eig.eigenvectors().transpose();
    return {E(0, 0), E(1, 1), E(0, 1)};
}

inline double mmhg_to_kpa(double mmhg) { return mmhg * (101.325 / 760.0); }

inline double kpa_to_mpa(double kpa) { return kpa * 1e-3; }
inline double mpa_to_kpa(double mpa) { return mpa * 1e3; }

} // namespace artwall::fem
