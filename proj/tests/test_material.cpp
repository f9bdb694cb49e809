#include <catch2/catch_amalgamated.hpp>

#include "artwall/fem/material.hpp"
#include "artwall/rng.hpp"

using namespace artwall;
using namespace artwall::fem;

namespace {

// Energy as a function of the in-plane deformation gradient, for finite
// differences.
double energy_of_F(const MaterialModel& m, const Eigen::Matrix2d& F) {
    const Eigen::Matrix2d C = F.transpose() * F;
    return evaluate_plane_strain(m, C(0, 0), C(1, 1), C(0, 1)).W;
}

Eigen::Matrix2d random_F(Rng& rng, double scale) {
    Eigen::Matrix2d F = Eigen::Matrix2d::Identity();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) F(i, j) += scale * (rng.uniform() - 0.5);
    if (F.determinant() <= 0.2) return random_F(rng, scale * 0.5);
    return F;
}

} // namespace

TEST_CASE("strain energy vanishes in the undeformed state") {
    for (const MaterialModel& m :
         {MaterialModel::artery(), MaterialModel::fibrous(), MaterialModel::calcium()}) {
        REQUIRE(strain_energy(m, 3.0, 3.0, 1.0) == 0.0);
    }
}

TEST_CASE("artery polynomial spot value") {
    const MaterialModel m = MaterialModel::artery();
    // C10 * 0.1 + C20 * 0.01 with the artery coefficient row
    REQUIRE(strain_energy(m, 3.1, 3.0, 1.0) == Catch::Approx(0.01168).margin(1e-12));
}

TEST_CASE("volumetric penalty spot value") {
    MaterialModel m;
    m.bulk_penalty_K = 10.0;
    REQUIRE(strain_energy(m, 3.0, 3.0, 1.01) == Catch::Approx(5e-4).margin(1e-12));
}

TEST_CASE("cauchy stress is zero at the identity for every material") {
    for (const MaterialModel& m :
         {MaterialModel::artery(), MaterialModel::fibrous(), MaterialModel::calcium()}) {
        double s33 = 1.0;
        const Eigen::Matrix2d sig = cauchy_stress(m, Eigen::Matrix2d::Identity(), &s33);
        REQUIRE(sig.norm() < 1e-14);
        REQUIRE(std::abs(s33) < 1e-14);
    }
}

TEST_CASE("isochoric uniaxial stretch with only C10 active") {
    MaterialModel m;
    m.C[1][0] = 0.35;  // no penalty; J = 1 exactly on this path
    const double lam = 1.3;
    Eigen::Matrix2d F = Eigen::Matrix2d::Zero();
    F(0, 0) = lam;
    F(1, 1) = 1.0 / lam;
    const Eigen::Matrix2d sig = cauchy_stress(m, F);
    const double expect = 2.0 * m.C[1][0] * (lam * lam - 1.0 / (lam * lam));
    REQUIRE(sig(0, 0) - sig(1, 1) == Catch::Approx(expect).epsilon(1e-10));
}

TEST_CASE("stress matches finite differences of the energy") {
    Rng rng(31);
    const double h = 1e-6;
    for (const MaterialModel& m :
         {MaterialModel::artery(), MaterialModel::fibrous(), MaterialModel::calcium()}) {
        for (int rep = 0; rep < 10; ++rep) {
            const Eigen::Matrix2d F = random_F(rng, 0.3);
            const Eigen::Matrix2d C = F.transpose() * F;
            const auto ev = evaluate_plane_strain(m, C(0, 0), C(1, 1), C(0, 1));
            Eigen::Matrix2d S;
            S << ev.S11, ev.S12, ev.S12, ev.S22;
            const Eigen::Matrix2d P = F * S;

            double max_rel = 0.0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    Eigen::Matrix2d Fp = F, Fm = F;
                    Fp(i, j) += h;
                    Fm(i, j) -= h;
                    const double fd = (energy_of_F(m, Fp) - energy_of_F(m, Fm)) / (2 * h);
                    max_rel = std::max(max_rel, std::abs(fd - P(i, j)) / (P.norm() + 1e-12));
                }
            REQUIRE(max_rel < 1e-6);
        }
    }
}

TEST_CASE("constitutive tangent matches finite differences of the stress") {
    Rng rng(77);
    const double h = 1e-6;
    for (const MaterialModel& m : {MaterialModel::artery(), MaterialModel::calcium()}) {
        for (int rep = 0; rep < 6; ++rep) {
            const Eigen::Matrix2d F = random_F(rng, 0.25);
            const Eigen::Matrix2d C = F.transpose() * F;
            const double c[3] = {C(0, 0), C(1, 1), C(0, 1)};
            const auto ev = evaluate_plane_strain(m, c[0], c[1], c[2]);
            for (int q = 0; q < 3; ++q) {
                double cp[3] = {c[0], c[1], c[2]};
                double cm[3] = {c[0], c[1], c[2]};
                cp[q] += h;
                cm[q] -= h;
                const auto ep = evaluate_plane_strain(m, cp[0], cp[1], cp[2]);
                const auto em = evaluate_plane_strain(m, cm[0], cm[1], cm[2]);
                const double fd[3] = {(ep.S11 - em.S11) / (2 * h), (ep.S22 - em.S22) / (2 * h),
                                      (ep.S12 - em.S12) / (2 * h)};
                // H[r][q] = d(S11,S22,S12)[r] / d(c11,c22,c12)[q]
                const double scale = std::abs(ev.H[0][0]) + std::abs(ev.H[1][1]) + 1.0;
                for (int r = 0; r < 3; ++r)
                    REQUIRE(std::abs(fd[r] - ev.H[r][q]) / scale < 1e-6);
            }
        }
    }
}

TEST_CASE("von Mises invariants") {
    REQUIRE(von_mises_stress(100, 0, 0, 0) == Catch::Approx(100.0));
    REQUIRE(von_mises_stress(37.5, 37.5, 37.5, 0) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(von_mises_stress(0, 0, 0, 10) == Catch::Approx(17.3205).epsilon(1e-4));
}

TEST_CASE("equivalent strain invariants") {
    REQUIRE(equivalent_strain(0, 0, 0, 0) == 0.0);
    const double gamma = 0.08;
    REQUIRE(equivalent_strain(0, 0, 0, gamma / 2) == Catch::Approx(gamma / std::sqrt(3.0)));
    const double l = 0.2;
    REQUIRE(equivalent_strain(l, -l / 2, -l / 2, 0) == Catch::Approx(l));
}

TEST_CASE("log strain of a pure stretch") {
    Eigen::Matrix2d F = Eigen::Matrix2d::Zero();
    F(0, 0) = 1.5;
    F(1, 1) = 0.8;
    const Eigen::Vector3d e = log_strain(F);
    REQUIRE(e(0) == Catch::Approx(std::log(1.5)));
    REQUIRE(e(1) == Catch::Approx(std::log(0.8)));
    REQUIRE(e(2) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("pressure unit conversion") {
    REQUIRE(mmhg_to_kpa(140.0) == Catch::Approx(18.665).margin(1e-3));
    REQUIRE(mmhg_to_kpa(0.0) == 0.0);
    REQUIRE(mmhg_to_kpa(760.0) == Catch::Approx(101.325).margin(1e-12));
}
