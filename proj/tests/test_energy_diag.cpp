#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "common.hpp"
#include "dipole/energy_diag.hpp"
#include "dipole/errors.hpp"
#include "dipole/gaussian_base.hpp"
#include "dipole/operators.hpp"

using namespace dipole;
using std::numbers::pi;

namespace {

const FunctionalRelation& relation4() {
    static const FunctionalRelation f = functional_relation(test::bundle(4));
    return f;
}

}  // namespace

TEST(Rho, ContinuousAcrossBranches) {
    const WeightParams p;
    for (double eps : {0.03, 0.05, 0.08}) {
        const double r1 = std::pow(eps, -p.sigma1), r2 = std::pow(eps, -p.sigma2);
        for (double r : {r1, r2}) EXPECT_NEAR(rho_eps(r * (1 - 1e-12), eps, p), rho_eps(r * (1 + 1e-12), eps, p), 1e-9 * r);
        EXPECT_DOUBLE_EQ(rho_eps(0.5, eps, p), 0.5);
    }
    EXPECT_DOUBLE_EQ(rho_eps(3.0, 0.0, p), 3.0);
}

TEST(WeightParamsTest, Validation) {
    EXPECT_THROW((WeightParams{0.0, 2.0}).validate(), InvalidArgument);
    EXPECT_THROW((WeightParams{0.5, 0.4}).validate(), InvalidArgument);
    EXPECT_NO_THROW(WeightParams{}.validate());
}

TEST(Weight, EpsZeroIsA) {
    const WeightModel w(test::bundle(4), relation4(), 0.0, {});
    for (auto [x1, x2] : {std::pair{0.1, 0.0}, {1.0, 2.0}, {-3.0, 0.5}, {0.0, 6.0}}) {
        const double r = std::hypot(x1, x2);
        EXPECT_NEAR(w.value(x1, x2) / A_fn(r), 1.0, 1e-10) << "r = " << r;
        EXPECT_EQ(w.region(x1, x2), Region::I);
    }
}

TEST(Weight, UnitBallInsideRegionOne) {
    for (double eps : {0.03, 0.05, 0.08}) {
        const WeightModel w(test::bundle(4), relation4(), eps, {});
        for (int k = 0; k < 32; ++k) {
            const double th = 2 * pi * k / 32;
            EXPECT_EQ(w.region(std::cos(th), std::sin(th)), Region::I) << "eps " << eps;
        }
    }
}

TEST(Weight, ContinuousAtRegionSeams) {
    const double eps = 0.05;
    const WeightParams p;
    const WeightModel w(test::bundle(4), relation4(), eps, p);
    // II / III seam at |xi| = eps^{-sigma2}.
    const double r2 = std::pow(eps, -p.sigma2);
    const double in = w.value(r2 * (1 - 1e-12), 0.0), out = w.value(r2 * (1 + 1e-12), 0.0);
    EXPECT_EQ(w.region(r2 * (1 - 1e-9), 0.0), Region::II);
    EXPECT_EQ(w.region(r2 * (1 + 1e-9), 0.0), Region::III);
    EXPECT_NEAR(in / out, 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(in, w.cap());
    // I / II seam along a ray: the weight climbs to the cap and stays there.
    double prev = w.value(0.5, 0.0);
    Region last = Region::I;
    for (double r = 0.5; r < 2.0 * std::pow(eps, -p.sigma1) + 1.0; r += 0.01) {
        const Region reg = w.region(r, 0.0);
        const double v = w.value(r, 0.0);
        if (last == Region::I && reg == Region::II) {
            EXPECT_NEAR(v / prev, 1.0, 0.05) << "r = " << r;
        }
        last = reg;
        prev = v;
    }
    EXPECT_EQ(last, Region::II);
}

TEST(Weight, GradientMatchesFiniteDifference) {
    const WeightModel w(test::bundle(4), relation4(), 0.05, {});
    const double h = 1e-5;
    for (auto [x1, x2] : {std::pair{0.7, -0.4}, {1.5, 0.9}}) {
        const auto e = w.eval(x1, x2);
        EXPECT_NEAR(e[1], (w.value(x1 + h, x2) - w.value(x1 - h, x2)) / (2 * h), 1e-6 * std::abs(e[0]));
        EXPECT_NEAR(e[2], (w.value(x1, x2 + h) - w.value(x1, x2 - h)) / (2 * h), 1e-6 * std::abs(e[0]));
    }
}

TEST(Perturbation, RejectsNonzeroMoments) {
    GridSpec g;
    EXPECT_THROW(make_perturbation(gaussian_field(g)), InvalidArgument);
    EXPECT_THROW(make_perturbation(d1_gaussian_field(g)), InvalidArgument);
    PolarField q(g);
    q.set({2, Parity::cos_mode}, RadialProfile::sample_scaled(g, [](double r) { return r * r / (16.0 * pi); }));
    const auto tp = make_perturbation(project_moments(gaussian_field(g) + d2_gaussian_field(g) + q));
    EXPECT_LT(std::abs(tp.moments.mass) + std::abs(tp.moments.m1) + std::abs(tp.moments.m2), moment_tolerance);
}

TEST(Perturbation, RandomSamplesAreAdmissibleAndSeeded) {
    GridSpec g;
    std::mt19937_64 a(99), b(99);
    for (int k = 0; k < 5; ++k) {
        const auto p = random_perturbation(g, a), q = random_perturbation(g, b);
        EXPECT_EQ((p.w - q.w).max_abs_stored(), 0.0);
        EXPECT_LT(std::abs(p.moments.mass) + std::abs(p.moments.m1) + std::abs(p.moments.m2), moment_tolerance);
    }
}

// Oracle: E_0 from one-dimensional mode integrals against the polar quadrature, on a pure n = 2 Hermite mode.
TEST(Energy, EpsZeroTwoWaysOnHermiteMode) {
    GridSpec g;
    PolarField w(g);
    w.set({2, Parity::cos_mode}, RadialProfile::sample_scaled(g, [](double r) { return r * r / (16.0 * pi); }));
    const auto tp = make_perturbation(w);
    const auto t0 = make_weight_table(test::bundle(4), relation4(), 0.0, {});
    const auto e = energy(tp, t0);
    EXPECT_NEAR(e.energy, energy0_modes(tp), 1e-8 * std::abs(e.energy));
    EXPECT_EQ(e.teps_w, 0.0);
}

TEST(Energy, EpsZeroTwoWaysOnRandomField) {
    std::mt19937_64 rng(7);
    const auto tp = random_perturbation(GridSpec{}, rng);
    const auto t0 = make_weight_table(test::bundle(4), relation4(), 0.0, {});
    EXPECT_NEAR(energy(tp, t0).energy, energy0_modes(tp), 1e-8 * std::abs(energy0_modes(tp)));
}

TEST(Energy, GaussianNormCloseToEpsZero) {
    const auto& b = test::bundle(4);
    const auto G = gaussian_field(b.grid);
    const double n0 = std::sqrt(x_norm2(G, make_weight_table(b, relation4(), 0.0, {})));
    const double n5 = std::sqrt(x_norm2(G, make_weight_table(b, relation4(), 0.05, {})));
    EXPECT_NEAR(n5 / n0, 1.0, 0.05);
}

// Property: coercivity over seeded random admissible perturbations.
TEST(Coercivity, SmallSeededSample) {
    const auto rep = coercivity_check(test::bundle(4), {0.05}, 20, 12345);
    ASSERT_EQ(rep.rows.size(), 1u);
    EXPECT_EQ(rep.rows[0].non_positive, 0);
    EXPECT_GE(rep.rows[0].min_energy_ratio, 0.01);
    EXPECT_GE(rep.rows[0].min_diffusion_ratio, 0.01);
    const auto again = coercivity_check(test::bundle(4), {0.05}, 20, 12345);
    EXPECT_EQ(coercivity_to_json(rep), coercivity_to_json(again));
}

TEST(Coercivity, MirrorCouplingIsSmall) {
    const auto rep = coercivity_check(test::bundle(4), {0.03, 0.08}, 10, 1);
    EXPECT_LT(rep.rows[0].max_teps_ratio, rep.rows[1].max_teps_ratio);
    EXPECT_LT(rep.rows[1].max_teps_ratio, 0.05);
}
