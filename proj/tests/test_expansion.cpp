#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "common.hpp"
#include "dipole/errors.hpp"
#include "dipole/gaussian_base.hpp"
#include "dipole/operators.hpp"

using namespace dipole;
using std::numbers::pi;

TEST(Bundle, LayoutFollowsOrder) {
    const auto& b = test::bundle(4);
    EXPECT_EQ(b.order, 4);
    ASSERT_EQ(b.omega_E.size(), 5u);
    EXPECT_TRUE(b.omega_E[1].empty());
    EXPECT_EQ(b.zeta_E.size(), 4u);
    EXPECT_EQ(b.zeta_E[0], 1.0);
    EXPECT_EQ(b.steps.size(), 3u);
}

TEST(Bundle, TrivialBundleIsGaussian) {
    GridSpec g;
    const auto b = trivial_bundle(g, 1);
    const auto w = b.omega_app(0.1, 0.01);
    EXPECT_LT((w - gaussian_field(g)).max_abs_stored(), 1e-15);
    EXPECT_EQ(b.zeta_series(0.1, 0.01), 1.0);
}

TEST(Bundle, LowOrderSpeedCorrectionsVanish) {
    const auto& b = test::bundle(5);
    for (int k = 1; k <= 3; ++k) {
        EXPECT_LT(std::abs(b.zeta_E[k]), 1e-7) << "k = " << k;
        EXPECT_LT(std::abs(b.zeta_NS[k]), 1e-7) << "k = " << k;
    }
}

TEST(Bundle, AlphaReproduced) {
    const auto a = alpha(test::bundle(2));
    EXPECT_NEAR(a.alpha, 22.24, 0.23);
    EXPECT_LT(a.relative_gap, 1e-8);
    EXPECT_FALSE(a.has_zeta4);
}

TEST(Bundle, ZetaFourIsMinusTwoPiAlpha) {
    const auto a = alpha(test::bundle(5));
    ASSERT_TRUE(a.has_zeta4);
    EXPECT_LT(a.zeta4_gap, 1e-8);
    EXPECT_NEAR(a.zeta4, -139.73, 0.05 * 139.73);
}

TEST(Bundle, AlphaIndependentOfOrder) {
    EXPECT_NEAR(alpha(test::bundle(2)).alpha, alpha(test::bundle(5)).alpha, 1e-12);
}

// Omega_2 = -w2(r) cos(2 theta) and Psi_2 = phi2(r) cos(2 theta) with w2 = h (phi2 + r^2 / (4 pi)).
TEST(OmegaTwo, ProfileIdentities) {
    const auto& b = test::bundle(2);
    const GridSpec& g = b.grid;
    const auto* om = b.omega_E[2].find({2, Parity::cos_mode});
    const auto* ps = b.psi_E[2].find({2, Parity::cos_mode});
    ASSERT_TRUE(om && ps);
    EXPECT_EQ(b.omega_E[2].modes().size(), 1u);
    double worst = 0.0, min_w2 = 1e300;
    for (int i = 1; i < g.n_points; ++i) {
        const double r = g.r(i);
        const double w2 = -om->value(i);
        min_w2 = std::min(min_w2, -om->stored()[i]);  // sign of the scaled profile
        worst = std::max(worst, std::abs(w2 - h_fn(r) * (ps->value(i) + r * r / (4.0 * pi))));
    }
    EXPECT_GT(min_w2, 0.0);
    EXPECT_LT(worst, 1e-8);
    // Near the origin w2 ~ c r^2 with c > 0.
    EXPECT_GT(-om->stored()[1] / (g.r(1) * g.r(1)), 0.0);
}

TEST(Bundle, ProfilesHaveNoMassOrFirstMoments) {
    const auto& b = test::bundle(5);
    for (int k = 2; k <= 5; ++k) {
        for (const auto* f : {&b.omega_E[k], &b.omega_NS[k]}) {
            const auto m = moments(*f);
            EXPECT_LT(std::abs(m.mass), 1e-10) << "k = " << k;
            EXPECT_LT(std::abs(m.m1) + std::abs(m.m2), 1e-10) << "k = " << k;
        }
    }
}

TEST(Bundle, StepDiagnosticsWithinTolerance) {
    for (const auto& s : test::bundle(5).steps) {
        EXPECT_LT(s.lambda_residual_E, step_lambda_tolerance) << "order " << s.order;
        EXPECT_LT(s.lambda_residual_NS, step_lambda_tolerance) << "order " << s.order;
        EXPECT_LT(std::abs(s.m2_tilde_H0), 1e-8) << "order " << s.order;
        EXPECT_LT(s.lower_order_defect, 1e-7) << "order " << s.order;
    }
}

TEST(Bundle, InductionStepMatchesDirectBuild) {
    const auto stepped = induction_step(test::bundle(2));
    EXPECT_EQ(bundle_to_json(stepped), bundle_to_json(test::bundle(3)));
}

TEST(Bundle, BuildIsDeterministic) {
    const GridSpec g;
    EXPECT_EQ(bundle_to_json(build_bundle(g, 3)), bundle_to_json(test::bundle(3)));
}

TEST(Serialization, RoundTripIsExact) {
    const auto s = bundle_to_json(test::bundle(4));
    const auto b = bundle_from_json(s);
    EXPECT_EQ(bundle_to_json(b), s);
    EXPECT_EQ(b.grid, test::bundle(4).grid);
}

TEST(Serialization, RejectsMalformedDocuments) {
    EXPECT_THROW(bundle_from_json("{not json"), InvalidArgument);
    EXPECT_THROW(bundle_from_json("{\"format\": \"other\"}"), InvalidArgument);
    EXPECT_THROW(load_bundle("/nonexistent/bundle.json"), InvalidArgument);
}

TEST(Remainder, SeriesHasNoLowOrderTerms) {
    const auto rep = remainder_series(test::bundle(3));
    for (const auto& c : rep.norms) {
        if (c.delta_power <= 1 && c.eps_power < 4) {
            EXPECT_LT(c.y_norm, 1e-9) << c.eps_power << "," << c.delta_power;
        }
    }
    EXPECT_LT(std::abs(rep.H0_moments.mass), 1e-10);
}

TEST(Remainder, EpsSlopeOrderTwo) {
    const auto fit = remainder_eps_slope(test::bundle(2), 0.0, 0.02, 0.1, 7);
    EXPECT_NEAR(fit.slope, 3.0, 0.15);
}

TEST(Remainder, EpsSlopeOrderThree) {
    const auto fit = remainder_eps_slope(test::bundle(3), 0.0, 0.02, 0.1, 7);
    EXPECT_NEAR(fit.slope, 4.0, 0.15);
}

TEST(Remainder, DeltaSlopeOrderTwo) {
    const auto fit = remainder_delta_slope(test::bundle(2), 0.05, 0.01, 0.1, 5);
    EXPECT_NEAR(fit.slope, 2.0, 0.2);
}

TEST(Remainder, DirectNormShrinksWithEps) {
    const auto& b = test::bundle(2);
    EXPECT_LT(remainder_direct(b, 0.03, 0.0).y_norm, remainder_direct(b, 0.06, 0.0).y_norm);
    EXPECT_THROW(remainder_direct(b, 0.0, 0.0), InvalidArgument);
}

TEST(Speed, GaussianPairSpeed) {
    EXPECT_LT(std::abs(2.0 * pi * gaussian_speed(0.05) - 1.0), 1e-8);
}

// The direct speed integral agrees with the zeta series up to the first omitted order.
TEST(Speed, DirectIntegralMatchesSeries) {
    const auto& b = test::bundle(5);
    for (double eps : {0.05, 0.1}) {
        const double diff = std::abs(zeta_app_direct(b, eps, 0.0) - zeta_app(b, eps, 0.0));
        EXPECT_LT(diff, 100.0 * std::pow(eps, 5)) << "eps = " << eps;
    }
    EXPECT_NEAR(zeta_app(b, 0.1, 0.0), 1.0 + b.zeta_E[4] * 1e-4, 1e-12);
}

TEST(Fit, SlopeHelper) {
    const auto f = fit_slope({1.0, 2.0, 4.0}, {3.0, 24.0, 192.0});
    EXPECT_NEAR(f.slope, 3.0, 1e-12);
}
