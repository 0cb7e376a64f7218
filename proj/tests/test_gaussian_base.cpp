#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dipole/errors.hpp"
#include "dipole/gaussian_base.hpp"

using namespace dipole;
using std::numbers::pi;

// Oracle: Ein(s) = E1(s) + log s + gamma for s > 0, with E1(s) = -Ei(-s) from the standard library.
TEST(SpecialFunctions, EinMatchesStdExpint) {
    for (double s : {1e-8, 1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 12.0, 40.0, 150.0}) {
        const double ref = -std::expint(-s) + std::log(s) + euler_gamma;
        EXPECT_NEAR(ein(s), ref, 1e-14 * std::max(1.0, std::abs(ref))) << "s = " << s;
    }
}

TEST(SpecialFunctions, EinTaylorNearZero) {
    // Ein(s) = s - s^2/4 + s^3/18 - ...
    for (double s : {-0.3, -1e-4, 0.0, 1e-4, 0.3}) {
        const double ref = s - s * s / 4.0 + s * s * s / 18.0 - s * s * s * s / 96.0 + std::pow(s, 5) / 600.0;
        EXPECT_NEAR(ein(s), ref, 3e-4 * std::pow(std::abs(s), 6) + 1e-16);
    }
}

TEST(SpecialFunctions, E1MatchesStdExpint) {
    for (double s : {1e-6, 0.2, 1.0, 3.0, 10.0, 60.0}) {
        const double ref = -std::expint(-s);
        EXPECT_NEAR(expint_e1(s), ref, 1e-14 * ref) << "s = " << s;
    }
    EXPECT_THROW(expint_e1(0.0), InvalidArgument);
}

TEST(RadialClosedForms, StreamFunctionSolvesPoisson) {
    const double h = 1e-3;
    for (double r : {0.3, 1.0, 2.0, 3.5, 6.0}) {
        const double lap = (psi0(r + h) - 2.0 * psi0(r) + psi0(r - h)) / (h * h) + (psi0(r + h) - psi0(r - h)) / (2.0 * h * r);
        EXPECT_NEAR(lap, gauss_G(r), 1e-7) << "r = " << r;
        EXPECT_NEAR((psi0(r + h) - psi0(r - h)) / (2.0 * h), psi0_prime(r), 1e-8);
    }
    EXPECT_NEAR(psi0(0.0), -euler_gamma / (4.0 * pi), 1e-16);
}

TEST(RadialClosedForms, TaylorBranchIsContinuous) {
    for (double (*f)(double) : {psi0, v0, h_fn, A_fn, h_scaled}) {
        const double below = f(1e-3 * (1.0 - 1e-12)), above = f(1e-3 * (1.0 + 1e-12));
        EXPECT_NEAR(below, above, 1e-12 * std::max(1.0, std::abs(above)));
    }
    EXPECT_NEAR(v0(0.0), 1.0 / (8.0 * pi), 1e-16);
    EXPECT_NEAR(h_fn(0.0), 1.0, 1e-15);
}

TEST(RadialClosedForms, DerivedFunctionsAreConsistent) {
    for (double r : {0.01, 0.5, 1.7, 4.0, 9.0}) {
        EXPECT_NEAR(g_fn(r), 0.5 * gauss_G(r), 1e-18);
        EXPECT_NEAR(h_fn(r), g_fn(r) / v0(r), 1e-14);
        EXPECT_NEAR(A_fn(r) * h_fn(r), 1.0, 1e-14);
        EXPECT_NEAR(h_scaled(r), std::exp(r * r / 4.0) * h_fn(r), 1e-12 * h_scaled(r));
    }
}

TEST(RadialClosedForms, VelocityIsPerpGradient) {
    const double x1 = 0.7, x2 = -1.3, h = 1e-5;
    auto psi = [](double a, double b) { return psi0(std::hypot(a, b)); };
    const auto u = gauss_velocity(x1, x2);
    EXPECT_NEAR(u[0], -(psi(x1, x2 + h) - psi(x1, x2 - h)) / (2 * h), 1e-9);
    EXPECT_NEAR(u[1], (psi(x1 + h, x2) - psi(x1 - h, x2)) / (2 * h), 1e-9);
}

TEST(FunctionalRelation0, StreamFunctionIsFunctionOfVorticity) {
    // Psi0 + F0(G) = 0 for every radius.
    for (double r : {0.0, 0.2, 1.0, 3.0, 7.0, 12.0}) {
        EXPECT_NEAR(psi0(r) + F0(gauss_G(r)), 0.0, 1e-14) << "r = " << r;
        EXPECT_NEAR(F0_of_u(r * r / 4.0), F0(gauss_G(r)), 1e-14);
    }
}

TEST(FunctionalRelation0, DerivativeMatchesFiniteDifference) {
    for (double s : {0.01, 0.04, 0.07}) {
        const double h = 1e-7 * s;
        EXPECT_NEAR(F0_prime(s), (F0(s + h) - F0(s - h)) / (2 * h), 1e-6 * F0_prime(s));
    }
    EXPECT_THROW(F0(0.0), InvalidArgument);
    EXPECT_THROW(F0(1.0), InvalidArgument);
    EXPECT_NEAR(F0_prime_of_u(0.0), 1.0, 1e-16);
}

TEST(Harmonics, QSeriesConverges) {
    EXPECT_LT(q_series_check(0.3, -0.2, 60), 1e-14);
    EXPECT_GT(q_series_check(0.3, -0.2, 2), 1e-3);
    EXPECT_THROW(q_series_check(0.8, 0.8, 10), InvalidArgument);
    const auto q = q_poly(3, 1.0, 2.0);  // (1 + 2i)^3 = -11 - 2i
    EXPECT_DOUBLE_EQ(q.c, -11.0);
    EXPECT_DOUBLE_EQ(q.s, -2.0);
}

TEST(Harmonics, BaseFunctionLookup) {
    EXPECT_EQ(base_function_from_string("A"), BaseFunction::A);
    EXPECT_THROW(base_function_from_string("nope"), InvalidArgument);
    EXPECT_DOUBLE_EQ(eval_base(BaseFunction::G, 1.0), gauss_G(1.0));
}
