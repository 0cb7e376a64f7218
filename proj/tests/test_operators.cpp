#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "common.hpp"
#include "dipole/errors.hpp"
#include "dipole/gaussian_base.hpp"
#include "dipole/operators.hpp"

using namespace dipole;
using std::numbers::pi;

namespace {

// Generalized Laguerre Hermite function r^n L_k^{(n)}(r^2/4) G, eigenvalue -(n + 2k)/2 of L.
RadialProfile hermite_profile(const GridSpec& g, int n, int k) {
    return RadialProfile::sample_scaled(g, [n, k](double r) {
        return std::pow(r, n) * std::assoc_laguerre(k, n, r * r / 4.0) / (4.0 * pi);
    });
}

double sup_diff(const PolarField& a, const PolarField& b) { return (a - b).max_abs_stored(); }

PolarField random_field(const GridSpec& g, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    PolarField f(g);
    for (int n = 0; n <= 4; ++n) {
        for (Parity p : {Parity::cos_mode, Parity::sin_mode}) {
            if (n == 0 && p == Parity::sin_mode) continue;
            const double c0 = nd(rng), c1 = nd(rng), c2 = nd(rng);
            f.set({n, p}, RadialProfile::sample_scaled(g, [=](double r) {
                      const double q = r * r / 4.0;
                      return std::pow(r, n) * (c0 + c1 * q + c2 * q * q) / (4.0 * pi);
                  }));
        }
    }
    return f;
}

// Green's function quadrature for phi'' + phi'/r - n^2 phi/r^2 = w on a fine
// composite Simpson mesh, independent of the finite-difference solver.
double bs_oracle(int n, double r, const std::function<double(double)>& w) {
    const int m = 20000;
    const double R = 30.0;
    auto simpson = [&](double a, double b, auto&& f) {
        if (b <= a) return 0.0;
        const double h = (b - a) / m;
        double s = f(a) + f(b);
        for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
        return s * h / 3.0;
    };
    const double inner = simpson(0.0, r, [&](double s) { return std::pow(s, n + 1) * w(s); });
    const double outer = simpson(r, R, [&](double s) { return std::pow(s, 1 - n) * w(s); });
    return -(std::pow(r, -n) * inner + std::pow(r, n) * outer) / (2.0 * n);
}

}  // namespace

TEST(OperatorL, HermiteEigenfunctionsUpToDegreeFour) {
    GridSpec g;
    for (int n = 0; n <= 4; ++n) {
        for (int k = 0; 2 * k + n <= 4; ++k) {
            for (Parity p : {Parity::cos_mode, Parity::sin_mode}) {
                if (n == 0 && p == Parity::sin_mode) continue;
                PolarField f(g);
                f.set({n, p}, hermite_profile(g, n, k));
                const auto Lf = apply_L(f);
                const double lambda = -(n + 2.0 * k) / 2.0;
                EXPECT_LT(sup_diff(Lf, lambda * f) / f.max_abs_stored(), 1e-9) << "n=" << n << " k=" << k;
            }
        }
    }
}

// Oracle for (L - c)^{-1}: the same Laguerre eigenfunctions.
TEST(OperatorL, ShiftedSolveInvertsOnEigenfunctions) {
    GridSpec g;
    for (auto [n, k, c] : {std::tuple{0, 1, 0.25}, {1, 1, -0.2}, {2, 0, 1.5}, {3, 1, 0.7}, {2, 1, -0.5}}) {
        const auto rhs = hermite_profile(g, n, k);
        const auto u = solve_L_shifted(n, Parity::cos_mode, c, rhs);
        const double factor = 1.0 / (-(n + 2.0 * k) / 2.0 - c);
        PolarField expect(g);
        expect.set({n, Parity::cos_mode}, rhs);
        expect *= factor;
        // Weighted norm: the stored tail near r_max carries the truncated far-field condition.
        EXPECT_LT(y_norm(u - expect) / y_norm(expect), 1e-9) << "n=" << n << " k=" << k << " c=" << c;
    }
}

TEST(BiotSavart, GaussianMatchesClosedForm) {
    GridSpec g;
    const auto G = gaussian_field(g);
    const auto psi = biot_savart_mode(0, G.modes().begin()->second);
    std::vector<double> ref(g.n_points);
    for (int i = 0; i < g.n_points; ++i) ref[i] = psi0(g.r(i));
    EXPECT_LT(test::max_abs_diff(psi.values(), ref), 1e-11);
}

TEST(BiotSavart, ModeTwoMatchesGreenQuadrature) {
    GridSpec g;
    auto w = [](double r) { return r * r * (1.0 - r * r / 12.0) * std::exp(-r * r / 4.0); };
    const auto prof = RadialProfile::sample(g, Decay::gaussian_weighted, w);
    const auto phi = biot_savart_mode(2, prof);
    for (double r : {0.5, 1.0, 2.5, 4.0, 8.0}) {
        const int i = static_cast<int>(std::lround(r / g.spacing()));
        const double ri = g.r(i);
        EXPECT_NEAR(phi.value(i), bs_oracle(2, ri, w), 1e-9) << "r = " << ri;
    }
}

TEST(BiotSavart, ModeThreeMatchesGreenQuadrature) {
    GridSpec g;
    auto w = [](double r) { return r * r * r * std::exp(-r * r / 4.0); };
    const auto phi = biot_savart_mode(3, RadialProfile::sample(g, Decay::gaussian_weighted, w));
    for (double r : {0.7, 3.0, 6.0}) {
        const int i = static_cast<int>(std::lround(r / g.spacing()));
        EXPECT_NEAR(phi.value(i), bs_oracle(3, g.r(i), w), 1e-9);
    }
}

TEST(OperatorLambda, AnnihilatesRadialFieldsAndTranslations) {
    GridSpec g;
    const auto d1 = d1_gaussian_field(g), d2 = d2_gaussian_field(g);
    EXPECT_LT(apply_Lambda(d1).max_abs_stored() / d1.max_abs_stored(), 1e-9);
    EXPECT_LT(apply_Lambda(d2).max_abs_stored() / d2.max_abs_stored(), 1e-9);
    for (int k = 0; k <= 2; ++k) {
        PolarField f(g);
        f.set({0, Parity::cos_mode}, hermite_profile(g, 0, k));
        EXPECT_LT(apply_Lambda(f).max_abs_stored() / f.max_abs_stored(), 1e-9) << "k = " << k;
    }
}

// Property: <Lambda w, v>_Y = -<w, Lambda v>_Y.
TEST(OperatorLambda, SkewSymmetricOnRandomPairs) {
    GridSpec g;
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto w = random_field(g, rng), v = random_field(g, rng);
        const auto Lw = apply_Lambda(w), Lv = apply_Lambda(v);
        const double scale = y_norm(Lw) * y_norm(v) + y_norm(w) * y_norm(Lv);
        worst = std::max(worst, std::abs(y_inner(Lw, v) + y_inner(w, Lv)) / scale);
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(OperatorLambda, InversionReproducesRightHandSide) {
    GridSpec g;
    const auto b = RadialProfile::sample(g, Decay::gaussian_weighted, [](double r) { return r * r * g_fn(r) / (2 * pi); });
    const auto rep = invert_Lambda(2, Parity::sin_mode, b);
    EXPECT_LT(rep.residual, 1e-10);
    PolarField rhs(g);
    rhs.set({2, Parity::sin_mode}, b);
    EXPECT_LT(sup_diff(apply_Lambda(rep.omega), rhs) / rhs.max_abs_stored(), 1e-8);
}

TEST(OperatorLambda, ModeOneNeedsZeroFirstMoment) {
    GridSpec g;
    const auto ok = RadialProfile::sample(g, Decay::gaussian_weighted,
                                          [](double r) { return r * (r * r - 8.0) * std::exp(-r * r / 4.0); });
    const auto rep = invert_Lambda(1, Parity::sin_mode, ok);
    const auto m = moments(rep.omega);
    EXPECT_LT(std::abs(m.m1) + std::abs(m.m2), 1e-10);
    EXPECT_LT(rep.residual, 1e-9);
    const auto bad = RadialProfile::sample(g, Decay::gaussian_weighted, [](double r) { return r * std::exp(-r * r / 4.0); });
    EXPECT_THROW(invert_Lambda(1, Parity::sin_mode, bad), NumericalError);
}

TEST(Teps, ExpansionMatchesMirroredStreamFunction) {
    GridSpec g;
    const auto te = teps_expand(gaussian_field(g), 16);
    EXPECT_NEAR(te.log_coefficient, 1.0 / (2.0 * pi), 1e-12);
    const double eps = 0.05;
    auto mirrored = [eps](double x1, double x2) { return psi0(std::hypot(-x1 - 1.0 / eps, x2)); };
    // Sample on grid radii so the profiles are read without interpolation.
    for (auto [i, th] : {std::pair{100, 0.6}, {250, 2.3}, {400, -1.1}}) {
        const double r = g.r(i), x1 = r * std::cos(th), x2 = r * std::sin(th);
        double series = 0.0, series0 = 0.0;
        for (size_t n = 0; n < te.P.size(); ++n) {
            const double en = std::pow(eps, static_cast<double>(n + 1));
            for (const auto& [key, prof] : te.P[n].modes()) {
                const double ang = key.parity == Parity::cos_mode ? std::cos(key.n * th) : std::sin(key.n * th);
                series += en * ang * prof.value(i);
                if (key.n == 0) series0 += en * prof.value(0);
            }
        }
        const double exact = mirrored(x1, x2) - mirrored(0.0, 0.0);
        EXPECT_NEAR(series - series0, exact, 1e-10 * std::abs(exact) + 1e-13) << "r = " << r;
    }
}

TEST(Teps, ComplexMomentsOfTranslatedGaussian) {
    GridSpec g;
    // -d1 G is the first-order shift of G along xi1: mu_1 = 1.
    auto f = d1_gaussian_field(g);
    f *= -1.0;
    const auto mu = complex_moments(f, 3);
    EXPECT_NEAR(mu[0].real(), 0.0, 1e-13);
    EXPECT_NEAR(mu[1].real(), 1.0, 1e-12);
    EXPECT_NEAR(mu[1].imag(), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(mu[2]), 0.0, 1e-12);
}

TEST(PoissonBracket, AntisymmetricAndLeibniz) {
    GridSpec g;
    std::mt19937_64 rng(5);
    const auto a = random_field(g, rng), b = random_field(g, rng);
    const auto ab = poisson_bracket(a, b), ba = poisson_bracket(b, a);
    EXPECT_LT((ab + ba).max_abs_stored(), 1e-12 * ab.max_abs_stored());
    EXPECT_LT(poisson_bracket(a, a).max_abs_stored(), 1e-12 * ab.max_abs_stored());
}

TEST(Evaluators, StreamEvaluatorReproducesPsi0) {
    GridSpec g;
    const StreamEvaluator e(psi0_field(g));
    for (auto [x1, x2] : {std::pair{0.3, 0.4}, {3.0, -4.0}, {20.0, 10.0}, {40.0, 0.0}}) {
        const auto v = e.eval(x1, x2);
        const double r = std::hypot(x1, x2);
        EXPECT_NEAR(v[0], psi0(r), 1e-10);
        const auto u = gauss_velocity(x1, x2);
        EXPECT_NEAR(v[2], -u[0], 1e-10);
        EXPECT_NEAR(v[1], u[1], 1e-10);
    }
}
