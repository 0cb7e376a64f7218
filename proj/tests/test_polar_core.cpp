#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dipole/errors.hpp"
#include "dipole/numerics.hpp"
#include "dipole/polar_core.hpp"

using namespace dipole;
using std::numbers::pi;

namespace {

RadialProfile gauss_profile(const GridSpec& g, double c) {
    return RadialProfile::sample_scaled(g, [c](double) { return c; });
}

}  // namespace

TEST(GridSpec, RejectsBadGrids) {
    EXPECT_THROW((GridSpec{0.0, 100}).validate(), InvalidArgument);
    EXPECT_THROW((GridSpec{10.0, 3}).validate(), InvalidArgument);
    EXPECT_NO_THROW(GridSpec{}.validate());
    GridSpec g;
    EXPECT_DOUBLE_EQ(g.r(g.n_points - 1), g.r_max);
}

TEST(RadialProfile, ScaledStorageRoundTrip) {
    GridSpec g;
    auto p = RadialProfile::sample(g, Decay::gaussian_weighted, [](double r) { return std::exp(-r * r / 4.0); });
    for (int i = 0; i < g.n_points; i += 97) EXPECT_NEAR(p.stored()[i], 1.0, 1e-12);
    EXPECT_NEAR(p.value(0), 1.0, 1e-15);
    // Tail keeps full relative precision where a(r) underflows.
    EXPECT_EQ(p.value(g.n_points - 1), std::exp(-g.r_max * g.r_max / 4.0));
}

TEST(RadialProfile, AxpyMergesDecayClasses) {
    GridSpec g;
    auto a = RadialProfile::sample(g, Decay::gaussian_weighted, [](double r) { return std::exp(-r * r / 4.0); });
    auto b = RadialProfile::sample(g, Decay::polynomial_growth, [](double r) { return r; });
    auto c = a;
    c.axpy(2.0, b);
    EXPECT_EQ(c.decay(), weaker(Decay::gaussian_weighted, Decay::polynomial_growth));
    for (int i = 0; i < g.n_points; i += 211) {
        const double r = g.r(i);
        EXPECT_NEAR(c.value(i), std::exp(-r * r / 4.0) + 2.0 * r, 1e-12 * (1.0 + r));
    }
}

TEST(Quadrature, RadialMomentsOfGaussian) {
    GridSpec g;
    const auto p = gauss_profile(g, 1.0);
    // int_0^inf r^{2k+1} e^{-r^2/4} dr = 2^{2k+1} k!
    EXPECT_NEAR(quad_radial(p, 1), 2.0, 1e-12);
    EXPECT_NEAR(quad_radial(p, 3), 8.0, 1e-11);
    EXPECT_NEAR(quad_radial(p, 5), 64.0, 1e-10);
}

TEST(Quadrature, NewtonCotesExactOnQuintics) {
    const int n = 23;  // leftover intervals exercise the tail rule
    const double h = 0.1;
    const auto& w = radial_weights(h, n);
    ASSERT_EQ(static_cast<int>(w.size()), n);
    for (int deg = 0; deg <= 5; ++deg) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += w[i] * std::pow(i * h, deg);
        const double exact = std::pow((n - 1) * h, deg + 1) / (deg + 1);
        EXPECT_NEAR(s, exact, 1e-12 * exact) << "degree " << deg;
    }
}

TEST(Moments, GaussianHasUnitMass) {
    GridSpec g;
    PolarField f(g);
    f.set({0, Parity::cos_mode}, gauss_profile(g, 1.0 / (4.0 * pi)));
    const auto m = moments(f);
    EXPECT_NEAR(m.mass, 1.0, 1e-12);
    EXPECT_EQ(m.m1, 0.0);
    EXPECT_EQ(m.m2, 0.0);
}

TEST(Moments, FirstMomentsComeFromModeOne) {
    GridSpec g;
    PolarField f(g);
    // xi1 G and xi2 G have first moments int r^2 cos^2 G = 2.
    f.set({1, Parity::cos_mode}, RadialProfile::sample_scaled(g, [](double r) { return r / (4.0 * pi); }));
    f.set({1, Parity::sin_mode}, RadialProfile::sample_scaled(g, [](double r) { return -3.0 * r / (4.0 * pi); }));
    const auto m = moments(f);
    EXPECT_NEAR(m.mass, 0.0, 1e-15);
    EXPECT_NEAR(m.m1, 2.0, 1e-11);
    EXPECT_NEAR(m.m2, -6.0, 1e-11);
}

TEST(PolarField, ArithmeticAndPrune) {
    GridSpec g;
    PolarField a(g), b(g);
    a.set({2, Parity::cos_mode}, gauss_profile(g, 1.0));
    b.set({2, Parity::cos_mode}, gauss_profile(g, 1.0));
    b.set({3, Parity::sin_mode}, gauss_profile(g, 1e-20));
    auto c = a - b;
    c.prune(1e-15);
    EXPECT_TRUE(c.empty());
    auto d = 2.0 * a + b;
    EXPECT_NEAR(d.find({2, Parity::cos_mode})->stored()[10], 3.0, 1e-15);
    EXPECT_EQ(d.max_mode(), 3);
    EXPECT_TRUE(d.radial_part().empty());
}

TEST(PolarField, RejectsMismatchedGrid) {
    PolarField a(GridSpec{});
    EXPECT_THROW(a.set({0, Parity::cos_mode}, gauss_profile(GridSpec{20.0, 2001}, 1.0)), InvalidArgument);
    EXPECT_THROW(a.set({0, Parity::sin_mode}, gauss_profile(GridSpec{}, 1.0)), InvalidArgument);
}

TEST(EpsDeltaSeries, TruncatesAndEvaluates) {
    GridSpec g;
    PolarField f(g);
    f.set({0, Parity::cos_mode}, gauss_profile(g, 1.0));
    EpsDeltaSeries s(g, 3, 1);
    s.add_term(0, 0, f);
    s.add_term(2, 1, f, 2.0);
    s.add_term(4, 0, f);  // beyond order_eps
    EXPECT_EQ(s.truncated_terms(), 1u);
    const auto v = s.evaluate(0.1, 0.5);
    EXPECT_NEAR(v.find({0, Parity::cos_mode})->stored()[0], 1.0 + 2.0 * 0.01 * 0.5, 1e-15);
    s.multiply_by_eps_power(2);
    EXPECT_FALSE(s.coefficient(2, 0).empty());
    EXPECT_TRUE(s.coefficient(0, 0).empty());
}

TEST(WeightedNorm, HermiteModesAreOrthogonal) {
    GridSpec g;
    PolarField a(g), b(g);
    a.set({1, Parity::cos_mode}, RadialProfile::sample_scaled(g, [](double r) { return r; }));
    b.set({1, Parity::sin_mode}, RadialProfile::sample_scaled(g, [](double r) { return r; }));
    EXPECT_EQ(y_inner(a, b), 0.0);
    // ||r e^{-r^2/4} cos||_Y^2 = pi int r^3 e^{-r^2/4} dr = 8 pi
    EXPECT_NEAR(y_norm(a), std::sqrt(8.0 * pi), 1e-11);
}

TEST(Numerics, FornbergReproducesPolynomialDerivatives) {
    const std::vector<double> x{-2, -1, 0, 1, 2, 3};
    const auto w = num::fornberg_weights(0.0, x, 2);
    double d1 = 0.0, d2 = 0.0;
    for (size_t j = 0; j < x.size(); ++j) {
        const double f = std::pow(x[j], 4) + x[j];
        d1 += w[x.size() + j] * f;
        d2 += w[2 * x.size() + j] * f;
    }
    EXPECT_NEAR(d1, 1.0, 1e-12);
    EXPECT_NEAR(d2, 0.0, 1e-12);
}

TEST(Numerics, LogLogFitRecoversPower) {
    std::vector<double> x, y;
    for (double v : num::log_spaced(0.02, 0.1, 7)) {
        x.push_back(v);
        y.push_back(3.5 * std::pow(v, 4.0));
    }
    EXPECT_NEAR(num::fit_loglog(x, y).slope, 4.0, 1e-12);
}

TEST(Numerics, BandSolveMatchesDenseTridiagonal) {
    const int n = 50;
    num::BandMatrix m(n, 1, 1);
    std::vector<double> rhs(n), x(n);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < n; ++i) x[i] = u(rng);
    for (int i = 0; i < n; ++i) {
        m.add(i, i, 4.0);
        if (i > 0) m.add(i, i - 1, -1.0);
        if (i + 1 < n) m.add(i, i + 1, -1.5);
    }
    for (int i = 0; i < n; ++i)
        rhs[i] = 4.0 * x[i] - (i > 0 ? x[i - 1] : 0.0) - 1.5 * (i + 1 < n ? x[i + 1] : 0.0);
    const auto s = m.solve(rhs);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(s[i], x[i], 1e-13);
}

TEST(Numerics, CompensatedSumBeatsNaive) {
    num::CompensatedSum s;
    s.add(1.0);
    for (int i = 0; i < 1000; ++i) s.add(1e-16);
    s.add(-1.0);
    EXPECT_NEAR(s.value(), 1e-13, 1e-20);
}

TEST(Serialization, CsvHasHeaderAndRows) {
    GridSpec g{5.0, 21};
    PolarField f(g);
    f.set({0, Parity::cos_mode}, gauss_profile(g, 1.0));
    std::ostringstream os;
    f.write_csv(os);
    const std::string s = os.str();
    EXPECT_EQ(s.rfind("r", 0), 0u);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 22);
}
