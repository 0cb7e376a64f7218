#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "common.hpp"
#include "dipole/dns.hpp"
#include "dipole/errors.hpp"

using namespace dipole;
using std::numbers::pi;

namespace {

DnsConfig short_config(int n) {
    DnsConfig c;
    c.n = n;
    c.eps0 = 0.1;
    c.run_time = 0.3;
    return c;
}

const DnsRun& run256() {
    static const DnsRun r = run_dns(short_config(256), test::bundle(6));
    return r;
}

}  // namespace

TEST(Config, ParsesKeyValueText) {
    std::istringstream is("# comment\nre = 2000\n n=128 \nbox = 20 # trailing\ninit = gaussian\nadvection = false\n");
    const auto kv = parse_key_value(is);
    const auto c = dns_config_from(kv);
    EXPECT_NEAR(c.reynolds(), 2000.0, 1e-9);
    EXPECT_EQ(c.n, 128);
    EXPECT_EQ(c.box, 20.0);
    EXPECT_TRUE(c.gaussian_init);
    EXPECT_FALSE(c.advection);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(dns_config_from({{"unknown", "1"}}), InvalidArgument);
    EXPECT_THROW(dns_config_from({{"n", "12x"}}), InvalidArgument);
    EXPECT_THROW(dns_config_from({{"init", "vortex"}}), InvalidArgument);
    DnsConfig c;
    c.eps0 = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = DnsConfig{};
    c.box = 8.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = DnsConfig{};
    c.n = 101;
    EXPECT_THROW(c.validate(), InvalidArgument);
    EXPECT_THROW(read_key_value_file("/nonexistent.cfg"), InvalidArgument);
}

// Heat equation: each coordinate variance of a Gaussian grows by exactly 2 nu t.
TEST(Solver, HeatModeVariance) {
    const double nu = 0.01, s0 = 0.1, T = 1.0;
    SpectralSolver s(128, 16.0, nu, false);
    Samples2D w(s.grid());
    const auto& g = s.grid();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double r2 = g.x(i) * g.x(i) + g.y(j) * g.y(j);
            w.at(i, j) = std::exp(-r2 / (4.0 * s0)) / (4.0 * pi * s0);
        }
    s.set_vorticity(w);
    for (int k = 0; k < 20; ++k) s.step(T / 20);
    EXPECT_NEAR(s.time(), T, 1e-14);
    const auto out = s.vorticity();
    double m0 = 0.0, m2 = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            m0 += out.at(i, j);
            m2 += g.x(i) * g.x(i) * out.at(i, j);
        }
    EXPECT_NEAR(m2 / m0, 2.0 * s0 + 2.0 * nu * T, 1e-6 * (2.0 * s0 + 2.0 * nu * T));
}

TEST(Solver, VelocityOfShearMode) {
    SpectralSolver s(64, 16.0, 0.0);
    const auto& g = s.grid();
    const double k = 2.0 * pi / 16.0;
    Samples2D w(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) w.at(i, j) = std::sin(k * g.x(i));
    s.set_vorticity(w);
    // w = sin(k x1) gives psi = -sin(k x1)/k^2 and u2 = d1 psi = -cos(k x1)/k.
    const auto u = s.velocity();
    for (int i = 0; i < g.nx; i += 7) {
        EXPECT_NEAR(u[1].at(i, 3), -std::cos(k * g.x(i)) / k, 1e-12);
        EXPECT_NEAR(u[0].at(i, 3), 0.0, 1e-12);
    }
}

TEST(Init, BundleProfileFitsBox) {
    // At eps0 = 0.05 the two cores overlap by less than 1e-20 across x1 = 0.
    auto c = short_config(512);
    c.eps0 = 0.05;
    const auto w = init_from_dipole(c, test::bundle(4));
    double total = 0.0, right = 0.0;
    for (int j = 0; j < w.grid.ny; ++j)
        for (int i = 0; i < w.grid.nx; ++i) {
            total += w.at(i, j);
            if (i >= w.grid.nx / 2) right += w.at(i, j);
        }
    EXPECT_NEAR(total * w.grid.cell_area(), 0.0, 1e-10);
    EXPECT_NEAR(right * w.grid.cell_area(), -c.dipole.gamma, 1e-9);
}

TEST(Run, ConservesCirculationAndSymmetry) {
    const auto& s = run256().summary;
    EXPECT_LT(s.circulation_drift, 1e-12);
    EXPECT_LT(s.max_symmetry_defect, 1e-12);
    EXPECT_LT(s.m1_drift, 1e-5);
    EXPECT_TRUE(s.enstrophy_monotone);
    EXPECT_FALSE(s.truncated);
}

TEST(Run, SpeedCloseToPointVortexValue) {
    const auto& s = run256().summary;
    EXPECT_NEAR(s.deficit, 0.0, 0.05);
    EXPECT_GT(s.deficit, 0.0);
    EXPECT_NEAR(s.image_velocity, -1.232e-2, 1e-4);
}

TEST(Run, ImageCorrectionIsEpsIndependent) {
    SpectralSolver s(512, 16.0, DipoleParams{}.nu);
    const DipoleParams p;
    EXPECT_NEAR(image_velocity(s, p, 0.05), image_velocity(s, p, 0.1), 1e-7);
}

TEST(Run, GridRefinement) {
    const auto fine = run_dns(short_config(512), test::bundle(6));
    const double a = run256().summary.speed, b = fine.summary.speed;
    EXPECT_LT(std::abs(a - b) / std::abs(b), 2e-3);
}

TEST(Run, TrajectoryCsvIsDeterministic) {
    std::ostringstream a, b;
    write_trajectory_csv(a, run256(), {"test"});
    const auto again = run_dns(short_config(256), test::bundle(6));
    write_trajectory_csv(b, again, {"test"});
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().rfind("# test\n", 0), 0u);
}

TEST(Sweep, NeedsSeveralStarts) {
    EXPECT_THROW(dns_sweep(short_config(128), {0.1}, test::bundle(4)), InvalidArgument);
}
