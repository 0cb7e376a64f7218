// One line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dipole/dns.hpp"
#include "dipole/energy_diag.hpp"
#include "dipole/expansion.hpp"
#include "dipole/gaussian_base.hpp"
#include "dipole/operators.hpp"

using namespace dipole;
using std::numbers::pi;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void report(int id, bool ok, const std::string& detail) {
    if (!ok) ++failures;
    std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

template <class... A>
std::string fmt(const char* f, A... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

// Runs one criterion, turning exceptions into failures.
void run(int id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what());
    }
}

RadialProfile hermite_profile(const GridSpec& g, int n, int k) {
    return RadialProfile::sample_scaled(g, [n, k](double r) {
        return std::pow(r, n) * std::assoc_laguerre(k, n, r * r / 4.0) / (4.0 * pi);
    });
}

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

}  // namespace

int main() {
    const GridSpec grid;

    run(1, [&] {
        const auto t0 = clock_type::now();
        const auto a = alpha(build_bundle(grid, 2));
        const double t = seconds_since(t0);
        report(1, std::abs(a.alpha - 22.24) <= 0.23 && t < 5.0,
               fmt("alpha = %.6f (22.24 +- 0.23), %.2f s (< 5 s)", a.alpha, t));
    });

    run(2, [&] {
        const auto b = build_bundle(grid, 5);
        double worst = 0.0;
        for (int k = 1; k <= 3; ++k) worst = std::max({worst, std::abs(b.zeta_E[k]), std::abs(b.zeta_NS[k])});
        report(2, worst < 1e-7, fmt("max |zeta_1..3| = %.3e (< 1e-7), M = 5", worst));
    });

    run(3, [&] {
        bool ok = true;
        std::string detail;
        for (int M : {2, 3, 4}) {
            const auto fit = remainder_eps_slope(build_bundle(grid, M), 0.0, 0.02, 0.1, 7);
            ok = ok && std::abs(fit.slope - (M + 1)) <= 0.15;
            detail += fmt("M=%d eps-slope %.3f (%d +- 0.15); ", M, fit.slope, M + 1);
        }
        const auto d = remainder_delta_slope(build_bundle(grid, 2), 0.05, 0.01, 0.1, 5);
        ok = ok && std::abs(d.slope - 2.0) <= 0.2;
        detail += fmt("M=2 delta-slope %.3f (2 +- 0.2)", d.slope);
        report(3, ok, detail);
    });

    run(4, [&] {
        double eig = 0.0;
        for (int n = 0; n <= 4; ++n)
            for (int k = 0; 2 * k + n <= 4; ++k)
                for (Parity p : {Parity::cos_mode, Parity::sin_mode}) {
                    if (n == 0 && p == Parity::sin_mode) continue;
                    PolarField f(grid);
                    f.set({n, p}, hermite_profile(grid, n, k));
                    const double lambda = -(n + 2.0 * k) / 2.0;
                    eig = std::max(eig, (apply_L(f) - lambda * f).max_abs_stored() / f.max_abs_stored());
                }
        double kern = 0.0;
        for (const auto& f : {d1_gaussian_field(grid), d2_gaussian_field(grid), gaussian_field(grid)})
            kern = std::max(kern, apply_Lambda(f).max_abs_stored() / f.max_abs_stored());
        for (int k = 1; k <= 2; ++k) {
            PolarField f(grid);
            f.set({0, Parity::cos_mode}, hermite_profile(grid, 0, k));
            kern = std::max(kern, apply_Lambda(f).max_abs_stored() / f.max_abs_stored());
        }
        std::mt19937_64 rng(2024);
        double skew = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const auto w = random_field(grid, rng), v = random_field(grid, rng);
            const auto Lw = apply_Lambda(w), Lv = apply_Lambda(v);
            const double scale = y_norm(Lw) * y_norm(v) + y_norm(w) * y_norm(Lv);
            skew = std::max(skew, std::abs(y_inner(Lw, v) + y_inner(w, Lv)) / scale);
        }
        report(4, eig < 1e-9 && kern < 1e-9 && skew < 1e-9,
               fmt("L eigen defect %.2e, Lambda kernel %.2e, skew defect %.2e over 50 pairs (all < 1e-9)", eig, kern,
                   skew));
    });

    run(5, [&] {
        const auto b = build_bundle(grid, 2);
        const auto* om = b.omega_E[2].find({2, Parity::cos_mode});
        const auto* ps = b.psi_E[2].find({2, Parity::cos_mode});
        double worst = 0.0, min_scaled = 1e300;
        for (int i = 1; i < grid.n_points; ++i) {
            const double r = grid.r(i);
            min_scaled = std::min(min_scaled, -om->stored()[i]);
            worst = std::max(worst, std::abs(-om->value(i) - h_fn(r) * (ps->value(i) + r * r / (4.0 * pi))));
        }
        report(5, min_scaled > 0.0 && worst < 1e-8,
               fmt("min e^{r^2/4} w2 (r > 0) = %.3e (> 0), sup |w2 - h(phi2 + r^2/4pi)| = %.2e (< 1e-8)", min_scaled,
                   worst));
    });

    run(6, [&] {
        const double d = std::abs(2.0 * pi * gaussian_speed(0.05) - 1.0);
        report(6, d < 1e-8, fmt("|2 pi gaussian_speed(0.05) - 1| = %.2e (< 1e-8)", d));
    });

    run(7, [&] {
        bool ok = true;
        std::string detail;
        for (int M : {2, 4}) {
            const auto b = build_bundle(grid, M);
            const auto f = functional_relation(b);
            const auto th = theta_check(b, 0.03, 0.1, 6);
            ok = ok && f.F2_cancellation < 1e-8 && std::abs(th.fit.slope - (M + 1)) <= 0.3;
            detail += fmt("M=%d F2 cancellation %.2e (< 1e-8), theta slope %.3f (%d +- 0.3); ", M, f.F2_cancellation,
                          th.fit.slope, M + 1);
        }
        report(7, ok, detail);
    });

    run(8, [&] {
        const auto t0 = clock_type::now();
        const auto rep = coercivity_check(build_bundle(grid, 4), {0.03, 0.05, 0.08}, 100, 12345);
        const double t = seconds_since(t0);
        bool ok = t < 120.0;
        std::string detail;
        for (const auto& r : rep.rows) {
            ok = ok && r.non_positive == 0 && r.min_energy_ratio >= 0.01 && r.min_diffusion_ratio >= 0.01;
            detail += fmt("eps %.2f: E<=0 %d, min E/|w|^2 %.3f, min D ratio %.3f; ", r.eps, r.non_positive,
                          r.min_energy_ratio, r.min_diffusion_ratio);
        }
        report(8, ok, detail + fmt("%.1f s (< 120 s)", t));
    });

    run(9, [&] {
        DnsConfig c;  // Re = 5000, N = 512
        const auto t0 = clock_type::now();
        const auto sw = dns_sweep(c, {0.05, 0.06, 0.07, 0.08, 0.09, 0.10}, build_bundle(grid, c.order));
        const double t = seconds_since(t0);
        double worst = 0.0;
        for (const auto& r : sw.runs) worst = std::max(worst, std::abs(r.summary.ratio - 1.0));
        const double slope = sw.deficit_slope.slope;
        const bool ok = worst <= 0.25 && std::abs(slope - 4.0) <= 0.4 && sw.max_l1_ratio < 10.0 && t <= 1800.0;
        report(9, ok,
               fmt("max |deficit / (2 pi alpha eps^4) - 1| = %.3f (<= 0.25), slope %.3f (4 +- 0.4), "
                   "max L1 ratio %.2f (< 10), %.0f s (<= 1800 s)",
                   worst, slope, sw.max_l1_ratio, t));
    });

    run(10, [&] {
        const auto a = bundle_to_json(build_bundle(grid, 2));
        const auto b = bundle_to_json(build_bundle(grid, 2));
        report(10, a == b, fmt("repeated order-2 builds byte-identical (%zu bytes)", a.size()));
    });

    std::printf("%d criteria failed\n", failures);
    return failures;
}
