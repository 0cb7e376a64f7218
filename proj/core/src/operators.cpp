#include "dipole/operators.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "dipole/errors.hpp"
#include "dipole/gaussian_base.hpp"
#include "dipole/numerics.hpp"
#include "dipole/radial_ops.hpp"

namespace dipole {

namespace {

constexpr double pi = std::numbers::pi;

Parity swapped(Parity p) { return p == Parity::cos_mode ? Parity::sin_mode : Parity::cos_mode; }

// d/dtheta of cos(n t) is -n sin(n t); of sin(n t) is +n cos(n t).
double dtheta_sign(Parity p) { return p == Parity::cos_mode ? -1.0 : 1.0; }

void require_gaussian(const RadialProfile& p, const char* who) {
    if (p.decay() != Decay::gaussian_weighted) {
        throw InvalidArgument(std::string(who) + ": expected a Gaussian-weighted profile, got " + to_string(p.decay()));
    }
}

// Adds radial(r) * trig_a(m theta) * trig_b(n theta) to out.
void add_trig_product(PolarField& out, Parity a, int m, Parity b, int n, const RadialProfile& radial) {
    auto emit = [&](Parity kind, int k, double sgn) {
        if (k < 0) {
            k = -k;
            if (kind == Parity::sin_mode) sgn = -sgn;
        }
        if (kind == Parity::sin_mode && k == 0) return;
        out.accumulate({k, kind}, radial, 0.5 * sgn);
    };
    if (a == Parity::cos_mode && b == Parity::cos_mode) {
        emit(Parity::cos_mode, m - n, 1.0);
        emit(Parity::cos_mode, m + n, 1.0);
    } else if (a == Parity::sin_mode && b == Parity::sin_mode) {
        emit(Parity::cos_mode, m - n, 1.0);
        emit(Parity::cos_mode, m + n, -1.0);
    } else if (a == Parity::sin_mode && b == Parity::cos_mode) {
        emit(Parity::sin_mode, m + n, 1.0);
        emit(Parity::sin_mode, m - n, 1.0);
    } else {
        emit(Parity::sin_mode, m + n, 1.0);
        emit(Parity::sin_mode, m - n, -1.0);
    }
}

// Replaces the r = 0 sample by its regular limit.
void fix_origin(PolarField& f) {
    PolarField fixed(f.grid());
    for (const auto& [k, p] : f.modes()) {
        RadialProfile q = p;
        auto& s = q.stored();
        s[0] = k.n == 0 ? radial::even_limit_at_origin(s[1], s[2], s[3]) : 0.0;
        fixed.set(k, std::move(q));
    }
    f = std::move(fixed);
}

Decay product_decay(Decay a, Decay b, const char* who) {
    if (a == Decay::polynomial_growth && b == Decay::polynomial_growth) {
        throw InvalidArgument(std::string(who) + ": both factors grow polynomially");
    }
    if (a == Decay::gaussian_weighted || b == Decay::gaussian_weighted) return Decay::gaussian_weighted;
    return weaker(a, b);
}

}  // namespace

// ---------------------------------------------------------------- named fields

PolarField gaussian_field(const GridSpec& g) {
    PolarField f(g);
    f.set({0, Parity::cos_mode}, RadialProfile::sample_scaled(g, [](double) { return 1.0 / (4.0 * pi); }));
    return f;
}

PolarField d1_gaussian_field(const GridSpec& g) {
    PolarField f(g);
    f.set({1, Parity::cos_mode}, RadialProfile::sample_scaled(g, [](double r) { return -r / (8.0 * pi); }));
    return f;
}

PolarField d2_gaussian_field(const GridSpec& g) {
    PolarField f(g);
    f.set({1, Parity::sin_mode}, RadialProfile::sample_scaled(g, [](double r) { return -r / (8.0 * pi); }));
    return f;
}

PolarField psi0_field(const GridSpec& g) {
    PolarField f(g);
    f.set({0, Parity::cos_mode}, RadialProfile::sample(g, Decay::bounded, [](double r) { return psi0(r); }));
    return f;
}

PolarField xi1_field(const GridSpec& g) {
    PolarField f(g);
    f.set({1, Parity::cos_mode}, RadialProfile::sample(g, Decay::polynomial_growth, [](double r) { return r; }));
    return f;
}

PolarField xi2_field(const GridSpec& g) {
    PolarField f(g);
    f.set({1, Parity::sin_mode}, RadialProfile::sample(g, Decay::polynomial_growth, [](double r) { return r; }));
    return f;
}

// ---------------------------------------------------------------- L

PolarField apply_L(const PolarField& f) {
    const GridSpec& g = f.grid();
    const int N = g.n_points;
    PolarField out(g);
    for (const auto& [k, p] : f.modes()) {
        const int n = k.n;
        const auto d1 = radial::derivative(p.stored(), g, n, 1);
        const auto d2 = radial::derivative(p.stored(), g, n, 2);
        const bool scaled = p.decay() == Decay::gaussian_weighted;
        std::vector<double> o(static_cast<size_t>(N));
        for (int i = 1; i < N; ++i) {
            const auto u = static_cast<size_t>(i);
            const double r = g.r(i);
            const double v = p.stored()[u];
            double val = d2[u] + d1[u] / r - n * n * v / (r * r);
            val += scaled ? -0.5 * r * d1[u] : 0.5 * r * d1[u] + v;
            o[u] = val;
        }
        if (n == 0) {
            o[0] = 2.0 * d2[0] + (scaled ? 0.0 : p.stored()[0]);
        } else {
            o[0] = 0.0;
        }
        out.set(k, RadialProfile(g, p.decay(), std::move(o)));
    }
    return out;
}

PolarField solve_L_shifted(int n, Parity par, double c, const RadialProfile& rhs) {
    require_gaussian(rhs, "solve_L_shifted");
    if (n < 0 || (n == 0 && par == Parity::sin_mode)) throw InvalidArgument("solve_L_shifted: invalid mode");
    for (int k = 0; 2 * k + n <= 400; ++k) {
        if (std::abs(c + 0.5 * (n + 2 * k)) < 1e-12) {
            throw InvalidArgument("solve_L_shifted: shift coincides with an eigenvalue of L");
        }
    }
    const GridSpec& g = rhs.grid();
    const int N = g.n_points;
    radial::BvpSpec spec;
    spec.n = n;
    spec.a2.assign(static_cast<size_t>(N), 1.0);
    spec.a1.resize(static_cast<size_t>(N));
    spec.a0.resize(static_cast<size_t>(N));
    for (int i = 1; i < N; ++i) {
        const double r = g.r(i);
        spec.a1[static_cast<size_t>(i)] = 1.0 / r - 0.5 * r;
        spec.a0[static_cast<size_t>(i)] = -static_cast<double>(n * n) / (r * r) - c;
    }
    spec.a2[0] = 2.0;
    spec.a1[0] = 0.0;
    spec.a0[0] = -c;
    // At r_max the polynomially bounded solution balances the first-order terms.
    const double R = g.r_max;
    spec.end_c1 = 1.0 / R - 0.5 * R;
    spec.end_c0 = -static_cast<double>(n * n) / (R * R) - c;
    spec.end_rhs = rhs.stored().back();
    auto v = radial::solve_bvp(g, spec, rhs.stored());
    PolarField out(g);
    out.set({n, par}, RadialProfile(g, Decay::gaussian_weighted, std::move(v)));
    return out;
}

// ---------------------------------------------------------------- Biot-Savart

RadialProfile biot_savart_mode(int n, const RadialProfile& w) {
    require_gaussian(w, "biot_savart_mode");
    if (n < 0) throw InvalidArgument("biot_savart_mode: negative mode");
    const GridSpec& g = w.grid();
    const int N = g.n_points;
    const auto wv = w.values();
    if (n == 0) {
        std::vector<double> sw(static_cast<size_t>(N));
        for (int i = 0; i < N; ++i) sw[static_cast<size_t>(i)] = g.r(i) * wv[static_cast<size_t>(i)];
        const auto A = radial::cumulative_integral(sw, g);
        std::vector<double> k(static_cast<size_t>(N), 0.0);
        for (int i = 1; i < N; ++i) k[static_cast<size_t>(i)] = A[static_cast<size_t>(i)] / g.r(i);
        const auto K = radial::cumulative_integral(k, g);
        const double mass_term = A.back();
        std::vector<double> phi(static_cast<size_t>(N));
        // Kernel (1/2pi) log(|x - y| / 2), which makes the Gaussian's stream function psi0.
        for (int i = 0; i < N; ++i) {
            phi[static_cast<size_t>(i)] =
                mass_term * (std::log(g.r_max) - std::numbers::ln2) - (K.back() - K[static_cast<size_t>(i)]);
        }
        return RadialProfile(g, Decay::bounded, std::move(phi));
    }
    radial::BvpSpec spec;
    spec.n = n;
    spec.a2.assign(static_cast<size_t>(N), 1.0);
    spec.a1.assign(static_cast<size_t>(N), 0.0);
    spec.a0.assign(static_cast<size_t>(N), 0.0);
    for (int i = 1; i < N; ++i) {
        const double r = g.r(i);
        spec.a1[static_cast<size_t>(i)] = 1.0 / r;
        spec.a0[static_cast<size_t>(i)] = -static_cast<double>(n * n) / (r * r);
    }
    spec.end_c1 = 1.0;
    spec.end_c0 = n / g.r_max;
    spec.end_rhs = 0.0;
    auto phi = radial::solve_bvp(g, spec, wv);
    return RadialProfile(g, Decay::bounded, std::move(phi));
}

PolarField biot_savart(const PolarField& w) {
    PolarField out(w.grid());
    for (const auto& [k, p] : w.modes()) out.set(k, biot_savart_mode(k.n, p));
    return out;
}

// ---------------------------------------------------------------- bracket and product

PolarField poisson_bracket(const PolarField& f, const PolarField& g) {
    if (!(f.grid() == g.grid())) throw InvalidArgument("poisson_bracket: incompatible grids");
    const GridSpec& grid = f.grid();
    const int N = grid.n_points;
    PolarField out(grid);
    std::map<ModeKey, RadialProfile> df, dg;
    for (const auto& [k, p] : f.modes()) df.emplace(k, radial::d_dr(p, k.n));
    for (const auto& [k, p] : g.modes()) dg.emplace(k, radial::d_dr(p, k.n));
    for (const auto& [kf, pf] : f.modes()) {
        for (const auto& [kg, pg] : g.modes()) {
            if (kf.n == 0 && kg.n == 0) continue;
            const Decay d = product_decay(pf.decay(), pg.decay(), "poisson_bracket");
            const bool both = pf.decay() == Decay::gaussian_weighted && pg.decay() == Decay::gaussian_weighted;
            const auto& F = pf.stored();
            const auto& G = pg.stored();
            const auto& Fd = df.at(kf).stored();
            const auto& Gd = dg.at(kg).stored();
            if (kg.n > 0) {
                std::vector<double> t(static_cast<size_t>(N), 0.0);
                const double c = dtheta_sign(kg.parity) * kg.n;
                for (int i = 1; i < N; ++i) {
                    const auto u = static_cast<size_t>(i);
                    const double r = grid.r(i);
                    t[u] = c * Fd[u] * G[u] / r * (both ? std::exp(-0.25 * r * r) : 1.0);
                }
                add_trig_product(out, kf.parity, kf.n, swapped(kg.parity), kg.n, RadialProfile(grid, d, std::move(t)));
            }
            if (kf.n > 0) {
                std::vector<double> t(static_cast<size_t>(N), 0.0);
                const double c = -dtheta_sign(kf.parity) * kf.n;
                for (int i = 1; i < N; ++i) {
                    const auto u = static_cast<size_t>(i);
                    const double r = grid.r(i);
                    t[u] = c * F[u] * Gd[u] / r * (both ? std::exp(-0.25 * r * r) : 1.0);
                }
                add_trig_product(out, swapped(kf.parity), kf.n, kg.parity, kg.n, RadialProfile(grid, d, std::move(t)));
            }
        }
    }
    fix_origin(out);
    return out;
}

PolarField multiply(const PolarField& f, const PolarField& g) {
    if (!(f.grid() == g.grid())) throw InvalidArgument("multiply: incompatible grids");
    const GridSpec& grid = f.grid();
    const int N = grid.n_points;
    PolarField out(grid);
    for (const auto& [kf, pf] : f.modes()) {
        for (const auto& [kg, pg] : g.modes()) {
            const Decay d = (pf.decay() == Decay::gaussian_weighted || pg.decay() == Decay::gaussian_weighted)
                                ? Decay::gaussian_weighted
                                : weaker(pf.decay(), pg.decay());
            const bool both = pf.decay() == Decay::gaussian_weighted && pg.decay() == Decay::gaussian_weighted;
            std::vector<double> t(static_cast<size_t>(N));
            for (int i = 0; i < N; ++i) {
                const auto u = static_cast<size_t>(i);
                const double r = grid.r(i);
                t[u] = pf.stored()[u] * pg.stored()[u] * (both ? std::exp(-0.25 * r * r) : 1.0);
            }
            add_trig_product(out, kf.parity, kf.n, kg.parity, kg.n, RadialProfile(grid, d, std::move(t)));
        }
    }
    return out;
}

// ---------------------------------------------------------------- Lambda

PolarField apply_Lambda(const PolarField& w) {
    const GridSpec& g = w.grid();
    const int N = g.n_points;
    PolarField out(g);
    for (const auto& [k, p] : w.modes()) {
        require_gaussian(p, "apply_Lambda");
        if (k.n == 0) continue;
        const auto phi = biot_savart_mode(k.n, p);
        std::vector<double> o(static_cast<size_t>(N));
        for (int i = 0; i < N; ++i) {
            const auto u = static_cast<size_t>(i);
            const double r = g.r(i);
            o[u] = k.n * (v0(r) * p.stored()[u] + phi.stored()[u] / (8.0 * pi));
        }
        // cos -> -n(...) sin,  sin -> +n(...) cos
        const double sgn = k.parity == Parity::cos_mode ? -1.0 : 1.0;
        RadialProfile prof(g, Decay::gaussian_weighted, std::move(o));
        prof *= sgn;
        out.accumulate({k.n, swapped(k.parity)}, prof);
    }
    return out;
}

LambdaSolveReport invert_Lambda(int n, Parity par, const RadialProfile& b) {
    require_gaussian(b, "invert_Lambda");
    if (n < 1) throw InvalidArgument("invert_Lambda: mode number must be at least 1");
    const GridSpec& g = b.grid();
    const int N = g.n_points;
    LambdaSolveReport rep;
    RadialProfile bb = b;

    std::vector<double> phi(static_cast<size_t>(N), 0.0);
    if (n == 1) {
        RadialProfile babs = b;
        for (auto& x : babs.stored()) x = std::abs(x);
        const double scale = quad_radial(babs, 2);
        const double defect = quad_radial(b, 2);
        rep.solvability_defect = scale > 0.0 ? std::abs(defect) / scale : 0.0;
        if (rep.solvability_defect > lambda_n1_tolerance) {
            throw NumericalError("invert_Lambda: n = 1 right-hand side has a nonzero first moment", rep.solvability_defect);
        }
        // Remove the round-off part of the moment: integral of r^3 e^{-r^2/4} dr is 8.
        for (int i = 0; i < N; ++i) bb.stored()[static_cast<size_t>(i)] -= defect / 8.0 * g.r(i);
        // phi = z u with z = r v0 in the kernel: (r z^2 u')' = -r^2 b.
        std::vector<double> s2b(static_cast<size_t>(N));
        for (int i = 0; i < N; ++i) s2b[static_cast<size_t>(i)] = g.r(i) * g.r(i) * bb.value(i);
        const auto I = radial::cumulative_integral(s2b, g);
        std::vector<double> k(static_cast<size_t>(N), 0.0);
        for (int i = 1; i < N; ++i) {
            const double r = g.r(i);
            const double z = r * v0(r);
            k[static_cast<size_t>(i)] = -I[static_cast<size_t>(i)] / (r * z * z);
        }
        const auto U = radial::cumulative_integral(k, g);
        // Fix the kernel component by the vanishing first moment of omega.
        RadialProfile num = RadialProfile::zero(g, Decay::gaussian_weighted);
        RadialProfile den = RadialProfile::zero(g, Decay::gaussian_weighted);
        for (int i = 0; i < N; ++i) {
            const auto u = static_cast<size_t>(i);
            const double r = g.r(i);
            const double z = r * v0(r);
            num.stored()[u] = h_scaled(r) * z * U[u] + bb.stored()[u] / v0(r);
            den.stored()[u] = h_scaled(r) * z;
        }
        const double c = -quad_radial(num, 2) / quad_radial(den, 2);
        for (int i = 0; i < N; ++i) {
            const double r = g.r(i);
            phi[static_cast<size_t>(i)] = r * v0(r) * (U[static_cast<size_t>(i)] + c);
        }
    } else {
        radial::BvpSpec spec;
        spec.n = n;
        spec.a2.assign(static_cast<size_t>(N), -1.0);
        spec.a1.assign(static_cast<size_t>(N), 0.0);
        spec.a0.assign(static_cast<size_t>(N), 0.0);
        std::vector<double> f(static_cast<size_t>(N), 0.0);
        for (int i = 1; i < N; ++i) {
            const auto u = static_cast<size_t>(i);
            const double r = g.r(i);
            spec.a1[u] = -1.0 / r;
            spec.a0[u] = static_cast<double>(n * n) / (r * r) - h_fn(r);
            f[u] = bb.value(i) / (n * v0(r));
        }
        spec.end_c1 = 1.0;
        spec.end_c0 = n / g.r_max;
        phi = radial::solve_bvp(g, spec, f);
    }

    std::vector<double> w(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
        const auto u = static_cast<size_t>(i);
        const double r = g.r(i);
        w[u] = -h_scaled(r) * phi[u] - bb.stored()[u] / (n * v0(r));
    }
    // Right-hand side b sin: omega = w cos.  Right-hand side b cos: omega = -w sin.
    const double sgn = par == Parity::sin_mode ? 1.0 : -1.0;
    const Parity out_par = swapped(par);
    RadialProfile wp(g, Decay::gaussian_weighted, std::move(w));
    RadialProfile pp(g, Decay::bounded, std::move(phi));
    wp *= sgn;
    pp *= sgn;
    rep.omega = PolarField(g);
    rep.omega.set({n, out_par}, wp);
    rep.psi = PolarField(g);
    rep.psi.set({n, out_par}, pp);

    PolarField target(g);
    target.set({n, par}, b);
    const double tn = y_norm(target);
    const PolarField res = apply_Lambda(rep.omega) - target;
    rep.residual = tn > 0.0 ? y_norm(res) / tn : y_norm(res);
    return rep;
}

PolarField invert_Lambda(const PolarField& f) {
    PolarField out(f.grid());
    const double scale = f.max_abs_stored();
    for (const auto& [k, p] : f.modes()) {
        if (k.n == 0) {
            if (p.max_abs_stored() > 1e-10 * scale) {
                throw NumericalError("invert_Lambda: radial component lies outside the range of Lambda",
                                     p.max_abs_stored() / scale);
            }
            continue;
        }
        out += invert_Lambda(k.n, k.parity, p).omega;
    }
    return out;
}

// ---------------------------------------------------------------- T_eps expansion

std::vector<std::complex<double>> complex_moments(const PolarField& omega, int N) {
    if (N < 0) throw InvalidArgument("complex_moments: order must be non-negative");
    std::vector<std::complex<double>> mu(static_cast<size_t>(N + 1), {0.0, 0.0});
    if (auto* a0 = omega.find({0, Parity::cos_mode})) mu[0] = 2.0 * pi * quad_radial(*a0, 1);
    for (int m = 1; m <= N; ++m) {
        double re = 0.0, im = 0.0;
        if (auto* a = omega.find({m, Parity::cos_mode})) re = pi * quad_radial(*a, m + 1);
        if (auto* b = omega.find({m, Parity::sin_mode})) im = -pi * quad_radial(*b, m + 1);
        mu[static_cast<size_t>(m)] = {re, im};
    }
    return mu;
}

TepsExpansion teps_from_moments(const GridSpec& g, const std::vector<std::complex<double>>& mu, int N) {
    if (N < 1) throw InvalidArgument("teps_expand: order must be positive");
    if (static_cast<int>(mu.size()) < N + 1) throw InvalidArgument("teps_expand: not enough moments");
    TepsExpansion out;
    out.log_coefficient = mu[0].real() / (2.0 * pi);
    for (int n = 1; n <= N; ++n) {
        PolarField P(g);
        const double pref = ((n % 2 == 1) ? 1.0 : -1.0) / (2.0 * pi * n);
        double binom = 1.0;
        for (int j = 0; j <= n; ++j) {
            if (j > 0) binom = binom * (n - j + 1) / j;
            const auto m = mu[static_cast<size_t>(n - j)];
            const Decay d = j == 0 ? Decay::bounded : Decay::polynomial_growth;
            if (m.real() != 0.0) {
                const double c = pref * binom * m.real();
                P.accumulate({j, Parity::cos_mode},
                             RadialProfile::sample(g, d, [j, c](double r) { return c * std::pow(r, j); }));
            }
            if (j > 0 && m.imag() != 0.0) {
                const double c = -pref * binom * m.imag();
                P.accumulate({j, Parity::sin_mode},
                             RadialProfile::sample(g, d, [j, c](double r) { return c * std::pow(r, j); }));
            }
        }
        out.P.push_back(std::move(P));
    }
    return out;
}

TepsExpansion teps_expand(const PolarField& omega, int N) {
    if (N < 1) throw InvalidArgument("teps_expand: order must be positive");
    if (N > 40) throw InvalidArgument("teps_expand: order beyond the moment quadrature budget (40)");
    return teps_from_moments(omega.grid(), complex_moments(omega, N), N);
}

EpsDeltaSeries bracket_series(const EpsDeltaSeries& a, const EpsDeltaSeries& b, int order_eps, int order_delta) {
    EpsDeltaSeries out(a.grid(), order_eps, order_delta);
    for (const auto& [ka, fa] : a.terms()) {
        for (const auto& [kb, fb] : b.terms()) {
            const int k = ka.first + kb.first;
            const int j = ka.second + kb.second;
            if (k > order_eps || j > order_delta) {
                out.add_term(k, j, PolarField(a.grid()));
                continue;
            }
            out.add_term(k, j, poisson_bracket(fa, fb));
        }
    }
    return out;
}

// ---------------------------------------------------------------- point evaluation

namespace {

// cos(n theta), sin(n theta) for n = 0..n_max by repeated complex multiplication.
void angle_table(double ct, double st, int n_max, std::vector<std::complex<double>>& out) {
    out.resize(static_cast<size_t>(n_max + 1));
    const std::complex<double> z(ct, st);
    std::complex<double> p(1.0, 0.0);
    for (int n = 0; n <= n_max; ++n) {
        out[static_cast<size_t>(n)] = p;
        p *= z;
    }
}

// Value of the angular factor and its theta derivative.
inline void trig_eval(const ModeKey& k, const std::complex<double>& e, double& val, double& dval) {
    if (k.parity == Parity::cos_mode) {
        val = e.real();
        dval = -k.n * e.imag();
    } else {
        val = e.imag();
        dval = k.n * e.real();
    }
}

int largest_mode(const auto& modes) {
    int n = 0;
    for (const auto& m : modes) n = std::max(n, m.key.n);
    return n;
}

}  // namespace

StreamEvaluator::StreamEvaluator(const PolarField& psi) : grid_(psi.grid()) {
    for (const auto& [k, p] : psi.modes()) {
        if (p.decay() == Decay::polynomial_growth) {
            throw InvalidArgument("StreamEvaluator: polynomially growing mode " + to_string(k));
        }
        Mode m;
        m.key = k;
        m.f = p.values();
        m.df = radial::derivative(m.f, grid_, k.n, 1);
        m.f_end = m.f.back();
        m.df_end = m.df.back();
        modes_.push_back(std::move(m));
    }
}

std::array<double, 3> StreamEvaluator::eval(double x1, double x2) const {
    const double rho = std::hypot(x1, x2);
    const double R = grid_.r_max;
    double val = 0.0, d1 = 0.0, d2 = 0.0;
    if (rho < 1e-12) {
        for (const auto& m : modes_) {
            if (m.key.n == 0) val += m.f[0];
            if (m.key.n == 1 && m.key.parity == Parity::cos_mode) d1 += m.df[0];
            if (m.key.n == 1 && m.key.parity == Parity::sin_mode) d2 += m.df[0];
        }
        return {val, d1, d2};
    }
    const double ct = x1 / rho, st = x2 / rho;
    thread_local std::vector<std::complex<double>> tab;
    angle_table(ct, st, largest_mode(modes_), tab);
    double dr = 0.0, dth = 0.0;
    for (const auto& m : modes_) {
        double f, df;
        if (rho <= R) {
            f = radial::interpolate(m.f, grid_, m.key.n, rho);
            df = radial::interpolate(m.df, grid_, m.key.n + 1, rho);
        } else if (m.key.n == 0) {
            f = m.f_end + R * m.df_end * std::log(rho / R);
            df = R * m.df_end / rho;
        } else {
            const double q = std::pow(R / rho, m.key.n);
            f = m.f_end * q;
            df = -m.key.n * f / rho;
        }
        double tv, tdv;
        trig_eval(m.key, tab[static_cast<size_t>(m.key.n)], tv, tdv);
        val += f * tv;
        dr += df * tv;
        dth += f * tdv;
    }
    d1 = ct * dr - st * dth / rho;
    d2 = st * dr + ct * dth / rho;
    return {val, d1, d2};
}

ScaledFieldEvaluator::ScaledFieldEvaluator(const PolarField& f) : grid_(f.grid()) {
    for (const auto& [k, p] : f.modes()) {
        require_gaussian(p, "ScaledFieldEvaluator");
        Mode m;
        m.key = k;
        m.v = p.stored();
        m.dv = radial::d_dr(p, k.n).stored();
        modes_.push_back(std::move(m));
    }
}

std::array<double, 3> ScaledFieldEvaluator::eval(double x1, double x2) const {
    const double rho = std::hypot(x1, x2);
    const double R = grid_.r_max;
    double val = 0.0, d1 = 0.0, d2 = 0.0;
    if (rho < 1e-12) {
        for (const auto& m : modes_) {
            if (m.key.n == 0) val += m.v[0];
            if (m.key.n == 1 && m.key.parity == Parity::cos_mode) d1 += m.dv[0];
            if (m.key.n == 1 && m.key.parity == Parity::sin_mode) d2 += m.dv[0];
        }
        return {val, d1, d2};
    }
    const double ct = x1 / rho, st = x2 / rho;
    thread_local std::vector<std::complex<double>> tab;
    angle_table(ct, st, largest_mode(modes_), tab);
    double dr = 0.0, dth = 0.0;
    for (const auto& m : modes_) {
        double v, dv;
        if (rho <= R) {
            v = radial::interpolate(m.v, grid_, m.key.n, rho);
            dv = radial::interpolate(m.dv, grid_, m.key.n + 1, rho);
        } else {
            v = m.v.back();
            dv = -0.5 * rho * v;
        }
        double tv, tdv;
        trig_eval(m.key, tab[static_cast<size_t>(m.key.n)], tv, tdv);
        val += v * tv;
        dr += dv * tv;
        dth += v * tdv;
    }
    d1 = ct * dr - st * dth / rho;
    d2 = st * dr + ct * dth / rho;
    return {val, d1, d2};
}

}  // namespace dipole

namespace dipole {

AngleTable::AngleTable(int n_theta_, int n_max_) : n_theta(n_theta_), n_max(std::max(n_max_, 1)) {
    if (n_theta < 4 || n_max < 0) throw InvalidArgument("AngleTable: invalid sizes");
    c.resize(static_cast<size_t>((n_max + 1) * n_theta));
    s.resize(c.size());
    for (int n = 0; n <= n_max; ++n) {
        for (int j = 0; j < n_theta; ++j) {
            // Reduce n j modulo n_theta so the angle stays exact.
            const double a = 2.0 * pi * static_cast<double>((static_cast<long>(n) * j) % n_theta) / n_theta;
            c[static_cast<size_t>(n * n_theta + j)] = std::cos(a);
            s[static_cast<size_t>(n * n_theta + j)] = std::sin(a);
        }
    }
}

double AngleTable::theta(int j) const { return 2.0 * pi * j / n_theta; }

RingSampler::RingSampler(const PolarField& f) : grid_(f.grid()) {
    bool first = true;
    for (const auto& [k, p] : f.modes()) {
        if (first) {
            decay_ = p.decay();
            first = false;
        } else if (p.decay() != decay_) {
            throw InvalidArgument("RingSampler: mixed decay classes");
        }
        Mode m;
        m.key = k;
        m.v = p.stored();
        m.dv = radial::d_dr(p, k.n).stored();
        n_max_ = std::max(n_max_, k.n);
        modes_.push_back(std::move(m));
    }
}

void RingSampler::sample(int i, const AngleTable& t, double* val, double* d1, double* d2) const {
    if (t.n_max < n_max_) throw InvalidArgument("RingSampler: angle table too short");
    const int nt = t.n_theta;
    const auto u = static_cast<size_t>(i);
    for (int j = 0; j < nt; ++j) {
        if (val) val[j] = 0.0;
        if (d1) d1[j] = 0.0;
        if (d2) d2[j] = 0.0;
    }
    if (i == 0) {
        double v0v = 0.0, g1 = 0.0, g2 = 0.0;
        for (const auto& m : modes_) {
            if (m.key.n == 0) v0v += m.v[0];
            if (m.key.n == 1) (m.key.parity == Parity::cos_mode ? g1 : g2) += m.dv[0];
        }
        for (int j = 0; j < nt; ++j) {
            if (val) val[j] = v0v;
            if (d1) d1[j] = g1;
            if (d2) d2[j] = g2;
        }
        return;
    }
    const double r = grid_.r(i);
    for (const auto& m : modes_) {
        const double* cn = &t.c[static_cast<size_t>(m.key.n * nt)];
        const double* sn = &t.s[static_cast<size_t>(m.key.n * nt)];
        const double v = m.v[u], dv = m.dv[u];
        const bool is_cos = m.key.parity == Parity::cos_mode;
        for (int j = 0; j < nt; ++j) {
            const double tv = is_cos ? cn[j] : sn[j];
            const double tdv = is_cos ? -m.key.n * sn[j] : m.key.n * cn[j];
            if (val) val[j] += v * tv;
            if (d1 || d2) {
                const double dr = dv * tv, dth = v * tdv / r;
                const double ct = t.c[static_cast<size_t>(nt + j)], st = t.s[static_cast<size_t>(nt + j)];
                if (d1) d1[j] += ct * dr - st * dth;
                if (d2) d2[j] += st * dr + ct * dth;
            }
        }
    }
}

}  // namespace dipole
