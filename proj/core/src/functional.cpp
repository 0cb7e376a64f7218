#include <algorithm>
#include <cmath>
#include <numbers>

#include "dipole/errors.hpp"
#include "dipole/expansion.hpp"
#include "dipole/gaussian_base.hpp"
#include "dipole/radial_ops.hpp"

namespace dipole {

namespace {

constexpr double pi = std::numbers::pi;
const ModeKey radial_key{0, Parity::cos_mode};

PolarField as_class(const PolarField& f, Decay d) {
    PolarField out(f.grid());
    for (const auto& [k, p] : f.modes()) out.set(k, p.decay() == d ? p : p.converted(d));
    return out;
}

PolarField radial_field(const GridSpec& g, std::vector<double> a) {
    PolarField out(g);
    out.set(radial_key, RadialProfile(g, Decay::polynomial_growth, std::move(a)));
    return out;
}

// Next entry of the chain F_{m+1} = -(2/r) F_m' - m F_m.
std::vector<double> next_derivative(const std::vector<double>& f, const GridSpec& g, int m) {
    const auto d = radial::derivative(f, g, 0, 1);
    std::vector<double> out(f.size());
    for (int i = 1; i < g.n_points; ++i) {
        const auto u = static_cast<size_t>(i);
        out[u] = -2.0 * d[u] / g.r(i) - m * f[u];
    }
    out[0] = radial::even_limit_at_origin(out[1], out[2], out[3]);
    return out;
}

// n-th derivative of (1 - e^{-u}) / u, written as the integral of (-t)^n e^{-t u} over [0, 1].
double phi_derivative(int n, double u) {
    double m = 0.0;
    if (u < 2.0) {
        double term = 1.0;
        for (int j = 0; j < 60; ++j) {
            if (j > 0) term *= -u / j;
            m += term / (n + j + 1);
            if (std::abs(term) < 1e-18) break;
        }
    } else {
        double partial = 0.0, term = 1.0, fact = 1.0;
        for (int k = 0; k <= n; ++k) {
            if (k > 0) {
                term *= u / k;
                fact *= k;
            }
            partial += term;
        }
        m = fact / std::pow(u, n + 1) * (-std::expm1(-u) - std::exp(-u) * (partial - 1.0));
    }
    return (n % 2 == 0) ? m : -m;
}

// F_0^{(m)}(Omega_0) Omega_0^m for m >= 1 from (-d/du - j) applied to (1 - e^{-u}) / (4 pi u).
std::vector<std::vector<double>> base_chain(const GridSpec& g, int m_top) {
    std::vector<std::vector<double>> coef = {{}, {1.0}};
    for (int m = 1; m < m_top; ++m) {
        std::vector<double> next(coef[static_cast<size_t>(m)].size() + 1, 0.0);
        for (size_t j = 0; j < coef[static_cast<size_t>(m)].size(); ++j) {
            next[j + 1] -= coef[static_cast<size_t>(m)][j];
            next[j] -= m * coef[static_cast<size_t>(m)][j];
        }
        coef.push_back(std::move(next));
    }
    std::vector<std::vector<double>> out;
    for (int m = 1; m <= m_top; ++m) {
        std::vector<double> f(static_cast<size_t>(g.n_points));
        for (int i = 0; i < g.n_points; ++i) {
            const double u = 0.25 * g.r(i) * g.r(i);
            double acc = 0.0;
            const auto& c = coef[static_cast<size_t>(m)];
            for (size_t j = 0; j < c.size(); ++j) acc += c[j] * phi_derivative(static_cast<int>(j), u);
            f[static_cast<size_t>(i)] = acc / (4.0 * pi);
        }
        out.push_back(std::move(f));
    }
    return out;
}

// Omega_i / Omega_0 for a Gaussian-weighted profile field.
PolarField ratio_to_base(const PolarField& w) {
    PolarField out(w.grid());
    for (const auto& [k, p] : w.modes()) {
        std::vector<double> v = p.stored();
        if (p.decay() != Decay::gaussian_weighted) throw InvalidArgument("functional_relation: profile not Gaussian-weighted");
        for (auto& x : v) x *= 4.0 * pi;
        out.set(k, RadialProfile(w.grid(), Decay::polynomial_growth, std::move(v)));
    }
    return out;
}

double sup_over_angles(const PolarField& f) {
    double s = 0.0;
    const int N = f.grid().n_points;
    for (int i = 0; i < N; ++i) {
        double acc = 0.0;
        for (const auto& [k, p] : f.modes()) acc += std::abs(p.value(i));
        s = std::max(s, acc);
    }
    return s;
}

}  // namespace

std::vector<PolarField> comoving_stream_coefficients(const ExpansionBundle& b) {
    const GridSpec& g = b.grid;
    const int M = b.order;
    std::vector<PolarField> phi(static_cast<size_t>(M + 1), PolarField(g));
    for (int l = 0; l <= M; ++l) {
        if (l == 1) continue;
        const auto ul = static_cast<size_t>(l);
        phi[ul] += as_class(b.psi_E[ul], Decay::polynomial_growth);
        const int n_max = M - l;
        if (n_max < 1) continue;
        auto mu = complex_moments(b.omega_E[ul], n_max);
        mu[0] = l == 0 ? 1.0 : 0.0;
        mu[1] = 0.0;
        const TepsExpansion T = teps_from_moments(g, mu, n_max);
        for (int n = 1; n <= n_max; ++n) {
            for (const auto& [k, p] : T.P[static_cast<size_t>(n - 1)].modes()) {
                if (k.n == 0) continue;
                phi[static_cast<size_t>(l + n)].accumulate(k, p.converted(Decay::polynomial_growth), -1.0);
            }
        }
    }
    const PolarField x1 = as_class(xi1_field(g), Decay::polynomial_growth);
    for (int m = 0; m < static_cast<int>(b.zeta_E.size()) && m + 1 <= M; ++m) {
        const double z = b.zeta_E[static_cast<size_t>(m)];
        if (z != 0.0) phi[static_cast<size_t>(m + 1)] += (z / (2.0 * pi)) * x1;
    }
    return phi;
}

FunctionalRelation functional_relation(const ExpansionBundle& b) {
    const GridSpec& g = b.grid;
    const int M = b.order;
    const int N = g.n_points;
    FunctionalRelation out;
    out.grid = g;
    out.order = M;
    out.F.resize(static_cast<size_t>(M + 1));

    const std::vector<PolarField> phi = comoving_stream_coefficients(b);

    // rho_i and the eps-coefficients of (sum_i eps^i rho_i)^m.
    std::vector<PolarField> rho(static_cast<size_t>(M + 1), PolarField(g));
    for (int i = 2; i <= M; ++i) rho[static_cast<size_t>(i)] = ratio_to_base(b.omega_E[static_cast<size_t>(i)]);
    const int m_top = std::max(1, M / 2);
    // power[m][p] = [eps^p] (sum rho)^m
    std::vector<std::vector<PolarField>> power(static_cast<size_t>(m_top + 1),
                                               std::vector<PolarField>(static_cast<size_t>(M + 1), PolarField(g)));
    power[0][0] = radial_field(g, std::vector<double>(static_cast<size_t>(N), 1.0));
    for (int m = 1; m <= m_top; ++m) {
        for (int p = 0; p <= M; ++p) {
            for (int i = 2; i <= p; ++i) {
                const PolarField& prev = power[static_cast<size_t>(m - 1)][static_cast<size_t>(p - i)];
                if (prev.empty() || rho[static_cast<size_t>(i)].empty()) continue;
                power[static_cast<size_t>(m)][static_cast<size_t>(p)] += multiply(prev, rho[static_cast<size_t>(i)]);
            }
        }
    }

    auto fill_chain = [&](FunctionalTable& t, int count) {
        for (int m = 1; m <= count; ++m) t.values.push_back(next_derivative(t.values.back(), g, m - 1));
    };

    {
        FunctionalTable& t0 = out.F[0];
        t0.k = 0;
        std::vector<double> f0(static_cast<size_t>(N));
        for (int i = 0; i < N; ++i) f0[static_cast<size_t>(i)] = F0_of_u(0.25 * g.r(i) * g.r(i));
        t0.values.push_back(std::move(f0));
        for (auto& c : base_chain(g, std::max(2, m_top))) t0.values.push_back(std::move(c));
    }
    if (M >= 1) out.F[1].k = 1;

    for (int k = 2; k <= M; ++k) {
        PolarField A = phi[static_cast<size_t>(k)];
        for (int j = 0; j <= k - 2; ++j) {
            if (j == 1) continue;
            const FunctionalTable& Fj = out.F[static_cast<size_t>(j)];
            double fact = 1.0;
            for (int m = 1; m <= m_top && m < static_cast<int>(Fj.values.size()); ++m) {
                fact *= m;
                const PolarField& pw = power[static_cast<size_t>(m)][static_cast<size_t>(k - j)];
                if (pw.empty()) continue;
                PolarField term = multiply(radial_field(g, Fj.values[static_cast<size_t>(m)]), pw);
                A += (1.0 / fact) * term;
            }
        }
        FunctionalTable& t = out.F[static_cast<size_t>(k)];
        t.k = k;
        const PolarField nonradial = A.nonradial_part();
        const double scale = std::max(sup_over_angles(phi[static_cast<size_t>(k)]), 1e-300);
        t.nonradial_defect = sup_over_angles(nonradial) / scale;
        if (k == 2) out.F2_cancellation = sup_over_angles(A);
        if (t.nonradial_defect > functional_nonradial_tolerance) {
            throw NumericalError("functional relation: order " + std::to_string(k) +
                                     " coefficient is not radial",
                                 t.nonradial_defect);
        }
        std::vector<double> fk(static_cast<size_t>(N), 0.0);
        if (const RadialProfile* p = A.find(radial_key)) {
            fk = p->values();
            for (auto& x : fk) x = -x;
        }
        t.values.push_back(std::move(fk));
        fill_chain(t, std::max(2, (M - k) / 2));
    }
    return out;
}

namespace {

// F_k^{(1)}(Omega_0) Omega_0 as a function of u = r^2/4, continued quadratically to u < 0.
double chain_at_u(const std::vector<double>& f, const GridSpec& g, double u) {
    if (u >= 0.0) {
        const double r = 2.0 * std::sqrt(u);
        if (r >= g.r_max) return f.back();
        return radial::interpolate(f, g, 0, r);
    }
    const double u1 = 0.25 * g.r(1) * g.r(1), u2 = 0.25 * g.r(2) * g.r(2);
    const double f0 = f[0], f1 = f[1], f2 = f[2];
    const double l0 = (u - u1) * (u - u2) / (u1 * u2);
    const double l1 = u * (u - u2) / (u1 * (u1 - u2));
    const double l2 = u * (u - u1) / (u2 * (u2 - u1));
    return f0 * l0 + f1 * l1 + f2 * l2;
}

}  // namespace

FunctionalDerivatives functional_derivatives(const FunctionalRelation& f, double eps, double u) {
    FunctionalDerivatives d;
    const double p0 = phi_derivative(0, u), p1 = phi_derivative(1, u);
    d.s_F1 = p0 / (4.0 * pi);
    d.s2_F2 = -(p0 + p1) / (4.0 * pi);
    double ek = 1.0;
    for (int k = 1; k <= f.order; ++k) {
        ek *= eps;
        if (k == 1) continue;
        const auto& t = f.F[static_cast<size_t>(k)].values;
        d.s_F1 += ek * chain_at_u(t[1], f.grid, u);
        d.s2_F2 += ek * chain_at_u(t[2], f.grid, u);
    }
    return d;
}

ThetaSample theta_sample(const ExpansionBundle& b, const FunctionalRelation& f, double eps, double sigma1,
                         int weight_power, int n_theta) {
    if (!(eps > 0.0 && eps <= 0.5)) throw InvalidArgument("theta_sample: eps must lie in (0, 0.5]");
    if (!(sigma1 > 0.0 && sigma1 < 0.5)) throw InvalidArgument("theta_sample: sigma1 must lie in (0, 1/2)");
    if (f.order != b.order || !(f.grid == b.grid)) throw InvalidArgument("theta_sample: tables do not match bundle");
    const GridSpec& g = b.grid;
    const PolarField omega = b.omega_app(eps, 0.0);
    const PolarField psi_raw = b.psi_app(eps, 0.0);
    const PolarField psi = as_class(psi_raw, Decay::polynomial_growth);
    const double zeta = b.zeta_series(eps, 0.0);

    const RingSampler s_omega(omega), s_psi(psi);
    const StreamEvaluator mirror(psi_raw);
    const AngleTable tab(n_theta, std::max({s_omega.max_mode(), s_psi.max_mode(), 1}));

    ThetaSample out;
    out.eps = eps;
    out.radius = 2.0 * std::pow(eps, -sigma1);
    if (out.radius > g.r_max) throw InvalidArgument("theta_sample: sampling disk exceeds the radial grid");
    const int n_rings = static_cast<int>(std::floor(out.radius / g.spacing() + 1e-9)) + 1;

    std::vector<double> ring_x, ring_y;
    std::vector<double> V(n_theta), w1(n_theta), w2(n_theta), p1(n_theta), p2(n_theta);
    for (int i = 0; i < n_rings; ++i) {
        s_omega.sample(i, tab, V.data(), w1.data(), w2.data());
        s_psi.sample(i, tab, nullptr, p1.data(), p2.data());
        const double r = g.r(i);
        const double u = 0.25 * r * r;
        const double weight = std::pow(1.0 + r, -weight_power);
        double ring_max = 0.0;
        for (int j = 0; j < n_theta; ++j) {
            const double x1 = r * tab.c[static_cast<size_t>(n_theta + j)];
            const double x2 = r * tab.s[static_cast<size_t>(n_theta + j)];
            if (!(V[j] > 0.0)) throw NumericalError("theta_sample: approximate vorticity not positive", V[j]);
            const auto m = mirror.eval(-x1 - 1.0 / eps, x2);
            double g1 = p1[j] + m[1] + eps * zeta / (2.0 * pi);
            double g2 = p2[j] - m[2];
            // u' = log(1/(4 pi Omega_app)); F0'(s) exp(-u) and F_k'(s) exp(-u) in scaled form.
            const double up = u - std::log(4.0 * pi * V[j]);
            // F'(s) grad Omega = (s F'(s) / V) times the scaled gradient.
            const double coef = functional_derivatives(f, eps, up).s_F1 / V[j];
            g1 += coef * w1[j];
            g2 += coef * w2[j];
            ring_max = std::max(ring_max, std::hypot(g1, g2));
        }
        out.weighted_sup = std::max(out.weighted_sup, ring_max * weight);
        if (r >= 1.0 && ring_max > 0.0) {
            ring_x.push_back(1.0 + r);
            ring_y.push_back(ring_max);
        }
    }
    if (ring_x.size() >= 2) out.growth_exponent = num::fit_loglog(ring_x, ring_y).slope;
    return out;
}

ThetaReport theta_check(const ExpansionBundle& b, double lo, double hi, int samples, double sigma1) {
    if (samples < 2 || !(lo > 0.0 && hi > lo)) throw InvalidArgument("theta_check: invalid window");
    const FunctionalRelation f = functional_relation(b);
    ThetaReport rep;
    rep.weight_power = b.order + 1;
    rep.sigma1 = sigma1;
    std::vector<double> xs = num::log_spaced(lo, hi, samples), ys;
    for (double e : xs) {
        rep.samples.push_back(theta_sample(b, f, e, sigma1, rep.weight_power));
        ys.push_back(rep.samples.back().weighted_sup);
    }
    rep.fit = fit_slope(xs, ys);
    rep.fit.lo = lo;
    rep.fit.hi = hi;
    return rep;
}

}  // namespace dipole
