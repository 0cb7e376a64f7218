#include "dipole/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dipole/errors.hpp"
#include "dipole/gaussian_base.hpp"
#include "dipole/radial_ops.hpp"

namespace dipole {

namespace {

constexpr double pi = std::numbers::pi;

PolarField scaled_copy(const PolarField& f, double s) {
    PolarField out = f;
    out *= s;
    return out;
}

double tail_of(const PolarField& f) {
    double t = 0.0;
    const double R = f.grid().r_max;
    for (const auto& [k, p] : f.modes()) {
        if (p.decay() != Decay::gaussian_weighted) continue;
        t = std::max(t, std::abs(p.stored().back()) * std::exp(-R * R / 8.0));
    }
    return t;
}

struct LambdaSolve {
    PolarField omega;
    PolarField psi;
    double residual = 0.0;
    double defect = 0.0;
};

// Mode-wise Lambda omega = rhs for a field without radial part.
LambdaSolve solve_lambda(const PolarField& rhs, int order) {
    LambdaSolve out{PolarField(rhs.grid()), PolarField(rhs.grid()), 0.0, 0.0};
    const double scale = rhs.max_abs_stored();
    for (const auto& [k, p] : rhs.modes()) {
        if (k.n == 0) {
            if (p.max_abs_stored() > 1e-10 * scale) {
                throw NumericalError("order " + std::to_string(order) + ": radial forcing outside the range of Lambda",
                                     p.max_abs_stored() / scale);
            }
            continue;
        }
        if (p.max_abs_stored() == 0.0) continue;
        RadialProfile b = p;
        if (k.n == 1) {
            // Judge the moment against the whole forcing; round-off left by
            // other modes is projected out.
            double total = 0.0;
            for (const auto& [k2, p2] : rhs.modes()) {
                RadialProfile a = p2;
                for (auto& x : a.stored()) x = std::abs(x);
                total += quad_radial(a, k2.n + 1);
            }
            const double mom = quad_radial(b, 2);
            const double rel = total > 0.0 ? std::abs(mom) / total : 0.0;
            out.defect = std::max(out.defect, rel);
            if (rel <= lambda_n1_tolerance) {
                for (int i = 0; i < b.size(); ++i) b.stored()[static_cast<size_t>(i)] -= mom / 8.0 * b.grid().r(i);
            }
        }
        LambdaSolveReport rep;
        try {
            rep = invert_Lambda(k.n, k.parity, b);
        } catch (const NumericalError& e) {
            const Moments m = moments(rhs);
            std::ostringstream os;
            os.precision(6);
            os << "order " << order << ": first-moment solvability violated (M = " << m.mass << ", m1 = " << m.m1
               << ", m2 = " << m.m2 << ")";
            throw NumericalError(os.str(), e.measured());
        }
        out.omega += rep.omega;
        out.psi += rep.psi;
        out.residual = std::max(out.residual, rep.residual);
    }
    return out;
}

PolarField without_constant(const PolarField& f) {
    PolarField out(f.grid());
    for (const auto& [k, p] : f.modes()) {
        if (k.n == 0) continue;
        out.set(k, p);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- bundle

PolarField ExpansionBundle::omega_app(double eps, double delta) const {
    PolarField out = omega_E.at(0);
    for (int k = 2; k <= order; ++k) {
        const double ek = std::pow(eps, k);
        out += scaled_copy(omega_E[static_cast<size_t>(k)], ek);
        out += scaled_copy(omega_NS[static_cast<size_t>(k)], ek * delta);
    }
    return out;
}

PolarField ExpansionBundle::psi_app(double eps, double delta) const {
    PolarField out = psi_E.at(0);
    for (int k = 2; k <= order; ++k) {
        const double ek = std::pow(eps, k);
        out += scaled_copy(psi_E[static_cast<size_t>(k)], ek);
        out += scaled_copy(psi_NS[static_cast<size_t>(k)], ek * delta);
    }
    return out;
}

double ExpansionBundle::zeta_series(double eps, double delta) const {
    double z = 0.0;
    for (size_t k = 0; k < zeta_E.size(); ++k) {
        z += std::pow(eps, static_cast<double>(k)) * (zeta_E[k] + delta * zeta_NS[k]);
    }
    return z;
}

ExpansionBundle trivial_bundle(const GridSpec& grid, int order) {
    grid.validate();
    if (order < 0 || order > 1) throw InvalidArgument("trivial_bundle: order must be 0 or 1");
    ExpansionBundle b;
    b.grid = grid;
    b.order = order;
    const PolarField G = gaussian_field(grid);
    b.omega_E = {G};
    b.omega_NS = {PolarField(grid)};
    b.psi_E = {biot_savart(G)};
    b.psi_NS = {PolarField(grid)};
    if (order == 1) {
        b.omega_E.emplace_back(grid);
        b.omega_NS.emplace_back(grid);
        b.psi_E.emplace_back(grid);
        b.psi_NS.emplace_back(grid);
    }
    b.zeta_E = {1.0};
    b.zeta_NS = {0.0};
    return b;
}

EpsDeltaSeries remainder_expansion(const ExpansionBundle& b, int order_eps) {
    const GridSpec& g = b.grid;
    const int M = b.order;
    EpsDeltaSeries omega(g, order_eps, 2), phi(g, order_eps, 2);
    EpsDeltaSeries out(g, order_eps, 2);

    auto profile_orders = [&] {
        std::vector<int> ks = {0};
        for (int k = 2; k <= M; ++k) ks.push_back(k);
        return ks;
    }();

    for (int k : profile_orders) {
        const auto uk = static_cast<size_t>(k);
        omega.add_term(k, 0, b.omega_E[uk]);
        phi.add_term(k, 0, b.psi_E[uk]);
        if (!b.omega_NS[uk].empty()) {
            omega.add_term(k, 1, b.omega_NS[uk]);
            phi.add_term(k, 1, b.psi_NS[uk]);
        }
        // Polynomial expansion of the mirror stream function; constants drop out of brackets.
        const int n_max = order_eps - k;
        if (n_max >= 1) {
            for (int j = 0; j <= 1; ++j) {
                const PolarField& w = j == 0 ? b.omega_E[uk] : b.omega_NS[uk];
                if (w.empty()) continue;
                // Mass and first moments are fixed by construction; use the exact values.
                auto mu = complex_moments(w, n_max);
                mu[0] = (k == 0 && j == 0) ? 1.0 : 0.0;
                if (n_max >= 1) mu[1] = 0.0;
                const TepsExpansion T = teps_from_moments(g, mu, n_max);
                for (int n = 1; n <= n_max; ++n) {
                    PolarField P = without_constant(T.P[static_cast<size_t>(n - 1)]);
                    if (!P.empty()) phi.add_term(n + k, j, P, -1.0);
                }
            }
        }
    }
    const PolarField x1 = xi1_field(g);
    for (int m = 0; m < static_cast<int>(b.zeta_E.size()); ++m) {
        const auto um = static_cast<size_t>(m);
        if (b.zeta_E[um] != 0.0) phi.add_term(m + 1, 0, x1, b.zeta_E[um] / (2.0 * pi));
        if (b.zeta_NS[um] != 0.0) phi.add_term(m + 1, 1, x1, b.zeta_NS[um] / (2.0 * pi));
    }

    out += bracket_series(phi, omega, order_eps, 2);

    // delta (L - t d/dt) Omega_app with t d/dt eps^k = (k/2) eps^k.
    for (int k : profile_orders) {
        const auto uk = static_cast<size_t>(k);
        for (int j = 0; j <= 1; ++j) {
            const PolarField& w = j == 0 ? b.omega_E[uk] : b.omega_NS[uk];
            if (w.empty()) continue;
            PolarField t = apply_L(w);
            t -= scaled_copy(w, 0.5 * k);
            out.add_term(k, j + 1, t);
        }
    }
    return out;
}

ExpansionBundle induction_step(const ExpansionBundle& in) {
    ExpansionBundle b = in;
    if (b.order == 0) b = trivial_bundle(in.grid, 1);
    const GridSpec& g = b.grid;
    const int M = b.order;
    const int K = M + 1;
    const double c = 0.5 * K;

    StepDiagnostics d;
    d.order = K;

    const EpsDeltaSeries R = remainder_expansion(b, K);
    for (int k = 0; k <= M; ++k) {
        for (int j = 0; j <= 1; ++j) {
            const PolarField f = R.coefficient(k, j);
            if (!f.empty()) d.lower_order_defect = std::max(d.lower_order_defect, y_norm(f));
        }
    }
    const PolarField H0 = R.coefficient(K, 0);
    const PolarField H1 = R.coefficient(K, 1);
    d.H0 = moments(H0);
    d.H1 = moments(H1);

    // Speed correction removing the m2 moment.
    d.zeta_E = 2.0 * pi * d.H0.m2;
    d.zeta_NS = 2.0 * pi * d.H1.m2;
    const PolarField d2G = d2_gaussian_field(g);
    PolarField tH0 = H0, tH1 = H1;
    tH0 += scaled_copy(d2G, d.zeta_E / (2.0 * pi));
    tH1 += scaled_copy(d2G, d.zeta_NS / (2.0 * pi));
    d.m2_tilde_H0 = moments(tH0).m2;
    d.m2_tilde_H1 = moments(tH1).m2;

    // Radial piece: (L - c) Omega^{E,0} = -P0 tilde H1.
    PolarField E0(g);
    if (const RadialProfile* p0 = tH1.find({0, Parity::cos_mode})) {
        RadialProfile rhs = *p0;
        rhs *= -1.0;
        E0 = solve_L_shifted(0, Parity::cos_mode, c, rhs);
        d.radial_E0_norm = y_norm(E0);
    }

    // Lambda Omega^{E,1} = -tilde H0.
    const LambdaSolve E1 = solve_lambda(scaled_copy(tH0, -1.0), K);

    // Lambda Omega^{NS} = -[(1 - P0) tilde H1 + (L - c) Omega^{E,1}].
    PolarField ns_rhs = tH1.nonradial_part();
    if (!E1.omega.empty()) {
        ns_rhs += apply_L(E1.omega);
        ns_rhs -= scaled_copy(E1.omega, c);
    }
    const LambdaSolve NS = solve_lambda(scaled_copy(ns_rhs, -1.0), K);

    d.lambda_residual_E = E1.residual;
    d.lambda_residual_NS = NS.residual;
    d.solvability_defect = std::max(E1.defect, NS.defect);
    if (d.lambda_residual_E > step_lambda_tolerance || d.lambda_residual_NS > step_lambda_tolerance) {
        throw NumericalError("order " + std::to_string(K) + ": Lambda inversion residual above tolerance",
                             std::max(d.lambda_residual_E, d.lambda_residual_NS));
    }

    PolarField omegaE = E1.omega;
    PolarField psiE = E1.psi;
    if (!E0.empty()) {
        omegaE += E0;
        psiE += biot_savart(E0);
    }
    d.omega_E = moments(omegaE);
    d.omega_NS = moments(NS.omega);
    d.tail = std::max(tail_of(omegaE), tail_of(NS.omega));

    b.omega_E.push_back(std::move(omegaE));
    b.psi_E.push_back(std::move(psiE));
    b.omega_NS.push_back(NS.omega);
    b.psi_NS.push_back(NS.psi);
    b.zeta_E.push_back(d.zeta_E);
    b.zeta_NS.push_back(d.zeta_NS);
    b.steps.push_back(d);
    b.order = K;
    return b;
}

ExpansionBundle build_base(const GridSpec& grid) { return induction_step(trivial_bundle(grid, 1)); }

ExpansionBundle build_bundle(const GridSpec& grid, int order) {
    if (order < 0) throw InvalidArgument("build_bundle: order must be non-negative");
    if (order <= 1) return trivial_bundle(grid, order);
    ExpansionBundle b = trivial_bundle(grid, 1);
    while (b.order < order) b = induction_step(b);
    return b;
}

// ---------------------------------------------------------------- remainder

RemainderReport remainder_series(const ExpansionBundle& b) {
    const int K = std::max(b.order, 1) + 1;
    const EpsDeltaSeries R = remainder_expansion(b, K);
    RemainderReport rep;
    rep.order = b.order;
    rep.H0 = R.coefficient(K, 0);
    rep.H1 = R.coefficient(K, 1);
    rep.H0_moments = moments(rep.H0);
    rep.H1_moments = moments(rep.H1);
    for (int k = 0; k <= K; ++k) rep.delta2.push_back(R.coefficient(k, 2));
    for (const auto& [key, f] : R.terms()) {
        rep.norms.push_back({key.first, key.second, y_norm(f)});
    }
    rep.truncated_terms = R.truncated_terms();
    return rep;
}

namespace {

// Scaled remainder exp(|xi|^2/4) R on the rings r_i <= r_cut, row-major (ring, angle).
struct RemainderSamples {
    int n_rings = 0;
    int n_theta = 0;
    double r_cut = 0.0;
    std::vector<double> values;
};

RemainderSamples sample_remainder(const ExpansionBundle& b, double eps, double delta, int n_theta, double r_cut) {
    if (!(eps > 0.0 && eps <= 0.5)) throw InvalidArgument("remainder_direct: eps must lie in (0, 0.5]");
    if (delta < 0.0) throw InvalidArgument("remainder_direct: delta must be non-negative");
    const GridSpec& g = b.grid;
    const PolarField omega = b.omega_app(eps, delta);
    const PolarField psi = b.psi_app(eps, delta);
    PolarField diff(g);
    diff += apply_L(b.omega_E[0]);
    for (int k = 2; k <= b.order; ++k) {
        const auto uk = static_cast<size_t>(k);
        PolarField w = b.omega_E[uk];
        w += scaled_copy(b.omega_NS[uk], delta);
        PolarField t = apply_L(w);
        t -= scaled_copy(w, 0.5 * k);
        diff += scaled_copy(t, std::pow(eps, k));
    }
    const double zeta = b.zeta_series(eps, delta);

    const RingSampler s_omega(omega), s_psi(psi), s_diff(diff);
    const StreamEvaluator mirror(psi);
    const int n_max = std::max({s_omega.max_mode(), s_psi.max_mode(), s_diff.max_mode(), 1});
    const AngleTable tab(n_theta, n_max);

    RemainderSamples out;
    out.r_cut = std::min(r_cut > 0.0 ? r_cut : 0.5 / eps, g.r_max);
    out.n_rings = static_cast<int>(std::floor(out.r_cut / g.spacing() + 1e-9)) + 1;
    out.n_theta = n_theta;
    out.values.assign(static_cast<size_t>(out.n_rings * n_theta), 0.0);

    std::vector<double> wv(n_theta), w1(n_theta), w2(n_theta), p1(n_theta), p2(n_theta), dv(n_theta);
    for (int i = 0; i < out.n_rings; ++i) {
        s_omega.sample(i, tab, nullptr, w1.data(), w2.data());
        s_psi.sample(i, tab, nullptr, p1.data(), p2.data());
        s_diff.sample(i, tab, dv.data(), nullptr, nullptr);
        const double r = g.r(i);
        for (int j = 0; j < n_theta; ++j) {
            const double x1 = r * tab.c[static_cast<size_t>(n_theta + j)];
            const double x2 = r * tab.s[static_cast<size_t>(n_theta + j)];
            const auto m = mirror.eval(-x1 - 1.0 / eps, x2);
            // grad of T_eps Psi at xi is (-d1 Psi, d2 Psi) at the mirror point.
            const double phi1 = p1[j] + m[1] + eps * zeta / (2.0 * pi);
            const double phi2 = p2[j] - m[2];
            out.values[static_cast<size_t>(i * n_theta + j)] = delta * dv[j] + (-phi2 * w1[j] + phi1 * w2[j]);
        }
    }
    return out;
}

double weighted_norm(const RemainderSamples& s, const GridSpec& g) {
    const auto& w = radial_weights(g.spacing(), s.n_rings);
    num::CompensatedSum acc;
    for (int i = 0; i < s.n_rings; ++i) {
        const double r = g.r(i);
        double ring = 0.0;
        for (int j = 0; j < s.n_theta; ++j) {
            const double v = s.values[static_cast<size_t>(i * s.n_theta + j)];
            ring += v * v;
        }
        acc.add(w[static_cast<size_t>(i)] * r * std::exp(-0.25 * r * r) * ring * (2.0 * pi / s.n_theta));
    }
    return std::sqrt(std::max(acc.value(), 0.0));
}

}  // namespace

DirectRemainder remainder_direct(const ExpansionBundle& b, double eps, double delta, int n_theta, double r_cut) {
    const RemainderSamples s = sample_remainder(b, eps, delta, n_theta, r_cut);
    return {eps, delta, s.r_cut, weighted_norm(s, b.grid)};
}

SlopeFit fit_slope(std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_slope: need at least two samples");
    SlopeFit f;
    const auto lf = num::fit_loglog(x, y);
    f.slope = lf.slope;
    f.intercept = lf.intercept;
    f.lo = *std::min_element(x.begin(), x.end());
    f.hi = *std::max_element(x.begin(), x.end());
    f.x = std::move(x);
    f.y = std::move(y);
    return f;
}

SlopeFit remainder_eps_slope(const ExpansionBundle& b, double delta, double lo, double hi, int samples, double r_cut) {
    if (samples < 2 || !(lo > 0.0 && hi > lo)) throw InvalidArgument("remainder_eps_slope: invalid window");
    std::vector<double> xs = num::log_spaced(lo, hi, samples), ys;
    for (double e : xs) ys.push_back(remainder_direct(b, e, delta, 256, r_cut).y_norm);
    return fit_slope(std::move(xs), std::move(ys));
}

SlopeFit remainder_delta_slope(const ExpansionBundle& b, double eps, double lo, double hi, int samples) {
    if (samples < 2 || !(lo > 0.0 && hi > lo)) throw InvalidArgument("remainder_delta_slope: invalid window");
    const RemainderSamples base = sample_remainder(b, eps, 0.0, 256, 0.0);
    std::vector<double> xs = num::log_spaced(lo, hi, samples), ys;
    for (double dl : xs) {
        RemainderSamples s = sample_remainder(b, eps, dl, 256, 0.0);
        for (size_t i = 0; i < s.values.size(); ++i) s.values[i] -= base.values[i];
        ys.push_back(weighted_norm(s, b.grid));
    }
    return fit_slope(std::move(xs), std::move(ys));
}

// ---------------------------------------------------------------- speed

AlphaReport alpha(const ExpansionBundle& b) {
    if (b.order < 2) throw InvalidArgument("alpha: bundle order must be at least 2");
    const PolarField& w = b.omega_E[2];
    const RadialProfile* p = w.find({2, Parity::cos_mode});
    if (!p) throw NumericalError("alpha: second-order profile has no (2, cos) component", 0.0);
    AlphaReport rep;
    rep.alpha = -quad_radial(*p, 3);

    // Plane quadrature of (xi2^2 - xi1^2) Omega_2 = -r^2 cos(2 theta) Omega_2.
    const GridSpec& g = b.grid;
    const int nt = 64;
    const RingSampler s(w);
    const AngleTable tab(nt, std::max(s.max_mode(), 2));
    std::vector<double> val(nt);
    RadialProfile ring = RadialProfile::zero(g, Decay::gaussian_weighted);
    for (int i = 0; i < g.n_points; ++i) {
        s.sample(i, tab, val.data(), nullptr, nullptr);
        num::CompensatedSum acc;
        for (int j = 0; j < nt; ++j) acc.add(-tab.c[static_cast<size_t>(2 * nt + j)] * val[j]);
        ring.stored()[static_cast<size_t>(i)] = acc.value() * 2.0 * pi / nt;
    }
    rep.alpha_quadrature = quad_radial(ring, 3) / pi;
    rep.relative_gap = std::abs(rep.alpha - rep.alpha_quadrature) / std::abs(rep.alpha);
    if (rep.relative_gap > alpha_consistency_tolerance) {
        throw NumericalError("alpha: moment and plane formulas disagree", rep.relative_gap);
    }
    if (b.zeta_E.size() > 4) {
        rep.has_zeta4 = true;
        rep.zeta4 = b.zeta_E[4];
        rep.zeta4_gap = std::abs(rep.zeta4 + 2.0 * pi * rep.alpha) / (2.0 * pi * rep.alpha);
    }
    return rep;
}

double zeta_app(const ExpansionBundle& b, double eps, double delta) {
    if (eps < 0.0 || eps > 0.3) throw InvalidArgument("zeta_app: eps must lie in [0, 0.3]");
    return b.zeta_series(eps, delta);
}

double zeta_app_direct(const ExpansionBundle& b, double eps, double delta, int n_theta) {
    if (!(eps > 0.0 && eps <= 0.3)) throw InvalidArgument("zeta_app_direct: eps must lie in (0, 0.3]");
    const GridSpec& g = b.grid;
    const PolarField omega = b.omega_app(eps, delta);
    const StreamEvaluator mirror(b.psi_app(eps, delta));
    const RingSampler s(omega);
    const AngleTable tab(n_theta, std::max(s.max_mode(), 1));
    const auto& w = radial_weights(g.spacing(), g.n_points);
    std::vector<double> val(n_theta);
    num::CompensatedSum acc;
    for (int i = 1; i < g.n_points; ++i) {
        const double r = g.r(i);
        s.sample(i, tab, val.data(), nullptr, nullptr);
        num::CompensatedSum ring;
        for (int j = 0; j < n_theta; ++j) {
            const double x1 = r * tab.c[static_cast<size_t>(n_theta + j)];
            const double x2 = r * tab.s[static_cast<size_t>(n_theta + j)];
            const auto m = mirror.eval(-x1 - 1.0 / eps, x2);
            ring.add(-m[1] * val[j]);
        }
        acc.add(w[static_cast<size_t>(i)] * r * std::exp(-0.25 * r * r) * ring.value() * (2.0 * pi / n_theta));
    }
    return 2.0 * pi / eps * acc.value();
}

double gaussian_speed(double eps, int n_theta) {
    if (!(eps > 0.0 && eps <= 0.2)) throw InvalidArgument("gaussian_speed: eps must lie in (0, 0.2]");
    const GridSpec g{20.0, 2049};
    const AngleTable tab(n_theta, 1);
    const auto& w = radial_weights(g.spacing(), g.n_points);
    num::CompensatedSum acc;
    for (int i = 1; i < g.n_points; ++i) {
        const double r = g.r(i);
        num::CompensatedSum ring;
        for (int j = 0; j < n_theta; ++j) {
            const double x1 = r * tab.c[static_cast<size_t>(n_theta + j)];
            const double x2 = r * tab.s[static_cast<size_t>(n_theta + j)];
            // U2^G at the mirror point (-x1 - 1/eps, x2).
            const auto u = gauss_velocity(-x1 - 1.0 / eps, x2);
            ring.add(u[1]);
        }
        acc.add(w[static_cast<size_t>(i)] * r * gauss_G(r) * ring.value() * (2.0 * pi / n_theta));
    }
    return -acc.value() / eps;
}

}  // namespace dipole
