#include "dipole/energy_diag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <json.hpp>

#include "dipole/errors.hpp"
#include "dipole/gaussian_base.hpp"
#include "dipole/numerics.hpp"
#include "dipole/operators.hpp"

namespace dipole {

namespace {

constexpr double pi = std::numbers::pi;

PolarField as_class(const PolarField& f, Decay d) {
    PolarField out(f.grid());
    for (const auto& [k, p] : f.modes()) out.set(k, p.decay() == d ? p : p.converted(d));
    return out;
}

// Relative step for the eps finite difference of W in region I.
constexpr double fd_step = 1e-3;

}  // namespace

void WeightParams::validate() const {
    if (!(sigma1 > 0.0 && sigma1 < 0.5)) throw InvalidArgument("weight: sigma1 must lie in (0, 1/2)");
    if (!(sigma2 > 1.0)) throw InvalidArgument("weight: sigma2 must exceed 1");
    if (!(gamma() < 0.5)) throw InvalidArgument("weight: gamma = sigma1/sigma2 must be below 1/2");
}

std::string to_string(Region r) {
    switch (r) {
        case Region::I: return "I";
        case Region::II: return "II";
        case Region::III: return "III";
    }
    return "?";
}

double rho_eps(double r, double eps, const WeightParams& p) {
    if (eps <= 0.0) return r;
    const double r1 = std::pow(eps, -p.sigma1), r2 = std::pow(eps, -p.sigma2);
    if (r < r1) return r;
    if (r <= r2) return r1;
    return std::pow(r, p.gamma());
}

WeightModel::WeightModel(const ExpansionBundle& b, const FunctionalRelation& f, double eps, const WeightParams& p)
    : f_(&f), eps_(eps), params_(p) {
    p.validate();
    if (!(eps >= 0.0 && eps <= 0.5)) throw InvalidArgument("weight: eps must lie in [0, 0.5]");
    if (f.order != b.order || !(f.grid == b.grid)) throw InvalidArgument("weight: tables do not match bundle");
    cap_ = eps > 0.0 ? std::exp(0.25 * std::pow(eps, -2.0 * p.sigma1)) : std::numeric_limits<double>::infinity();
    omega_ = ScaledFieldEvaluator(b.omega_app(eps, 0.0));
}

std::array<double, 3> WeightModel::inner(double x1, double x2) const {
    const auto v = omega_.eval(x1, x2);
    if (!(v[0] > 0.0)) throw NumericalError("weight: approximate vorticity not positive in region I", v[0]);
    const double u = 0.25 * (x1 * x1 + x2 * x2);
    const auto d = functional_derivatives(*f_, eps_, u - std::log(4.0 * pi * v[0]));
    // F'(Omega) = s F'(s) / Omega and grad F'(Omega) = s^2 F''(s) grad Omega / Omega^2, in scaled form.
    const double e = std::exp(u);
    const double c = d.s2_F2 * e / (v[0] * v[0]);
    return {d.s_F1 * e / v[0], c * v[1], c * v[2]};
}

double WeightModel::inner_weight(double x1, double x2) const { return inner(x1, x2)[0]; }

Region WeightModel::region(double x1, double x2) const {
    if (eps_ <= 0.0) return Region::I;
    const double r = std::hypot(x1, x2);
    if (r > std::pow(eps_, -params_.sigma2)) return Region::III;
    if (r < 2.0 * std::pow(eps_, -params_.sigma1) && inner_weight(x1, x2) < cap_) return Region::I;
    return Region::II;
}

std::array<double, 3> WeightModel::eval(double x1, double x2) const {
    if (eps_ <= 0.0) return inner(x1, x2);
    const double r = std::hypot(x1, x2);
    if (r > std::pow(eps_, -params_.sigma2)) {
        const double g = params_.gamma();
        const double w = std::exp(0.25 * std::pow(r, 2.0 * g));
        const double c = w * 0.5 * g * std::pow(r, 2.0 * g - 2.0);
        return {w, c * x1, c * x2};
    }
    if (r < 2.0 * std::pow(eps_, -params_.sigma1)) {
        const auto in = inner(x1, x2);
        if (in[0] < cap_) return in;
    }
    return {cap_, 0.0, 0.0};
}

WeightTable make_weight_table(const ExpansionBundle& b, const FunctionalRelation& f, double eps,
                              const WeightParams& p, int n_theta, int stride, double r_quad) {
    if (n_theta < 16 || stride < 1) throw InvalidArgument("weight table: need n_theta >= 16 and stride >= 1");
    const GridSpec& g = b.grid;
    r_quad = std::min(r_quad, g.r_max);
    WeightTable t;
    t.grid = g;
    t.eps = eps;
    t.params = p;
    t.stride = stride;
    t.n_theta = n_theta;
    t.n_rings = static_cast<int>(std::floor(r_quad / (stride * g.spacing()) + 1e-9)) + 1;
    if (t.n_rings < 7) throw InvalidArgument("weight table: too few rings");

    const WeightModel model(b, f, eps, p);
    std::optional<WeightModel> lo, hi;
    if (eps > 0.0) {
        lo.emplace(b, f, eps * (1.0 - fd_step), p);
        hi.emplace(b, f, eps * (1.0 + fd_step), p);
    }
    const auto& rw = radial_weights(stride * g.spacing(), t.n_rings);
    const AngleTable tab(n_theta, 1);
    const size_t n = static_cast<size_t>(t.n_rings) * n_theta;
    t.ring_weight.resize(static_cast<size_t>(t.n_rings));
    t.W.resize(n);
    t.W1.resize(n);
    t.W2.resize(n);
    t.tdtW.assign(n, 0.0);
    t.rho.resize(n);
    t.region.resize(n);
    for (int k = 0; k < t.n_rings; ++k) {
        const double r = g.r(k * stride);
        t.ring_weight[static_cast<size_t>(k)] = rw[static_cast<size_t>(k)] * r * 2.0 * pi / n_theta;
        const double rho = rho_eps(r, eps, p);
        for (int j = 0; j < n_theta; ++j) {
            const size_t q = static_cast<size_t>(k) * n_theta + j;
            const double x1 = r * tab.c[static_cast<size_t>(n_theta + j)];
            const double x2 = r * tab.s[static_cast<size_t>(n_theta + j)];
            const auto w = model.eval(x1, x2);
            t.W[q] = w[0];
            t.W1[q] = w[1];
            t.W2[q] = w[2];
            t.rho[q] = rho;
            t.region[q] = model.region(x1, x2);
            // t d/dt = (eps / 2) d/d eps; region III carries no eps dependence.
            if (eps > 0.0 && t.region[q] == Region::I) {
                const double d = (hi->inner_weight(x1, x2) - lo->inner_weight(x1, x2)) / (2.0 * fd_step);
                t.tdtW[q] = 0.5 * d;
            } else if (eps > 0.0 && t.region[q] == Region::II) {
                t.tdtW[q] = -0.25 * p.sigma1 * std::pow(eps, -2.0 * p.sigma1) * w[0];
            }
        }
    }
    return t;
}

PolarField project_moments(const PolarField& w) {
    const GridSpec& g = w.grid();
    const Moments m = moments(w);
    PolarField out = w;
    // G has unit mass; d1 G and d2 G have first moments -1 in their own direction.
    out -= m.mass * gaussian_field(g);
    out += m.m1 * d1_gaussian_field(g);
    out += m.m2 * d2_gaussian_field(g);
    return out;
}

TestPerturbation make_perturbation(const PolarField& w) {
    for (const auto& [k, p] : w.modes()) {
        if (p.decay() != Decay::gaussian_weighted) {
            throw InvalidArgument("perturbation: mode " + to_string(k) + " must be Gaussian-weighted");
        }
    }
    TestPerturbation t;
    t.w = w;
    t.moments = moments(w);
    double scale = 0.0;
    for (const auto& [k, p] : w.modes()) {
        RadialProfile a = p;
        for (auto& x : a.stored()) x = std::abs(x);
        scale += 2.0 * pi * (quad_radial(a, 1) + quad_radial(a, 2));
    }
    const double defect = std::max({std::abs(t.moments.mass), std::abs(t.moments.m1), std::abs(t.moments.m2)});
    if (defect > moment_tolerance * std::max(scale, 1e-300)) {
        throw InvalidArgument("perturbation: moments do not vanish (defect " + std::to_string(defect) + ")");
    }
    t.phi = biot_savart(w);
    return t;
}

TestPerturbation random_perturbation(const GridSpec& g, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    PolarField w(g);
    for (int n = 0; n <= 4; ++n) {
        for (Parity par : {Parity::cos_mode, Parity::sin_mode}) {
            if (n == 0 && par == Parity::sin_mode) continue;
            const double c0 = normal(rng), c1 = normal(rng), c2 = normal(rng);
            w.set({n, par}, RadialProfile::sample_scaled(g, [=](double r) {
                      const double u = 0.25 * r * r;
                      return std::pow(r, n) * (c0 + c1 * u + c2 * u * u) / (4.0 * pi);
                  }));
        }
    }
    return make_perturbation(project_moments(w));
}

namespace {

// Values and gradients of w, phi and the mirrored phi on the quadrature mesh.
struct Sampled {
    std::vector<double> w, w1, w2, phi, p1, p2, tphi, tp1, tp2;
};

Sampled sample(const TestPerturbation& tp, const WeightTable& t, bool mirror) {
    const RingSampler sw(tp.w);
    const RingSampler sp(as_class(tp.phi, Decay::polynomial_growth));
    const int nmax = std::max({sw.max_mode(), sp.max_mode(), 1});
    const AngleTable tab(t.n_theta, nmax);
    const size_t n = static_cast<size_t>(t.n_rings) * t.n_theta;
    Sampled s;
    for (auto* v : {&s.w, &s.w1, &s.w2, &s.phi, &s.p1, &s.p2, &s.tphi, &s.tp1, &s.tp2}) v->assign(n, 0.0);
    std::optional<StreamEvaluator> ev;
    if (mirror && t.eps > 0.0) ev.emplace(tp.phi);
    for (int k = 0; k < t.n_rings; ++k) {
        const int i = k * t.stride;
        const size_t o = static_cast<size_t>(k) * t.n_theta;
        sw.sample(i, tab, &s.w[o], &s.w1[o], &s.w2[o]);
        sp.sample(i, tab, &s.phi[o], &s.p1[o], &s.p2[o]);
        const double r = t.grid.r(i);
        const double e = std::exp(-0.25 * r * r);
        for (int j = 0; j < t.n_theta; ++j) {
            s.w[o + j] *= e;
            s.w1[o + j] *= e;
            s.w2[o + j] *= e;
            if (!ev) continue;
            const double x1 = r * tab.c[static_cast<size_t>(t.n_theta + j)];
            const double x2 = r * tab.s[static_cast<size_t>(t.n_theta + j)];
            const auto m = ev->eval(-x1 - 1.0 / t.eps, x2);
            s.tphi[o + j] = m[0];
            s.tp1[o + j] = -m[1];
            s.tp2[o + j] = m[2];
        }
    }
    return s;
}

template <class F>
double quad(const WeightTable& t, F&& f) {
    num::CompensatedSum total;
    for (int k = 0; k < t.n_rings; ++k) {
        double ring = 0.0;
        for (int j = 0; j < t.n_theta; ++j) ring += f(static_cast<size_t>(k) * t.n_theta + j);
        total.add(t.ring_weight[static_cast<size_t>(k)] * ring);
    }
    return total.value();
}

double x_norm2_sampled(const Sampled& s, const WeightTable& t) {
    return quad(t, [&](size_t q) { return t.W[q] * s.w[q] * s.w[q]; });
}

}  // namespace

double x_norm2(const PolarField& w, const WeightTable& t) {
    if (!(w.grid() == t.grid)) throw InvalidArgument("x_norm: grid mismatch");
    const RingSampler sw(w);
    if (sw.decay() != Decay::gaussian_weighted) throw InvalidArgument("x_norm: field must be Gaussian-weighted");
    const AngleTable tab(t.n_theta, std::max(sw.max_mode(), 1));
    std::vector<double> v(static_cast<size_t>(t.n_theta));
    num::CompensatedSum total;
    for (int k = 0; k < t.n_rings; ++k) {
        const int i = k * t.stride;
        sw.sample(i, tab, v.data(), nullptr, nullptr);
        const double r = t.grid.r(i);
        const double e2 = std::exp(-0.5 * r * r);
        double ring = 0.0;
        for (int j = 0; j < t.n_theta; ++j) ring += t.W[static_cast<size_t>(k) * t.n_theta + j] * v[j] * v[j] * e2;
        total.add(t.ring_weight[static_cast<size_t>(k)] * ring);
    }
    return total.value();
}

EnergyParts energy(const TestPerturbation& w, const WeightTable& t) {
    const Sampled s = sample(w, t, true);
    EnergyParts e;
    e.x_norm2 = x_norm2_sampled(s, t);
    e.phi_w = quad(t, [&](size_t q) { return s.phi[q] * s.w[q]; });
    e.teps_w = quad(t, [&](size_t q) { return s.tphi[q] * s.w[q]; });
    e.energy = 0.5 * (e.x_norm2 + e.phi_w - e.teps_w);
    return e;
}

double energy0_modes(const TestPerturbation& w) {
    const GridSpec& g = w.w.grid();
    const auto& rw = radial_weights(g.spacing(), g.n_points);
    num::CompensatedSum total;
    for (const auto& [k, p] : w.w.modes()) {
        const double c = k.n == 0 ? 2.0 * pi : pi;
        const RadialProfile* ph = w.phi.find(k);
        num::CompensatedSum m;
        for (int i = 1; i < g.n_points; ++i) {
            const double r = g.r(i);
            const double v = p.stored()[static_cast<size_t>(i)];
            // A a^2 = A e^{-r^2/2} v^2 with A e^{-r^2/4} = 4 (1 - e^{-r^2/4}) / r^2.
            const double ae = 4.0 * -std::expm1(-0.25 * r * r) / (r * r);
            double f = ae * std::exp(-0.25 * r * r) * v * v;
            if (ph) f += ph->value(i) * std::exp(-0.25 * r * r) * v;
            m.add(rw[static_cast<size_t>(i)] * f * r);
        }
        total.add(c * m.value());
    }
    return 0.5 * total.value();
}

DiffusionParts diffusion(const TestPerturbation& w, const WeightTable& t) {
    const Sampled s = sample(w, t, true);
    const AngleTable tab(t.n_theta, 1);
    auto xi = [&](size_t q, int comp) {
        const int k = static_cast<int>(q) / t.n_theta, j = static_cast<int>(q) % t.n_theta;
        const double r = t.grid.r(k * t.stride);
        return r * (comp == 1 ? tab.c : tab.s)[static_cast<size_t>(t.n_theta + j)];
    };
    DiffusionParts d;
    d.grad_x2 = quad(t, [&](size_t q) { return t.W[q] * (s.w1[q] * s.w1[q] + s.w2[q] * s.w2[q]); });
    d.cross = quad(t, [&](size_t q) { return s.w[q] * (s.w1[q] * t.W1[q] + s.w2[q] * t.W2[q]); });
    d.radial = 0.25 * quad(t, [&](size_t q) {
                   return s.w[q] * s.w[q] * (xi(q, 1) * t.W1[q] + xi(q, 2) * t.W2[q]);
               });
    d.l2 = quad(t, [&](size_t q) { return s.w[q] * s.w[q]; });
    d.x2 = x_norm2_sampled(s, t);
    d.rho_x2 = quad(t, [&](size_t q) { return t.rho[q] * t.rho[q] * t.W[q] * s.w[q] * s.w[q]; });
    d.dW_inner = -0.5 * quad(t, [&](size_t q) {
                     return t.region[q] == Region::I ? t.tdtW[q] * s.w[q] * s.w[q] : 0.0;
                 });
    d.dW_middle = -0.5 * quad(t, [&](size_t q) {
                      return t.region[q] == Region::II ? t.tdtW[q] * s.w[q] * s.w[q] : 0.0;
                  });
    if (t.eps > 0.0) {
        d.teps = quad(t, [&](size_t q) {
            return -(s.w1[q] * s.tp1[q] + s.w2[q] * s.tp2[q]) -
                   0.5 * s.w[q] * (xi(q, 1) * s.tp1[q] + xi(q, 2) * s.tp2[q]);
        });
    }
    d.total = d.grad_x2 + d.cross + d.radial - d.l2 - 0.5 * d.x2 + d.dW_inner + d.dW_middle + d.teps;
    d.lower_ratio = d.total / (d.grad_x2 + d.rho_x2 + d.x2);
    return d;
}

CoercivityReport coercivity_check(const ExpansionBundle& b, const std::vector<double>& eps_list, int samples,
                                  std::uint64_t seed, const WeightParams& p) {
    p.validate();
    if (samples < 1) throw InvalidArgument("energy-check: samples must be positive");
    if (eps_list.empty()) throw InvalidArgument("energy-check: empty eps list");
    for (double e : eps_list) {
        if (!(e > 0.0 && e <= 0.5)) throw InvalidArgument("energy-check: eps must lie in (0, 0.5]");
    }
    const FunctionalRelation f = functional_relation(b);
    std::mt19937_64 rng(seed);
    std::vector<TestPerturbation> pert;
    pert.reserve(static_cast<size_t>(samples));
    for (int i = 0; i < samples; ++i) pert.push_back(random_perturbation(b.grid, rng));

    CoercivityReport rep;
    rep.params = p;
    rep.order = b.order;
    rep.seed = seed;
    rep.samples = samples;
    const PolarField G = gaussian_field(b.grid);
    rep.x_norm_G0 = std::sqrt(x_norm2(G, make_weight_table(b, f, 0.0, p)));
    std::vector<double> xs, ys;
    for (double e : eps_list) {
        const WeightTable t = make_weight_table(b, f, e, p);
        CoercivityRow row;
        row.eps = e;
        row.samples = samples;
        row.x_norm_G = std::sqrt(x_norm2(G, t));
        row.min_energy_ratio = row.min_diffusion_ratio = std::numeric_limits<double>::infinity();
        row.max_energy_ratio = row.max_diffusion_ratio = -std::numeric_limits<double>::infinity();
        for (const auto& w : pert) {
            const EnergyParts en = energy(w, t);
            const DiffusionParts di = diffusion(w, t);
            if (!(en.energy > 0.0)) ++row.non_positive;
            const double k1 = en.energy / en.x_norm2;
            row.min_energy_ratio = std::min(row.min_energy_ratio, k1);
            row.max_energy_ratio = std::max(row.max_energy_ratio, k1);
            row.min_diffusion_ratio = std::min(row.min_diffusion_ratio, di.lower_ratio);
            row.max_diffusion_ratio = std::max(row.max_diffusion_ratio, di.lower_ratio);
            row.max_teps_ratio = std::max(row.max_teps_ratio, std::abs(en.teps_w) / en.x_norm2);
        }
        rep.rows.push_back(row);
        xs.push_back(e);
        ys.push_back(row.max_teps_ratio);
    }
    if (xs.size() >= 2) rep.teps_slope = num::fit_loglog(xs, ys).slope;
    return rep;
}

std::string coercivity_to_json(const CoercivityReport& r) {
    nlohmann::ordered_json j;
    j["report"] = "coercivity";
    j["order"] = r.order;
    j["sigma1"] = r.params.sigma1;
    j["sigma2"] = r.params.sigma2;
    j["seed"] = r.seed;
    j["samples"] = r.samples;
    j["x_norm_G_eps0"] = r.x_norm_G0;
    j["teps_slope"] = r.teps_slope;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"eps", row.eps},
                        {"non_positive_energy", row.non_positive},
                        {"kappa1_min", row.min_energy_ratio},
                        {"kappa1_max", row.max_energy_ratio},
                        {"kappaD_min", row.min_diffusion_ratio},
                        {"kappaD_max", row.max_diffusion_ratio},
                        {"teps_ratio_max", row.max_teps_ratio},
                        {"x_norm_G", row.x_norm_G}});
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

}  // namespace dipole
