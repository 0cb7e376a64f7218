#include "dipole/polar_core.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <ostream>

#include "dipole/errors.hpp"
#include "dipole/numerics.hpp"

namespace dipole {

void GridSpec::validate() const {
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw InvalidArgument("GridSpec: r_max must be positive");
    if (n_points < 16) throw InvalidArgument("GridSpec: n_points must be at least 16");
}

std::string to_string(Decay d) {
    switch (d) {
        case Decay::gaussian_weighted: return "gaussian_weighted";
        case Decay::polynomial_growth: return "polynomial_growth";
        case Decay::bounded: return "bounded";
    }
    return "bounded";
}

std::string to_string(Parity p) { return p == Parity::cos_mode ? "cos" : "sin"; }

Decay decay_from_string(const std::string& s) {
    if (s == "gaussian_weighted") return Decay::gaussian_weighted;
    if (s == "polynomial_growth") return Decay::polynomial_growth;
    if (s == "bounded") return Decay::bounded;
    throw InvalidArgument("unknown decay class '" + s + "'");
}

Parity parity_from_string(const std::string& s) {
    if (s == "cos") return Parity::cos_mode;
    if (s == "sin") return Parity::sin_mode;
    throw InvalidArgument("unknown parity '" + s + "'");
}

Decay weaker(Decay a, Decay b) {
    if (a == Decay::polynomial_growth || b == Decay::polynomial_growth) return Decay::polynomial_growth;
    if (a == Decay::bounded || b == Decay::bounded) return Decay::bounded;
    return Decay::gaussian_weighted;
}

std::string to_string(const ModeKey& k) { return "(" + std::to_string(k.n) + "," + to_string(k.parity) + ")"; }

// ---------------------------------------------------------------- RadialProfile

RadialProfile::RadialProfile(const GridSpec& grid, Decay decay, std::vector<double> stored)
    : grid_(grid), decay_(decay), stored_(std::move(stored)) {
    grid_.validate();
    if (static_cast<int>(stored_.size()) != grid_.n_points) {
        throw InvalidArgument("RadialProfile: sample count does not match grid");
    }
}

RadialProfile RadialProfile::zero(const GridSpec& grid, Decay decay) {
    return RadialProfile(grid, decay, std::vector<double>(static_cast<size_t>(grid.n_points), 0.0));
}

RadialProfile RadialProfile::sample(const GridSpec& grid, Decay decay, const std::function<double(double)>& a) {
    grid.validate();
    std::vector<double> s(static_cast<size_t>(grid.n_points));
    for (int i = 0; i < grid.n_points; ++i) {
        const double r = grid.r(i);
        const double v = a(r);
        s[static_cast<size_t>(i)] = decay == Decay::gaussian_weighted ? v * std::exp(0.25 * r * r) : v;
    }
    return RadialProfile(grid, decay, std::move(s));
}

RadialProfile RadialProfile::sample_scaled(const GridSpec& grid, const std::function<double(double)>& v) {
    grid.validate();
    std::vector<double> s(static_cast<size_t>(grid.n_points));
    for (int i = 0; i < grid.n_points; ++i) s[static_cast<size_t>(i)] = v(grid.r(i));
    return RadialProfile(grid, Decay::gaussian_weighted, std::move(s));
}

double RadialProfile::value(int i) const {
    const double s = stored_[static_cast<size_t>(i)];
    if (decay_ != Decay::gaussian_weighted) return s;
    const double r = grid_.r(i);
    return s * std::exp(-0.25 * r * r);
}

std::vector<double> RadialProfile::values() const {
    std::vector<double> out(stored_.size());
    for (int i = 0; i < size(); ++i) out[static_cast<size_t>(i)] = value(i);
    return out;
}

RadialProfile RadialProfile::converted(Decay target) const {
    if (target == decay_) return *this;
    if (target == Decay::gaussian_weighted) {
        throw InvalidArgument("RadialProfile: cannot promote a non-decaying profile to gaussian_weighted");
    }
    return RadialProfile(grid_, target, values());
}

RadialProfile& RadialProfile::operator*=(double s) {
    for (auto& x : stored_) x *= s;
    return *this;
}

void RadialProfile::axpy(double s, const RadialProfile& other) {
    if (!(other.grid_ == grid_)) throw InvalidArgument("RadialProfile: incompatible grids");
    const Decay d = weaker(decay_, other.decay_);
    if (d != decay_) *this = converted(d);
    if (other.decay_ == d) {
        for (size_t i = 0; i < stored_.size(); ++i) stored_[i] += s * other.stored_[i];
    } else {
        for (int i = 0; i < size(); ++i) stored_[static_cast<size_t>(i)] += s * other.value(i);
    }
}

double RadialProfile::max_abs_stored() const {
    double m = 0.0;
    for (double x : stored_) m = std::max(m, std::abs(x));
    return m;
}

void RadialProfile::write_csv(std::ostream& os) const {
    os << "r,value\n";
    os.precision(17);
    for (int i = 0; i < size(); ++i) os << grid_.r(i) << ',' << value(i) << '\n';
}

// ---------------------------------------------------------------- PolarField

void PolarField::check_key(const ModeKey& key, const RadialProfile& p) const {
    if (key.n < 0) throw InvalidArgument("PolarField: negative mode number");
    if (key.n == 0 && key.parity == Parity::sin_mode) throw InvalidArgument("PolarField: no sine component at n = 0");
    if (!(p.grid() == grid_)) throw InvalidArgument("PolarField: incompatible grids");
}

void PolarField::set(ModeKey key, RadialProfile profile) {
    check_key(key, profile);
    modes_[key] = std::move(profile);
}

void PolarField::accumulate(ModeKey key, const RadialProfile& profile, double coef) {
    check_key(key, profile);
    auto it = modes_.find(key);
    if (it == modes_.end()) {
        RadialProfile p = profile;
        p *= coef;
        modes_.emplace(key, std::move(p));
    } else {
        it->second.axpy(coef, profile);
    }
}

const RadialProfile* PolarField::find(ModeKey key) const {
    auto it = modes_.find(key);
    return it == modes_.end() ? nullptr : &it->second;
}

int PolarField::max_mode() const {
    int m = -1;
    for (const auto& [k, p] : modes_) m = std::max(m, k.n);
    return m;
}

PolarField& PolarField::operator+=(const PolarField& other) {
    if (empty() && !(grid_ == other.grid_)) grid_ = other.grid_;
    for (const auto& [k, p] : other.modes_) accumulate(k, p, 1.0);
    return *this;
}

PolarField& PolarField::operator-=(const PolarField& other) {
    if (empty() && !(grid_ == other.grid_)) grid_ = other.grid_;
    for (const auto& [k, p] : other.modes_) accumulate(k, p, -1.0);
    return *this;
}

PolarField& PolarField::operator*=(double s) {
    for (auto& [k, p] : modes_) p *= s;
    return *this;
}

PolarField PolarField::radial_part() const {
    PolarField out(grid_);
    if (auto* p = find({0, Parity::cos_mode})) out.set({0, Parity::cos_mode}, *p);
    return out;
}

PolarField PolarField::nonradial_part() const {
    PolarField out(grid_);
    for (const auto& [k, p] : modes_)
        if (k.n > 0) out.set(k, p);
    return out;
}

PolarField PolarField::only(Parity par) const {
    PolarField out(grid_);
    for (const auto& [k, p] : modes_)
        if (k.parity == par) out.set(k, p);
    return out;
}

void PolarField::prune(double tol) {
    for (auto it = modes_.begin(); it != modes_.end();) {
        if (it->second.max_abs_stored() <= tol) {
            it = modes_.erase(it);
        } else {
            ++it;
        }
    }
}

double PolarField::max_abs_stored() const {
    double m = 0.0;
    for (const auto& [k, p] : modes_) m = std::max(m, p.max_abs_stored());
    return m;
}

void PolarField::write_csv(std::ostream& os) const {
    os << "r";
    for (const auto& [k, p] : modes_) os << ",n" << k.n << '_' << to_string(k.parity);
    os << '\n';
    os.precision(17);
    for (int i = 0; i < grid_.n_points; ++i) {
        os << grid_.r(i);
        for (const auto& [k, p] : modes_) os << ',' << p.value(i);
        os << '\n';
    }
}

PolarField operator+(PolarField a, const PolarField& b) { return a += b; }
PolarField operator-(PolarField a, const PolarField& b) { return a -= b; }
PolarField operator*(double s, PolarField a) { return a *= s; }

// ---------------------------------------------------------------- EpsDeltaSeries

EpsDeltaSeries::EpsDeltaSeries(const GridSpec& grid, int order_eps, int order_delta)
    : grid_(grid), order_eps_(order_eps), order_delta_(order_delta) {
    if (order_eps < 0) throw InvalidArgument("EpsDeltaSeries: negative eps order");
    if (order_delta < 0 || order_delta > 2) throw InvalidArgument("EpsDeltaSeries: delta order must lie in [0, 2]");
}

void EpsDeltaSeries::add_term(int k, int j, const PolarField& f, double coef) {
    if (!(f.grid() == grid_) && !f.empty()) throw InvalidArgument("EpsDeltaSeries: incompatible grids");
    if (k > order_eps_ || j > order_delta_) {
        ++truncated_;
        return;
    }
    if (f.empty()) return;
    auto [it, inserted] = terms_.try_emplace({k, j}, grid_);
    PolarField tmp = f;
    tmp *= coef;
    it->second += tmp;
}

PolarField EpsDeltaSeries::coefficient(int k, int j) const {
    auto it = terms_.find({k, j});
    return it == terms_.end() ? PolarField(grid_) : it->second;
}

EpsDeltaSeries& EpsDeltaSeries::operator+=(const EpsDeltaSeries& other) {
    if (!(other.grid_ == grid_)) throw InvalidArgument("EpsDeltaSeries: incompatible grids");
    for (const auto& [kj, f] : other.terms_) add_term(kj.first, kj.second, f);
    truncated_ += other.truncated_;
    return *this;
}

EpsDeltaSeries& EpsDeltaSeries::scale(double s) {
    for (auto& [kj, f] : terms_) f *= s;
    return *this;
}

EpsDeltaSeries& EpsDeltaSeries::multiply_by_eps_power(int p) {
    std::map<std::pair<int, int>, PolarField> shifted;
    for (auto& [kj, f] : terms_) {
        const int k = kj.first + p;
        if (k < 0) throw InvalidArgument("EpsDeltaSeries: negative power after shift");
        if (k > order_eps_) {
            ++truncated_;
            continue;
        }
        shifted.emplace(std::make_pair(k, kj.second), std::move(f));
    }
    terms_ = std::move(shifted);
    return *this;
}

PolarField EpsDeltaSeries::evaluate(double eps, double delta) const {
    PolarField out(grid_);
    for (const auto& [kj, f] : terms_) {
        PolarField tmp = f;
        tmp *= std::pow(eps, kj.first) * std::pow(delta, kj.second);
        out += tmp;
    }
    return out;
}

// ---------------------------------------------------------------- quadrature

const std::vector<double>& radial_weights(double h, int n_nodes) {
    static std::mutex mu;
    static std::map<std::pair<double, int>, std::vector<double>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(h, n_nodes);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    if (n_nodes < 2) throw InvalidArgument("radial_weights: need at least two nodes");
    std::vector<double> w(static_cast<size_t>(n_nodes), 0.0);
    if (n_nodes < 6) {
        std::vector<double> x(static_cast<size_t>(n_nodes));
        for (int i = 0; i < n_nodes; ++i) x[static_cast<size_t>(i)] = i * h;
        w = num::interpolant_integral_weights(x, 0.0, (n_nodes - 1) * h);
    } else {
        static constexpr double nc[6] = {19.0, 75.0, 50.0, 50.0, 75.0, 19.0};
        const int panels = (n_nodes - 1) / 5;
        for (int p = 0; p < panels; ++p)
            for (int j = 0; j < 6; ++j) w[static_cast<size_t>(5 * p + j)] += 5.0 * h / 288.0 * nc[j];
        const int done = 5 * panels;
        if (done < n_nodes - 1) {
            const int first = n_nodes - 6;
            std::vector<double> x(6);
            for (int j = 0; j < 6; ++j) x[static_cast<size_t>(j)] = (first + j) * h;
            const auto tail = num::interpolant_integral_weights(x, done * h, (n_nodes - 1) * h);
            for (int j = 0; j < 6; ++j) w[static_cast<size_t>(first + j)] += tail[static_cast<size_t>(j)];
        }
    }
    return cache.emplace(key, std::move(w)).first->second;
}

namespace {

int nodes_within(const GridSpec& g, double r_cut) {
    if (r_cut >= g.r_max) return g.n_points;
    const int n = static_cast<int>(std::floor(r_cut / g.spacing() + 1e-9)) + 1;
    return std::clamp(n, 2, g.n_points);
}

double quad_nodes(const RadialProfile& p, int power, int n_nodes) {
    const auto& w = radial_weights(p.grid().spacing(), n_nodes);
    num::CompensatedSum s;
    for (int i = 0; i < n_nodes; ++i) {
        const double r = p.grid().r(i);
        const double rp = power == 0 ? 1.0 : std::pow(r, power);
        s.add(w[static_cast<size_t>(i)] * p.value(i) * rp);
    }
    return s.value();
}

}  // namespace

double quad_radial(const RadialProfile& p, int power) {
    if (p.decay() != Decay::gaussian_weighted) {
        throw InvalidArgument("quad_radial: " + to_string(p.decay()) +
                              " profile integrated over the whole grid depends on the truncation radius");
    }
    if (power < 0) throw InvalidArgument("quad_radial: power must be non-negative");
    return quad_nodes(p, power, p.grid().n_points);
}

double quad_radial(const RadialProfile& p, int power, double r_cut) {
    if (power < 0) throw InvalidArgument("quad_radial: power must be non-negative");
    return quad_nodes(p, power, nodes_within(p.grid(), r_cut));
}

Moments moments(const PolarField& f) {
    Moments m;
    if (auto* a0 = f.find({0, Parity::cos_mode})) m.mass = 2.0 * std::numbers::pi * quad_radial(*a0, 1);
    if (auto* a1 = f.find({1, Parity::cos_mode})) m.m1 = std::numbers::pi * quad_radial(*a1, 2);
    if (auto* b1 = f.find({1, Parity::sin_mode})) m.m2 = std::numbers::pi * quad_radial(*b1, 2);
    return m;
}

namespace {

double y_inner_nodes(const PolarField& f, const PolarField& g, int n_nodes) {
    if (!(f.grid() == g.grid())) throw InvalidArgument("y_inner: incompatible grids");
    const GridSpec& grid = f.grid();
    const auto& w = radial_weights(grid.spacing(), n_nodes);
    num::CompensatedSum total;
    for (const auto& [k, pf] : f.modes()) {
        const RadialProfile* pg = g.find(k);
        if (pf.decay() != Decay::gaussian_weighted) {
            throw InvalidArgument("y_inner: mode " + to_string(k) + " is " + to_string(pf.decay()) +
                                  "; the weighted norm needs Gaussian decay");
        }
        if (!pg) continue;
        if (pg->decay() != Decay::gaussian_weighted) {
            throw InvalidArgument("y_inner: mode " + to_string(k) + " is " + to_string(pg->decay()) +
                                  "; the weighted norm needs Gaussian decay");
        }
        num::CompensatedSum s;
        for (int i = 0; i < n_nodes; ++i) {
            const double r = grid.r(i);
            s.add(w[static_cast<size_t>(i)] * pf.stored()[static_cast<size_t>(i)] *
                  pg->stored()[static_cast<size_t>(i)] * std::exp(-0.25 * r * r) * r);
        }
        total.add((k.n == 0 ? 2.0 : 1.0) * std::numbers::pi * s.value());
    }
    for (const auto& [k, pg] : g.modes()) {
        if (pg.decay() != Decay::gaussian_weighted) {
            throw InvalidArgument("y_inner: mode " + to_string(k) + " is " + to_string(pg.decay()) +
                                  "; the weighted norm needs Gaussian decay");
        }
    }
    return total.value();
}

}  // namespace

double y_inner(const PolarField& f, const PolarField& g) { return y_inner_nodes(f, g, f.grid().n_points); }

double y_norm(const PolarField& f) { return std::sqrt(std::max(0.0, y_inner(f, f))); }

double y_norm(const PolarField& f, double r_cut) {
    return std::sqrt(std::max(0.0, y_inner_nodes(f, f, nodes_within(f.grid(), r_cut))));
}

}  // namespace dipole
