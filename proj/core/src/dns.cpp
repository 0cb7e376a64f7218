#include "dipole/dns.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fftw3.h>

#include "dipole/errors.hpp"
#include "dipole/gaussian_base.hpp"
#include "dipole/numerics.hpp"

namespace dipole {

namespace {

constexpr double pi = std::numbers::pi;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size() || !std::isfinite(x)) {
        throw InvalidArgument("config: '" + key + "' expects a number, got '" + v + "'");
    }
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw InvalidArgument("config: '" + key + "' expects an integer");
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw InvalidArgument("config: '" + key + "' expects true or false");
}

}  // namespace

std::map<std::string, std::string> parse_key_value(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument("config line " + std::to_string(no) + ": expected 'key = value'");
        }
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw InvalidArgument("config line " + std::to_string(no) + ": empty key or value");
        }
        kv[key] = value;
    }
    return kv;
}

std::map<std::string, std::string> read_key_value_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidArgument("cannot open config file '" + path + "'");
    return parse_key_value(is);
}

void DnsConfig::validate() const {
    dipole.validate();
    if (n < 16 || n % 2 != 0) throw InvalidArgument("dns: n must be even and at least 16");
    if (!(box >= 16.0 * dipole.d)) throw InvalidArgument("dns: box side must be at least 16 d");
    if (!(eps0 >= 0.02 && eps0 <= 0.15)) throw InvalidArgument("dns: eps0 must lie in [0.02, 0.15]");
    if (!(sigma >= 0.0)) throw InvalidArgument("dns: sigma must be non-negative");
    if (!(run_time >= 0.0)) throw InvalidArgument("dns: run_time must be non-negative");
    if (!(cfl > 0.0 && cfl <= 1.0)) throw InvalidArgument("dns: cfl must lie in (0, 1]");
    if (sample_every < 1) throw InvalidArgument("dns: sample_every must be positive");
    if (!(window >= 0.0)) throw InvalidArgument("dns: window must be non-negative");
    if (order < 2) throw InvalidArgument("dns: order must be at least 2");
    if (!(max_wall_seconds >= 0.0)) throw InvalidArgument("dns: max_wall_seconds must be non-negative");
    if (dipole.eps(t0() + horizon()) > 0.2) throw InvalidArgument("dns: run would exceed eps = 0.2");
}

double DnsConfig::horizon() const {
    if (run_time > 0.0) return run_time;
    return dipole.t_adv() * std::max(1.0, std::pow(dipole.delta(), -sigma));
}

DnsConfig dns_config_from(const std::map<std::string, std::string>& kv, DnsConfig base) {
    auto get = [&](const char* k) -> const std::string* {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second;
    };
    static const char* known[] = {"re", "nu", "gamma", "d", "n", "box", "eps0", "sigma", "run_time", "cfl",
                                  "sample_every", "window", "order", "init", "advection", "max_wall_seconds"};
    for (const auto& [k, v] : kv) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char* s) { return k == s; }) ==
            std::end(known)) {
            throw InvalidArgument("config: unknown key '" + k + "'");
        }
    }
    DnsConfig c = base;
    const double re_old = c.reynolds();
    if (auto v = get("gamma")) c.dipole.gamma = to_double("gamma", *v);
    if (auto v = get("d")) c.dipole.d = to_double("d", *v);
    if (get("re") && get("nu")) throw InvalidArgument("config: give either 're' or 'nu', not both");
    if (auto v = get("re")) {
        c.dipole.nu = c.dipole.gamma / to_double("re", *v);
    } else if (auto v2 = get("nu")) {
        c.dipole.nu = to_double("nu", *v2);
    } else {
        c.dipole.nu = c.dipole.gamma / re_old;
    }
    if (auto v = get("n")) c.n = to_int("n", *v);
    if (auto v = get("box")) c.box = to_double("box", *v);
    if (auto v = get("eps0")) c.eps0 = to_double("eps0", *v);
    if (auto v = get("sigma")) c.sigma = to_double("sigma", *v);
    if (auto v = get("run_time")) c.run_time = to_double("run_time", *v);
    if (auto v = get("cfl")) c.cfl = to_double("cfl", *v);
    if (auto v = get("sample_every")) c.sample_every = to_int("sample_every", *v);
    if (auto v = get("window")) c.window = to_double("window", *v);
    if (auto v = get("order")) c.order = to_int("order", *v);
    if (auto v = get("init")) {
        if (*v == "gaussian") c.gaussian_init = true;
        else if (*v == "bundle") c.gaussian_init = false;
        else throw InvalidArgument("config: 'init' expects bundle or gaussian");
    }
    if (auto v = get("advection")) c.advection = to_bool("advection", *v);
    if (auto v = get("max_wall_seconds")) c.max_wall_seconds = to_double("max_wall_seconds", *v);
    return c;
}

// ------------------------------------------------------------------ solver

struct SpectralSolver::Buffers {
    size_t nr = 0, nk = 0;
    fftw_complex *w = nullptr, *a = nullptr, *b = nullptr, *c = nullptr, *d = nullptr, *t = nullptr;
    fftw_complex *s1 = nullptr, *s2 = nullptr, *s3 = nullptr;
    double *r1 = nullptr, *r2 = nullptr, *r3 = nullptr;
    fftw_plan fwd = nullptr, bwd = nullptr;

    Buffers(int n, int nc) : nr(static_cast<size_t>(n) * n), nk(static_cast<size_t>(n) * nc) {
        for (auto** p : {&w, &a, &b, &c, &d, &t, &s1, &s2, &s3}) {
            *p = fftw_alloc_complex(nk);
            std::fill_n(reinterpret_cast<double*>(*p), 2 * nk, 0.0);
        }
        for (auto** p : {&r1, &r2, &r3}) {
            *p = fftw_alloc_real(nr);
            std::fill_n(*p, nr, 0.0);
        }
        // FFTW_ESTIMATE keeps the chosen algorithm, and hence the output bits, independent of timing.
        fwd = fftw_plan_dft_r2c_2d(n, n, r1, s1, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_2d(n, n, s1, r1, FFTW_ESTIMATE);
        if (!fwd || !bwd) throw NumericalError("dns: FFTW planning failed", 0.0);
    }
    ~Buffers() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        for (auto* p : {w, a, b, c, d, t, s1, s2, s3}) fftw_free(p);
        for (auto* p : {r1, r2, r3}) fftw_free(p);
    }
};

namespace {

using cplx = std::complex<double>;

cplx* as_cplx(fftw_complex* p) { return reinterpret_cast<cplx*>(p); }

}  // namespace

SpectralSolver::SpectralSolver(int n, double box, double nu, bool advection)
    : n_(n), nc_(n / 2 + 1), box_(box), nu_(nu), advection_(advection) {
    if (n < 16 || n % 2 != 0) throw InvalidArgument("dns: n must be even and at least 16");
    if (!(box > 0.0) || !(nu >= 0.0)) throw InvalidArgument("dns: box must be positive and nu non-negative");
    grid_ = Grid2D::square(0.0, 0.0, 0.5 * box, n);
    kx_.resize(static_cast<size_t>(nc_));
    ky_.resize(static_cast<size_t>(n_));
    const double k0 = 2.0 * pi / box;
    for (int i = 0; i < nc_; ++i) kx_[static_cast<size_t>(i)] = k0 * i;
    for (int j = 0; j < n_; ++j) ky_[static_cast<size_t>(j)] = k0 * (j <= n_ / 2 ? j : j - n_);
    mask_.resize(static_cast<size_t>(n_) * nc_);
    for (int j = 0; j < n_; ++j) {
        const int mj = j <= n_ / 2 ? j : n_ - j;
        for (int i = 0; i < nc_; ++i) mask_[static_cast<size_t>(j) * nc_ + i] = (3 * i < n_ && 3 * mj < n_) ? 1 : 0;
    }
    buf_ = std::make_unique<Buffers>(n_, nc_);
}

SpectralSolver::~SpectralSolver() = default;

void SpectralSolver::forward(double* in, cplx* out) const {
    fftw_execute_dft_r2c(buf_->fwd, in, reinterpret_cast<fftw_complex*>(out));
    const double s = 1.0 / (static_cast<double>(n_) * n_);
    for (size_t q = 0; q < buf_->nk; ++q) out[q] *= s;
}

void SpectralSolver::backward(const cplx* in, double* out) const {
    // c2r overwrites its input.
    cplx* tmp = as_cplx(buf_->s3);
    if (in != tmp) std::copy(in, in + buf_->nk, tmp);
    fftw_execute_dft_c2r(buf_->bwd, buf_->s3, out);
}

void SpectralSolver::set_vorticity(const Samples2D& w) {
    if (w.grid.nx != n_ || w.grid.ny != n_ || std::abs(w.grid.x_min - grid_.x_min) > 1e-12 ||
        std::abs(w.grid.y_min - grid_.y_min) > 1e-12 || std::abs(w.grid.x_max - grid_.x_max) > 1e-12) {
        throw InvalidArgument("dns: samples are not on the solver grid");
    }
    std::copy(w.v.begin(), w.v.end(), buf_->r1);
    cplx* s = as_cplx(buf_->w);
    forward(buf_->r1, s);
    for (size_t q = 0; q < buf_->nk; ++q) if (!mask_[q]) s[q] = 0.0;
}

Samples2D SpectralSolver::vorticity() const {
    Samples2D out(grid_);
    backward(as_cplx(buf_->w), out.v.data());
    return out;
}

std::array<Samples2D, 2> SpectralSolver::velocity() const {
    const cplx* w = as_cplx(buf_->w);
    cplx* u1 = as_cplx(buf_->s1);
    cplx* u2 = as_cplx(buf_->s2);
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < nc_; ++i) {
            const size_t q = static_cast<size_t>(j) * nc_ + i;
            const double kx = kx_[static_cast<size_t>(i)], ky = ky_[static_cast<size_t>(j)];
            const double k2 = kx * kx + ky * ky;
            if (k2 == 0.0) {
                u1[q] = u2[q] = 0.0;
                continue;
            }
            // psi_hat = -w_hat / k^2.
            u1[q] = cplx(0.0, ky) * w[q] / k2;
            u2[q] = cplx(0.0, -kx) * w[q] / k2;
        }
    }
    std::array<Samples2D, 2> out{Samples2D(grid_), Samples2D(grid_)};
    backward(u1, out[0].v.data());
    backward(u2, out[1].v.data());
    return out;
}

Samples2D SpectralSolver::velocity2_of(const Samples2D& w) const {
    std::copy(w.v.begin(), w.v.end(), buf_->r2);
    cplx* s = as_cplx(buf_->s2);
    forward(buf_->r2, s);
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < nc_; ++i) {
            const size_t q = static_cast<size_t>(j) * nc_ + i;
            const double kx = kx_[static_cast<size_t>(i)], ky = ky_[static_cast<size_t>(j)];
            const double k2 = kx * kx + ky * ky;
            s[q] = k2 == 0.0 ? cplx(0.0) : cplx(0.0, -kx) * s[q] / k2;
        }
    }
    Samples2D out(grid_);
    backward(s, out.v.data());
    return out;
}

void SpectralSolver::nonlinear(const cplx* w, cplx* out) const {
    const size_t nk = buf_->nk, nr = buf_->nr;
    if (!advection_) {
        std::fill(out, out + nk, cplx(0.0));
        return;
    }
    cplx* u1 = as_cplx(buf_->s1);
    cplx* u2 = as_cplx(buf_->s2);
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < nc_; ++i) {
            const size_t q = static_cast<size_t>(j) * nc_ + i;
            const double kx = kx_[static_cast<size_t>(i)], ky = ky_[static_cast<size_t>(j)];
            const double k2 = kx * kx + ky * ky;
            u1[q] = k2 == 0.0 ? cplx(0.0) : cplx(0.0, ky) * w[q] / k2;
            u2[q] = k2 == 0.0 ? cplx(0.0) : cplx(0.0, -kx) * w[q] / k2;
        }
    }
    backward(u1, buf_->r1);
    backward(u2, buf_->r2);
    backward(w, buf_->r3);
    for (size_t p = 0; p < nr; ++p) {
        buf_->r1[p] *= buf_->r3[p];
        buf_->r2[p] *= buf_->r3[p];
    }
    forward(buf_->r1, u1);
    forward(buf_->r2, u2);
    // -div(u w) in conservative form.
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < nc_; ++i) {
            const size_t q = static_cast<size_t>(j) * nc_ + i;
            if (!mask_[q]) {
                out[q] = 0.0;
                continue;
            }
            const double kx = kx_[static_cast<size_t>(i)], ky = ky_[static_cast<size_t>(j)];
            out[q] = cplx(0.0, -kx) * u1[q] + cplx(0.0, -ky) * u2[q];
        }
    }
}

void SpectralSolver::step(double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("dns: time step must be positive");
    const size_t nk = buf_->nk;
    if (dt != cached_dt_) {
        half_.resize(nk);
        full_.resize(nk);
        for (int j = 0; j < n_; ++j) {
            for (int i = 0; i < nc_; ++i) {
                const size_t q = static_cast<size_t>(j) * nc_ + i;
                const double kx = kx_[static_cast<size_t>(i)], ky = ky_[static_cast<size_t>(j)];
                half_[q] = std::exp(-0.5 * nu_ * (kx * kx + ky * ky) * dt);
                full_[q] = half_[q] * half_[q];
            }
        }
        cached_dt_ = dt;
    }
    cplx* w = as_cplx(buf_->w);
    cplx* a = as_cplx(buf_->a);
    cplx* b = as_cplx(buf_->b);
    cplx* c = as_cplx(buf_->c);
    cplx* d = as_cplx(buf_->d);
    cplx* t = as_cplx(buf_->t);
    const double h = 0.5 * dt;
    nonlinear(w, a);
    for (size_t q = 0; q < nk; ++q) t[q] = half_[q] * (w[q] + h * a[q]);
    nonlinear(t, b);
    for (size_t q = 0; q < nk; ++q) t[q] = half_[q] * w[q] + h * b[q];
    nonlinear(t, c);
    for (size_t q = 0; q < nk; ++q) t[q] = full_[q] * w[q] + dt * half_[q] * c[q];
    nonlinear(t, d);
    for (size_t q = 0; q < nk; ++q) {
        w[q] = full_[q] * w[q] + dt / 6.0 * (full_[q] * a[q] + 2.0 * half_[q] * (b[q] + c[q]) + d[q]);
    }
    t_ += dt;
}

// ------------------------------------------------------------------ measurement

namespace {

double wrap(double y, double box) { return y - box * std::round(y / box); }

// Gaussian pair at (+-d/2, z2) with the x2 offset taken periodically.
Samples2D gaussian_pair(const DipoleParams& p, double t, double z2, const Grid2D& g, double box) {
    Samples2D out(g);
    const double s2 = p.nu * t;
    const double amp = p.gamma / (4.0 * pi * s2);
    for (int j = 0; j < g.ny; ++j) {
        const double y = wrap(g.y(j) - z2, box);
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i);
            const double ql = (x + 0.5 * p.d) * (x + 0.5 * p.d) + y * y;
            const double qr = (x - 0.5 * p.d) * (x - 0.5 * p.d) + y * y;
            out.at(i, j) = amp * (std::exp(-ql / (4.0 * s2)) - std::exp(-qr / (4.0 * s2)));
        }
    }
    return out;
}

// int over x1 > 0 of u2 w.
double right_half_flux(const Samples2D& u2, const Samples2D& w) {
    num::CompensatedSum acc;
    for (int j = 0; j < w.grid.ny; ++j) {
        for (int i = w.grid.nx / 2; i < w.grid.nx; ++i) acc.add(u2.at(i, j) * w.at(i, j));
    }
    return acc.value() * w.grid.cell_area();
}

double boundary_max(const Samples2D& s) {
    double m = 0.0;
    const int nx = s.grid.nx, ny = s.grid.ny;
    for (int i = 0; i < nx; ++i) m = std::max({m, std::abs(s.at(i, 0)), std::abs(s.at(i, ny - 1))});
    for (int j = 0; j < ny; ++j) m = std::max({m, std::abs(s.at(0, j)), std::abs(s.at(nx - 1, j))});
    return m;
}

double max_abs(const Samples2D& s) {
    double m = 0.0;
    for (double v : s.v) m = std::max(m, std::abs(v));
    return m;
}

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y, size_t lo, size_t hi) {
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(hi - lo);
    for (size_t k = lo; k < hi; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (size_t k = lo; k < hi; ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxy / sxx;
}

}  // namespace

Samples2D init_from_dipole(const DnsConfig& c, const ExpansionBundle& b) {
    c.validate();
    const Grid2D g = Grid2D::square(0.0, 0.0, 0.5 * c.box, c.n);
    Samples2D w = c.gaussian_init ? physical_dipole(c.dipole, c.t0(), 0.0, g)
                                  : physical_dipole(c.dipole, c.t0(), 0.0, g, &b);
    const double peak = max_abs(w), edge = boundary_max(w);
    if (!(peak > 0.0) || edge > 1e-12 * peak) {
        throw InvalidArgument("dns: initial vorticity is not confined to the box (edge/peak " +
                              std::to_string(edge / peak) + ")");
    }
    return w;
}

double image_velocity(const SpectralSolver& s, const DipoleParams& p, double eps) {
    const double t = p.time_for_eps(eps);
    const Grid2D& g = s.grid();
    const Samples2D w = gaussian_pair(p, t, 0.0, g, g.x_max - g.x_min);
    // Exact free-space u2 of the same pair on the same nodes.
    Samples2D u2(g);
    const double sc = std::sqrt(p.nu * t);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i), y = g.y(j);
            const auto l = gauss_velocity((x + 0.5 * p.d) / sc, y / sc);
            const auto r = gauss_velocity((x - 0.5 * p.d) / sc, y / sc);
            u2.at(i, j) = p.gamma / sc * (l[1] - r[1]);
        }
    }
    const double circ = right_half_integral(w);
    return (right_half_flux(s.velocity2_of(w), w) - right_half_flux(u2, w)) / circ;
}

DnsRun run_dns(const DnsConfig& c, const ExpansionBundle& b) {
    const auto wall0 = std::chrono::steady_clock::now();
    c.validate();
    if (b.order < 2) throw InvalidArgument("dns: bundle order must be at least 2 for alpha");
    const DipoleParams& p = c.dipole;
    DnsRun run;
    run.config = c;
    run.summary.alpha = alpha(b).alpha;

    SpectralSolver solver(c.n, c.box, p.nu, c.advection);
    solver.set_vorticity(init_from_dipole(c, b));
    solver.set_time(c.t0());

    const double T = c.horizon();
    const double dx = c.box / c.n;
    double umax = 0.0;
    {
        const auto u = solver.velocity();
        for (size_t q = 0; q < u[0].v.size(); ++q) umax = std::max(umax, std::hypot(u[0].v[q], u[1].v[q]));
    }
    const double dt_cfl = umax > 0.0 ? c.cfl * dx / umax : T;
    const int steps = std::max(1, static_cast<int>(std::ceil(T / dt_cfl - 1e-9)));
    const double dt = T / steps;
    run.summary.dt = dt;

    double z_ref = 0.0;
    auto measure = [&](double t) {
        const Samples2D w = solver.vorticity();
        const auto u = solver.velocity();
        DnsSample s;
        s.t = t;
        s.eps = p.eps(t);
        const Grid2D& g = w.grid;
        num::CompensatedSum circ_r, circ, m1, ens, l1, mom;
        double sym = 0.0;
        for (int j = 0; j < g.ny; ++j) {
            const double y = wrap(g.y(j) - z_ref, c.box) + z_ref;
            for (int i = 0; i < g.nx; ++i) {
                const double v = w.at(i, j);
                circ.add(v);
                m1.add(g.x(i) * v);
                ens.add(v * v);
                l1.add(std::abs(v));
                if (i >= g.nx / 2) {
                    circ_r.add(v);
                    mom.add(y * v);
                }
                sym = std::max(sym, std::abs(v + w.at(g.nx - 1 - i, j)));
            }
        }
        const double area = g.cell_area();
        s.circulation_right = circ_r.value() * area;
        s.circulation_total = circ.value() * area;
        s.m1 = m1.value() * area;
        s.enstrophy = ens.value() * area;
        s.l1_norm = l1.value() * area;
        if (!std::isfinite(s.enstrophy) || !std::isfinite(s.l1_norm)) {
            throw NumericalError("dns: non-finite vorticity at t = " + std::to_string(t), t);
        }
        // Normalised by the actual right-half circulation so that the centroid moves with the pair.
        s.z2 = mom.value() / circ_r.value();
        z_ref = s.z2;
        s.symmetry_defect = sym / std::max(max_abs(w), 1e-300);
        s.image_velocity = image_velocity(solver, p, s.eps);
        s.speed_inst = right_half_flux(u[1], w) / s.circulation_right - s.image_velocity;
        const Samples2D ref = gaussian_pair(p, t, s.z2, g, c.box);
        num::CompensatedSum dist;
        for (size_t q = 0; q < w.v.size(); ++q) dist.add(std::abs(w.v[q] - ref.v[q]));
        s.l1_ratio = dist.value() * area / p.gamma / (s.eps * s.eps);
        s.predicted = 2.0 * pi * run.summary.alpha * std::pow(s.eps, 4);
        run.samples.push_back(s);
    };

    measure(solver.time());
    int done = 0;
    for (int k = 1; k <= steps; ++k) {
        solver.step(dt);
        solver.set_time(c.t0() + k * dt);
        ++done;
        if (k % c.sample_every == 0 || k == steps) measure(solver.time());
        if (c.max_wall_seconds > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count() > c.max_wall_seconds) {
            if (k % c.sample_every != 0 && k != steps) measure(solver.time());
            run.summary.truncated = k < steps;
            break;
        }
    }
    run.summary.steps = done;

    // Windowed regression of z2.
    auto& S = run.samples;
    const size_t m = S.size();
    std::vector<double> ts(m), zs(m);
    for (size_t q = 0; q < m; ++q) {
        ts[q] = S[q].t;
        zs[q] = S[q].z2;
    }
    const double win = c.window > 0.0 ? c.window : 0.25 * T;
    for (size_t q = 0; q < m; ++q) {
        size_t lo = q, hi = q + 1;
        while (lo > 0 && ts[q] - ts[lo - 1] <= 0.5 * win + 1e-12) --lo;
        while (hi < m && ts[hi] - ts[q] <= 0.5 * win + 1e-12) ++hi;
        S[q].speed = hi - lo >= 3 ? ls_slope(ts, zs, lo, hi) - S[q].image_velocity : S[q].speed_inst;
        S[q].deficit = 1.0 - 2.0 * pi * p.d * S[q].speed / p.gamma;
    }

    DnsSummary& sum = run.summary;
    if (m >= 3) {
        sum.speed_raw = ls_slope(ts, zs, 0, m);
    } else {
        sum.speed_raw = S.back().speed_inst + S.back().image_velocity;
    }
    num::CompensatedSum tm, im;
    for (const auto& s : S) {
        tm.add(s.t);
        im.add(s.image_velocity);
    }
    sum.t_mid = tm.value() / m;
    sum.eps_mid = p.eps(sum.t_mid);
    sum.image_velocity = im.value() / m;
    sum.speed = sum.speed_raw - sum.image_velocity;
    sum.deficit = 1.0 - 2.0 * pi * p.d * sum.speed / p.gamma;
    sum.predicted = 2.0 * pi * sum.alpha * std::pow(sum.eps_mid, 4);
    sum.ratio = sum.deficit / sum.predicted;
    for (size_t q = 0; q < m; ++q) {
        sum.max_l1_ratio = std::max(sum.max_l1_ratio, S[q].l1_ratio);
        sum.circulation_drift = std::max(sum.circulation_drift, std::abs(S[q].circulation_total - S[0].circulation_total) / p.gamma);
        sum.m1_drift = std::max(sum.m1_drift, std::abs(S[q].m1 - S[0].m1) / std::max(std::abs(S[0].m1), 1e-300));
        sum.max_symmetry_defect = std::max(sum.max_symmetry_defect, S[q].symmetry_defect);
        if (q > 0 && S[q].enstrophy > S[q - 1].enstrophy * (1.0 + 1e-12)) sum.enstrophy_monotone = false;
        if (q > 0 && S[q].l1_norm > S[q - 1].l1_norm * (1.0 + 1e-9)) sum.l1_monotone = false;
    }
    // Distance to the bundle profile at the final time.
    {
        const Samples2D w = solver.vorticity();
        const double z2 = S.back().z2;
        if (std::abs(z2) < 0.25 * c.box) {
            const Samples2D ref = physical_dipole(p, solver.time(), z2, w.grid, &b);
            num::CompensatedSum dist;
            for (size_t q = 0; q < w.v.size(); ++q) dist.add(std::abs(w.v[q] - ref.v[q]));
            const double e = p.eps(solver.time());
            sum.l1_bundle_ratio = dist.value() * w.grid.cell_area() / p.gamma / (e * e);
        } else {
            sum.l1_bundle_ratio = std::numeric_limits<double>::quiet_NaN();
        }
    }
    sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return run;
}

DnsSweep dns_sweep(const DnsConfig& base, const std::vector<double>& eps0_list, const ExpansionBundle& b) {
    if (eps0_list.size() < 2) throw InvalidArgument("dns sweep: need at least two eps0 values");
    DnsSweep sw;
    std::vector<double> xs, ys;
    bool positive = true;
    for (double e : eps0_list) {
        DnsConfig c = base;
        c.eps0 = e;
        sw.runs.push_back(run_dns(c, b));
        const DnsSummary& s = sw.runs.back().summary;
        xs.push_back(s.eps_mid);
        ys.push_back(s.deficit);
        positive = positive && s.deficit > 0.0;
        if (std::abs(s.ratio - 1.0) > std::abs(sw.worst_ratio - 1.0) || sw.runs.size() == 1) sw.worst_ratio = s.ratio;
        sw.max_l1_ratio = std::max(sw.max_l1_ratio, s.max_l1_ratio);
        sw.wall_seconds += s.wall_seconds;
    }
    if (positive) {
        sw.deficit_slope = fit_slope(xs, ys);
    } else {
        sw.deficit_slope.slope = std::numeric_limits<double>::quiet_NaN();
        sw.deficit_slope.x = xs;
        sw.deficit_slope.y = ys;
    }
    sw.deficit_slope.lo = *std::min_element(xs.begin(), xs.end());
    sw.deficit_slope.hi = *std::max_element(xs.begin(), xs.end());
    return sw;
}

namespace {

void write_header(std::ostream& os, const std::vector<std::string>& header) {
    for (const auto& h : header) os << "# " << h << "\n";
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const DnsRun& r, const std::vector<std::string>& header) {
    write_header(os, header);
    os << "t,eps,z2,speed,deficit,predicted,l1_ratio,speed_inst,image_velocity,circulation_right,"
          "circulation_total,m1,enstrophy,l1_norm,symmetry_defect\n";
    os << std::setprecision(12);
    for (const auto& s : r.samples) {
        os << s.t << ',' << s.eps << ',' << s.z2 << ',' << s.speed << ',' << s.deficit << ',' << s.predicted << ','
           << s.l1_ratio << ',' << s.speed_inst << ',' << s.image_velocity << ',' << s.circulation_right << ','
           << s.circulation_total << ',' << s.m1 << ',' << s.enstrophy << ',' << s.l1_norm << ','
           << s.symmetry_defect << "\n";
    }
}

void write_sweep_csv(std::ostream& os, const DnsSweep& s, const std::vector<std::string>& header) {
    write_header(os, header);
    os << "eps0,eps_mid,speed,image_velocity,deficit,predicted,ratio,max_l1_ratio,l1_bundle_ratio,steps,dt\n";
    os << std::setprecision(12);
    for (const auto& r : s.runs) {
        const DnsSummary& m = r.summary;
        os << r.config.eps0 << ',' << m.eps_mid << ',' << m.speed << ',' << m.image_velocity << ',' << m.deficit
           << ',' << m.predicted << ',' << m.ratio << ',' << m.max_l1_ratio << ',' << m.l1_bundle_ratio << ','
           << m.steps << ',' << m.dt << "\n";
    }
}

}  // namespace dipole
