#include "dipole/radial_ops.hpp"

#include <array>
#include <cmath>

#include "dipole/errors.hpp"
#include "dipole/numerics.hpp"

namespace dipole::radial {

namespace {

constexpr std::array<double, 7> c1_int = {-1.0 / 60, 9.0 / 60, -45.0 / 60, 0.0, 45.0 / 60, -9.0 / 60, 1.0 / 60};
constexpr std::array<double, 7> c2_int = {2.0 / 180,   -27.0 / 180, 270.0 / 180, -490.0 / 180,
                                          270.0 / 180, -27.0 / 180, 2.0 / 180};

// One-sided weights on offsets -6..0 evaluated at offsets -2, -1, 0 (in units of h).
struct EndStencils {
    std::array<std::array<double, 7>, 3> d1{};
    std::array<std::array<double, 7>, 3> d2{};
};

const EndStencils& end_stencils() {
    static const EndStencils s = [] {
        EndStencils e;
        std::array<double, 7> x{};
        for (int j = 0; j < 7; ++j) x[static_cast<size_t>(j)] = j - 6.0;
        for (int k = 0; k < 3; ++k) {
            const auto w = num::fornberg_weights(static_cast<double>(k - 2), x, 2);
            for (int j = 0; j < 7; ++j) {
                e.d1[static_cast<size_t>(k)][static_cast<size_t>(j)] = w[static_cast<size_t>(7 + j)];
                e.d2[static_cast<size_t>(k)][static_cast<size_t>(j)] = w[static_cast<size_t>(14 + j)];
            }
        }
        return e;
    }();
    return s;
}

// Emits (column, weight) pairs of the derivative stencil at row i, with
// ghost indices folded back by parity.
template <class Emit>
void stencil_row(int i, int N, int n, int order, Emit&& emit) {
    const int N_ = N;
    if (i <= N_ - 4) {
        const auto& c = order == 1 ? c1_int : c2_int;
        const int sgn = parity_sign(n);
        for (int o = -3; o <= 3; ++o) {
            const double w = c[static_cast<size_t>(o + 3)];
            if (w == 0.0) continue;
            int j = i + o;
            if (j < 0) {
                emit(-j, sgn * w);
            } else {
                emit(j, w);
            }
        }
    } else {
        const auto& es = end_stencils();
        const int k = i - (N_ - 3);
        const auto& c = order == 1 ? es.d1[static_cast<size_t>(k)] : es.d2[static_cast<size_t>(k)];
        for (int j = 0; j < 7; ++j) emit(N_ - 7 + j, c[static_cast<size_t>(j)]);
    }
}

}  // namespace

std::vector<double> derivative(const std::vector<double>& f, const GridSpec& g, int n, int order) {
    const int N = g.n_points;
    if (static_cast<int>(f.size()) != N) throw InvalidArgument("derivative: size mismatch");
    if (order != 1 && order != 2) throw InvalidArgument("derivative: order must be 1 or 2");
    const double scale = order == 1 ? 1.0 / g.spacing() : 1.0 / (g.spacing() * g.spacing());
    std::vector<double> out(static_cast<size_t>(N), 0.0);
    for (int i = 0; i < N; ++i) {
        double acc = 0.0;
        stencil_row(i, N, n, order, [&](int j, double w) { acc += w * f[static_cast<size_t>(j)]; });
        out[static_cast<size_t>(i)] = acc * scale;
    }
    return out;
}

RadialProfile d_dr(const RadialProfile& p, int n) {
    const GridSpec& g = p.grid();
    auto d = derivative(p.stored(), g, n, 1);
    if (p.decay() == Decay::gaussian_weighted) {
        for (int i = 0; i < g.n_points; ++i) d[static_cast<size_t>(i)] -= 0.5 * g.r(i) * p.stored()[static_cast<size_t>(i)];
    }
    return RadialProfile(g, p.decay(), std::move(d));
}

double interpolate(const std::vector<double>& f, const GridSpec& g, int n, double r) {
    const int N = g.n_points;
    const double h = g.spacing();
    if (r < 0.0 || r > g.r_max * (1.0 + 1e-12)) throw InvalidArgument("interpolate: radius outside grid");
    const double x = r / h;
    int i0 = static_cast<int>(std::floor(x));
    if (i0 >= N - 1) return f[static_cast<size_t>(N - 1)];
    if (x == static_cast<double>(i0)) return f[static_cast<size_t>(i0)];
    int first = i0 - 2;
    if (first + 5 > N - 1) first = N - 6;
    // Closed-form Lagrange weights on six consecutive integer nodes.
    const double t = x - first;
    std::array<double, 6> w{};
    static constexpr double denom[6] = {-120.0, 24.0, -12.0, 12.0, -24.0, 120.0};
    double prod_all = 1.0;
    for (int j = 0; j < 6; ++j) prod_all *= (t - j);
    for (int j = 0; j < 6; ++j) w[static_cast<size_t>(j)] = prod_all / ((t - j) * denom[j]);
    const int sgn = parity_sign(n);
    double acc = 0.0;
    for (int j = 0; j < 6; ++j) {
        const int idx = first + j;
        const double fj = idx < 0 ? sgn * f[static_cast<size_t>(-idx)] : f[static_cast<size_t>(idx)];
        acc += w[static_cast<size_t>(j)] * fj;
    }
    return acc;
}

double even_limit_at_origin(double f1, double f2, double f3) { return 1.5 * f1 - 0.6 * f2 + 0.1 * f3; }

std::vector<double> solve_bvp(const GridSpec& g, const BvpSpec& spec, const std::vector<double>& rhs) {
    const int N = g.n_points;
    if (static_cast<int>(spec.a2.size()) != N || static_cast<int>(spec.a1.size()) != N ||
        static_cast<int>(spec.a0.size()) != N || static_cast<int>(rhs.size()) != N) {
        throw InvalidArgument("solve_bvp: coefficient size mismatch");
    }
    const double h = g.spacing();
    num::BandMatrix A(N, 6, 3);
    std::vector<double> b = rhs;
    for (int i = 0; i < N - 1; ++i) {
        if (i == 0 && spec.n >= 1) {
            A.add(0, 0, 1.0);
            b[0] = 0.0;
            continue;
        }
        const auto ui = static_cast<size_t>(i);
        stencil_row(i, N, spec.n, 2, [&](int j, double w) {
            if (spec.n >= 1 && j == 0) return;  // u(0) = 0 is eliminated
            A.add(i, j, spec.a2[ui] * w / (h * h));
        });
        stencil_row(i, N, spec.n, 1, [&](int j, double w) {
            if (spec.n >= 1 && j == 0) return;
            A.add(i, j, spec.a1[ui] * w / h);
        });
        A.add(i, i, spec.a0[ui]);
    }
    stencil_row(N - 1, N, spec.n, 1, [&](int j, double w) { A.add(N - 1, j, spec.end_c1 * w / h); });
    A.add(N - 1, N - 1, spec.end_c0);
    b[static_cast<size_t>(N - 1)] = spec.end_rhs;
    return A.solve(std::move(b));
}

std::vector<double> cumulative_integral(const std::vector<double>& f, const GridSpec& g) {
    const int N = g.n_points;
    if (static_cast<int>(f.size()) != N) throw InvalidArgument("cumulative_integral: size mismatch");
    static thread_local std::array<std::vector<double>, 5> local;
    if (local[0].empty()) {
        std::array<double, 6> x{};
        for (int j = 0; j < 6; ++j) x[static_cast<size_t>(j)] = j;
        for (int k = 0; k < 5; ++k) local[static_cast<size_t>(k)] = num::interpolant_integral_weights(x, k, k + 1.0);
    }
    const double h = g.spacing();
    std::vector<double> c(static_cast<size_t>(N), 0.0);
    num::CompensatedSum acc;
    for (int i = 0; i + 1 < N; ++i) {
        int first = i - 2;
        if (first < 0) first = 0;
        if (first > N - 6) first = N - 6;
        const auto& w = local[static_cast<size_t>(i - first)];
        double piece = 0.0;
        for (int j = 0; j < 6; ++j) piece += w[static_cast<size_t>(j)] * f[static_cast<size_t>(first + j)];
        acc.add(piece * h);
        c[static_cast<size_t>(i + 1)] = acc.value();
    }
    return c;
}

}  // namespace dipole::radial
