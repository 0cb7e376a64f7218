#include "dipole/gaussian_base.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "dipole/errors.hpp"

namespace dipole {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double taylor_radius = 1e-3;

}  // namespace

double expint_e1(double s) {
    if (!(s > 0.0)) throw InvalidArgument("expint_e1: argument must be positive");
    if (s < 1.0) {
        // -gamma - log s + sum_{k>=1} (-1)^{k+1} s^k / (k k!)
        double term = 1.0, sum = 0.0;
        for (int k = 1; k < 60; ++k) {
            term *= -s / k;
            const double add = -term / k;
            sum += add;
            if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        }
        return -euler_gamma - std::log(s) + sum;
    }
    // Modified Lentz evaluation of the continued fraction.
    const double tiny = 1e-300;
    double b = s + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-s);
}

double ein(double s) {
    if (std::abs(s) < 8.0) {
        double term = 1.0, sum = 0.0;
        for (int k = 1; k < 200; ++k) {
            term *= s / k;  // s^k / k!
            const double add = ((k % 2 == 1) ? 1.0 : -1.0) * term / k;
            sum += add;
            if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    if (s > 0.0) return std::log(s) + euler_gamma + expint_e1(s);
    // Large negative argument: the series has terms of one sign, sum it directly.
    double term = 1.0, sum = 0.0;
    for (int k = 1; k < 2000; ++k) {
        term *= s / k;
        const double add = ((k % 2 == 1) ? 1.0 : -1.0) * term / k;
        sum += add;
        if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

double gauss_G(double r) { return std::exp(-0.25 * r * r) / (4.0 * pi); }

double psi0(double r) {
    const double s = 0.25 * r * r;
    if (r < taylor_radius) {
        const double e = s * (1.0 - s * (0.25 - s * (1.0 / 18.0 - s / 96.0)));
        return (e - euler_gamma) / (4.0 * pi);
    }
    return (ein(s) - euler_gamma) / (4.0 * pi);
}

double v0(double r) {
    const double s = 0.25 * r * r;
    if (r < taylor_radius) return (1.0 - s * (0.5 - s * (1.0 / 6.0 - s / 24.0))) / (8.0 * pi);
    return -std::expm1(-s) / (2.0 * pi * r * r);
}

double psi0_prime(double r) { return r * v0(r); }

double g_fn(double r) { return std::exp(-0.25 * r * r) / (8.0 * pi); }

double h_fn(double r) {
    const double s = 0.25 * r * r;
    if (r < taylor_radius) return 1.0 - 0.5 * s + s * s / 12.0 - s * s * s * s / 720.0;
    return s / std::expm1(s);
}

double h_scaled(double r) {
    const double s = 0.25 * r * r;
    if (r < taylor_radius) return 1.0 + 0.5 * s + s * s / 12.0 - s * s * s * s / 720.0;
    return -s / std::expm1(-s);
}

double A_fn(double r) {
    const double s = 0.25 * r * r;
    if (r < taylor_radius) return 1.0 + s * (0.5 + s * (1.0 / 6.0 + s / 24.0));
    return std::expm1(s) / s;
}

std::array<double, 2> gauss_velocity(double x1, double x2) {
    const double v = v0(std::hypot(x1, x2));
    return {-x2 * v, x1 * v};
}

double F0_of_u(double u) { return (euler_gamma - ein(u)) / (4.0 * pi); }

double F0_prime_of_u(double u) {
    if (std::abs(u) < 1e-6) return 1.0 + u * (0.5 + u * (1.0 / 6.0 + u / 24.0));
    return std::expm1(u) / u;
}

namespace {

double u_of_s(double s, const char* who) {
    const double smax = 1.0 / (4.0 * pi);
    if (!(s > 0.0) || s > smax * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
        throw InvalidArgument(std::string(who) + ": argument must lie in (0, 1/(4 pi)]");
    }
    return std::max(0.0, -std::log(4.0 * pi * s));
}

}  // namespace

double F0(double s) { return F0_of_u(u_of_s(s, "F0")); }

double F0_prime(double s) { return F0_prime_of_u(u_of_s(s, "F0_prime")); }

BaseFunction base_function_from_string(const std::string& name) {
    if (name == "G") return BaseFunction::G;
    if (name == "Psi0") return BaseFunction::Psi0;
    if (name == "v0") return BaseFunction::v0;
    if (name == "g") return BaseFunction::g;
    if (name == "h") return BaseFunction::h;
    if (name == "A") return BaseFunction::A;
    if (name == "F0") return BaseFunction::F0;
    if (name == "F0_prime") return BaseFunction::F0_prime;
    throw InvalidArgument("unknown base function '" + name + "'");
}

double eval_base(BaseFunction f, double x) {
    if (f != BaseFunction::F0 && f != BaseFunction::F0_prime && !(x >= 0.0)) {
        throw InvalidArgument("eval_base: radius must be non-negative");
    }
    switch (f) {
        case BaseFunction::G: return gauss_G(x);
        case BaseFunction::Psi0: return psi0(x);
        case BaseFunction::v0: return v0(x);
        case BaseFunction::g: return g_fn(x);
        case BaseFunction::h: return h_fn(x);
        case BaseFunction::A: return A_fn(x);
        case BaseFunction::F0: return F0(x);
        case BaseFunction::F0_prime: return F0_prime(x);
    }
    return 0.0;
}

QPair q_poly(int n, double x1, double x2) {
    if (n < 0) throw InvalidArgument("q_poly: n must be non-negative");
    std::complex<double> z(x1, x2), p(1.0, 0.0);
    for (int k = 0; k < n; ++k) p *= z;
    return {p.real(), p.imag()};
}

double q_series_check(double x1, double x2, int N) {
    const double rho2 = x1 * x1 + x2 * x2;
    if (!(rho2 < 1.0)) throw InvalidArgument("q_series_check: |x| must be below 1");
    if (N < 1) throw InvalidArgument("q_series_check: N must be positive");
    const double den = 1.0 + 2.0 * x1 + rho2;
    double s_cos = 0.0, s_sin = 0.0, s_log = 0.0;
    std::complex<double> z(x1, x2), p(1.0, 0.0);
    for (int n = 0; n <= N; ++n) {
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        s_cos += sign * p.real();
        if (n >= 1) {
            s_sin -= sign * p.imag();
            s_log -= sign * p.real() / n;
        }
        p *= z;
    }
    const double e1 = std::abs(s_cos - (1.0 + x1) / den);
    const double e2 = std::abs(s_sin - x2 / den);
    const double e3 = std::abs(s_log - 0.5 * std::log(den));
    return std::max(e1, std::max(e2, e3));
}

}  // namespace dipole
