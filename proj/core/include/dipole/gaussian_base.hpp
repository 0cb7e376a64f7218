#pragma once

#include <array>
#include <string>

namespace dipole {

inline constexpr double euler_gamma = 0.57721566490153286061;

// Ein(s) = int_0^s (1 - e^{-t}) / t dt, entire in s.
double ein(double s);
// Exponential integral E1(s), s > 0.
double expint_e1(double s);

// Radial closed forms (argument r >= 0). A Taylor branch is used for r < 1e-3.
double gauss_G(double r);        // e^{-r^2/4} / (4 pi)
double psi0(double r);           // Gaussian stream function, psi0(0) = -gamma / (4 pi)
double psi0_prime(double r);     // r v0(r)
double v0(double r);             // (1 - e^{-r^2/4}) / (2 pi r^2)
double g_fn(double r);           // e^{-r^2/4} / (8 pi)
double h_fn(double r);           // g / v0
double h_scaled(double r);       // e^{r^2/4} h(r), polynomially growing
double A_fn(double r);           // 1 / h

// Gaussian velocity field at (x1, x2).
std::array<double, 2> gauss_velocity(double x1, double x2);

// F0 on (0, 1/(4 pi)]; throws InvalidArgument outside.
double F0(double s);
double F0_prime(double s);
// Same functions in the variable u = log(1 / (4 pi s)) = r^2 / 4, any real u.
double F0_of_u(double u);
double F0_prime_of_u(double u);

enum class BaseFunction { G, Psi0, v0, g, h, A, F0, F0_prime };
BaseFunction base_function_from_string(const std::string& name);
// Radial functions take r; F0 and F0_prime take s.
double eval_base(BaseFunction f, double x);

struct QPair {
    double c = 0.0;  // Re (x1 + i x2)^n
    double s = 0.0;  // Im (x1 + i x2)^n
};

QPair q_poly(int n, double x1, double x2);

// Largest error among the three generating-function identities truncated at N terms.
double q_series_check(double x1, double x2, int N);

}  // namespace dipole
