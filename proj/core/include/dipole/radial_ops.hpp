#pragma once

#include <vector>

#include "dipole/polar_core.hpp"

// Sixth-order finite differences, interpolation and two-point boundary value
// solves on a uniform radial grid. Profiles of angular mode n are extended to
// r < 0 with the sign (-1)^n, which is how a smooth planar field restricts to a
// line through the origin.
namespace dipole::radial {

inline int parity_sign(int n) { return (n % 2 == 0) ? 1 : -1; }

// order = 1 or 2.
std::vector<double> derivative(const std::vector<double>& f, const GridSpec& g, int n, int order);

// d/dr of a(r) in the profile's own representation: for gaussian_weighted the
// result stores exp(r^2/4) a'(r) = v' - (r/2) v.
RadialProfile d_dr(const RadialProfile& p, int n);

// Six-point Lagrange interpolation of grid samples at 0 <= r <= r_max.
double interpolate(const std::vector<double>& f, const GridSpec& g, int n, double r);

// Value at r = 0 of an even function known at r_1, r_2, r_3 (error O(h^6)).
double even_limit_at_origin(double f1, double f2, double f3);

// Linear second-order problem  a2 u'' + a1 u' + a0 u = rhs  on the grid.
// Row 0: u(0) = 0 when n >= 1, otherwise the equation itself with the
// caller supplying the r -> 0 limits of the coefficients.
// Row N-1: end_c1 u'(r_max) + end_c0 u(r_max) = end_rhs.
struct BvpSpec {
    int n = 0;
    std::vector<double> a2, a1, a0;
    double end_c1 = 1.0;
    double end_c0 = 0.0;
    double end_rhs = 0.0;
};

std::vector<double> solve_bvp(const GridSpec& g, const BvpSpec& spec, const std::vector<double>& rhs);

// C_i = integral over [0, r_i] of the local quintic interpolant of f.
std::vector<double> cumulative_integral(const std::vector<double>& f, const GridSpec& g);

}  // namespace dipole::radial
