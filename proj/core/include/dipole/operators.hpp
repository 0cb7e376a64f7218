#pragma once

#include <array>
#include <complex>
#include <map>
#include <vector>

#include "dipole/polar_core.hpp"

namespace dipole {

// Frequently used fields sampled on a grid.
PolarField gaussian_field(const GridSpec& g);     // G
PolarField d1_gaussian_field(const GridSpec& g);  // d/dxi1 G
PolarField d2_gaussian_field(const GridSpec& g);  // d/dxi2 G
PolarField psi0_field(const GridSpec& g);         // stream function of G
PolarField xi1_field(const GridSpec& g);          // xi1
PolarField xi2_field(const GridSpec& g);          // xi2

// L = Delta + (1/2) xi . grad + 1, mode by mode.
PolarField apply_L(const PolarField& f);

// Solves (L - c) u = rhs for a Gaussian-weighted single-mode right-hand side.
PolarField solve_L_shifted(int n, Parity p, double c, const RadialProfile& rhs);

// Mode-n solution of phi'' + phi'/r - n^2 phi / r^2 = w, regular at 0 and
// O(r^{-n}) at infinity; n = 0 uses the logarithmic kernel normalisation.
RadialProfile biot_savart_mode(int n, const RadialProfile& w);
PolarField biot_savart(const PolarField& w);

// {f, g} = d1 f d2 g - d2 f d1 g. At most one argument may grow polynomially.
PolarField poisson_bracket(const PolarField& f, const PolarField& g);

// Pointwise product.
PolarField multiply(const PolarField& f, const PolarField& g);

// Lambda w = {Psi0, w} + {Delta^{-1} w, G}.
PolarField apply_Lambda(const PolarField& w);

struct LambdaSolveReport {
    PolarField omega;                  // Lambda omega = b * (cos or sin)(n theta)
    PolarField psi;                    // Delta^{-1} omega
    double solvability_defect = 0.0;   // relative, only meaningful for n = 1
    double residual = 0.0;             // relative weighted-norm residual of the equation
};

inline constexpr double lambda_n1_tolerance = 1e-10;

// Solves Lambda omega = b(r) (cos|sin)(n theta) with n >= 1. For n = 1 the
// solution is normalised to vanish in the first moments; a right-hand side
// with nonzero first moment raises NumericalError carrying the defect.
LambdaSolveReport invert_Lambda(int n, Parity p, const RadialProfile& b);
// Mode-wise inverse of a field with no radial part.
PolarField invert_Lambda(const PolarField& f);

struct TepsExpansion {
    double log_coefficient = 0.0;  // coefficient of log(1/eps), equal to mass / (2 pi)
    std::vector<PolarField> P;     // P[n - 1] multiplies eps^n, n = 1..N
};

// Polynomial expansion of Psi(-xi1 - 1/eps, xi2) for Psi = Delta^{-1} omega.
TepsExpansion teps_expand(const PolarField& omega, int N);

// mu_0 = mass, mu_m = integral of conj(eta)^m omega (m = 1..N).
std::vector<std::complex<double>> complex_moments(const PolarField& omega, int N);
// Same expansion from given complex moments (mu.size() >= N + 1).
TepsExpansion teps_from_moments(const GridSpec& g, const std::vector<std::complex<double>>& mu, int N);

// Series product through the bracket, truncated at the given orders.
EpsDeltaSeries bracket_series(const EpsDeltaSeries& a, const EpsDeltaSeries& b, int order_eps, int order_delta);

// Evaluates a stream function anywhere in the plane. Beyond the grid each mode
// is continued as a multipole (n >= 1) or c log r + d (n = 0).
class StreamEvaluator {
public:
    StreamEvaluator() = default;
    explicit StreamEvaluator(const PolarField& psi);

    // Returns {psi, d1 psi, d2 psi}.
    std::array<double, 3> eval(double x1, double x2) const;

private:
    struct Mode {
        ModeKey key;
        std::vector<double> f;
        std::vector<double> df;
        double f_end = 0.0;
        double df_end = 0.0;
    };
    GridSpec grid_;
    std::vector<Mode> modes_;
};

// Evaluates a Gaussian-weighted field and its gradient anywhere; returns
// exp(|x|^2/4) times {value, d1, d2}. Beyond the grid the scaled value is held.
class ScaledFieldEvaluator {
public:
    ScaledFieldEvaluator() = default;
    explicit ScaledFieldEvaluator(const PolarField& f);

    std::array<double, 3> eval(double x1, double x2) const;

private:
    struct Mode {
        ModeKey key;
        std::vector<double> v;
        std::vector<double> dv;  // scaled radial derivative v' - (r/2) v
    };
    GridSpec grid_;
    std::vector<Mode> modes_;
};

// cos(n theta_j), sin(n theta_j) on theta_j = 2 pi j / n_theta.
struct AngleTable {
    AngleTable(int n_theta, int n_max);
    int n_theta;
    int n_max;
    std::vector<double> c, s;  // index n * n_theta + j
    double theta(int j) const;
};

// Values and Cartesian gradients of a field on a ring of radius r_i, in the
// field's own representation (scaled for Gaussian-weighted fields). All modes
// must share one decay class.
class RingSampler {
public:
    explicit RingSampler(const PolarField& f);

    Decay decay() const { return decay_; }
    int max_mode() const { return n_max_; }
    // Each output has n_theta entries; null pointers are skipped.
    void sample(int i, const AngleTable& t, double* val, double* d1, double* d2) const;

private:
    struct Mode {
        ModeKey key;
        std::vector<double> v;
        std::vector<double> dv;
    };
    GridSpec grid_;
    Decay decay_ = Decay::gaussian_weighted;
    int n_max_ = 0;
    std::vector<Mode> modes_;
};

}  // namespace dipole
