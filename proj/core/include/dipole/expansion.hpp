#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dipole/numerics.hpp"
#include "dipole/operators.hpp"
#include "dipole/polar_core.hpp"

namespace dipole {

// Checks recorded while producing the profile of order k = order.
struct StepDiagnostics {
    int order = 0;
    double zeta_E = 0.0;
    double zeta_NS = 0.0;
    Moments H0;                      // moments of the eps^order, delta^0 remainder coefficient
    Moments H1;                      // same for delta^1
    double m2_tilde_H0 = 0.0;        // after the speed shift, should vanish
    double m2_tilde_H1 = 0.0;
    double lower_order_defect = 0.0; // largest weighted norm of remainder coefficients below eps^order
    double lambda_residual_E = 0.0;  // relative residual of Lambda Omega^{E,1} + tilde H0 = 0
    double lambda_residual_NS = 0.0;
    double solvability_defect = 0.0; // largest relative n = 1 moment defect handed to the Lambda solver
    double radial_E0_norm = 0.0;     // weighted norm of the radial piece Omega^{E,0}
    Moments omega_E;
    Moments omega_NS;
    double tail = 0.0;               // largest |a(r_max)| exp(r_max^2/8) over the new profiles
};

// Profiles Omega_k = Omega_k^E + delta Omega_k^NS for k = 0, 2..M (index 1 is empty)
// and speed coefficients zeta_k for k = 0..M-1 with zeta_0 = 1.
struct ExpansionBundle {
    GridSpec grid;
    int order = 1;
    std::vector<PolarField> omega_E, omega_NS, psi_E, psi_NS;
    std::vector<double> zeta_E, zeta_NS;
    std::vector<StepDiagnostics> steps;

    PolarField omega_app(double eps, double delta) const;
    PolarField psi_app(double eps, double delta) const;
    double zeta_series(double eps, double delta) const;
};

// Omega_app = G, zeta_app = 1. Order 0 and order 1 describe the same approximation.
ExpansionBundle trivial_bundle(const GridSpec& grid, int order = 1);
// Order 2: zeta_1 and Omega_2.
ExpansionBundle build_base(const GridSpec& grid);
// Order M -> M + 1.
ExpansionBundle induction_step(const ExpansionBundle& b);
ExpansionBundle build_bundle(const GridSpec& grid, int order);

// Consistency limits enforced by the step.
inline constexpr double step_lambda_tolerance = 1e-8;
inline constexpr double alpha_consistency_tolerance = 1e-8;

// Remainder of the approximation as a series in (eps, delta), truncated at eps^order_eps.
EpsDeltaSeries remainder_expansion(const ExpansionBundle& b, int order_eps);

struct CoefficientNorm {
    int eps_power = 0;
    int delta_power = 0;
    double y_norm = 0.0;
};

struct RemainderReport {
    int order = 0;
    PolarField H0;                       // eps^{M+1} delta^0
    PolarField H1;                       // eps^{M+1} delta^1
    std::vector<PolarField> delta2;      // eps^k delta^2 for k = 0..M+1
    std::vector<CoefficientNorm> norms;  // every retained coefficient
    Moments H0_moments, H1_moments;
    std::size_t truncated_terms = 0;
};

RemainderReport remainder_series(const ExpansionBundle& b);

struct DirectRemainder {
    double eps = 0.0;
    double delta = 0.0;
    double r_cut = 0.0;
    double y_norm = 0.0;  // weighted norm over |xi| <= r_cut
};

// Assembles the full remainder pointwise on a polar grid with exact T_eps
// evaluation. The norm is taken over |xi| <= r_cut; r_cut = 0 means 1/(2 eps).
DirectRemainder remainder_direct(const ExpansionBundle& b, double eps, double delta, int n_theta = 256,
                                 double r_cut = 0.0);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> x;
    std::vector<double> y;
};

// log-log slope of the direct remainder against eps in [lo, hi] at fixed delta.
SlopeFit remainder_eps_slope(const ExpansionBundle& b, double delta, double lo, double hi, int samples,
                             double r_cut = 0.0);
// log-log slope of |R(delta) - R(0)| against delta in [lo, hi] at fixed eps.
SlopeFit remainder_delta_slope(const ExpansionBundle& b, double eps, double lo, double hi, int samples);

// Fits log y = slope log x + c.
SlopeFit fit_slope(std::vector<double> x, std::vector<double> y);

struct AlphaReport {
    double alpha = 0.0;           // integral of r^3 w2
    double alpha_quadrature = 0.0;// (1/pi) integral of (xi2^2 - xi1^2) Omega_2 over the plane
    double relative_gap = 0.0;
    bool has_zeta4 = false;
    double zeta4 = 0.0;
    double zeta4_gap = 0.0;       // |zeta_4 + 2 pi alpha| / (2 pi alpha)
};

AlphaReport alpha(const ExpansionBundle& b);

// 1 + sum zeta_k eps^k.
double zeta_app(const ExpansionBundle& b, double eps, double delta);
// (2 pi / eps) integral of d1(T_eps Psi_app) Omega_app.
double zeta_app_direct(const ExpansionBundle& b, double eps, double delta, int n_theta = 256);
// (d / Gamma) Z2' for the pure Gaussian pair.
double gaussian_speed(double eps, int n_theta = 256);

// -------------------------------------------------------------- functional relation

// Eps-coefficients Phi_k (k = 0..M) of the co-moving stream function
// Psi - T_eps Psi + eps xi1 zeta / (2 pi) in the delta = 0 sector, constants dropped.
std::vector<PolarField> comoving_stream_coefficients(const ExpansionBundle& b);

// F_k tabulated against the radius: values[m][i] = F_k^{(m)}(Omega_0) Omega_0^m at r_i.
struct FunctionalTable {
    int k = 0;
    std::vector<std::vector<double>> values;
    double nonradial_defect = 0.0;  // sup of the non-radial part that had to vanish
};

struct FunctionalRelation {
    GridSpec grid;
    int order = 0;
    std::vector<FunctionalTable> F;  // F[k], entry 1 unused
    double F2_cancellation = 0.0;    // sup of Psi_2^E + (xi1^2 - xi2^2)/(4 pi) + A Omega_2^E
};

inline constexpr double functional_nonradial_tolerance = 1e-6;

FunctionalRelation functional_relation(const ExpansionBundle& b);

// s F'(s) and s^2 F''(s) for F = F_0 + sum_k eps^k F_k at s = exp(-u) / (4 pi), any real u;
// below u = 0 the tables are continued quadratically in u.
struct FunctionalDerivatives {
    double s_F1 = 0.0;
    double s2_F2 = 0.0;
};
FunctionalDerivatives functional_derivatives(const FunctionalRelation& f, double eps, double u);

struct ThetaSample {
    double eps = 0.0;
    double radius = 0.0;    // 2 eps^{-sigma1}
    double weighted_sup = 0.0;
    double growth_exponent = 0.0;  // log-log slope of the ring maxima against 1 + |xi| for |xi| >= 1
};

struct ThetaReport {
    int weight_power = 0;
    double sigma1 = 0.0;
    std::vector<ThetaSample> samples;
    SlopeFit fit;
};

// sup over |xi| <= 2 eps^{-sigma1} of |grad(Phi_app^E + F(Omega_app^E))| / (1 + |xi|)^N.
ThetaSample theta_sample(const ExpansionBundle& b, const FunctionalRelation& f, double eps, double sigma1,
                         int weight_power, int n_theta = 96);
ThetaReport theta_check(const ExpansionBundle& b, double lo, double hi, int samples, double sigma1 = 0.2);

// -------------------------------------------------------------- serialization

inline constexpr int bundle_format_version = 1;

std::string bundle_to_json(const ExpansionBundle& b);
ExpansionBundle bundle_from_json(const std::string& text);
void save_bundle(const ExpansionBundle& b, const std::string& path);
ExpansionBundle load_bundle(const std::string& path);

}  // namespace dipole
