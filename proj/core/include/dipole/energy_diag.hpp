#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dipole/expansion.hpp"
#include "dipole/polar_core.hpp"

namespace dipole {

struct WeightParams {
    double sigma1 = 0.2;
    double sigma2 = 2.0;

    double gamma() const { return sigma1 / sigma2; }
    void validate() const;
};

enum class Region { I, II, III };
std::string to_string(Region r);

// rho_eps(|xi|); eps = 0 gives |xi|.
double rho_eps(double r, double eps, const WeightParams& p);

// The weight W_eps built from Omega_app^E and the functional relation F of a
// bundle. eps = 0 gives W_0 = A.
class WeightModel {
public:
    WeightModel(const ExpansionBundle& b, const FunctionalRelation& f, double eps, const WeightParams& p);

    double eps() const { return eps_; }
    const WeightParams& params() const { return params_; }
    // exp(eps^{-2 sigma1} / 4), the cap used in regions I and II.
    double cap() const { return cap_; }

    Region region(double x1, double x2) const;
    // F'(Omega_app^E) without the region test (valid where Omega_app^E > 0).
    double inner_weight(double x1, double x2) const;
    // {W, d1 W, d2 W}.
    std::array<double, 3> eval(double x1, double x2) const;
    double value(double x1, double x2) const { return eval(x1, x2)[0]; }

private:
    std::array<double, 3> inner(double x1, double x2) const;

    const FunctionalRelation* f_ = nullptr;
    double eps_ = 0.0;
    WeightParams params_;
    double cap_ = 0.0;
    ScaledFieldEvaluator omega_;
};

// Polar quadrature nodes (every stride-th radial grid point up to r_quad, n_theta angles)
// with the weight and its ingredients tabulated once per eps.
struct WeightTable {
    GridSpec grid;
    double eps = 0.0;
    WeightParams params;
    int stride = 4;
    int n_rings = 0;
    int n_theta = 64;
    std::vector<double> ring_weight;  // radial quadrature weight times r times 2 pi / n_theta
    std::vector<double> W, W1, W2;    // W and its gradient, index ring * n_theta + j
    std::vector<double> tdtW;         // t d/dt W_eps (finite difference in eps in region I)
    std::vector<double> rho;
    std::vector<Region> region;
};

WeightTable make_weight_table(const ExpansionBundle& b, const FunctionalRelation& f, double eps,
                              const WeightParams& p, int n_theta = 64, int stride = 4, double r_quad = 20.0);

// A perturbation with vanishing mass and first moments and its stream function.
struct TestPerturbation {
    PolarField w;
    PolarField phi;
    Moments moments;
};

inline constexpr double moment_tolerance = 1e-10;

// Rejects fields whose moments exceed moment_tolerance relative to the L1-type size of w.
TestPerturbation make_perturbation(const PolarField& w);
// Removes M, m1, m2 using G, d1 G, d2 G.
PolarField project_moments(const PolarField& w);
// Random Gaussian-weighted mixture of modes n <= 4 with the moments projected out.
TestPerturbation random_perturbation(const GridSpec& g, std::mt19937_64& rng);

// Weighted L2 norm squared of a field with respect to the tabulated weight.
double x_norm2(const PolarField& w, const WeightTable& t);

struct EnergyParts {
    double x_norm2 = 0.0;   // ||w||_X^2
    double phi_w = 0.0;     // <phi, w>
    double teps_w = 0.0;    // <T_eps phi, w>
    double energy = 0.0;    // (x_norm2 + phi_w - teps_w) / 2
};

EnergyParts energy(const TestPerturbation& w, const WeightTable& t);

// E_0 from one-dimensional mode integrals: (1/2)(sum_n c_n int A |a_n|^2 r dr + <phi, w>).
double energy0_modes(const TestPerturbation& w);

struct DiffusionParts {
    double grad_x2 = 0.0;     // ||grad w||_X^2
    double cross = 0.0;       // <w, grad w . grad W>
    double radial = 0.0;      // (1/4) <w, w xi . grad W>
    double l2 = 0.0;          // ||w||_L2^2
    double x2 = 0.0;          // ||w||_X^2
    double rho_x2 = 0.0;      // ||rho w||_X^2
    double dW_inner = 0.0;    // -(1/2) int over I of (t d/dt W) w^2
    double dW_middle = 0.0;   // (sigma1 / 8) ||1_II rho w||_X^2
    double teps = 0.0;        // <L w, T_eps phi>
    double total = 0.0;
    double lower_ratio = 0.0; // total / (grad_x2 + rho_x2 + x2)
};

DiffusionParts diffusion(const TestPerturbation& w, const WeightTable& t);

struct CoercivityRow {
    double eps = 0.0;
    int samples = 0;
    int non_positive = 0;
    double min_energy_ratio = 0.0;  // min E / ||w||_X^2
    double max_energy_ratio = 0.0;
    double min_diffusion_ratio = 0.0;
    double max_diffusion_ratio = 0.0;
    double max_teps_ratio = 0.0;    // max |<T_eps phi, w>| / ||w||_X^2
    double x_norm_G = 0.0;          // ||G||_X
};

struct CoercivityReport {
    WeightParams params;
    int order = 0;
    std::uint64_t seed = 0;
    int samples = 0;
    std::vector<CoercivityRow> rows;
    double x_norm_G0 = 0.0;         // ||G||_{X_0}
    double teps_slope = 0.0;        // log-log slope of max |<T_eps phi, w>| / ||w||^2 in eps
};

CoercivityReport coercivity_check(const ExpansionBundle& b, const std::vector<double>& eps_list, int samples,
                                  std::uint64_t seed, const WeightParams& p = {});

std::string coercivity_to_json(const CoercivityReport& r);

}  // namespace dipole
