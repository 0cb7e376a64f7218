#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dipole/expansion.hpp"
#include "dipole/fields2d.hpp"

namespace dipole {

// Plain-text "key = value" lines; '#' starts a comment. Duplicate keys keep the last value.
std::map<std::string, std::string> parse_key_value(std::istream& is);
std::map<std::string, std::string> read_key_value_file(const std::string& path);

struct DnsConfig {
    DipoleParams dipole;             // gamma, d, nu (nu = gamma / Re)
    int n = 512;                     // grid points per side
    double box = 16.0;               // side L
    double eps0 = 0.05;              // start at t0 = eps0^2 d^2 / nu
    double sigma = 0.0;              // run length T_adv max(1, delta^{-sigma})
    double run_time = 0.0;           // > 0 overrides the sigma horizon
    double cfl = 0.25;
    int sample_every = 1;            // steps between recorded samples
    double window = 0.0;             // speed regression window; 0 means a quarter of the run
    int order = 6;                   // bundle order used for the initial profile
    bool gaussian_init = false;      // start from the pure Gaussian pair instead
    bool advection = true;           // false: heat equation only
    double max_wall_seconds = 0.0;   // 0: no wall-clock cap

    void validate() const;
    double t0() const { return dipole.time_for_eps(eps0); }
    double horizon() const;
    double reynolds() const { return dipole.gamma / dipole.nu; }
};

// Recognised keys: re, nu, gamma, d, n, box, eps0, sigma, run_time, cfl, sample_every,
// window, order, init (bundle|gaussian), advection (true|false), max_wall_seconds.
// Unknown keys raise InvalidArgument.
DnsConfig dns_config_from(const std::map<std::string, std::string>& kv, DnsConfig base = {});

// Doubly periodic pseudo-spectral vorticity solver on an n x n grid of side box centred at
// the origin: integrating factor for nu Delta, classical RK4 for advection, 2/3-rule dealiasing.
class SpectralSolver {
public:
    SpectralSolver(int n, double box, double nu, bool advection = true);
    ~SpectralSolver();
    SpectralSolver(const SpectralSolver&) = delete;
    SpectralSolver& operator=(const SpectralSolver&) = delete;

    const Grid2D& grid() const { return grid_; }
    double time() const { return t_; }
    void set_time(double t) { t_ = t; }

    // Loads samples on grid() and applies the dealiasing mask.
    void set_vorticity(const Samples2D& w);
    Samples2D vorticity() const;
    // (u1, u2) = (-d2 psi, d1 psi) with Delta psi = w - mean(w).
    std::array<Samples2D, 2> velocity() const;
    // u2 induced by an arbitrary field on the same grid (periodic Biot-Savart).
    Samples2D velocity2_of(const Samples2D& w) const;

    void step(double dt);

private:
    struct Buffers;
    void nonlinear(const std::complex<double>* w, std::complex<double>* out) const;
    void forward(double* in, std::complex<double>* out) const;
    void backward(const std::complex<double>* in, double* out) const;

    int n_, nc_;
    double box_, nu_;
    bool advection_;
    double t_ = 0.0;
    Grid2D grid_;
    std::vector<double> kx_, ky_;
    std::vector<unsigned char> mask_;
    std::unique_ptr<Buffers> buf_;
    double cached_dt_ = -1.0;
    std::vector<double> half_, full_;  // exp(-nu k^2 dt / 2), exp(-nu k^2 dt)
};

struct DnsSample {
    double t = 0.0;
    double eps = 0.0;
    double z2 = 0.0;                 // right-half centroid, normalised by the right-half circulation
    double speed = 0.0;              // windowed regression of z2, image-corrected
    double speed_inst = 0.0;         // advective centroid speed int_{x1>0} u2 w / int_{x1>0} w, image-corrected
    double image_velocity = 0.0;     // periodic minus free-space advective speed of the Gaussian pair
    double deficit = 0.0;            // 1 - 2 pi d speed / Gamma
    double predicted = 0.0;          // 2 pi alpha eps^4
    double l1_ratio = 0.0;           // ||w - Gaussian pair||_1 / (Gamma nu t / d^2)
    double circulation_right = 0.0;
    double circulation_total = 0.0;
    double m1 = 0.0;
    double enstrophy = 0.0;
    double l1_norm = 0.0;
    double symmetry_defect = 0.0;    // max |w(x1,x2) + w(-x1,x2)| / max |w|
};

struct DnsSummary {
    double t_mid = 0.0;
    double eps_mid = 0.0;
    double speed_raw = 0.0;          // regression over the whole run
    double image_velocity = 0.0;
    double speed = 0.0;
    double deficit = 0.0;
    double predicted = 0.0;
    double ratio = 0.0;              // deficit / predicted
    double max_l1_ratio = 0.0;
    double l1_bundle_ratio = 0.0;    // at the final time, against the bundle profile
    double circulation_drift = 0.0;  // relative to Gamma
    double m1_drift = 0.0;           // relative to |m1(t0)|
    double max_symmetry_defect = 0.0;
    bool enstrophy_monotone = true;
    bool l1_monotone = true;
    int steps = 0;
    double dt = 0.0;
    double alpha = 0.0;
    double wall_seconds = 0.0;
    bool truncated = false;          // stopped by the wall-clock cap
};

struct DnsRun {
    DnsConfig config;
    std::vector<DnsSample> samples;
    DnsSummary summary;
};

// Initial vorticity at t0 centred at Z2 = 0 (the bundle profile unless gaussian_init).
// Fields that exceed 1e-12 of their peak on the box boundary are rejected.
Samples2D init_from_dipole(const DnsConfig& c, const ExpansionBundle& b);

// Advective right-half centroid speed of the Gaussian pair at eps with the periodic velocity of
// the solver minus the same quantity with the exact free-space velocity, on the solver grid.
double image_velocity(const SpectralSolver& s, const DipoleParams& p, double eps);

DnsRun run_dns(const DnsConfig& c, const ExpansionBundle& b);

struct DnsSweep {
    std::vector<DnsRun> runs;
    SlopeFit deficit_slope;          // log deficit against log eps_mid
    double worst_ratio = 0.0;        // ratio farthest from 1
    double max_l1_ratio = 0.0;
    double wall_seconds = 0.0;
};

DnsSweep dns_sweep(const DnsConfig& base, const std::vector<double>& eps0_list, const ExpansionBundle& b);

void write_trajectory_csv(std::ostream& os, const DnsRun& r, const std::vector<std::string>& header);
void write_sweep_csv(std::ostream& os, const DnsSweep& s, const std::vector<std::string>& header);

}  // namespace dipole
