#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "dipole/expansion.hpp"
#include "dipole/polar_core.hpp"

namespace dipole {

// Cell-centred Cartesian grid: x_i = x_min + (i + 1/2) dx, i = 0..nx-1.
struct Grid2D {
    double x_min = -8.0, x_max = 8.0;
    double y_min = -8.0, y_max = 8.0;
    int nx = 256, ny = 256;

    void validate() const;
    double dx() const { return (x_max - x_min) / nx; }
    double dy() const { return (y_max - y_min) / ny; }
    double x(int i) const { return x_min + (i + 0.5) * dx(); }
    double y(int j) const { return y_min + (j + 0.5) * dy(); }
    double cell_area() const { return dx() * dy(); }
    // Square grid centred at (cx, cy) with half-width h and n cells per side.
    static Grid2D square(double cx, double cy, double h, int n);
};

// Row-major samples, index j * nx + i.
struct Samples2D {
    Grid2D grid;
    std::vector<double> v;

    explicit Samples2D(const Grid2D& g) : grid(g), v(static_cast<size_t>(g.nx) * g.ny, 0.0) {}
    double& at(int i, int j) { return v[static_cast<size_t>(j) * grid.nx + i]; }
    double at(int i, int j) const { return v[static_cast<size_t>(j) * grid.nx + i]; }
};

// Circulation Gamma, separation d, viscosity nu.
struct DipoleParams {
    double gamma = 2.0 * 3.14159265358979323846;
    double d = 1.0;
    double nu = 2.0 * 3.14159265358979323846 / 5000.0;

    void validate() const;
    double eps(double t) const;          // sqrt(nu t) / d
    double delta() const { return nu / gamma; }
    double t_adv() const { return d * d / gamma; }
    double t_diff() const { return d * d / nu; }
    double time_for_eps(double eps) const { return eps * eps * d * d / nu; }
};

// Samples a field given in rescaled coordinates. Gaussian-weighted modes are
// continued beyond r_max with their last scaled value; other classes raise
// InvalidArgument outside the radial grid.
Samples2D assemble(const PolarField& f, const Grid2D& grid);
// Stream functions: continued beyond r_max as multipoles.
Samples2D assemble_stream(const PolarField& psi, const Grid2D& grid);

Samples2D assemble_omega_app(const ExpansionBundle& b, double eps, double delta, const Grid2D& grid);
Samples2D assemble_psi_app(const ExpansionBundle& b, double eps, double delta, const Grid2D& grid);
// Psi - T_eps Psi + eps xi1 zeta / (2 pi) + log(1/eps) / (2 pi) for the delta = 0 sector.
Samples2D assemble_phi_app(const ExpansionBundle& b, double eps, const Grid2D& grid);
// Velocity grad-perp Psi = (-d2 Psi, d1 Psi) of a stream function.
std::array<Samples2D, 2> assemble_velocity(const PolarField& psi, const Grid2D& grid);

// Sum over k <= max_order of eps^k Phi_k, the polynomial form of the co-moving
// stream function (constants dropped).
PolarField phi_app_series(const ExpansionBundle& b, double eps, int max_order);

// Physical vorticity of the dipole with centres (+-d/2, Z2) at time t. Without a
// bundle the pure Gaussian pair is returned; with one, Omega_app(eps(t), delta).
Samples2D physical_dipole(const DipoleParams& p, double t, double z2, const Grid2D& grid,
                          const ExpansionBundle* bundle = nullptr);

// Quadrature helpers on samples.
double integral(const Samples2D& s);
double right_half_integral(const Samples2D& s);
// Vertical centre of the right half: integral of x2 w over x1 > 0 divided by -gamma.
double right_half_centroid(const Samples2D& s, double gamma);

struct Polyline {
    double level = 0.0;
    bool closed = false;
    std::vector<std::array<double, 2>> points;
};

// Marching squares on the cell centres with linear interpolation along edges.
std::vector<Polyline> extract_contours(const Samples2D& s, const std::vector<double>& levels);
double polyline_length(const Polyline& p);

// x, y, value with '# ' header lines.
void write_samples_csv(std::ostream& os, const Samples2D& s, const std::vector<std::string>& header);
// level, polyline, closed, x, y.
void write_contours_csv(std::ostream& os, const std::vector<Polyline>& lines, const std::vector<std::string>& header);
void write_contours_svg(std::ostream& os, const Grid2D& grid, const std::vector<Polyline>& lines,
                        const std::string& title);

}  // namespace dipole
