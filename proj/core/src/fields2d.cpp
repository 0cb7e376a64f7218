#include "dipole/fields2d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "dipole/errors.hpp"
#include "dipole/operators.hpp"

namespace dipole {

namespace {

constexpr double pi = std::numbers::pi;

// Splits a field by decay class so each part uses the matching evaluator.
class PointEvaluator {
public:
    PointEvaluator(const PolarField& f, bool stream) : r_max_(f.grid().r_max), stream_(stream) {
        PolarField gauss(f.grid()), other(f.grid());
        for (const auto& [k, p] : f.modes()) {
            if (p.decay() == Decay::gaussian_weighted) {
                gauss.set(k, p);
            } else {
                other.set(k, p.decay() == Decay::bounded ? p : RadialProfile(f.grid(), Decay::bounded, p.values()));
            }
        }
        has_gauss_ = !gauss.empty();
        has_other_ = !other.empty();
        if (has_gauss_) gauss_ = ScaledFieldEvaluator(gauss);
        if (has_other_) other_ = StreamEvaluator(other);
    }

    std::array<double, 3> eval(double x1, double x2) const {
        std::array<double, 3> out{0.0, 0.0, 0.0};
        const double r2 = x1 * x1 + x2 * x2;
        if (has_gauss_) {
            const auto s = gauss_.eval(x1, x2);
            const double w = std::exp(-0.25 * r2);
            for (int c = 0; c < 3; ++c) out[static_cast<size_t>(c)] += w * s[static_cast<size_t>(c)];
        }
        if (has_other_) {
            if (!stream_ && r2 > r_max_ * r_max_ * (1.0 + 1e-12)) {
                throw InvalidArgument("assemble: evaluation outside the radial support");
            }
            const auto s = other_.eval(x1, x2);
            for (int c = 0; c < 3; ++c) out[static_cast<size_t>(c)] += s[static_cast<size_t>(c)];
        }
        return out;
    }

private:
    double r_max_;
    bool stream_;
    bool has_gauss_ = false, has_other_ = false;
    ScaledFieldEvaluator gauss_;
    StreamEvaluator other_;
};

Samples2D sample_with(const PointEvaluator& e, const Grid2D& grid, int component) {
    grid.validate();
    Samples2D s(grid);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) s.at(i, j) = e.eval(grid.x(i), grid.y(j))[static_cast<size_t>(component)];
    }
    return s;
}

}  // namespace

void Grid2D::validate() const {
    if (!(x_max > x_min) || !(y_max > y_min)) throw InvalidArgument("Grid2D: empty extent");
    if (nx < 2 || ny < 2 || nx % 2 != 0 || ny % 2 != 0) throw InvalidArgument("Grid2D: resolution must be even and >= 2");
}

Grid2D Grid2D::square(double cx, double cy, double h, int n) {
    Grid2D g{cx - h, cx + h, cy - h, cy + h, n, n};
    g.validate();
    return g;
}

void DipoleParams::validate() const {
    if (!(gamma > 0.0) || !(d > 0.0) || !(nu > 0.0)) throw InvalidArgument("DipoleParams: gamma, d, nu must be positive");
}

double DipoleParams::eps(double t) const {
    if (!(t >= 0.0)) throw InvalidArgument("DipoleParams: time must be non-negative");
    return std::sqrt(nu * t) / d;
}

Samples2D assemble(const PolarField& f, const Grid2D& grid) { return sample_with(PointEvaluator(f, false), grid, 0); }

Samples2D assemble_stream(const PolarField& psi, const Grid2D& grid) {
    return sample_with(PointEvaluator(psi, true), grid, 0);
}

Samples2D assemble_omega_app(const ExpansionBundle& b, double eps, double delta, const Grid2D& grid) {
    return assemble(b.omega_app(eps, delta), grid);
}

Samples2D assemble_psi_app(const ExpansionBundle& b, double eps, double delta, const Grid2D& grid) {
    return assemble_stream(b.psi_app(eps, delta), grid);
}

Samples2D assemble_phi_app(const ExpansionBundle& b, double eps, const Grid2D& grid) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("assemble_phi_app: eps must lie in (0, 1)");
    grid.validate();
    const PointEvaluator psi(b.psi_app(eps, 0.0), true);
    double zeta = 0.0;
    for (size_t k = 0; k < b.zeta_E.size(); ++k) zeta += std::pow(eps, static_cast<double>(k)) * b.zeta_E[k];
    const double c = std::log(1.0 / eps) / (2.0 * pi);
    Samples2D s(grid);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const double x1 = grid.x(i), x2 = grid.y(j);
            s.at(i, j) = psi.eval(x1, x2)[0] - psi.eval(-x1 - 1.0 / eps, x2)[0] + eps * x1 * zeta / (2.0 * pi) + c;
        }
    }
    return s;
}

std::array<Samples2D, 2> assemble_velocity(const PolarField& psi, const Grid2D& grid) {
    const PointEvaluator e(psi, true);
    grid.validate();
    std::array<Samples2D, 2> u{Samples2D(grid), Samples2D(grid)};
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const auto v = e.eval(grid.x(i), grid.y(j));
            u[0].at(i, j) = -v[2];
            u[1].at(i, j) = v[1];
        }
    }
    return u;
}

PolarField phi_app_series(const ExpansionBundle& b, double eps, int max_order) {
    const auto phi = comoving_stream_coefficients(b);
    PolarField out(b.grid);
    const int top = std::min(max_order, static_cast<int>(phi.size()) - 1);
    for (int k = 0; k <= top; ++k) {
        PolarField t = phi[static_cast<size_t>(k)];
        t *= std::pow(eps, k);
        out += t;
    }
    return out;
}

Samples2D physical_dipole(const DipoleParams& p, double t, double z2, const Grid2D& grid, const ExpansionBundle* bundle) {
    p.validate();
    if (!(t > 0.0)) throw InvalidArgument("physical_dipole: t must be positive");
    grid.validate();
    const double s = std::sqrt(p.nu * t);
    const double amp = p.gamma / (p.nu * t);
    Samples2D out(grid);
    if (!bundle) {
        for (int j = 0; j < grid.ny; ++j) {
            for (int i = 0; i < grid.nx; ++i) {
                const double x1 = grid.x(i), x2 = grid.y(j) - z2;
                const double ql = (x1 + 0.5 * p.d) * (x1 + 0.5 * p.d) + x2 * x2;
                const double qr = (x1 - 0.5 * p.d) * (x1 - 0.5 * p.d) + x2 * x2;
                out.at(i, j) = amp / (4.0 * pi) * (std::exp(-ql / (4.0 * s * s)) - std::exp(-qr / (4.0 * s * s)));
            }
        }
        return out;
    }
    const PointEvaluator omega(bundle->omega_app(p.eps(t), p.delta()), false);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const double x1 = grid.x(i), x2 = grid.y(j) - z2;
            // xi_r = (x - Z) / s, xi_l = (reflected x - Z) / s.
            const double r = omega.eval((x1 - 0.5 * p.d) / s, x2 / s)[0];
            const double l = omega.eval((-x1 - 0.5 * p.d) / s, x2 / s)[0];
            out.at(i, j) = amp * (l - r);
        }
    }
    return out;
}

double integral(const Samples2D& s) {
    num::CompensatedSum acc;
    for (double v : s.v) acc.add(v);
    return acc.value() * s.grid.cell_area();
}

double right_half_integral(const Samples2D& s) {
    num::CompensatedSum acc;
    for (int j = 0; j < s.grid.ny; ++j) {
        for (int i = 0; i < s.grid.nx; ++i) {
            if (s.grid.x(i) > 0.0) acc.add(s.at(i, j));
        }
    }
    return acc.value() * s.grid.cell_area();
}

double right_half_centroid(const Samples2D& s, double gamma) {
    num::CompensatedSum acc;
    for (int j = 0; j < s.grid.ny; ++j) {
        for (int i = 0; i < s.grid.nx; ++i) {
            if (s.grid.x(i) > 0.0) acc.add(s.grid.y(j) * s.at(i, j));
        }
    }
    return acc.value() * s.grid.cell_area() / (-gamma);
}

// ---------------------------------------------------------------- contours

namespace {

struct Segment {
    std::int64_t a, b;  // edge ids
};

}  // namespace

std::vector<Polyline> extract_contours(const Samples2D& s, const std::vector<double>& levels) {
    const Grid2D& g = s.grid;
    const int nx = g.nx, ny = g.ny;
    std::vector<Polyline> out;
    auto hid = [&](int i, int j) { return (static_cast<std::int64_t>(j) * nx + i) * 2; };
    auto vid = [&](int i, int j) { return (static_cast<std::int64_t>(j) * nx + i) * 2 + 1; };

    for (double level : levels) {
        auto point_on = [&](std::int64_t id) -> std::array<double, 2> {
            const std::int64_t cell = id / 2;
            const int i = static_cast<int>(cell % nx), j = static_cast<int>(cell / nx);
            const double f0 = s.at(i, j);
            if (id % 2 == 0) {
                const double f1 = s.at(i + 1, j);
                const double t = (level - f0) / (f1 - f0);
                return {g.x(i) + t * g.dx(), g.y(j)};
            }
            const double f1 = s.at(i, j + 1);
            const double t = (level - f0) / (f1 - f0);
            return {g.x(i), g.y(j) + t * g.dy()};
        };

        std::vector<Segment> segs;
        for (int j = 0; j + 1 < ny; ++j) {
            for (int i = 0; i + 1 < nx; ++i) {
                const double c0 = s.at(i, j), c1 = s.at(i + 1, j), c2 = s.at(i + 1, j + 1), c3 = s.at(i, j + 1);
                const bool a0 = c0 > level, a1 = c1 > level, a2 = c2 > level, a3 = c3 > level;
                const std::int64_t e0 = hid(i, j), e1 = vid(i + 1, j), e2 = hid(i, j + 1), e3 = vid(i, j);
                std::vector<std::int64_t> hit;
                if (a0 != a1) hit.push_back(e0);
                if (a1 != a2) hit.push_back(e1);
                if (a3 != a2) hit.push_back(e2);
                if (a0 != a3) hit.push_back(e3);
                if (hit.size() == 2) {
                    segs.push_back({hit[0], hit[1]});
                } else if (hit.size() == 4) {
                    const bool centre = 0.25 * (c0 + c1 + c2 + c3) > level;
                    if (centre == a0) {
                        segs.push_back({e0, e1});
                        segs.push_back({e2, e3});
                    } else {
                        segs.push_back({e0, e3});
                        segs.push_back({e1, e2});
                    }
                }
            }
        }

        std::unordered_map<std::int64_t, std::vector<size_t>> by_edge;
        for (size_t k = 0; k < segs.size(); ++k) {
            by_edge[segs[k].a].push_back(k);
            by_edge[segs[k].b].push_back(k);
        }
        std::vector<char> used(segs.size(), 0);
        auto walk = [&](size_t start, std::int64_t from) {
            std::vector<std::int64_t> chain;
            std::int64_t edge = from;
            size_t cur = start;
            while (true) {
                const auto& nb = by_edge[edge];
                size_t next = segs.size();
                for (size_t k : nb) {
                    if (k != cur && !used[k]) next = k;
                }
                if (next == segs.size()) break;
                used[next] = 1;
                edge = segs[next].a == edge ? segs[next].b : segs[next].a;
                chain.push_back(edge);
                cur = next;
            }
            return chain;
        };
        for (size_t k = 0; k < segs.size(); ++k) {
            if (used[k]) continue;
            used[k] = 1;
            const auto fwd = walk(k, segs[k].b);
            const auto bwd = walk(k, segs[k].a);
            std::vector<std::int64_t> ids(bwd.rbegin(), bwd.rend());
            ids.push_back(segs[k].a);
            ids.push_back(segs[k].b);
            ids.insert(ids.end(), fwd.begin(), fwd.end());
            Polyline p;
            p.level = level;
            p.closed = ids.size() > 2 && ids.front() == ids.back();
            for (auto id : ids) p.points.push_back(point_on(id));
            out.push_back(std::move(p));
        }
    }
    return out;
}

double polyline_length(const Polyline& p) {
    double L = 0.0;
    for (size_t k = 1; k < p.points.size(); ++k) {
        L += std::hypot(p.points[k][0] - p.points[k - 1][0], p.points[k][1] - p.points[k - 1][1]);
    }
    return L;
}

void write_samples_csv(std::ostream& os, const Samples2D& s, const std::vector<std::string>& header) {
    for (const auto& h : header) os << "# " << h << '\n';
    os << "x,y,value\n";
    os.precision(17);
    for (int j = 0; j < s.grid.ny; ++j) {
        for (int i = 0; i < s.grid.nx; ++i) os << s.grid.x(i) << ',' << s.grid.y(j) << ',' << s.at(i, j) << '\n';
    }
}

void write_contours_csv(std::ostream& os, const std::vector<Polyline>& lines, const std::vector<std::string>& header) {
    for (const auto& h : header) os << "# " << h << '\n';
    os << "level,polyline,closed,x,y\n";
    os.precision(17);
    for (size_t k = 0; k < lines.size(); ++k) {
        for (const auto& pt : lines[k].points) {
            os << lines[k].level << ',' << k << ',' << (lines[k].closed ? 1 : 0) << ',' << pt[0] << ',' << pt[1] << '\n';
        }
    }
}

void write_contours_svg(std::ostream& os, const Grid2D& grid, const std::vector<Polyline>& lines,
                        const std::string& title) {
    const double width = 800.0;
    const double height = width * (grid.y_max - grid.y_min) / (grid.x_max - grid.x_min);
    const double sx = width / (grid.x_max - grid.x_min), sy = height / (grid.y_max - grid.y_min);
    double lo = 0.0, hi = 0.0;
    if (!lines.empty()) {
        lo = hi = lines.front().level;
        for (const auto& l : lines) {
            lo = std::min(lo, l.level);
            hi = std::max(hi, l.level);
        }
    }
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<title>" << title << "</title>\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os.precision(6);
    for (const auto& l : lines) {
        const double t = hi > lo ? (l.level - lo) / (hi - lo) : 0.5;
        const int red = static_cast<int>(std::lround(255.0 * t)), blue = 255 - red;
        os << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"rgb(" << red << ",0," << blue << ")\" points=\"";
        for (const auto& p : l.points) os << (p[0] - grid.x_min) * sx << ',' << (grid.y_max - p[1]) * sy << ' ';
        os << "\"/>\n";
    }
    os << "</svg>\n";
}

}  // namespace dipole
