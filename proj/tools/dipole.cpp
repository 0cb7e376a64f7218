#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dipole/dns.hpp"
#include "dipole/energy_diag.hpp"
#include "dipole/errors.hpp"
#include "dipole/expansion.hpp"
#include "dipole/fields2d.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct RunConfig {
    std::string subcommand;
    std::optional<int> order;
    std::vector<double> eps;
    std::vector<double> eps_range;    // lo, hi
    std::vector<double> delta_range;  // lo, hi
    double delta = 0.0;
    std::optional<int> samples;
    int levels = 32;
    dipole::GridSpec grid;
    std::string out = ".";
    std::uint64_t seed = 12345;
    std::string config;
    std::map<std::string, std::string> extra;  // keys left for dns-run
};

std::string normalise_key(std::string k) {
    std::replace(k.begin(), k.end(), '-', '_');
    return k;
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t pos = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
        if (item.empty() || pos != item.size()) throw dipole::InvalidArgument("config: bad number for " + key + ": " + s);
        v.push_back(x);
    }
    if (v.empty()) throw dipole::InvalidArgument("config: empty list for " + key);
    return v;
}

double parse_one(const std::string& key, const std::string& s) {
    const auto v = parse_list(key, s);
    if (v.size() != 1) throw dipole::InvalidArgument("config: " + key + " takes a single value");
    return v[0];
}

int parse_int(const std::string& key, const std::string& s) {
    const double x = parse_one(key, s);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw dipole::InvalidArgument("config: " + key + " must be an integer");
    return static_cast<int>(x);
}

// File values apply only where the corresponding flag was not given.
void merge_config_file(RunConfig& rc, const CLI::App& sub) {
    if (rc.config.empty()) return;
    const auto kv = dipole::read_key_value_file(rc.config);
    auto given = [&](const char* flag) { return sub.count(flag) > 0; };
    for (const auto& [raw, value] : kv) {
        const std::string key = normalise_key(raw);
        if (key == "order") {
            if (!given("--order")) rc.order = parse_int(key, value);
        } else if (key == "eps") {
            if (!given("--eps")) rc.eps = parse_list(key, value);
        } else if (key == "eps_range") {
            if (!given("--eps-range")) rc.eps_range = parse_list(key, value);
        } else if (key == "delta") {
            if (!given("--delta")) rc.delta = parse_one(key, value);
        } else if (key == "delta_range") {
            if (!given("--delta-range")) rc.delta_range = parse_list(key, value);
        } else if (key == "samples") {
            if (!given("--samples")) rc.samples = parse_int(key, value);
        } else if (key == "levels") {
            if (!given("--levels")) rc.levels = parse_int(key, value);
        } else if (key == "grid_points") {
            if (!given("--grid-points")) rc.grid.n_points = parse_int(key, value);
        } else if (key == "r_max") {
            if (!given("--r-max")) rc.grid.r_max = parse_one(key, value);
        } else if (key == "out") {
            if (!given("--out")) rc.out = value;
        } else if (key == "seed") {
            if (!given("--seed")) {
                const double s = parse_one(key, value);
                if (s < 0 || s != std::floor(s)) throw dipole::InvalidArgument("config: seed must be a non-negative integer");
                rc.seed = static_cast<std::uint64_t>(s);
            }
        } else if (rc.subcommand == "dns-run") {
            rc.extra[key] = value;
        } else {
            throw dipole::InvalidArgument("config: unknown key '" + raw + "' for " + rc.subcommand);
        }
    }
}

void validate(const RunConfig& rc) {
    rc.grid.validate();
    if (rc.order && (*rc.order < 1 || *rc.order > 12)) throw dipole::InvalidArgument("order must lie in [1, 12]");
    for (double e : rc.eps)
        if (!(e > 0.0 && e < 1.0)) throw dipole::InvalidArgument("eps values must lie in (0, 1)");
    auto check_range = [](const std::vector<double>& r, const char* name) {
        if (r.empty()) return;
        if (r.size() != 2 || !(r[0] > 0.0 && r[0] < r[1]))
            throw dipole::InvalidArgument(std::string(name) + " must be lo,hi with 0 < lo < hi");
    };
    check_range(rc.eps_range, "eps-range");
    check_range(rc.delta_range, "delta-range");
    if (!rc.eps_range.empty() && rc.eps_range[1] >= 1.0) throw dipole::InvalidArgument("eps-range must stay below 1");
    if (!(rc.delta >= 0.0)) throw dipole::InvalidArgument("delta must be non-negative");
    if (rc.samples && *rc.samples < 2) throw dipole::InvalidArgument("samples must be at least 2");
    if (rc.levels < 1 || rc.levels > 1000) throw dipole::InvalidArgument("levels must lie in [1, 1000]");
    if (rc.out.empty()) throw dipole::InvalidArgument("out must not be empty");
}

std::vector<std::string> header_lines(const RunConfig& rc, int order, const std::vector<std::string>& more = {}) {
    std::ostringstream g, t;
    g.precision(17);
    g << "grid r_max=" << rc.grid.r_max << " n_points=" << rc.grid.n_points;
    t << "tolerances step_lambda=" << dipole::step_lambda_tolerance
      << " alpha_consistency=" << dipole::alpha_consistency_tolerance
      << " functional_nonradial=" << dipole::functional_nonradial_tolerance
      << " moment=" << dipole::moment_tolerance;
    std::vector<std::string> h{std::string("dipole version ") + DIPOLE_VERSION + " format " +
                                   std::to_string(dipole::bundle_format_version),
                               "command " + rc.subcommand, "order M=" + std::to_string(order), g.str(), t.str()};
    h.insert(h.end(), more.begin(), more.end());
    return h;
}

ordered_json header_json(const RunConfig& rc, int order) {
    return {{"version", DIPOLE_VERSION},
            {"command", rc.subcommand},
            {"order", order},
            {"grid", {{"r_max", rc.grid.r_max}, {"n_points", rc.grid.n_points}}},
            {"tolerances",
             {{"step_lambda", dipole::step_lambda_tolerance},
              {"alpha_consistency", dipole::alpha_consistency_tolerance},
              {"functional_nonradial", dipole::functional_nonradial_tolerance},
              {"moment", dipole::moment_tolerance}}}};
}

std::ofstream open_out(const RunConfig& rc, const std::string& name, std::string& path) {
    std::error_code ec;
    fs::create_directories(rc.out, ec);
    path = (fs::path(rc.out) / name).string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw dipole::InvalidArgument("cannot open output file " + path);
    os.precision(17);
    return os;
}

void write_header(std::ostream& os, const std::vector<std::string>& h) {
    for (const auto& l : h) os << "# " << l << "\n";
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

// ------------------------------------------------------------------ subcommands

int cmd_build(const RunConfig& rc) {
    const int M = rc.order.value_or(2);
    const auto b = dipole::build_bundle(rc.grid, M);
    std::string path;
    {
        auto os = open_out(rc, "bundle_M" + std::to_string(M) + ".json", path);
        os << dipole::bundle_to_json(b);
        if (!os) throw dipole::InvalidArgument("write failed: " + path);
    }
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_alpha(const RunConfig& rc) {
    const int M = rc.order.value_or(5);
    if (M < 2) throw dipole::InvalidArgument("alpha needs order >= 2");
    const auto b = dipole::build_bundle(rc.grid, M);
    const auto a = dipole::alpha(b);
    std::cout.precision(12);
    for (const auto& l : header_lines(rc, M)) std::cout << "# " << l << "\n";
    std::cout << "alpha " << a.alpha << "\n";
    std::cout << "alpha_quadrature " << a.alpha_quadrature << "\n";
    std::cout << "k zeta_E zeta_NS\n";
    for (size_t k = 0; k < b.zeta_E.size(); ++k)
        std::cout << k << " " << b.zeta_E[k] << " " << b.zeta_NS[k] << "\n";
    if (a.has_zeta4) std::cout << "zeta4 " << a.zeta4 << " (-2 pi alpha = " << -2.0 * M_PI * a.alpha << ")\n";
    return 0;
}

int cmd_residual_scan(const RunConfig& rc) {
    const int M = rc.order.value_or(2);
    if (M < 2) throw dipole::InvalidArgument("residual-scan needs order >= 2");
    const double lo = rc.eps_range.empty() ? 0.02 : rc.eps_range[0];
    const double hi = rc.eps_range.empty() ? 0.1 : rc.eps_range[1];
    const int n = rc.samples.value_or(9);
    const auto b = dipole::build_bundle(rc.grid, M);
    const auto fit = dipole::remainder_eps_slope(b, rc.delta, lo, hi, n);

    std::string path;
    {
        auto os = open_out(rc, "residual_scan_M" + std::to_string(M) + ".csv", path);
        write_header(os, header_lines(rc, M, {"scan eps delta=" + fmt("%.17g", rc.delta) + " expected_slope=" +
                                                  std::to_string(M + 1)}));
        os << "variable,eps,delta,remainder_norm,slope\n";
        for (size_t i = 0; i < fit.x.size(); ++i)
            os << "eps," << fit.x[i] << "," << rc.delta << "," << fit.y[i] << "," << fit.slope << "\n";
        if (!rc.delta_range.empty()) {
            const double eps = rc.eps.empty() ? 0.05 : rc.eps.front();
            const auto df = dipole::remainder_delta_slope(b, eps, rc.delta_range[0], rc.delta_range[1], n);
            for (size_t i = 0; i < df.x.size(); ++i)
                os << "delta," << eps << "," << df.x[i] << "," << df.y[i] << "," << df.slope << "\n";
            std::cout << "delta slope " << df.slope << " at eps " << eps << "\n";
        }
    }
    std::cout << "eps slope " << fit.slope << " (M+1 = " << M + 1 << ")\nwrote " << path << "\n";
    return 0;
}

int cmd_streamlines(const RunConfig& rc) {
    const int M = rc.order.value_or(4);
    const double eps = rc.eps.empty() ? 0.1 : rc.eps.front();
    if (eps > 0.25) throw dipole::InvalidArgument("streamlines needs eps <= 0.25");
    const auto b = dipole::build_bundle(rc.grid, M);

    // Both cores in rescaled coordinates: the vortex at 0, its mirror at -1/eps.
    dipole::Grid2D g;
    const double half = 0.5 / eps;
    const double h = 0.05;
    g.x_min = -2.0 * half - 5.0;
    g.x_max = 5.0;
    g.y_min = -7.0;
    g.y_max = 7.0;
    g.nx = static_cast<int>(std::lround((g.x_max - g.x_min) / h));
    g.ny = static_cast<int>(std::lround((g.y_max - g.y_min) / h));
    const auto phi = dipole::assemble_phi_app(b, eps, g);

    // Levels symmetric about the value on the midline x1 = -1/(2 eps).
    const auto [mn, mx] = std::minmax_element(phi.v.begin(), phi.v.end());
    const double mid = 0.5 * (*mn + *mx);
    const double span = 0.5 * (*mx - *mn);
    std::vector<double> levels;
    for (int k = 0; k < rc.levels; ++k) levels.push_back(mid + span * (-1.0 + (2.0 * k + 1.0) / rc.levels));
    const auto lines = dipole::extract_contours(phi, levels);

    const auto hdr = header_lines(rc, M, {"eps " + fmt("%.17g", eps), "levels " + std::to_string(rc.levels)});
    std::string csv, svg;
    {
        auto os = open_out(rc, "streamlines_M" + std::to_string(M) + ".csv", csv);
        dipole::write_contours_csv(os, lines, hdr);
    }
    {
        auto os = open_out(rc, "streamlines_M" + std::to_string(M) + ".svg", svg);
        std::string comment;
        for (const auto& l : hdr) comment += l + "; ";
        os << "<!-- " << comment << "-->\n";
        dipole::write_contours_svg(os, g, lines, "co-moving streamlines, eps = " + fmt("%g", eps));
    }
    std::cout << lines.size() << " polylines\nwrote " << csv << "\nwrote " << svg << "\n";
    return 0;
}

int cmd_energy_check(const RunConfig& rc) {
    const int M = rc.order.value_or(4);
    const auto eps = rc.eps.empty() ? std::vector<double>{0.03, 0.05, 0.08} : rc.eps;
    const int samples = rc.samples.value_or(100);
    const auto b = dipole::build_bundle(rc.grid, M);
    const auto rep = dipole::coercivity_check(b, eps, samples, rc.seed);

    ordered_json j;
    j["header"] = header_json(rc, M);
    j["report"] = ordered_json::parse(dipole::coercivity_to_json(rep));
    std::string path;
    {
        auto os = open_out(rc, "energy_check_M" + std::to_string(M) + ".json", path);
        os << j.dump(2) << "\n";
    }
    bool ok = true;
    for (const auto& r : rep.rows) {
        std::cout << "eps " << r.eps << " min E/|w|^2 " << r.min_energy_ratio << " min D ratio "
                  << r.min_diffusion_ratio << " non-positive " << r.non_positive << "\n";
        ok = ok && r.non_positive == 0 && r.min_energy_ratio > 0.0 && r.min_diffusion_ratio > 0.0;
    }
    std::cout << "wrote " << path << "\n";
    if (!ok) throw dipole::NumericalError("energy-check: coercivity violated", 0.0);
    return 0;
}

int cmd_dns_run(const RunConfig& rc) {
    dipole::DnsConfig base = dipole::dns_config_from(rc.extra);
    if (rc.order) base.order = *rc.order;
    base.validate();
    const auto b = dipole::build_bundle(rc.grid, std::max(base.order, 2));
    const auto eps0 = rc.eps.empty() ? std::vector<double>{base.eps0} : rc.eps;

    std::ostringstream cfg;
    cfg.precision(17);
    cfg << "dns re=" << base.reynolds() << " n=" << base.n << " box=" << base.box << " cfl=" << base.cfl
        << " sigma=" << base.sigma << " run_time=" << base.run_time << " init="
        << (base.gaussian_init ? "gaussian" : "bundle");
    const auto hdr = header_lines(rc, base.order, {cfg.str()});

    const auto t0 = std::chrono::steady_clock::now();
    dipole::DnsSweep sweep;
    if (eps0.size() > 1) {
        sweep = dipole::dns_sweep(base, eps0, b);
    } else {
        base.eps0 = eps0.front();
        sweep.runs.push_back(dipole::run_dns(base, b));
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (const auto& r : sweep.runs) {
        std::string path;
        {
            auto os = open_out(rc, "dns_trajectory_eps" + fmt("%.4f", r.config.eps0) + ".csv", path);
            dipole::write_trajectory_csv(os, r, hdr);
        }
        std::cout << "wrote " << path << "\n";
        std::cout << "eps_mid " << r.summary.eps_mid << " deficit " << r.summary.deficit << " predicted "
                  << r.summary.predicted << " ratio " << r.summary.ratio << " max L1 ratio "
                  << r.summary.max_l1_ratio << "\n";
    }
    if (sweep.runs.size() > 1) {
        std::string path;
        auto os = open_out(rc, "dns_sweep.csv", path);
        dipole::write_sweep_csv(os, sweep, hdr);
        std::cout << "deficit slope " << sweep.deficit_slope.slope << "\nwrote " << path << "\n";
    }
    std::cout << "wall seconds " << wall << "\n";
    for (const auto& r : sweep.runs)
        if (r.summary.truncated) throw dipole::NumericalError("dns-run: wall-clock cap reached", r.summary.wall_seconds);
    return 0;
}

int emit_error(int code, const std::string& kind, const std::string& msg, std::optional<double> measured = {}) {
    ordered_json j{{"error", kind}, {"message", msg}, {"exit_code", code}};
    if (measured) j["measured"] = *measured;
    std::cerr << j.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Viscous vortex dipole expansion toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", DIPOLE_VERSION);

    RunConfig rc;
    std::map<std::string, int (*)(const RunConfig&)> handlers{
        {"build", cmd_build},
        {"alpha", cmd_alpha},
        {"residual-scan", cmd_residual_scan},
        {"streamlines", cmd_streamlines},
        {"energy-check", cmd_energy_check},
        {"dns-run", cmd_dns_run},
    };
    const std::map<std::string, std::string> help{
        {"build", "construct the expansion bundle and write it as JSON"},
        {"alpha", "print alpha and the zeta table"},
        {"residual-scan", "fit the remainder order in eps (and optionally delta)"},
        {"streamlines", "co-moving stream function contours as CSV and SVG"},
        {"energy-check", "energy and diffusion coercivity over random perturbations"},
        {"dns-run", "pseudo-spectral validation of the speed law"},
    };

    std::vector<CLI::App*> subs;
    for (const auto& [name, text] : help) {
        auto* s = app.add_subcommand(name, text);
        s->add_option("--order", rc.order, "expansion order M");
        s->add_option("--eps", rc.eps, "eps value or comma-separated list")->delimiter(',');
        s->add_option("--eps-range", rc.eps_range, "lo,hi")->delimiter(',')->expected(2);
        s->add_option("--delta", rc.delta, "inverse Reynolds number delta");
        s->add_option("--delta-range", rc.delta_range, "lo,hi")->delimiter(',')->expected(2);
        s->add_option("--samples", rc.samples, "sample count");
        s->add_option("--levels", rc.levels, "contour levels");
        s->add_option("--grid-points", rc.grid.n_points, "radial grid points");
        s->add_option("--r-max", rc.grid.r_max, "radial grid extent");
        s->add_option("--out", rc.out, "output directory");
        s->add_option("--seed", rc.seed, "random seed");
        s->add_option("--config", rc.config, "key = value file; flags take precedence");
        subs.push_back(s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return emit_error(exit_config, "config", e.what());
    }

    const CLI::App* sub = nullptr;
    for (auto* s : subs)
        if (s->parsed()) sub = s;
    rc.subcommand = sub->get_name();

    try {
        merge_config_file(rc, *sub);
        validate(rc);
        return handlers.at(rc.subcommand)(rc);
    } catch (const dipole::InvalidArgument& e) {
        return emit_error(exit_config, "config", e.what());
    } catch (const dipole::NumericalError& e) {
        return emit_error(exit_numerical, "numerical", e.what(), e.measured());
    } catch (const std::exception& e) {
        return emit_error(exit_numerical, "numerical", e.what());
    }
}
