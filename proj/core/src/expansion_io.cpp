#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dipole/errors.hpp"
#include "dipole/expansion.hpp"

namespace dipole {

namespace {

using nlohmann::ordered_json;

ordered_json field_to_json(const PolarField& f) {
    ordered_json modes = ordered_json::array();
    for (const auto& [k, p] : f.modes()) {
        ordered_json m;
        m["n"] = k.n;
        m["parity"] = to_string(k.parity);
        m["decay"] = to_string(p.decay());
        m["stored"] = p.stored();
        modes.push_back(std::move(m));
    }
    return modes;
}

PolarField field_from_json(const ordered_json& j, const GridSpec& g) {
    PolarField f(g);
    for (const auto& m : j) {
        std::vector<double> v = m.at("stored").get<std::vector<double>>();
        if (static_cast<int>(v.size()) != g.n_points) throw InvalidArgument("bundle: profile length does not match grid");
        f.set({m.at("n").get<int>(), parity_from_string(m.at("parity").get<std::string>())},
              RadialProfile(g, decay_from_string(m.at("decay").get<std::string>()), std::move(v)));
    }
    return f;
}

ordered_json moments_to_json(const Moments& m) { return {{"mass", m.mass}, {"m1", m.m1}, {"m2", m.m2}}; }

Moments moments_from_json(const ordered_json& j) {
    return {j.at("mass").get<double>(), j.at("m1").get<double>(), j.at("m2").get<double>()};
}

ordered_json fields_to_json(const std::vector<PolarField>& v) {
    ordered_json a = ordered_json::array();
    for (const auto& f : v) a.push_back(field_to_json(f));
    return a;
}

std::vector<PolarField> fields_from_json(const ordered_json& j, const GridSpec& g) {
    std::vector<PolarField> v;
    for (const auto& f : j) v.push_back(field_from_json(f, g));
    return v;
}

}  // namespace

std::string bundle_to_json(const ExpansionBundle& b) {
    ordered_json j;
    j["format"] = "dipole-expansion-bundle";
    j["version"] = bundle_format_version;
    j["grid"] = {{"r_max", b.grid.r_max}, {"n_points", b.grid.n_points}};
    j["order"] = b.order;
    j["tolerances"] = {{"step_lambda", step_lambda_tolerance}, {"alpha_consistency", alpha_consistency_tolerance}};
    j["zeta_E"] = b.zeta_E;
    j["zeta_NS"] = b.zeta_NS;
    ordered_json steps = ordered_json::array();
    for (const auto& d : b.steps) {
        ordered_json s;
        s["order"] = d.order;
        s["zeta_E"] = d.zeta_E;
        s["zeta_NS"] = d.zeta_NS;
        s["H0"] = moments_to_json(d.H0);
        s["H1"] = moments_to_json(d.H1);
        s["m2_tilde_H0"] = d.m2_tilde_H0;
        s["m2_tilde_H1"] = d.m2_tilde_H1;
        s["lower_order_defect"] = d.lower_order_defect;
        s["lambda_residual_E"] = d.lambda_residual_E;
        s["lambda_residual_NS"] = d.lambda_residual_NS;
        s["solvability_defect"] = d.solvability_defect;
        s["radial_E0_norm"] = d.radial_E0_norm;
        s["omega_E"] = moments_to_json(d.omega_E);
        s["omega_NS"] = moments_to_json(d.omega_NS);
        s["tail"] = d.tail;
        steps.push_back(std::move(s));
    }
    j["steps"] = std::move(steps);
    j["omega_E"] = fields_to_json(b.omega_E);
    j["omega_NS"] = fields_to_json(b.omega_NS);
    j["psi_E"] = fields_to_json(b.psi_E);
    j["psi_NS"] = fields_to_json(b.psi_NS);
    return j.dump(1) + "\n";
}

ExpansionBundle bundle_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("bundle: malformed JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "dipole-expansion-bundle") throw InvalidArgument("bundle: unknown format");
        const int version = j.at("version").get<int>();
        if (version != bundle_format_version) {
            throw InvalidArgument("bundle: unsupported version " + std::to_string(version));
        }
        ExpansionBundle b;
        b.grid = {j.at("grid").at("r_max").get<double>(), j.at("grid").at("n_points").get<int>()};
        b.grid.validate();
        b.order = j.at("order").get<int>();
        b.zeta_E = j.at("zeta_E").get<std::vector<double>>();
        b.zeta_NS = j.at("zeta_NS").get<std::vector<double>>();
        for (const auto& s : j.at("steps")) {
            StepDiagnostics d;
            d.order = s.at("order").get<int>();
            d.zeta_E = s.at("zeta_E").get<double>();
            d.zeta_NS = s.at("zeta_NS").get<double>();
            d.H0 = moments_from_json(s.at("H0"));
            d.H1 = moments_from_json(s.at("H1"));
            d.m2_tilde_H0 = s.at("m2_tilde_H0").get<double>();
            d.m2_tilde_H1 = s.at("m2_tilde_H1").get<double>();
            d.lower_order_defect = s.at("lower_order_defect").get<double>();
            d.lambda_residual_E = s.at("lambda_residual_E").get<double>();
            d.lambda_residual_NS = s.at("lambda_residual_NS").get<double>();
            d.solvability_defect = s.at("solvability_defect").get<double>();
            d.radial_E0_norm = s.at("radial_E0_norm").get<double>();
            d.omega_E = moments_from_json(s.at("omega_E"));
            d.omega_NS = moments_from_json(s.at("omega_NS"));
            d.tail = s.at("tail").get<double>();
            b.steps.push_back(d);
        }
        b.omega_E = fields_from_json(j.at("omega_E"), b.grid);
        b.omega_NS = fields_from_json(j.at("omega_NS"), b.grid);
        b.psi_E = fields_from_json(j.at("psi_E"), b.grid);
        b.psi_NS = fields_from_json(j.at("psi_NS"), b.grid);
        const auto slots = static_cast<size_t>(std::max(b.order, 0) + 1);
        if (b.omega_E.size() != slots || b.omega_NS.size() != slots || b.psi_E.size() != slots ||
            b.psi_NS.size() != slots || b.zeta_E.size() != slots - (b.order == 0 ? 0 : 1) ||
            b.zeta_NS.size() != b.zeta_E.size()) {
            throw InvalidArgument("bundle: profile or speed table sizes do not match the order");
        }
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("bundle: missing or mistyped entry: ") + e.what());
    }
}

void save_bundle(const ExpansionBundle& b, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidArgument("cannot open '" + path + "' for writing");
    os << bundle_to_json(b);
    if (!os) throw InvalidArgument("failed writing '" + path + "'");
}

ExpansionBundle load_bundle(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return bundle_from_json(ss.str());
}

}  // namespace dipole
