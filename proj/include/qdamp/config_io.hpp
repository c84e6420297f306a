#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdamp/scenario.hpp"

namespace qdamp {

using Json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing key \"" + key + "\" in " + where);
    return *it;
}

inline double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + " must be a number");
    return v.get<double>();
}

inline int as_int(const Json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
    return v.get<int>();
}

inline double opt_number(const Json& obj, const std::string& key, double fallback,
                         const std::string& where) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as_number(*it, where + "." + key);
}

inline int opt_int(const Json& obj, const std::string& key, int fallback, const std::string& where) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as_int(*it, where + "." + key);
}

inline const Json& params_of(const Json& obj, const std::string& where) {
    static const Json empty = Json::object();
    auto it = obj.find("params");
    if (it == obj.end()) return empty;
    if (!it->is_object()) throw ConfigError(where + ".params must be an object");
    return *it;
}

}  // namespace detail

// Strict parse of the scenario schema: unknown keys are rejected everywhere,
// defaults are applied for stepper / basis / convergence / output, and an
// un-normalized superposition is an error (the deficit is reported, never
// silently renormalized).
inline ScenarioConfig parse_config_json(const Json& root) {
    using namespace detail;
    if (!root.is_object()) throw ConfigError("config root must be an object");
    reject_unknown_keys(root,
                        {"grid", "potential", "perturbation", "beta", "stepper", "initial", "time",
                         "basis", "convergence", "output"},
                        "config");
    ScenarioConfig cfg;

    const Json& grid = require(root, "grid", "config");
    reject_unknown_keys(grid, {"x_min", "x_max", "n_interior"}, "grid");
    cfg.x_min = as_number(require(grid, "x_min", "grid"), "grid.x_min");
    cfg.x_max = as_number(require(grid, "x_max", "grid"), "grid.x_max");
    cfg.n_interior = as_int(require(grid, "n_interior", "grid"), "grid.n_interior");

    const Json& pot = require(root, "potential", "config");
    reject_unknown_keys(pot, {"kind", "params"}, "potential");
    const std::string pkind = require(pot, "kind", "potential").get<std::string>();
    const Json& pp = params_of(pot, "potential");
    if (pkind == "square_well") {
        reject_unknown_keys(pp, {}, "potential.params");
        cfg.fields.static_kind = StaticKind::square_well;
    } else if (pkind == "harmonic") {
        reject_unknown_keys(pp, {"omega0"}, "potential.params");
        cfg.fields.static_kind = StaticKind::harmonic;
        cfg.fields.omega0 = as_number(require(pp, "omega0", "potential.params"), "omega0");
    } else if (pkind == "tabulated") {
        reject_unknown_keys(pp, {"values"}, "potential.params");
        const Json& vals = require(pp, "values", "potential.params");
        if (!vals.is_array()) throw ConfigError("potential.params.values must be an array");
        cfg.fields.static_kind = StaticKind::tabulated;
        for (const auto& v : vals) cfg.fields.tabulated.push_back(as_number(v, "values[i]"));
    } else {
        throw ConfigError("unknown potential kind \"" + pkind + "\"");
    }

    if (auto it = root.find("perturbation"); it != root.end()) {
        reject_unknown_keys(*it, {"kind", "params"}, "perturbation");
        const std::string kind = require(*it, "kind", "perturbation").get<std::string>();
        const Json& qp = params_of(*it, "perturbation");
        if (kind == "none") {
            reject_unknown_keys(qp, {}, "perturbation.params");
        } else if (kind == "dipole_pulse") {
            reject_unknown_keys(qp, {"epsilon", "t_center", "tau"}, "perturbation.params");
            cfg.fields.perturbation = PerturbationKind::dipole_pulse;
            cfg.fields.epsilon = as_number(require(qp, "epsilon", "perturbation.params"), "epsilon");
            cfg.fields.t_center = as_number(require(qp, "t_center", "perturbation.params"), "t_center");
            cfg.fields.tau = as_number(require(qp, "tau", "perturbation.params"), "tau");
            if (!(cfg.fields.tau > 0.0)) throw ConfigError("perturbation.params.tau must be positive");
        } else if (kind == "dipole_periodic") {
            reject_unknown_keys(qp, {"epsilon", "omega", "t_ramp"}, "perturbation.params");
            cfg.fields.perturbation = PerturbationKind::dipole_periodic;
            cfg.fields.epsilon = as_number(require(qp, "epsilon", "perturbation.params"), "epsilon");
            cfg.fields.omega_d = as_number(require(qp, "omega", "perturbation.params"), "omega");
            cfg.fields.t_ramp = as_number(require(qp, "t_ramp", "perturbation.params"), "t_ramp");
            if (!(cfg.fields.t_ramp > 0.0))
                throw ConfigError("perturbation.params.t_ramp must be positive");
        } else {
            throw ConfigError("unknown perturbation kind \"" + kind + "\"");
        }
    }

    if (auto it = root.find("beta"); it != root.end())
        cfg.damping.beta = as_number(*it, "beta");

    if (auto it = root.find("stepper"); it != root.end()) {
        reject_unknown_keys(*it, {"dt", "tol", "max_iters"}, "stepper");
        cfg.stepper.dt = opt_number(*it, "dt", cfg.stepper.dt, "stepper");
        cfg.stepper.fixed_point_tol = opt_number(*it, "tol", cfg.stepper.fixed_point_tol, "stepper");
        cfg.stepper.max_fixed_point_iters = opt_int(*it, "max_iters", cfg.stepper.max_fixed_point_iters, "stepper");
    }

    const Json& init = require(root, "initial", "config");
    reject_unknown_keys(init, {"kind", "params"}, "initial");
    const std::string ikind = require(init, "kind", "initial").get<std::string>();
    const Json& ip = params_of(init, "initial");
    if (ikind == "eigenstate") {
        reject_unknown_keys(ip, {"n"}, "initial.params");
        cfg.initial.kind = InitialStateSpec::Kind::eigenstate;
        cfg.initial.level = as_int(require(ip, "n", "initial.params"), "initial.params.n");
    } else if (ikind == "superposition") {
        reject_unknown_keys(ip, {"terms"}, "initial.params");
        const Json& terms = require(ip, "terms", "initial.params");
        if (!terms.is_array() || terms.empty())
            throw ConfigError("initial.params.terms must be a non-empty array");
        cfg.initial.kind = InitialStateSpec::Kind::superposition;
        double total = 0.0;
        for (const auto& term : terms) {
            reject_unknown_keys(term, {"n", "re", "im"}, "initial.params.terms[i]");
            const int n = as_int(require(term, "n", "terms[i]"), "terms[i].n");
            const double re = as_number(require(term, "re", "terms[i]"), "terms[i].re");
            const double im = opt_number(term, "im", 0.0, "terms[i]");
            cfg.initial.terms.emplace_back(n, Complex{re, im});
            total += re * re + im * im;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw ConfigError("superposition is not normalized: sum |C_n|^2 = " +
                              std::to_string(total) + " (deficit " + std::to_string(1.0 - total) + ")");
    } else if (ikind == "gaussian") {
        reject_unknown_keys(ip, {"center", "width", "momentum"}, "initial.params");
        cfg.initial.kind = InitialStateSpec::Kind::gaussian;
        cfg.initial.center = as_number(require(ip, "center", "initial.params"), "center");
        cfg.initial.width = as_number(require(ip, "width", "initial.params"), "width");
        cfg.initial.momentum = opt_number(ip, "momentum", 0.0, "initial.params");
        if (!(cfg.initial.width > 0.0)) throw ConfigError("initial.params.width must be positive");
    } else {
        throw ConfigError("unknown initial kind \"" + ikind + "\"");
    }

    const Json& time = require(root, "time", "config");
    reject_unknown_keys(time, {"t0", "t_final"}, "time");
    cfg.t0 = opt_number(time, "t0", 0.0, "time");
    cfg.t_final = as_number(require(time, "t_final", "time"), "time.t_final");

    if (auto it = root.find("basis"); it != root.end()) {
        reject_unknown_keys(*it, {"k_max"}, "basis");
        cfg.k_max = opt_int(*it, "k_max", cfg.k_max, "basis");
    }
    if (auto it = root.find("convergence"); it != root.end()) {
        reject_unknown_keys(*it, {"population", "power", "hold"}, "convergence");
        cfg.convergence.population_threshold =
            opt_number(*it, "population", cfg.convergence.population_threshold, "convergence");
        cfg.convergence.power_threshold =
            opt_number(*it, "power", cfg.convergence.power_threshold, "convergence");
        cfg.convergence.hold_time = opt_number(*it, "hold", cfg.convergence.hold_time, "convergence");
    }
    if (auto it = root.find("output"); it != root.end()) {
        reject_unknown_keys(*it, {"path", "stride"}, "output");
        if (auto p = it->find("path"); p != it->end()) {
            if (!p->is_string()) throw ConfigError("output.path must be a string");
            cfg.output.path = p->get<std::string>();
        }
        cfg.output.stride = opt_int(*it, "stride", cfg.output.stride, "output");
    }

    validate(cfg);
    (void)build_grid(cfg.x_min, cfg.x_max, cfg.n_interior);  // surface grid errors at parse time
    return cfg;
}

inline ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Json root;
    try {
        root = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return parse_config_json(root);
}

// Canonical echo with every default materialized; key order is fixed so
// identical configs serialize identically.
inline Json config_to_json(const ScenarioConfig& cfg) {
    Json root;
    root["grid"] = {{"x_min", cfg.x_min}, {"x_max", cfg.x_max}, {"n_interior", cfg.n_interior}};
    Json pot;
    switch (cfg.fields.static_kind) {
        case StaticKind::square_well:
            pot = {{"kind", "square_well"}, {"params", Json::object()}};
            break;
        case StaticKind::harmonic:
            pot = {{"kind", "harmonic"}, {"params", {{"omega0", cfg.fields.omega0}}}};
            break;
        case StaticKind::tabulated:
            pot = {{"kind", "tabulated"}, {"params", {{"values", cfg.fields.tabulated}}}};
            break;
    }
    root["potential"] = pot;
    Json pert;
    switch (cfg.fields.perturbation) {
        case PerturbationKind::none:
            pert = {{"kind", "none"}, {"params", Json::object()}};
            break;
        case PerturbationKind::dipole_pulse:
            pert = {{"kind", "dipole_pulse"},
                    {"params",
                     {{"epsilon", cfg.fields.epsilon},
                      {"t_center", cfg.fields.t_center},
                      {"tau", cfg.fields.tau}}}};
            break;
        case PerturbationKind::dipole_periodic:
            pert = {{"kind", "dipole_periodic"},
                    {"params",
                     {{"epsilon", cfg.fields.epsilon},
                      {"omega", cfg.fields.omega_d},
                      {"t_ramp", cfg.fields.t_ramp}}}};
            break;
    }
    root["perturbation"] = pert;
    root["beta"] = cfg.damping.beta;
    root["stepper"] = {{"dt", cfg.stepper.dt},
                       {"tol", cfg.stepper.fixed_point_tol},
                       {"max_iters", cfg.stepper.max_fixed_point_iters}};
    Json init;
    switch (cfg.initial.kind) {
        case InitialStateSpec::Kind::eigenstate:
            init = {{"kind", "eigenstate"}, {"params", {{"n", cfg.initial.level}}}};
            break;
        case InitialStateSpec::Kind::superposition: {
            Json terms = Json::array();
            for (const auto& [n, c] : cfg.initial.terms)
                terms.push_back({{"n", n}, {"re", c.real()}, {"im", c.imag()}});
            init = {{"kind", "superposition"}, {"params", {{"terms", terms}}}};
            break;
        }
        case InitialStateSpec::Kind::gaussian:
            init = {{"kind", "gaussian"},
                    {"params",
                     {{"center", cfg.initial.center},
                      {"width", cfg.initial.width},
                      {"momentum", cfg.initial.momentum}}}};
            break;
    }
    root["initial"] = init;
    root["time"] = {{"t0", cfg.t0}, {"t_final", cfg.t_final}};
    root["basis"] = {{"k_max", cfg.k_max}};
    root["convergence"] = {{"population", cfg.convergence.population_threshold},
                           {"power", cfg.convergence.power_threshold},
                           {"hold", cfg.convergence.hold_time}};
    root["output"] = {{"path", cfg.output.path}, {"stride", cfg.output.stride}};
    return root;
}

}  // namespace qdamp
