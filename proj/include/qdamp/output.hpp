#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "qdamp/config_io.hpp"
#include "qdamp/scenario.hpp"
#include "qdamp/version.hpp"

namespace qdamp {

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

struct EmittedFiles {
    std::string csv_path;
    std::string json_path;
};

// Writes <stem>.csv (fixed column order, 17 significant digits) and
// <stem>.json (summary without wall-clock data, so re-runs are byte
// identical). Parent directories are created as needed.
inline EmittedFiles emit_results(const RunResult& result, const ScenarioConfig& cfg,
                                 const std::string& stem) {
    namespace fs = std::filesystem;
    if (stem.empty()) throw std::runtime_error("emit_results: empty output stem");
    EmittedFiles out{stem + ".csv", stem + ".json"};
    const fs::path parent = fs::path(stem).parent_path();
    std::error_code ec;
    if (!parent.empty()) fs::create_directories(parent, ec);
    if (ec) throw std::runtime_error("emit_results: cannot create " + parent.string() + ": " + ec.message());

    std::ofstream csv(out.csv_path, std::ios::binary);
    if (!csv) throw std::runtime_error("emit_results: cannot open " + out.csv_path);
    csv << "t,norm,energy,velocity,power,radiated,work,res_continuity,res_ehrenfest,res_ledger,res_cond24";
    for (int k = 0; k < cfg.k_max; ++k) csv << ",pop_" << k;
    csv << "\n";
    for (const auto& r : result.records) {
        csv << detail::fmt17(r.t) << ',' << detail::fmt17(r.norm) << ',' << detail::fmt17(r.energy)
            << ',' << detail::fmt17(r.velocity) << ',' << detail::fmt17(r.power) << ','
            << detail::fmt17(r.radiated) << ',' << detail::fmt17(r.external_work) << ','
            << detail::fmt17(r.res_continuity) << ',' << detail::fmt17(r.res_ehrenfest) << ','
            << detail::fmt17(r.res_ledger) << ',' << detail::fmt17(r.res_cond24);
        for (double p : r.populations) csv << ',' << detail::fmt17(p);
        csv << "\n";
    }
    csv.close();
    if (!csv) throw std::runtime_error("emit_results: write failed for " + out.csv_path);

    Json summary;
    summary["tool"] = kToolName;
    summary["version"] = kVersion;
    if (result.final_eigenstate)
        summary["final_eigenstate"] = *result.final_eigenstate;
    else
        summary["final_eigenstate"] = nullptr;
    summary["converged"] = result.converged;
    summary["consistent"] = result.consistent;
    summary["completed"] = result.completed;
    if (!result.abort_reason.empty()) summary["abort_reason"] = result.abort_reason;
    summary["initial_energy"] = result.initial_energy;
    summary["final_energy"] = result.final_energy;
    summary["radiated_total"] = result.radiated_total;
    summary["work_total"] = result.work_total;
    summary["balance_residual"] = result.balance_residual;
    summary["residual_max"] = {{"continuity", result.residual_max.continuity},
                               {"ehrenfest", result.residual_max.ehrenfest},
                               {"energy_ledger", result.residual_max.energy_ledger},
                               {"condition24", result.residual_max.condition24},
                               {"power_formula_gap", result.residual_max.power_formula_gap}};
    summary["samples"] = result.records.size();
    summary["config"] = config_to_json(cfg);

    std::ofstream js(out.json_path, std::ios::binary);
    if (!js) throw std::runtime_error("emit_results: cannot open " + out.json_path);
    js << summary.dump(2) << "\n";
    js.close();
    if (!js) throw std::runtime_error("emit_results: write failed for " + out.json_path);
    return out;
}

}  // namespace qdamp
